//! Player-selection schedules and their fairness parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mix64, wilson, Interval, Z95};

/// Longest sigma sequence that is ever materialized.
pub const SIGMA_MAX_MATERIALIZED: usize = 26;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// Player `t mod n` at step `t`.
    RoundRobin { n: usize },
    /// Every player at every step.
    Concurrent { n: usize },
    /// One player drawn uniformly at random per step.
    UniformOne { n: usize },
    /// The adversarial order `σ_n` repeated with period `2^(n-1)`.
    SigmaAdversarial { n: usize },
    /// A fixed cyclic list of players, one per step.
    ExplicitList { n: usize, list: Vec<usize> },
}

impl Schedule {
    /// Parses a descriptor, filling in `n` when the descriptor omits it.
    pub fn from_value(mut value: serde_json::Value, n: usize) -> Result<Schedule> {
        if let serde_json::Value::String(kind) = &value {
            value = serde_json::json!({ "kind": kind });
        }
        if let serde_json::Value::Object(map) = &mut value {
            map.entry("n").or_insert_with(|| n.into());
        }
        let sched: Schedule = serde_json::from_value(value)?;
        sched.validate()?;
        if sched.n() != n {
            return Err(Error::input(format!("schedule is for {} players but the game has {n}", sched.n())));
        }
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::input("schedule needs at least one player"));
        }
        match self {
            Schedule::SigmaAdversarial { n } if *n > 63 => Err(Error::input("sigma schedule supports at most 63 players")),
            Schedule::ExplicitList { list, .. } if list.is_empty() => Err(Error::input("explicit schedule list is empty")),
            Schedule::ExplicitList { list, n } => match list.iter().find(|&&p| p >= *n) {
                Some(p) => Err(Error::input(format!("explicit schedule entry {p} out of range"))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Schedule::RoundRobin { n }
            | Schedule::Concurrent { n }
            | Schedule::UniformOne { n }
            | Schedule::SigmaAdversarial { n }
            | Schedule::ExplicitList { n, .. } => *n,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Schedule::RoundRobin { .. } => "round_robin",
            Schedule::Concurrent { .. } => "concurrent",
            Schedule::UniformOne { .. } => "uniform_one",
            Schedule::SigmaAdversarial { .. } => "sigma_adversarial",
            Schedule::ExplicitList { .. } => "explicit_list",
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, Schedule::UniformOne { .. })
    }

    /// Largest number of players selected in one step.
    pub fn eta(&self) -> usize {
        match self {
            Schedule::Concurrent { n } => *n,
            _ => 1,
        }
    }

    /// Writes the players selected at 0-indexed `step` into `out`, ascending.
    /// Only randomized schedules touch `rng`.
    pub fn select<R: Rng + ?Sized>(&self, step: u64, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        match self {
            Schedule::RoundRobin { n } => out.push((step % *n as u64) as usize),
            Schedule::Concurrent { n } => out.extend(0..*n),
            Schedule::UniformOne { n } => out.push(rng.random_range(0..*n)),
            Schedule::SigmaAdversarial { n } => out.push(sigma_player(*n, step)),
            Schedule::ExplicitList { list, .. } => out.push(list[(step % list.len() as u64) as usize]),
        }
    }

    /// Declared `(R, ε, η)` for deterministic schedules.
    pub fn declared_fairness(&self) -> Option<FairnessParams> {
        match self {
            Schedule::RoundRobin { n } => Some(FairnessParams { r: *n as u64, epsilon: 0.0, eta: 1 }),
            Schedule::Concurrent { n } => Some(FairnessParams { r: 1, epsilon: 0.0, eta: *n }),
            Schedule::SigmaAdversarial { n } => Some(FairnessParams { r: 1u64 << (*n - 1), epsilon: 0.0, eta: 1 }),
            Schedule::ExplicitList { n, list } => {
                let mut seen = vec![false; *n];
                list.iter().for_each(|&p| seen[p] = true);
                seen.iter().all(|&x| x).then_some(FairnessParams { r: list.len() as u64, epsilon: 0.0, eta: 1 })
            }
            Schedule::UniformOne { .. } => None,
        }
    }
}

/// 0-indexed player that `σ_n` selects at `step`: the ruler sequence.
pub fn sigma_player(n: usize, step: u64) -> usize {
    let period = 1u64 << (n - 1);
    ((step % period) + 1).trailing_zeros() as usize
}

/// `σ_n` as a 1-indexed list, built by the recursion `σ_i = σ_{i-1} σ_{i-2} ⋯ σ_1 i`.
pub fn sigma_sequence(n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::input("sigma sequence needs n >= 1"));
    }
    if n > SIGMA_MAX_MATERIALIZED {
        return Err(Error::Capacity { what: "sigma sequence".into(), count: 1u128 << (n - 1), cap: 1 << (SIGMA_MAX_MATERIALIZED - 1) });
    }
    let mut seqs: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 1..=n {
        let mut s = Vec::with_capacity(1 << (i - 1));
        for j in (0..i - 1).rev() {
            s.extend_from_slice(&seqs[j]);
        }
        s.push(i);
        seqs.push(s);
    }
    Ok(seqs.pop().unwrap())
}

/// Between two consecutive occurrences of any `i < n` some `j > i` occurs
/// (1-indexed). With `cyclic`, the wrap-around gap is checked too.
pub fn observation_holds(seq: &[usize], n: usize, cyclic: bool) -> bool {
    for i in 1..n {
        let pos: Vec<usize> = seq.iter().enumerate().filter(|(_, &p)| p == i).map(|(k, _)| k).collect();
        let has_higher = |a: usize, b: usize| seq[a + 1..b].iter().any(|&p| p > i);
        if pos.windows(2).any(|w| !has_higher(w[0], w[1])) {
            return false;
        }
        if cyclic && pos.len() >= 1 {
            let (first, last) = (pos[0], *pos.last().unwrap());
            let wrap = seq[last + 1..].iter().chain(&seq[..first]).any(|&p| p > i);
            if !wrap {
                return false;
            }
        }
    }
    true
}

/// `(R, ε, η)`: every player is selected in any `R`-step window with
/// probability at least `1 - ε`, and at most `η` players update per step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FairnessParams {
    #[serde(rename = "R")]
    pub r: u64,
    pub epsilon: f64,
    pub eta: usize,
}

impl FairnessParams {
    pub fn new(r: u64, epsilon: f64, eta: usize, n: usize) -> Result<FairnessParams> {
        if r == 0 {
            return Err(Error::input("R must be at least 1"));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::input("epsilon must lie in [0, 1]"));
        }
        if eta == 0 || eta > n {
            return Err(Error::input("eta must lie in [1, n]"));
        }
        Ok(FairnessParams { r, epsilon, eta })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairnessEstimate {
    pub r: u64,
    pub windows: u64,
    /// Largest per-player miss frequency, with its Wilson interval.
    pub epsilon: Interval,
    pub worst_player: usize,
    pub advisory: Option<String>,
}

/// Offsets are drawn from this range for every window.
const OFFSET_RANGE: u64 = 1 << 20;

/// Monte Carlo estimate of `max_i P(player i is not selected in an R-window)`.
pub fn estimate_fairness(sched: &Schedule, r: u64, windows: u64, seed: u64) -> Result<FairnessEstimate> {
    sched.validate()?;
    if windows < 100 {
        return Err(Error::input("fairness estimation needs at least 100 windows"));
    }
    if r == 0 {
        return Err(Error::input("R must be at least 1"));
    }
    let n = sched.n();
    let mut misses = vec![0u64; n];
    let mut seen = vec![false; n];
    let mut buf = Vec::with_capacity(n);
    for w in 0..windows {
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed, w));
        let offset = rng.random_range(0..OFFSET_RANGE);
        seen.iter_mut().for_each(|x| *x = false);
        for t in offset..offset + r {
            sched.select(t, &mut rng, &mut buf);
            buf.iter().for_each(|&p| seen[p] = true);
        }
        for (m, &s) in misses.iter_mut().zip(&seen) {
            *m += u64::from(!s);
        }
    }
    let (worst_player, &worst) = misses.iter().enumerate().max_by_key(|&(i, m)| (*m, std::cmp::Reverse(i))).unwrap();
    let advisory = (!sched.is_randomized())
        .then(|| format!("{} is deterministic; its fairness is available exactly via declared_fairness", sched.kind()));
    Ok(FairnessEstimate { r, windows, epsilon: wilson(worst, windows, Z95), worst_player, advisory })
}
