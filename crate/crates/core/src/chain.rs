//! Exact Markov-chain analysis of memoryless dynamics over the profile space.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{cap_override, Game, Potential};
use crate::reduction::{classify, Subgame};
use crate::rules::{PlayerRule, ResponseRule};
use crate::schedule::Schedule;

/// Default cap on the number of chain states.
pub const DEFAULT_CHAIN_CAP: u64 = 100_000;

/// Chains up to this size use dense linear algebra.
pub const DENSE_LIMIT: usize = 2000;

/// Tolerance on probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

const POWER_RESIDUAL: f64 = 1e-12;
const POWER_MAX_ITERATIONS: usize = 10_000_000;

/// Chain cap honouring `IBRL_CAP`.
pub fn chain_cap() -> u64 {
    cap_override().unwrap_or(DEFAULT_CHAIN_CAP)
}

/// Probability vector over profiles, indexed by rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Distribution> {
        let d = Distribution { probs };
        d.validate()?;
        Ok(d)
    }

    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Distribution {
        Distribution { probs }
    }

    pub fn point(len: usize, at: usize) -> Distribution {
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn uniform(len: usize) -> Distribution {
        Distribution { probs: vec![1.0 / len as f64; len] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::input("distribution has a negative or non-finite entry"));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::input(format!("distribution sums to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Places this distribution over `states` into a space of size `len`, zero elsewhere.
    pub fn embed(&self, states: &[u64], len: usize) -> Distribution {
        let mut probs = vec![0.0; len];
        for (&s, &p) in states.iter().zip(&self.probs) {
            probs[s as usize] = p;
        }
        Distribution { probs }
    }
}

/// `(1/2) Σ |μ(x) - ν(x)|`.
pub fn tv_distance(mu: &Distribution, nu: &Distribution) -> f64 {
    assert_eq!(mu.len(), nu.len(), "distributions over different spaces");
    0.5 * mu.probs.iter().zip(&nu.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Row-stochastic matrix stored by rows (compressed sparse rows).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionMatrix {
    states: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// One step of this chain is a full period of a deterministic schedule.
    pub round_chain: bool,
    pub provenance: String,
}

impl TransitionMatrix {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>, round_chain: bool, provenance: String) -> TransitionMatrix {
        let states = rows.len();
        let mut row_ptr = Vec::with_capacity(states + 1);
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        TransitionMatrix { states, row_ptr, cols, vals, round_chain, provenance }
    }

    /// Builds from dense rows without checking them.
    pub fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> TransitionMatrix {
        let sparse = rows.into_iter().map(|r| r.into_iter().enumerate().collect()).collect();
        TransitionMatrix::from_rows(sparse, false, "dense".into())
    }

    /// Builds from dense rows, checking stochasticity.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<TransitionMatrix> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::input("transition matrix must be square"));
            }
            Distribution { probs: r.clone() }.validate().map_err(|e| Error::input(format!("row {i}: {e}")))?;
        }
        let sparse = rows.iter().map(|r| r.iter().copied().enumerate().collect()).collect();
        Ok(TransitionMatrix::from_rows(sparse, false, "dense".into()))
    }

    pub fn len(&self) -> usize {
        self.states
    }

    pub fn is_empty(&self) -> bool {
        self.states == 0
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[s], self.row_ptr[s + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.row(s).find(|&(c, _)| c == t).map_or(0.0, |(_, v)| v)
    }

    pub fn row_dense(&self, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.states];
        self.row(s).for_each(|(c, v)| out[c] += v);
        out
    }

    /// `μP`.
    pub fn apply(&self, mu: &Distribution) -> Distribution {
        let mut out = vec![0.0; self.states];
        for (r, &m) in mu.probs.iter().enumerate() {
            if m != 0.0 {
                self.row(r).for_each(|(c, v)| out[c] += m * v);
            }
        }
        Distribution { probs: out }
    }

    /// `δ_s P^t`.
    pub fn row_power(&self, s: usize, t: u64) -> Distribution {
        let mut d = Distribution::point(self.states, s);
        for _ in 0..t {
            d = self.apply(&d);
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.states, self.states);
        for r in 0..self.states {
            self.row(r).for_each(|(c, v)| m[(r, c)] += v);
        }
        m
    }

    /// Largest deviation of a row sum from one.
    pub fn max_row_error(&self) -> f64 {
        (0..self.states).map(|r| (self.row(r).map(|(_, v)| v).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(s).filter(|&(_, v)| v > 0.0).map(|(c, _)| c)
    }

    /// Fails unless the chain is irreducible and aperiodic.
    pub fn check_ergodic(&self) -> Result<()> {
        let n = self.states;
        if n == 0 {
            return Err(Error::NonErgodic("chain has no states".into()));
        }
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            self.successors(s).for_each(|t| preds[t].push(s));
        }
        let forward = bfs_levels(n, |s| self.successors(s).collect());
        if let Some(s) = forward.iter().position(Option::is_none) {
            return Err(Error::NonErgodic(format!("reducible: state {s} is unreachable from state 0")));
        }
        let backward = bfs_levels(n, |s| preds[s].clone());
        if let Some(s) = backward.iter().position(Option::is_none) {
            return Err(Error::NonErgodic(format!("reducible: state 0 is unreachable from state {s}")));
        }
        let mut g = 0u64;
        for s in 0..n {
            let ls = forward[s].unwrap();
            for t in self.successors(s) {
                g = gcd(g, (ls + 1).abs_diff(forward[t].unwrap()));
            }
        }
        if g != 1 {
            return Err(Error::NonErgodic(format!("periodic with period {g}")));
        }
        Ok(())
    }
}

fn bfs_levels(n: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<Option<u64>> {
    let mut level = vec![None; n];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(s) = queue.pop_front() {
        let l = level[s].unwrap();
        for t in next(s) {
            if level[t].is_none() {
                level[t] = Some(l + 1);
                queue.push_back(t);
            }
        }
    }
    level
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Transition matrix of memoryless dynamics over all profiles.
///
/// `uniform_one` gives the single-update chain, `concurrent` the product of
/// all players' responses, and deterministic single-player schedules
/// (`round_robin`, `sigma_adversarial`, `explicit_list`) the product over one
/// full period, flagged as a round chain.
pub fn build_chain(game: &Game, rules: &[PlayerRule], schedule: &Schedule) -> Result<TransitionMatrix> {
    build_chain_with_cap(game, rules, schedule, chain_cap())
}

pub fn build_chain_with_cap(game: &Game, rules: &[PlayerRule], schedule: &Schedule, cap: u64) -> Result<TransitionMatrix> {
    let rules: Vec<&ResponseRule> = rules
        .iter()
        .map(|r| r.memoryless().ok_or_else(|| Error::Unsupported("exact chain analysis needs memoryless rules".into())))
        .collect::<Result<_>>()?;
    if rules.len() != game.n() || schedule.n() != game.n() {
        return Err(Error::input("rules and schedule must cover every player"));
    }
    for (i, r) in rules.iter().enumerate() {
        r.validate(game, i)?;
    }
    schedule.validate()?;
    let states = game.enumerable(cap)? as usize;
    let n = game.n();
    let strides = game.strides();
    let (mut scratch, mut dist) = (Vec::new(), Vec::new());
    let mut respond = |i: usize, s: &[usize]| -> Vec<(usize, f64)> {
        rules[i].distribution_into(game, i, s, &mut scratch, &mut dist);
        dist.iter().copied().enumerate().filter(|&(_, p)| p > 0.0).collect()
    };
    let kinds: Vec<_> = rules.iter().map(|r| r.kind()).collect();
    let provenance = format!("{} / {}", schedule.kind(), kinds.join(","));
    let period: Option<Vec<usize>> = match schedule {
        Schedule::UniformOne { .. } | Schedule::Concurrent { .. } => None,
        Schedule::RoundRobin { n } => Some((0..*n).collect()),
        Schedule::SigmaAdversarial { n } => {
            let len = 1u64 << (n - 1);
            Some((0..len).map(|t| crate::schedule::sigma_player(*n, t)).collect())
        }
        Schedule::ExplicitList { list, .. } => Some(list.clone()),
    };
    let mut rows = Vec::with_capacity(states);
    for r in 0..states as u64 {
        let s = game.unrank(r).0;
        let row: Vec<(usize, f64)> = match (schedule, &period) {
            (Schedule::UniformOne { .. }, _) => {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for i in 0..n {
                    for (j, p) in respond(i, &s) {
                        let t = r + j as u64 * strides[i] - s[i] as u64 * strides[i];
                        *acc.entry(t as usize).or_insert(0.0) += p / n as f64;
                    }
                }
                acc.into_iter().collect()
            }
            (Schedule::Concurrent { .. }, _) => {
                let mut acc: Vec<(u64, f64)> = vec![(0, 1.0)];
                for i in 0..n {
                    let d = respond(i, &s);
                    acc = acc.iter().flat_map(|&(t, w)| d.iter().map(move |&(j, p)| (t + j as u64 * strides[i], w * p))).collect();
                }
                let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
                acc.into_iter().for_each(|(t, w)| *merged.entry(t as usize).or_insert(0.0) += w);
                merged.into_iter().collect()
            }
            (_, Some(order)) => {
                let mut acc: BTreeMap<u64, f64> = BTreeMap::from([(r, 1.0)]);
                for &i in order {
                    let mut next: BTreeMap<u64, f64> = BTreeMap::new();
                    for (&t, &w) in &acc {
                        let cur = game.unrank(t).0;
                        for (j, p) in respond(i, &cur) {
                            let u = t + j as u64 * strides[i] - cur[i] as u64 * strides[i];
                            *next.entry(u).or_insert(0.0) += w * p;
                        }
                    }
                    acc = next;
                }
                acc.into_iter().map(|(t, w)| (t as usize, w)).collect()
            }
            _ => unreachable!(),
        };
        rows.push(row);
    }
    Ok(TransitionMatrix::from_rows(rows, period.is_some(), provenance))
}

/// Unique stationary distribution of an ergodic chain.
pub fn stationary(p: &TransitionMatrix) -> Result<Distribution> {
    p.check_ergodic()?;
    let n = p.len();
    if n <= DENSE_LIMIT {
        // Solve (P^T - I) π = 0 with the last equation replaced by Σπ = 1.
        let mut a = p.to_dense().transpose();
        for i in 0..n {
            a[(i, i)] -= 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let x = a.lu().solve(&b).ok_or_else(|| Error::NonErgodic("singular stationary system".into()))?;
        let mut probs: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|v| *v /= sum);
        return Ok(Distribution { probs });
    }
    let mut pi = Distribution::uniform(n);
    for _ in 0..POWER_MAX_ITERATIONS {
        let next = p.apply(&pi);
        let residual: f64 = next.probs.iter().zip(&pi.probs).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if residual <= POWER_RESIDUAL {
            let sum: f64 = pi.probs.iter().sum();
            pi.probs.iter_mut().for_each(|v| *v /= sum);
            return Ok(pi);
        }
    }
    Err(Error::NonErgodic("power iteration did not converge".into()))
}

/// Softmax of `β Φ` over profiles.
pub fn gibbs_stationary(game: &Game, phi: &Potential, beta: f64) -> Result<Distribution> {
    if !phi.verifies(game)? {
        return Err(Error::Precondition("potential does not match the game".into()));
    }
    let max = phi.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = phi.values.iter().map(|v| (beta * (v - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(Distribution { probs: w.into_iter().map(|v| v / z).collect() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixingTime {
    pub epsilon: f64,
    /// Smallest `t >= 1` with `max_s ||P^t(s,.) - π|| <= ε`.
    pub t_eps: u64,
    /// Same at `ε = 1/2`.
    pub t_mix: u64,
    /// Whether `t_eps <= t_mix * ceil(ln(1/ε))` (reported, not enforced).
    pub scaling_bound_holds: bool,
}

const MAX_DOUBLINGS: u32 = 50;

/// Mixing time by repeated squaring and binary search on the monotone
/// worst-start distance. Dense chains only.
pub fn mixing_time(p: &TransitionMatrix, epsilon: f64) -> Result<MixingTime> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::input("epsilon must lie in (0, 1)"));
    }
    if p.len() > DENSE_LIMIT {
        return Err(Error::Capacity { what: "mixing-time chain".into(), count: p.len() as u128, cap: DENSE_LIMIT as u64 });
    }
    let pi = stationary(p)?;
    let pi_row = DVector::from_vec(pi.probs.clone()).transpose();
    let dist = |m: &DMatrix<f64>| -> f64 {
        (0..m.nrows()).map(|r| 0.5 * (m.row(r) - &pi_row).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    };
    let mut powers = vec![p.to_dense()];
    let find = |eps: f64, powers: &mut Vec<DMatrix<f64>>| -> Result<u64> {
        let mut k = 0;
        loop {
            if k as usize >= powers.len() {
                let last = powers.last().unwrap();
                powers.push(last * last);
            }
            if dist(&powers[k as usize]) <= eps {
                break;
            }
            k += 1;
            if k > MAX_DOUBLINGS {
                return Err(Error::NonErgodic("chain does not mix within 2^50 steps".into()));
            }
        }
        if k == 0 {
            return Ok(1);
        }
        // d(2^{k-1}) > eps >= d(2^k); binary search over (2^{k-1}, 2^k].
        let (mut lo, mut hi) = (1u64 << (k - 1), 1u64 << k);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if dist(&power_of(powers, mid)) <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    };
    let t_eps = find(epsilon, &mut powers)?;
    let t_mix = find(0.5, &mut powers)?;
    let factor = (1.0 / epsilon).ln().ceil().max(1.0) as u64;
    Ok(MixingTime { epsilon, t_eps, t_mix, scaling_bound_holds: t_eps <= t_mix * factor })
}

fn power_of(powers: &[DMatrix<f64>], t: u64) -> DMatrix<f64> {
    let mut acc: Option<DMatrix<f64>> = None;
    for (k, m) in powers.iter().enumerate() {
        if t >> k & 1 == 1 {
            acc = Some(match acc {
                None => m.clone(),
                Some(a) => a * m,
            });
        }
    }
    acc.expect("t >= 1")
}

/// A chain conditioned to stay inside a set of states `Ĥ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedChain {
    /// Full-size matrix with rows on `Ĥ` renormalized over `Ĥ` and all other rows zero.
    pub matrix: TransitionMatrix,
    /// `Ĥ`, ascending.
    pub states: Vec<u64>,
    /// `P(s, H \ Ĥ)` for each state of `Ĥ`.
    pub escape: Vec<f64>,
}

impl RestrictedChain {
    pub fn max_escape(&self) -> f64 {
        self.escape.iter().copied().fold(0.0, f64::max)
    }

    /// The chain on `Ĥ` alone, re-indexed in the order of `states`.
    pub fn compact(&self) -> TransitionMatrix {
        let index: BTreeMap<usize, usize> = self.states.iter().enumerate().map(|(k, &s)| (s as usize, k)).collect();
        let rows = self
            .states
            .iter()
            .map(|&s| self.matrix.row(s as usize).map(|(c, v)| (index[&c], v)).collect())
            .collect();
        TransitionMatrix::from_rows(rows, self.matrix.round_chain, self.matrix.provenance.clone())
    }

    /// Rows outside `Ĥ` are unreachable from `Ĥ`.
    pub fn is_unreachable(&self, s: u64) -> bool {
        self.states.binary_search(&s).is_err()
    }
}

/// Renormalizes the rows of `P` on `states` over `states`.
pub fn restrict_chain(p: &TransitionMatrix, states: &[u64]) -> Result<RestrictedChain> {
    let mut states = states.to_vec();
    states.sort_unstable();
    states.dedup();
    if states.last().is_some_and(|&s| s as usize >= p.len()) {
        return Err(Error::input("restricted state out of range"));
    }
    let mut inside = vec![false; p.len()];
    states.iter().for_each(|&s| inside[s as usize] = true);
    let mut rows = vec![Vec::new(); p.len()];
    let mut escape = Vec::with_capacity(states.len());
    for &s in &states {
        let stay: f64 = p.row(s as usize).filter(|&(c, _)| inside[c]).map(|(_, v)| v).sum();
        if stay <= 0.0 {
            return Err(Error::Precondition(format!("state {s} leaves the restricted set with probability one")));
        }
        rows[s as usize] = p.row(s as usize).filter(|&(c, _)| inside[c]).map(|(c, v)| (c, v / stay)).collect();
        escape.push(1.0 - stay);
    }
    let matrix = TransitionMatrix::from_rows(rows, p.round_chain, format!("{} restricted", p.provenance));
    Ok(RestrictedChain { matrix, states, escape })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub beta: f64,
    /// `TV(π_β, π̂_β)` with `π̂_β` the logit stationary distribution of the
    /// subgame, embedded with zero mass off the subgame.
    pub tv: f64,
    /// Same distance using the stationary distribution of the restricted chain.
    pub tv_restricted: f64,
    /// Largest one-step escape probability of the restricted chain.
    pub p_beta: f64,
    /// Mixing time `t_mix(1/2)` of the restricted chain.
    pub tau_hat: u64,
    /// `p_β τ̂_β`.
    pub hypothesis: f64,
}

/// Logit (uniform single-player updates) stationary closeness between the
/// game and its NBR-reduced subgame over a grid of `β`.
pub fn stationary_closeness_scan(game: &Game, subgame: &Subgame, betas: &[f64]) -> Result<Vec<ScanRow>> {
    let reduced = classify(game)?;
    if reduced.reduced() != subgame {
        return Err(Error::Precondition("the game does not NBR-reduce to the given subgame".into()));
    }
    let sub_game = game.restricted_table(subgame.allowed())?;
    let ranks = subgame.ranks(game);
    let len = game.enumerable(chain_cap())? as usize;
    let schedule = Schedule::UniformOne { n: game.n() };
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        let logit = ResponseRule::Logit { beta };
        let full = build_chain(game, &crate::rules::uniform_rules(game, &logit), &schedule)?;
        let pi = stationary(&full)?;
        let small = build_chain(&sub_game, &crate::rules::uniform_rules(&sub_game, &logit), &schedule)?;
        let pi_hat = stationary(&small)?.embed(&ranks, len);
        let restricted = restrict_chain(&full, &ranks)?;
        let compact = restricted.compact();
        let pi_restricted = stationary(&compact)?.embed(&ranks, len);
        let tau_hat = mixing_time(&compact, 0.5)?.t_eps;
        let p_beta = restricted.max_escape();
        rows.push(ScanRow {
            beta,
            tv: tv_distance(&pi, &pi_hat),
            tv_restricted: tv_distance(&pi, &pi_restricted),
            p_beta,
            tau_hat,
            hypothesis: p_beta * tau_hat as f64,
        });
    }
    Ok(rows)
}

/// First `t <= horizon` with `||P^t(start,.) - target|| <= tolerance`.
pub fn distro_occurrence(p: &TransitionMatrix, start: usize, target: &Distribution, tolerance: f64, horizon: u64) -> Option<u64> {
    let mut d = Distribution::point(p.len(), start);
    for t in 0..=horizon {
        if tv_distance(&d, target) <= tolerance {
            return Some(t);
        }
        d = p.apply(&d);
    }
    None
}

/// `||P^t(start,.) - target||` for `t = 0..=horizon`.
pub fn tv_curve(p: &TransitionMatrix, start: usize, target: &Distribution, horizon: u64) -> Vec<f64> {
    let mut d = Distribution::point(p.len(), start);
    let mut out = Vec::with_capacity(horizon as usize + 1);
    for _ in 0..=horizon {
        out.push(tv_distance(&d, target));
        d = p.apply(&d);
    }
    out
}
