//! Response rules: how a selected player picks her next strategy.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, TieBreak};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseRule {
    /// Always the tie-break-first best response.
    Perfect {
        #[serde(default, skip_serializing_if = "TieBreak::is_ascending")]
        tie_break: TieBreak,
    },
    /// Mutation model: with probability `ε` a uniformly random strategy,
    /// otherwise `b_i(s)`, which keeps the current strategy when it is a best response.
    Mutation {
        epsilon: f64,
        #[serde(default, skip_serializing_if = "TieBreak::is_ascending")]
        tie_break: TieBreak,
    },
    /// Like mutation, but ties among best responses are broken uniformly at random.
    MistakesStyle { epsilon: f64 },
    /// Gibbs weights `e^{β u_i(x, s_-i)}` over own strategies.
    Logit { beta: f64 },
    /// Two-strategy rule: strategy 0 with probability `p` when every
    /// lower-indexed player plays 1, and with probability `1 - q` otherwise.
    ChainAdversarial { p: f64, q: f64 },
    Constant { strategy: usize },
}

impl TieBreak {
    fn is_ascending(&self) -> bool {
        *self == TieBreak::ascending()
    }
}

impl ResponseRule {
    pub fn perfect() -> ResponseRule {
        ResponseRule::Perfect { tie_break: TieBreak::ascending() }
    }

    pub fn mutation(epsilon: f64) -> ResponseRule {
        ResponseRule::Mutation { epsilon, tie_break: TieBreak::ascending() }
    }

    /// The chain rule matching logit play on the chain game with penalty `L`:
    /// `p = 1/(1+e^β)`, `q = e^{-βL}/(e^β + e^{-βL})`.
    pub fn chain_logit(beta: f64, l: f64) -> ResponseRule {
        let p = 1.0 / (1.0 + beta.exp());
        // q = 1 / (1 + e^{β(1+L)}), written to avoid overflow.
        let q = 1.0 / (1.0 + (beta * (1.0 + l)).exp());
        ResponseRule::ChainAdversarial { p, q }
    }

    /// Parses a descriptor such as `{"kind":"logit","beta":2}` or the bare
    /// name `"perfect"`. A constant rule may name its strategy by label.
    pub fn from_value(mut value: serde_json::Value, game: &Game, player: usize) -> Result<ResponseRule> {
        if let serde_json::Value::String(kind) = &value {
            value = serde_json::json!({ "kind": kind });
        }
        if let Some(serde_json::Value::String(label)) = value.get("strategy").cloned() {
            let idx = game
                .strategy_by_label(player, &label)
                .ok_or_else(|| Error::input(format!("player {player} has no strategy labelled {label:?}")))?;
            value["strategy"] = idx.into();
        }
        let rule: ResponseRule = serde_json::from_value(value)?;
        rule.validate(game, player)?;
        Ok(rule)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ResponseRule::Perfect { .. } => "perfect",
            ResponseRule::Mutation { .. } => "mutation",
            ResponseRule::MistakesStyle { .. } => "mistakes_style",
            ResponseRule::Logit { .. } => "logit",
            ResponseRule::ChainAdversarial { .. } => "chain_adversarial",
            ResponseRule::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self, game: &Game, player: usize) -> Result<()> {
        game.check_player(player)?;
        let prob = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::input(format!("{} {name} must lie in [0, 1], got {x}", self.kind())))
            }
        };
        let m = game.strategy_counts()[player];
        match self {
            ResponseRule::Perfect { tie_break } | ResponseRule::Mutation { tie_break, .. } => {
                tie_break.check(game)?;
                if let ResponseRule::Mutation { epsilon, .. } = self {
                    prob("epsilon", *epsilon)?;
                }
                Ok(())
            }
            ResponseRule::MistakesStyle { epsilon } => prob("epsilon", *epsilon),
            ResponseRule::Logit { beta } if !(beta.is_finite() && *beta >= 0.0) => {
                Err(Error::input(format!("logit beta must be finite and non-negative, got {beta}")))
            }
            ResponseRule::Logit { .. } => Ok(()),
            ResponseRule::ChainAdversarial { p, q } => {
                prob("p", *p)?;
                prob("q", *q)?;
                if m != 2 {
                    return Err(Error::input(format!("chain_adversarial needs two strategies, player {player} has {m}")));
                }
                Ok(())
            }
            ResponseRule::Constant { strategy } if *strategy >= m => {
                Err(Error::input(format!("constant strategy {strategy} out of range for player {player}")))
            }
            ResponseRule::Constant { .. } => Ok(()),
        }
    }

    /// Fills `out` with the probability of each own strategy of `player` at `s`.
    /// `scratch` receives the player's own payoffs.
    pub fn distribution_into(&self, game: &Game, player: usize, s: &[usize], scratch: &mut Vec<f64>, out: &mut Vec<f64>) {
        let m = game.strategy_counts()[player];
        out.clear();
        out.resize(m, 0.0);
        match self {
            ResponseRule::Perfect { tie_break } => {
                game.own_payoffs(player, s, scratch);
                out[first_best(scratch, player, tie_break)] = 1.0;
            }
            ResponseRule::Mutation { epsilon, tie_break } => {
                game.own_payoffs(player, s, scratch);
                let max = max_of(scratch);
                let b = if scratch[s[player]] == max { s[player] } else { first_best(scratch, player, tie_break) };
                out.iter_mut().for_each(|x| *x = epsilon / m as f64);
                out[b] += 1.0 - epsilon;
            }
            ResponseRule::MistakesStyle { epsilon } => {
                game.own_payoffs(player, s, scratch);
                let max = max_of(scratch);
                let ties = scratch.iter().filter(|&&u| u == max).count() as f64;
                for (x, &u) in out.iter_mut().zip(scratch.iter()) {
                    *x = epsilon / m as f64 + if u == max { (1.0 - epsilon) / ties } else { 0.0 };
                }
            }
            ResponseRule::Logit { beta } => {
                game.own_payoffs(player, s, scratch);
                let max = max_of(scratch);
                let mut z = 0.0;
                for (x, &u) in out.iter_mut().zip(scratch.iter()) {
                    *x = (beta * (u - max)).exp();
                    z += *x;
                }
                out.iter_mut().for_each(|x| *x /= z);
            }
            ResponseRule::ChainAdversarial { p, q } => {
                let p0 = if s[..player].iter().all(|&x| x == 1) { *p } else { 1.0 - q };
                out[0] = p0;
                out[1] = 1.0 - p0;
            }
            ResponseRule::Constant { strategy } => out[*strategy] = 1.0,
        }
    }

    pub fn distribution(&self, game: &Game, player: usize, s: &[usize]) -> Result<Vec<f64>> {
        game.check_profile(s)?;
        self.validate(game, player)?;
        let (mut scratch, mut out) = (Vec::new(), Vec::new());
        self.distribution_into(game, player, s, &mut scratch, &mut out);
        Ok(out)
    }

    /// Inverse-CDF draw with a uniform `u` in `[0, 1)`.
    pub fn sample(&self, game: &Game, player: usize, s: &[usize], u: f64) -> Result<usize> {
        Ok(inverse_cdf(&self.distribution(game, player, s)?, u))
    }

    /// Upper bound on the probability of picking a non-best response.
    ///
    /// `gamma` overrides the best-vs-non-best utility gap used by logit; it is
    /// required when the game is too large to enumerate.
    pub fn imperfectness_bound(&self, game: &Game, gamma: Option<f64>) -> Result<Imperfectness> {
        let counts = game.strategy_counts();
        let simple = |p: f64| Ok(Imperfectness { p, off_path: None, gamma: None });
        match self {
            ResponseRule::Perfect { .. } => simple(0.0),
            ResponseRule::Mutation { epsilon, .. } | ResponseRule::MistakesStyle { epsilon } => {
                simple(counts.iter().map(|&m| epsilon * (m - 1) as f64 / m as f64).fold(0.0, f64::max))
            }
            ResponseRule::Constant { .. } => simple(1.0),
            ResponseRule::ChainAdversarial { p, q } => Ok(Imperfectness { p: *p, off_path: Some(1.0 - q), gamma: None }),
            ResponseRule::Logit { beta } => {
                let m = game.max_strategies() as f64;
                let gamma = match gamma {
                    Some(g) if g > 0.0 => Some(g),
                    Some(g) => return Err(Error::input(format!("utility gap gamma must be positive, got {g}"))),
                    None => min_gap(game).map_err(|e| match e {
                        Error::Capacity { .. } => Error::input("game too large to enumerate; supply the utility gap gamma explicitly"),
                        other => other,
                    })?,
                };
                let p = match gamma {
                    Some(g) => (m - 1.0) / (m - 1.0 + (beta * g).exp()),
                    None => 1.0 - 1.0 / m,
                };
                Ok(Imperfectness { p, off_path: None, gamma })
            }
        }
    }
}

/// Result of [`ResponseRule::imperfectness_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Imperfectness {
    pub p: f64,
    /// For chain_adversarial: probability of strategy 0 when a predecessor
    /// plays 0, where 0 is the best response and so not counted in `p`.
    pub off_path: Option<f64>,
    /// The utility gap used for logit, if any.
    pub gamma: Option<f64>,
}

/// Smallest gap between the best payoff and the best non-best payoff over
/// all players and opponent profiles; `None` when no non-best strategy exists.
pub fn min_gap(game: &Game) -> Result<Option<f64>> {
    let mut gap: Option<f64> = None;
    let mut pay = Vec::new();
    for s in game.profiles()? {
        for i in 0..game.n() {
            if s[i] != 0 {
                continue;
            }
            game.own_payoffs(i, &s, &mut pay);
            let max = max_of(&pay);
            let second = pay.iter().copied().filter(|&u| u < max).fold(f64::NEG_INFINITY, f64::max);
            if second.is_finite() {
                let g = max - second;
                gap = Some(gap.map_or(g, |x: f64| x.min(g)));
            }
        }
    }
    Ok(gap)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn first_best(pay: &[f64], player: usize, tb: &TieBreak) -> usize {
    let max = max_of(pay);
    (0..pay.len()).filter(|&j| pay[j] == max).min_by_key(|&j| tb.position(player, j)).expect("nonempty")
}

/// Smallest index whose cumulative mass exceeds `u`, skipping zero-mass entries.
pub fn inverse_cdf(dist: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in dist.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// A rule whose choice may depend on private state carried between updates.
///
/// The engine keeps one `u64` of state per player, starting from
/// [`StatefulRule::initial_state`]. Exact chain analysis rejects these rules.
pub trait StatefulRule: Send + Sync {
    fn name(&self) -> &str;

    fn initial_state(&self) -> u64 {
        0
    }

    /// Returns the chosen strategy and the new state, given a uniform `u` in `[0, 1)`.
    fn respond(&self, game: &Game, player: usize, s: &[usize], state: u64, u: f64) -> (usize, u64);
}

/// Per-player rule as used by the dynamics engine.
#[derive(Clone)]
pub enum PlayerRule {
    Memoryless(ResponseRule),
    Stateful(Arc<dyn StatefulRule>),
}

impl PlayerRule {
    pub fn memoryless(&self) -> Option<&ResponseRule> {
        match self {
            PlayerRule::Memoryless(r) => Some(r),
            PlayerRule::Stateful(_) => None,
        }
    }
}

impl fmt::Debug for PlayerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerRule::Memoryless(r) => r.fmt(f),
            PlayerRule::Stateful(r) => write!(f, "Stateful({})", r.name()),
        }
    }
}

impl From<ResponseRule> for PlayerRule {
    fn from(r: ResponseRule) -> Self {
        PlayerRule::Memoryless(r)
    }
}

/// The same memoryless rule for every player.
pub fn uniform_rules(game: &Game, rule: &ResponseRule) -> Vec<PlayerRule> {
    (0..game.n()).map(|_| PlayerRule::Memoryless(rule.clone())).collect()
}
