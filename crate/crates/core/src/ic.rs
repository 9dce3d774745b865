//! Incentive-compatibility experiments and the exact 2x2 counterexample.

use serde::Serialize;

use crate::dynamics::{summarize_utility, utility_samples, HorizonMode, RunConfig, UtilityEstimate};
use crate::error::{Error, Result};
use crate::game::Game;
use crate::rules::{PlayerRule, ResponseRule};
use crate::stats::{mean_interval, Interval, Z95};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The deviation's lower confidence bound exceeds the baseline's upper bound.
    Profitable,
    /// The paired difference is significantly positive but the intervals overlap.
    Inconclusive,
    NotProfitable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationOutcome {
    pub rule: String,
    pub estimate: UtilityEstimate,
    /// Paired per-run difference deviation minus baseline (common random numbers).
    pub difference: Interval,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub player: usize,
    pub baseline: UtilityEstimate,
    pub deviations: Vec<DeviationOutcome>,
    pub verdict: Verdict,
}

fn describe(rule: &PlayerRule) -> String {
    match rule {
        PlayerRule::Memoryless(r) => serde_json::to_string(r).unwrap_or_else(|_| format!("{r:?}")),
        other => format!("{other:?}"),
    }
}

/// Compares `player`'s total utility under the template rules with each
/// deviation, all other players keeping their rules. Baseline and deviation
/// runs share seeds. An empty deviation list means every constant strategy.
pub fn ic_experiment(
    game: &Game,
    template: &RunConfig,
    player: usize,
    deviations: &[PlayerRule],
    horizon: u64,
    runs: u64,
    mode: HorizonMode,
) -> Result<DeviationReport> {
    game.check_player(player)?;
    if runs < 2 {
        return Err(Error::input("ic_experiment needs at least 2 runs"));
    }
    let deviations: Vec<PlayerRule> = if deviations.is_empty() {
        (0..game.strategy_counts()[player]).map(|strategy| ResponseRule::Constant { strategy }.into()).collect()
    } else {
        deviations.to_vec()
    };
    let checkpoints = mode.checkpoints(horizon);
    let base_values = utility_samples(game, template, player, &checkpoints, runs)?;
    let baseline = summarize_utility(player, horizon, mode, checkpoints.clone(), &base_values);
    let mut outcomes = Vec::with_capacity(deviations.len());
    for dev in &deviations {
        let mut config = template.clone();
        config.rules[player] = dev.clone();
        let values = utility_samples(game, &config, player, &checkpoints, runs)?;
        let estimate = summarize_utility(player, horizon, mode, checkpoints.clone(), &values);
        let diffs: Vec<f64> = estimate.per_run.iter().zip(&baseline.per_run).map(|(d, b)| d - b).collect();
        let difference = mean_interval(&diffs, Z95);
        let verdict = if estimate.gamma.lo > baseline.gamma.hi {
            Verdict::Profitable
        } else if difference.lo > 0.0 {
            Verdict::Inconclusive
        } else {
            Verdict::NotProfitable
        };
        outcomes.push(DeviationOutcome { rule: describe(dev), estimate, difference, verdict });
    }
    let verdict = if outcomes.iter().any(|o| o.verdict == Verdict::Profitable) {
        Verdict::Profitable
    } else if outcomes.iter().any(|o| o.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::NotProfitable
    };
    Ok(DeviationReport { player, baseline, deviations: outcomes, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IcExact {
    pub beta: f64,
    pub l: f64,
    /// Column player's stationary utility when both play logit.
    pub gamma_logit: f64,
    /// `(e^{2β} + L) / (1 + e^β + e^{2β})`.
    pub upper_bound: f64,
    /// Column player's utility when she always plays right: `L / (1 + e^β)`.
    pub gamma_deviate: f64,
    pub profitable: bool,
    /// `gamma_deviate - upper_bound`; non-negative once `L >= 1 + e^β`.
    pub margin: f64,
    /// `ln(upper_bound - gamma_logit)`, finite even when the gap underflows.
    pub log_gap: f64,
    pub below_upper_bound: bool,
}

/// Exact total utilities of the column player in the 2x2 counterexample
/// under logit play and under the "always right" deviation.
pub fn ic_counterexample_exact(beta: f64, l: f64) -> Result<IcExact> {
    if !(beta.is_finite() && beta >= 0.0) || !(l.is_finite() && l > 0.0) {
        return Err(Error::input("need beta >= 0 and L > 0"));
    }
    // Stationary weights e^{βΦ} with Φ = (L+2, L+1, 0, L) on (tl, tr, bl, br),
    // divided by the largest one, e^{β(L+2)}.
    let e1 = (-beta).exp();
    let e2 = (-2.0 * beta).exp();
    let eps = (-beta * (l + 2.0)).exp();
    let d = e2 + e1 + 1.0;
    let gamma_logit = (1.0 + l * e2) / (d + eps);
    let upper_bound = (1.0 + l * e2) / d;
    let gamma_deviate = l * e1 / (e1 + 1.0);
    // upper_bound - gamma_logit = upper_bound * ε / (d + ε) with ε = e^{-β(L+2)}.
    let log_gap = upper_bound.ln() - beta * (l + 2.0) - (d + eps).ln();
    Ok(IcExact {
        beta,
        l,
        gamma_logit,
        upper_bound,
        gamma_deviate,
        profitable: gamma_deviate > gamma_logit,
        margin: gamma_deviate - upper_bound,
        log_gap,
        below_upper_bound: log_gap.is_finite(),
    })
}
