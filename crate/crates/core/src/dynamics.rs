//! Seeded trajectory engine, hitting times and Monte Carlo estimates.
//!
//! A step `t >= 1` selects players with the schedule at index `t - 1`, then
//! draws one uniform number per selected player in ascending player order.
//! Every selected player responds to the pre-step profile and all updates
//! are applied together. Monte Carlo run `r` uses the stream seeded with
//! `mix64(master_seed, r)`, so results do not depend on the thread count.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{tv_distance, Distribution};
use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::rules::{inverse_cdf, PlayerRule};
use crate::schedule::Schedule;
use crate::stats::{mean_interval, mix64, normal_upper_quantile, wilson, Interval, Z95};

/// Default number of steps per run.
pub const DEFAULT_HORIZON: u64 = 1_000_000;

/// Largest cumulative-probability table precomputed for fast sampling.
const CDF_TABLE_ENTRIES: u64 = 1 << 22;

/// Largest profile space for which ensemble distributions are collected.
const DISTRIBUTION_CAP: u64 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomStart {
    UniformRandom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Start {
    Profile(Profile),
    Random(RandomStart),
}

impl Start {
    pub fn profile(s: Vec<usize>) -> Start {
        Start::Profile(Profile(s))
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub schedule: Schedule,
    pub rules: Vec<PlayerRule>,
    pub start: Start,
    pub horizon: u64,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    /// Keep every profile `X_0..X_T`. Off by default to bound memory.
    pub record_log: bool,
}

impl RunConfig {
    pub fn new(schedule: Schedule, rules: Vec<PlayerRule>, start: Start) -> RunConfig {
        RunConfig { schedule, rules, start, horizon: DEFAULT_HORIZON, seed: 0, checkpoints: Vec::new(), record_log: false }
    }

    pub fn horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn validate(&self, game: &Game) -> Result<()> {
        self.schedule.validate()?;
        if self.schedule.n() != game.n() {
            return Err(Error::input("schedule player count does not match the game"));
        }
        if self.rules.len() != game.n() {
            return Err(Error::input(format!("expected {} rules, got {}", game.n(), self.rules.len())));
        }
        for (i, r) in self.rules.iter().enumerate() {
            if let PlayerRule::Memoryless(r) = r {
                r.validate(game, i)?;
            }
        }
        if self.horizon == 0 {
            return Err(Error::input("horizon must be at least 1"));
        }
        if let Start::Profile(s) = &self.start {
            game.check_profile(&s.0)?;
        }
        if let Some(c) = self.checkpoints.iter().find(|&&c| c > self.horizon) {
            return Err(Error::input(format!("checkpoint {c} lies beyond the horizon {}", self.horizon)));
        }
        Ok(())
    }
}

/// Something that may happen along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// `X_t` lies in the given set of profiles.
    Set { profiles: Vec<Profile> },
    /// The ensemble distribution of `X_t` is within `tolerance` of `target`
    /// in total variation. Only meaningful across many runs.
    Distro { target: Distribution, tolerance: f64 },
    /// `profile` has been visited at least `count` times, counting `X_0`.
    Visits { profile: Profile, count: u64 },
}

impl Event {
    pub fn set(profiles: Vec<Profile>) -> Event {
        Event::Set { profiles }
    }

    pub fn validate(&self, game: &Game) -> Result<()> {
        match self {
            Event::Set { profiles } => {
                if profiles.is_empty() {
                    return Err(Error::input("set event is empty"));
                }
                profiles.iter().try_for_each(|s| game.check_profile(&s.0))
            }
            Event::Distro { target, tolerance } => {
                if target.len() as u64 != game.profile_count()? {
                    return Err(Error::input("distro target does not cover the profile space"));
                }
                target.validate()?;
                if !(0.0..=1.0).contains(tolerance) {
                    return Err(Error::input("distro tolerance must lie in [0, 1]"));
                }
                Ok(())
            }
            Event::Visits { profile, count } => {
                if *count == 0 {
                    return Err(Error::input("visit count must be at least 1"));
                }
                game.check_profile(&profile.0)
            }
        }
    }

    fn is_distro(&self) -> bool {
        matches!(self, Event::Distro { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    /// `(t, X_t)` for every requested checkpoint, ascending.
    pub checkpoints: Vec<(u64, Profile)>,
    /// First step at which each event held, if within the horizon.
    pub hits: Vec<Option<u64>>,
    pub log: Option<Vec<Profile>>,
    /// Last step simulated; runs stop early once nothing is left to observe.
    pub steps: u64,
}

enum Membership {
    Ranks(Vec<bool>),
    Profiles(BTreeSet<Vec<usize>>),
}

enum Watch {
    Set(Membership),
    Visits { profile: Vec<usize>, count: u64 },
    Ignored,
}

/// Cumulative response probabilities per player and profile rank.
struct CdfTable {
    offsets: Vec<usize>,
    counts: Vec<usize>,
    cdf: Vec<f64>,
}

impl CdfTable {
    fn build(game: &Game, rules: &[PlayerRule]) -> Option<CdfTable> {
        let total = game.profile_count_raw()?;
        let entries: u64 = game.strategy_counts().iter().map(|&m| total.saturating_mul(m as u64)).sum();
        if entries > CDF_TABLE_ENTRIES {
            return None;
        }
        let memoryless: Vec<_> = rules.iter().map(PlayerRule::memoryless).collect::<Option<_>>()?;
        let counts = game.strategy_counts().to_vec();
        let mut offsets = Vec::with_capacity(counts.len());
        let mut cdf = Vec::with_capacity(entries as usize);
        let (mut scratch, mut dist) = (Vec::new(), Vec::new());
        for (i, rule) in memoryless.iter().enumerate() {
            offsets.push(cdf.len());
            for r in 0..total {
                let s = game.unrank(r);
                rule.distribution_into(game, i, &s.0, &mut scratch, &mut dist);
                let start = cdf.len();
                let mut acc = 0.0;
                let mut last = 0;
                for (j, &p) in dist.iter().enumerate() {
                    if p > 0.0 {
                        acc += p;
                        last = j;
                    }
                    cdf.push(if p > 0.0 { acc } else { f64::NEG_INFINITY });
                }
                // Matches `inverse_cdf`: zero-mass entries never win and the
                // last positive entry absorbs rounding.
                cdf[start + last] = f64::INFINITY;
            }
        }
        Some(CdfTable { offsets, counts, cdf })
    }

    #[inline]
    fn sample(&self, player: usize, rank: u64, u: f64) -> usize {
        let m = self.counts[player];
        let base = self.offsets[player] + rank as usize * m;
        let row = &self.cdf[base..base + m];
        row.iter().position(|&c| u < c).expect("last positive entry is infinite")
    }
}

/// A run configuration prepared for repeated execution.
struct Engine<'a> {
    game: &'a Game,
    config: &'a RunConfig,
    table: Option<CdfTable>,
    watches: Vec<Watch>,
    checkpoints: Vec<u64>,
    enumerable: bool,
}

struct RunOutcome {
    checkpoints: Vec<Vec<usize>>,
    hits: Vec<Option<u64>>,
    log: Option<Vec<Profile>>,
    steps: u64,
}

impl<'a> Engine<'a> {
    fn new(game: &'a Game, config: &'a RunConfig, events: &[Event], use_table: bool) -> Result<Engine<'a>> {
        config.validate(game)?;
        for e in events {
            e.validate(game)?;
        }
        let enumerable = game.profile_count_raw().is_some();
        let watches = events
            .iter()
            .map(|e| match e {
                Event::Set { profiles } => {
                    let membership = match game.profile_count_raw() {
                        Some(count) if count <= DISTRIBUTION_CAP => {
                            let mut bits = vec![false; count as usize];
                            profiles.iter().for_each(|s| bits[game.rank(&s.0) as usize] = true);
                            Membership::Ranks(bits)
                        }
                        _ => Membership::Profiles(profiles.iter().map(|s| s.0.clone()).collect()),
                    };
                    Watch::Set(membership)
                }
                Event::Visits { profile, count } => Watch::Visits { profile: profile.0.clone(), count: *count },
                Event::Distro { .. } => Watch::Ignored,
            })
            .collect();
        let mut checkpoints = config.checkpoints.clone();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        let table = if use_table { CdfTable::build(game, &config.rules) } else { None };
        Ok(Engine { game, config, table, watches, checkpoints, enumerable })
    }

    fn run(&self, seed: u64) -> RunOutcome {
        let game = self.game;
        let n = game.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s: Vec<usize> = match &self.config.start {
            Start::Profile(p) => p.0.clone(),
            Start::Random(RandomStart::UniformRandom) => {
                game.strategy_counts().iter().map(|&m| rng.random_range(0..m)).collect()
            }
        };
        let strides = game.strides();
        let mut rank = if self.enumerable { game.rank(&s) } else { 0 };
        let mut states: Vec<u64> = self
            .config
            .rules
            .iter()
            .map(|r| match r {
                PlayerRule::Stateful(r) => r.initial_state(),
                PlayerRule::Memoryless(_) => 0,
            })
            .collect();
        let mut hits = vec![None; self.watches.len()];
        let mut visits = vec![0u64; self.watches.len()];
        let mut recorded = Vec::with_capacity(self.checkpoints.len());
        let mut log = self.config.record_log.then(|| vec![Profile(s.clone())]);
        let mut next_cp = 0;
        let mut selected = Vec::with_capacity(n);
        let mut chosen = Vec::with_capacity(n);
        let (mut scratch, mut dist) = (Vec::new(), Vec::new());

        let observe = |t: u64, s: &[usize], rank: u64, hits: &mut Vec<Option<u64>>, visits: &mut Vec<u64>| {
            for (k, w) in self.watches.iter().enumerate() {
                if hits[k].is_some() {
                    continue;
                }
                let hit = match w {
                    Watch::Set(Membership::Ranks(bits)) => bits[rank as usize],
                    Watch::Set(Membership::Profiles(set)) => set.contains(s),
                    Watch::Visits { profile, count } => {
                        if profile == s {
                            visits[k] += 1;
                        }
                        visits[k] >= *count
                    }
                    Watch::Ignored => false,
                };
                if hit {
                    hits[k] = Some(t);
                }
            }
        };
        let pending = |hits: &[Option<u64>]| {
            self.watches.iter().zip(hits).any(|(w, h)| h.is_none() && !matches!(w, Watch::Ignored))
        };

        observe(0, &s, rank, &mut hits, &mut visits);
        while next_cp < self.checkpoints.len() && self.checkpoints[next_cp] == 0 {
            recorded.push(s.clone());
            next_cp += 1;
        }
        let mut t = 0;
        while t < self.config.horizon {
            if next_cp == self.checkpoints.len() && log.is_none() && !pending(&hits) {
                break;
            }
            t += 1;
            self.config.schedule.select(t - 1, &mut rng, &mut selected);
            chosen.clear();
            for &i in &selected {
                let u: f64 = rng.random();
                let x = match (&self.table, &self.config.rules[i]) {
                    (Some(table), _) => table.sample(i, rank, u),
                    (None, PlayerRule::Memoryless(rule)) => {
                        rule.distribution_into(game, i, &s, &mut scratch, &mut dist);
                        inverse_cdf(&dist, u)
                    }
                    (None, PlayerRule::Stateful(rule)) => {
                        let (x, state) = rule.respond(game, i, &s, states[i], u);
                        states[i] = state;
                        x
                    }
                };
                chosen.push(x);
            }
            for (&i, &x) in selected.iter().zip(&chosen) {
                if self.enumerable {
                    rank = rank + x as u64 * strides[i] - s[i] as u64 * strides[i];
                }
                s[i] = x;
            }
            observe(t, &s, rank, &mut hits, &mut visits);
            while next_cp < self.checkpoints.len() && self.checkpoints[next_cp] == t {
                recorded.push(s.clone());
                next_cp += 1;
            }
            if let Some(log) = &mut log {
                log.push(Profile(s.clone()));
            }
        }
        RunOutcome { checkpoints: recorded, hits, log, steps: t }
    }

    fn trajectory(&self, out: RunOutcome) -> Trajectory {
        Trajectory {
            checkpoints: self.checkpoints.iter().copied().zip(out.checkpoints.into_iter().map(Profile)).collect(),
            hits: out.hits,
            log: out.log,
            steps: out.steps,
        }
    }

    fn run_many(&self, runs: u64) -> Vec<RunOutcome> {
        let master = self.config.seed;
        (0..runs).into_par_iter().map(|r| self.run(mix64(master, r))).collect()
    }
}

/// Simulates one trajectory with `config.seed` as the stream seed.
pub fn run(game: &Game, config: &RunConfig, events: &[Event]) -> Result<Trajectory> {
    let engine = Engine::new(game, config, events, true)?;
    Ok(engine.trajectory(engine.run(config.seed)))
}

/// Same as [`run`] but always evaluates rules directly instead of through the
/// precomputed sampling table. Produces identical trajectories; used to test that.
pub fn run_untabled(game: &Game, config: &RunConfig, events: &[Event]) -> Result<Trajectory> {
    let engine = Engine::new(game, config, events, false)?;
    Ok(engine.trajectory(engine.run(config.seed)))
}

/// First step at which `event` holds, or `None` within the horizon.
pub fn hitting_time(game: &Game, config: &RunConfig, event: &Event) -> Result<Option<u64>> {
    if event.is_distro() {
        return Err(Error::Unsupported("distro events need an ensemble; use monte_carlo or chain analysis".into()));
    }
    Ok(run(game, config, std::slice::from_ref(event))?.hits[0])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointRow {
    pub checkpoint: u64,
    pub p_at: f64,
    pub p_at_lo: f64,
    pub p_at_hi: f64,
    pub p_by: f64,
    pub p_by_lo: f64,
    pub p_by_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistroRow {
    pub checkpoint: u64,
    pub tv: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventReport {
    /// Per-checkpoint estimates for set and visit events.
    pub rows: Vec<CheckpointRow>,
    /// Per-checkpoint ensemble distance for distro events.
    pub distro: Option<Vec<DistroRow>>,
    /// Runs in which the event held at some step within the horizon.
    pub hit_runs: u64,
    /// Median hitting time over all runs, `None` when at most half the runs hit.
    pub median_hit: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub runs: u64,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub events: Vec<EventReport>,
}

impl MonteCarloReport {
    /// CSV with columns `checkpoint,p_at,p_at_lo,p_at_hi,p_by,p_by_lo,p_by_hi`.
    pub fn write_csv<W: Write>(&self, event: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let report = self.events.get(event).ok_or_else(|| Error::input("no such event"))?;
        if report.rows.is_empty() {
            w.write_record(["checkpoint", "p_at", "p_at_lo", "p_at_hi", "p_by", "p_by_lo", "p_by_hi"])?;
        }
        for row in &report.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `runs` independent seeded trajectories and estimates, per event and
/// checkpoint, `P(X_c in event)` and `P(event by c)` with 95% Wilson intervals.
pub fn monte_carlo(game: &Game, template: &RunConfig, runs: u64, events: &[Event]) -> Result<MonteCarloReport> {
    if runs < 100 {
        return Err(Error::input("monte_carlo needs at least 100 runs"));
    }
    let engine = Engine::new(game, template, events, true)?;
    let outcomes = engine.run_many(runs);
    let cps = engine.checkpoints.clone();
    let mut reports = Vec::with_capacity(events.len());
    let distributions = if events.iter().any(Event::is_distro) { Some(ensemble(game, &outcomes, cps.len())?) } else { None };
    for (k, e) in events.iter().enumerate() {
        if let Event::Distro { target, tolerance } = e {
            let rows = cps
                .iter()
                .zip(distributions.as_ref().unwrap())
                .map(|(&c, d)| {
                    let tv = tv_distance(d, target);
                    DistroRow { checkpoint: c, tv, holds: tv <= *tolerance }
                })
                .collect();
            reports.push(EventReport { rows: Vec::new(), distro: Some(rows), hit_runs: 0, median_hit: None });
            continue;
        }
        let mut hit_times: Vec<u64> = outcomes.iter().filter_map(|o| o.hits[k]).collect();
        hit_times.sort_unstable();
        let hit_runs = hit_times.len() as u64;
        let median_hit = (2 * hit_runs > runs).then(|| hit_times[((runs - 1) / 2) as usize]);
        let single = [e.clone()];
        let probe = Engine::new(game, template, &single, false)?;
        let rows = cps
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let by = hit_times.partition_point(|&h| h <= c) as u64;
                // Visit counts never decrease, so a visit event holds at c iff it held by c.
                let at = match e {
                    Event::Visits { .. } => by,
                    _ => outcomes.iter().filter(|o| probe.holds_at(&o.checkpoints[j])).count() as u64,
                };
                let (a, b) = (wilson(at, runs, Z95), wilson(by, runs, Z95));
                CheckpointRow { checkpoint: c, p_at: a.estimate, p_at_lo: a.lo, p_at_hi: a.hi, p_by: b.estimate, p_by_lo: b.lo, p_by_hi: b.hi }
            })
            .collect();
        reports.push(EventReport { rows, distro: None, hit_runs, median_hit });
    }
    Ok(MonteCarloReport { runs, seed: template.seed, checkpoints: cps, events: reports })
}

impl Engine<'_> {
    /// Whether the single watched set event contains `s`.
    fn holds_at(&self, s: &[usize]) -> bool {
        match &self.watches[0] {
            Watch::Set(Membership::Ranks(bits)) => bits[self.game.rank(s) as usize],
            Watch::Set(Membership::Profiles(set)) => set.contains(s),
            _ => false,
        }
    }
}

fn ensemble(game: &Game, outcomes: &[RunOutcome], checkpoints: usize) -> Result<Vec<Distribution>> {
    let count = game.enumerable(DISTRIBUTION_CAP)?;
    let runs = outcomes.len() as f64;
    Ok((0..checkpoints)
        .map(|j| {
            let mut hist = vec![0u64; count as usize];
            outcomes.iter().for_each(|o| hist[game.rank(&o.checkpoints[j]) as usize] += 1);
            Distribution::new_unchecked(hist.into_iter().map(|c| c as f64 / runs).collect())
        })
        .collect())
}

/// Empirical distribution of `X_c` over `runs` runs, for each checkpoint of the template.
pub fn empirical_distributions(game: &Game, template: &RunConfig, runs: u64) -> Result<Vec<Distribution>> {
    let engine = Engine::new(game, template, &[], true)?;
    let outcomes = engine.run_many(runs);
    ensemble(game, &outcomes, engine.checkpoints.len())
}

/// How the total utility `Γ_i` is read off a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HorizonMode {
    /// `E[u_i(X_T)]`.
    Finite,
    /// `limsup E[u_i(X_t)]`, estimated by the largest of `windows` checkpoint
    /// means spread evenly over `(T/2, T]`.
    Limsup { windows: usize },
}

impl Default for HorizonMode {
    fn default() -> Self {
        HorizonMode::Limsup { windows: 10 }
    }
}

impl HorizonMode {
    pub fn checkpoints(&self, horizon: u64) -> Vec<u64> {
        match self {
            HorizonMode::Finite => vec![horizon],
            HorizonMode::Limsup { windows } => {
                let w = (*windows).max(1) as u64;
                let half = horizon / 2;
                (1..=w).map(|j| half + (horizon - half) * j / w).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UtilityEstimate {
    pub player: usize,
    pub horizon: u64,
    pub mode: HorizonMode,
    /// Point estimate with a 95% interval; in limsup mode the interval is
    /// simultaneous over the tail checkpoints (Bonferroni).
    pub gamma: Interval,
    pub checkpoints: Vec<u64>,
    pub checkpoint_means: Vec<Interval>,
    /// Per-run value: `u_i(X_T)` or the run's average over the tail checkpoints.
    #[serde(skip)]
    pub per_run: Vec<f64>,
}

/// Per-run utilities of `player` at each checkpoint: `values[r][j]`.
pub(crate) fn utility_samples(
    game: &Game,
    template: &RunConfig,
    player: usize,
    checkpoints: &[u64],
    runs: u64,
) -> Result<Vec<Vec<f64>>> {
    game.check_player(player)?;
    let mut config = template.clone();
    config.checkpoints = checkpoints.to_vec();
    config.horizon = *checkpoints.iter().max().ok_or_else(|| Error::input("no checkpoints"))?;
    let engine = Engine::new(game, &config, &[], true)?;
    let outcomes = engine.run_many(runs);
    Ok(outcomes.iter().map(|o| o.checkpoints.iter().map(|s| game.payoff(player, s)).collect()).collect())
}

/// Combines per-run checkpoint utilities into a total-utility estimate.
pub(crate) fn summarize_utility(player: usize, horizon: u64, mode: HorizonMode, checkpoints: Vec<u64>, values: &[Vec<f64>]) -> UtilityEstimate {
    let w = checkpoints.len();
    let z = if w > 1 { normal_upper_quantile(0.05 / (2.0 * w as f64)) } else { Z95 };
    let checkpoint_means: Vec<Interval> = (0..w)
        .map(|j| mean_interval(&values.iter().map(|v| v[j]).collect::<Vec<_>>(), z))
        .collect();
    let gamma = Interval {
        estimate: checkpoint_means.iter().map(|m| m.estimate).fold(f64::NEG_INFINITY, f64::max),
        lo: checkpoint_means.iter().map(|m| m.lo).fold(f64::NEG_INFINITY, f64::max),
        hi: checkpoint_means.iter().map(|m| m.hi).fold(f64::NEG_INFINITY, f64::max),
    };
    let per_run = values.iter().map(|v| v.iter().sum::<f64>() / w as f64).collect();
    UtilityEstimate { player, horizon, mode, gamma, checkpoints, checkpoint_means, per_run }
}

/// Estimates `Γ_i` for `player` over `runs` seeded runs of length `horizon`.
pub fn total_utility(game: &Game, template: &RunConfig, player: usize, horizon: u64, runs: u64, mode: HorizonMode) -> Result<UtilityEstimate> {
    if runs < 2 {
        return Err(Error::input("total_utility needs at least 2 runs"));
    }
    let checkpoints = mode.checkpoints(horizon);
    let values = utility_samples(game, template, player, &checkpoints, runs)?;
    Ok(summarize_utility(player, horizon, mode, checkpoints, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::pure_nash_equilibria;
    use crate::rules::{uniform_rules, ResponseRule, StatefulRule};
    use crate::zoo::ZooSpec;
    use std::sync::Arc;

    fn config(game: &Game, schedule: Schedule, rule: ResponseRule, start: Vec<usize>) -> RunConfig {
        RunConfig::new(schedule, uniform_rules(game, &rule), Start::profile(start))
    }

    #[test]
    fn coordination_cycles_under_concurrent_play() {
        let g = ZooSpec::Coordination.build().unwrap();
        let mut c = config(&g, Schedule::Concurrent { n: 2 }, ResponseRule::perfect(), vec![1, 0]).horizon(6);
        c.record_log = true;
        let t = run(&g, &c, &[]).unwrap();
        let log: Vec<Vec<usize>> = t.log.unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(log, vec![vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn nash_start_is_constant_under_perfect_play() {
        let g = ZooSpec::IcCounterexample { l: 4.0 }.build().unwrap();
        let mut c = config(&g, Schedule::UniformOne { n: 2 }, ResponseRule::perfect(), vec![0, 0]).horizon(200).seed(5);
        c.record_log = true;
        let t = run(&g, &c, &[]).unwrap();
        assert!(t.log.unwrap().iter().all(|p| p.0 == [0, 0]));
    }

    #[test]
    fn conservative_ties_never_leave() {
        let g = ZooSpec::UniqueNe.build().unwrap();
        let c = config(&g, Schedule::UniformOne { n: 2 }, ResponseRule::mutation(0.0), vec![1, 0]).horizon(1000);
        let leave = Event::set(vec![Profile(vec![0, 0]), Profile(vec![0, 1]), Profile(vec![1, 1])]);
        for seed in 0..20 {
            assert_eq!(hitting_time(&g, &c.clone().seed(seed), &leave).unwrap(), None);
        }
    }

    #[test]
    fn hitting_time_examples() {
        let chain = ZooSpec::Chain { n: 3, penalty: 10.0 }.build().unwrap();
        let c = config(&chain, Schedule::RoundRobin { n: 3 }, ResponseRule::perfect(), vec![0, 0, 0]).horizon(100);
        let ne = Event::set(vec![Profile(vec![1, 1, 1])]);
        let t = hitting_time(&chain, &c, &ne).unwrap().unwrap();
        assert!(t <= 9);
        let at_start = Event::set(vec![Profile(vec![0, 0, 0])]);
        assert_eq!(hitting_time(&chain, &c, &at_start).unwrap(), Some(0));
        let twice = Event::Visits { profile: Profile(vec![1, 1, 1]), count: 2 };
        assert_eq!(hitting_time(&chain, &c, &twice).unwrap(), Some(t + 1));
    }

    #[test]
    fn runs_are_deterministic_and_match_direct_evaluation() {
        let g = ZooSpec::interference(0.5).build().unwrap();
        let mut c = config(&g, Schedule::UniformOne { n: 2 }, ResponseRule::Logit { beta: 1.0 }, vec![3, 3]).horizon(500).seed(42);
        c.record_log = true;
        let a = run(&g, &c, &[]).unwrap();
        assert_eq!(a, run(&g, &c, &[]).unwrap());
        assert_eq!(a, run_untabled(&g, &c, &[]).unwrap());
        let chain = ZooSpec::Chain { n: 4, penalty: 10.0 }.build().unwrap();
        let mut c = config(&chain, Schedule::Concurrent { n: 4 }, ResponseRule::ChainAdversarial { p: 0.2, q: 0.3 }, vec![0; 4]).horizon(300).seed(1);
        c.record_log = true;
        assert_eq!(run(&chain, &c, &[]).unwrap(), run_untabled(&chain, &c, &[]).unwrap());
    }

    #[test]
    fn monte_carlo_full_space_is_certain() {
        let g = ZooSpec::NbrExample.build().unwrap();
        let all: Vec<Profile> = g.profiles().unwrap().map(Profile).collect();
        let c = config(&g, Schedule::UniformOne { n: 2 }, ResponseRule::Logit { beta: 0.5 }, vec![2, 2]).horizon(20).checkpoints(vec![0, 5, 20]);
        let rep = monte_carlo(&g, &c, 200, &[Event::set(all)]).unwrap();
        for row in &rep.events[0].rows {
            assert_eq!((row.p_at, row.p_by), (1.0, 1.0));
        }
        let mut buf = Vec::new();
        rep.write_csv(0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("checkpoint,p_at,p_at_lo,p_at_hi,p_by,p_by_lo,p_by_hi\n0,1.0,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn monte_carlo_ignores_thread_count() {
        let g = ZooSpec::interference(0.5).build().unwrap();
        let ne = Event::set(pure_nash_equilibria(&g).unwrap());
        let c = config(&g, Schedule::UniformOne { n: 2 }, ResponseRule::Logit { beta: 2.0 }, vec![3, 3]).horizon(40).checkpoints(vec![10, 20, 40]).seed(3);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| monte_carlo(&g, &c, 500, &[ne.clone()]).unwrap());
        let b = four.install(|| monte_carlo(&g, &c, 500, &[ne.clone()]).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn distro_event_uses_ensemble() {
        let g = ZooSpec::Coordination.build().unwrap();
        let c = config(&g, Schedule::Concurrent { n: 2 }, ResponseRule::perfect(), vec![1, 0]).horizon(3).checkpoints(vec![0, 1, 2, 3]);
        let target = Distribution::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let rep = monte_carlo(&g, &c, 100, &[Event::Distro { target, tolerance: 0.01 }]).unwrap();
        let holds: Vec<bool> = rep.events[0].distro.as_ref().unwrap().iter().map(|r| r.holds).collect();
        assert_eq!(holds, vec![false, true, false, true]);
    }

    #[test]
    fn total_utility_at_fixed_nash() {
        let g = ZooSpec::IcCounterexample { l: 4.0 }.build().unwrap();
        let c = config(&g, Schedule::UniformOne { n: 2 }, ResponseRule::Constant { strategy: 0 }, vec![0, 0]);
        for mode in [HorizonMode::Finite, HorizonMode::default()] {
            let u = total_utility(&g, &c, 0, 100, 50, mode).unwrap();
            assert_eq!((u.gamma.estimate, u.gamma.lo, u.gamma.hi), (6.0, 6.0, 6.0));
        }
        assert_eq!(HorizonMode::Limsup { windows: 4 }.checkpoints(100), vec![62, 75, 87, 100]);
    }

    struct Alternate;

    impl StatefulRule for Alternate {
        fn name(&self) -> &str {
            "alternate"
        }

        fn respond(&self, _: &Game, _: usize, _: &[usize], state: u64, _: f64) -> (usize, u64) {
            ((state % 2) as usize, state + 1)
        }
    }

    #[test]
    fn stateful_rules_carry_state() {
        let g = ZooSpec::Coordination.build().unwrap();
        let rules = vec![PlayerRule::Stateful(Arc::new(Alternate)), PlayerRule::Memoryless(ResponseRule::Constant { strategy: 1 })];
        let mut c = RunConfig::new(Schedule::RoundRobin { n: 2 }, rules, Start::profile(vec![1, 0])).horizon(6);
        c.record_log = true;
        let log: Vec<usize> = run(&g, &c, &[]).unwrap().log.unwrap().iter().map(|p| p.0[0]).collect();
        assert_eq!(log, vec![1, 0, 0, 1, 1, 0, 0]);
    }

    #[test]
    fn rejects_bad_configs() {
        let g = ZooSpec::Coordination.build().unwrap();
        let c = config(&g, Schedule::RoundRobin { n: 3 }, ResponseRule::perfect(), vec![0, 0]);
        assert!(run(&g, &c, &[]).is_err());
        let c = config(&g, Schedule::RoundRobin { n: 2 }, ResponseRule::perfect(), vec![0, 2]);
        assert!(run(&g, &c, &[]).is_err());
        let c = config(&g, Schedule::RoundRobin { n: 2 }, ResponseRule::perfect(), vec![0, 0]).horizon(5).checkpoints(vec![6]);
        assert!(run(&g, &c, &[]).is_err());
        assert!(run(&g, &c.clone().checkpoints(vec![]), &[Event::set(vec![])]).is_err());
    }
}
