//! Never-best-response elimination and the game classes built on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{profile_cap, Game, Profile, ProfileIter, TieBreak};

/// Per-player strategy subsets of a parent game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgame {
    allowed: Vec<Vec<usize>>,
}

impl Subgame {
    pub fn full(game: &Game) -> Subgame {
        Subgame { allowed: game.strategy_counts().iter().map(|&m| (0..m).collect()).collect() }
    }

    pub fn new(game: &Game, mut allowed: Vec<Vec<usize>>) -> Result<Subgame> {
        if allowed.len() != game.n() {
            return Err(Error::input("subgame must list strategies for every player"));
        }
        for (i, a) in allowed.iter_mut().enumerate() {
            a.sort_unstable();
            a.dedup();
            if a.is_empty() {
                return Err(Error::input(format!("player {i} has no strategies in the subgame")));
            }
            if a.iter().any(|&x| x >= game.strategy_counts()[i]) {
                return Err(Error::input(format!("player {i} subgame strategy out of range")));
            }
        }
        Ok(Subgame { allowed })
    }

    pub fn allowed(&self) -> &[Vec<usize>] {
        &self.allowed
    }

    pub fn allowed_for(&self, player: usize) -> &[usize] {
        &self.allowed[player]
    }

    pub fn profile_count(&self) -> u128 {
        self.allowed.iter().fold(1u128, |a, s| a.saturating_mul(s.len() as u128))
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        s.iter().zip(&self.allowed).all(|(x, a)| a.binary_search(x).is_ok())
    }

    pub fn profiles(&self) -> ProfileIter {
        ProfileIter::new(self.allowed.clone())
    }

    /// Ranks (in the parent game) of every profile in the subgame, ascending.
    pub fn ranks(&self, game: &Game) -> Vec<u64> {
        self.profiles().map(|s| game.rank(&s)).collect()
    }

    pub fn single_profile(&self) -> Option<Profile> {
        self.allowed.iter().all(|a| a.len() == 1).then(|| Profile(self.allowed.iter().map(|a| a[0]).collect()))
    }

    fn without(&self, player: usize, removed: &[usize]) -> Subgame {
        let mut allowed = self.allowed.clone();
        allowed[player].retain(|x| !removed.contains(x));
        Subgame { allowed }
    }

    fn check_cap(&self) -> Result<()> {
        let cap = profile_cap();
        let count = self.profile_count();
        if count > cap as u128 {
            return Err(Error::Capacity { what: "subgame".into(), count, cap });
        }
        Ok(())
    }
}

/// How ties between equally good strategies count toward domination.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbrMode {
    /// Only strictly better alternatives dominate.
    #[default]
    Strict,
    /// An equally good alternative ranked higher by the tie-break also dominates.
    TieBreak,
}

/// Strategies of `player` that are never a best response within `sub`.
pub fn never_best_responses(
    game: &Game,
    sub: &Subgame,
    player: usize,
    tb: &TieBreak,
    mode: NbrMode,
) -> Result<Vec<usize>> {
    game.check_player(player)?;
    tb.check(game)?;
    sub.check_cap()?;
    let own = sub.allowed_for(player);
    if own.len() <= 1 {
        return Ok(Vec::new());
    }
    // Iterate opponent profiles by pinning the player's own coordinate.
    let mut sets = sub.allowed.clone();
    sets[player] = vec![own[0]];
    let mut survives = vec![false; own.len()];
    let mut payoffs = Vec::new();
    for s in ProfileIter::new(sets) {
        game.own_payoffs(player, &s, &mut payoffs);
        let max = own.iter().map(|&j| payoffs[j]).fold(f64::NEG_INFINITY, f64::max);
        match mode {
            NbrMode::Strict => {
                for (k, &j) in own.iter().enumerate() {
                    if payoffs[j] == max {
                        survives[k] = true;
                    }
                }
            }
            NbrMode::TieBreak => {
                let best = own
                    .iter()
                    .enumerate()
                    .filter(|&(_, &j)| payoffs[j] == max)
                    .min_by_key(|&(_, &j)| tb.position(player, j))
                    .map(|(k, _)| k)
                    .expect("nonempty strategy set");
                survives[best] = true;
            }
        }
        if survives.iter().all(|&x| x) {
            break;
        }
    }
    Ok(own.iter().zip(&survives).filter(|(_, &ok)| !ok).map(|(&j, _)| j).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationStep {
    pub player: usize,
    pub removed: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationSequence {
    pub steps: Vec<EliminationStep>,
    #[serde(rename = "final")]
    pub final_subgame: Subgame,
}

impl EliminationSequence {
    /// Number of elimination steps; the greedy upper bound on the shortest sequence length.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The subgames `G_0 ⊃ G_1 ⊃ ... ⊃ G_r` visited by the sequence.
    pub fn subgames(&self, game: &Game) -> Vec<Subgame> {
        let mut out = vec![Subgame::full(game)];
        for step in &self.steps {
            let next = out.last().unwrap().without(step.player, &step.removed);
            out.push(next);
        }
        out
    }

    /// Position of the first step taken by `player`.
    pub fn first_position(&self, player: usize) -> Option<usize> {
        self.steps.iter().position(|s| s.player == player)
    }

    /// Replays the sequence and re-checks that every removed strategy is NBR
    /// in its pre-step subgame and that the replay ends in `final_subgame`.
    pub fn verify(&self, game: &Game, tb: &TieBreak, mode: NbrMode) -> Result<bool> {
        let subs = self.subgames(game);
        for (k, step) in self.steps.iter().enumerate() {
            if step.removed.is_empty() {
                return Ok(false);
            }
            let nbr = never_best_responses(game, &subs[k], step.player, tb, mode)?;
            if step.removed.iter().any(|x| !nbr.contains(x)) {
                return Ok(false);
            }
        }
        Ok(subs.last() == Some(&self.final_subgame))
    }
}

/// Greedy elimination: repeatedly take the first player (ascending index)
/// with any NBR strategies and remove all of them, until none remain.
pub fn iterated_reduction(game: &Game, tb: &TieBreak, mode: NbrMode) -> Result<EliminationSequence> {
    let order: Vec<usize> = (0..game.n()).collect();
    reduce_in_order(game, &Subgame::full(game), tb, mode, &order)
}

/// Greedy elimination starting from `start`, scanning players in `order`.
pub fn reduce_in_order(
    game: &Game,
    start: &Subgame,
    tb: &TieBreak,
    mode: NbrMode,
    order: &[usize],
) -> Result<EliminationSequence> {
    let mut current = start.clone();
    let mut steps = Vec::new();
    'outer: loop {
        for &i in order {
            let nbr = never_best_responses(game, &current, i, tb, mode)?;
            if !nbr.is_empty() {
                current = current.without(i, &nbr);
                steps.push(EliminationStep { player: i, removed: nbr });
                continue 'outer;
            }
        }
        break;
    }
    Ok(EliminationSequence { steps, final_subgame: current })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Reduces to a single profile.
    Solvable,
    /// Reduces to a proper subgame with more than one profile.
    ReducibleOnly,
    /// No strategy is ever eliminated.
    Irreducible,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassifyResult {
    pub classification: Classification,
    pub sequence: EliminationSequence,
    /// The equilibrium reached by an NBR-solvable game.
    pub equilibrium: Option<Profile>,
}

impl ClassifyResult {
    pub fn reduced(&self) -> &Subgame {
        &self.sequence.final_subgame
    }

    pub fn ell_hat(&self) -> usize {
        self.sequence.len()
    }
}

pub fn classify(game: &Game) -> Result<ClassifyResult> {
    classify_with(game, &TieBreak::ascending(), NbrMode::Strict)
}

pub fn classify_with(game: &Game, tb: &TieBreak, mode: NbrMode) -> Result<ClassifyResult> {
    let sequence = iterated_reduction(game, tb, mode)?;
    let equilibrium = sequence.final_subgame.single_profile();
    let classification = if equilibrium.is_some() {
        Classification::Solvable
    } else if sequence.is_empty() {
        Classification::Irreducible
    } else {
        Classification::ReducibleOnly
    };
    Ok(ClassifyResult { classification, sequence, equilibrium })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum ClearVerdict {
    /// A witnessing sequence exists.
    Holds { order: Vec<usize>, position: usize },
    /// The player has a single strategy and never eliminates anything.
    Vacuous,
    /// No player ordering witnesses the condition (exhaustive over orderings).
    NotClear,
    /// Only rotations of the greedy order were tried and none witnessed.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlayerClearOutcome {
    pub player: usize,
    #[serde(flatten)]
    pub verdict: ClearVerdict,
    pub sequence: Option<EliminationSequence>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClearOutcomeReport {
    pub equilibrium: Profile,
    pub players: Vec<PlayerClearOutcome>,
}

impl ClearOutcomeReport {
    pub fn holds(&self) -> bool {
        self.players.iter().all(|p| matches!(p.verdict, ClearVerdict::Holds { .. } | ClearVerdict::Vacuous))
    }
}

/// Orderings tried exhaustively up to this many players.
pub const CLEAR_OUTCOME_EXHAUSTIVE_PLAYERS: usize = 6;

/// Searches, per player, for an elimination order in which the equilibrium
/// maximizes that player's utility over the subgame where the player first
/// eliminates. A weak maximum suffices.
pub fn clear_outcome_check(game: &Game, tb: &TieBreak, mode: NbrMode) -> Result<ClearOutcomeReport> {
    let base = classify_with(game, tb, mode)?;
    let equilibrium = base.equilibrium.clone().ok_or(Error::NotSolvable)?;
    let n = game.n();
    let exhaustive = n <= CLEAR_OUTCOME_EXHAUSTIVE_PLAYERS;
    let orders: Vec<Vec<usize>> = if exhaustive {
        permutations(n)
    } else {
        (0..n).map(|r| (0..n).map(|k| (k + r) % n).collect()).collect()
    };
    let full = Subgame::full(game);
    let mut players: Vec<Option<PlayerClearOutcome>> = vec![None; n];
    for (i, slot) in players.iter_mut().enumerate() {
        if game.strategy_counts()[i] == 1 {
            *slot = Some(PlayerClearOutcome { player: i, verdict: ClearVerdict::Vacuous, sequence: None });
        }
    }
    for order in &orders {
        if players.iter().all(Option::is_some) {
            break;
        }
        let seq = reduce_in_order(game, &full, tb, mode, order)?;
        if seq.final_subgame.single_profile().as_ref() != Some(&equilibrium) {
            continue;
        }
        let subs = seq.subgames(game);
        for i in 0..n {
            if players[i].is_some() {
                continue;
            }
            let Some(k) = seq.first_position(i) else { continue };
            let target = game.payoff(i, &equilibrium.0);
            if subs[k].profiles().all(|s| game.payoff(i, &s) <= target) {
                players[i] = Some(PlayerClearOutcome {
                    player: i,
                    verdict: ClearVerdict::Holds { order: order.clone(), position: k },
                    sequence: Some(seq.clone()),
                });
            }
        }
    }
    let players = players
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.unwrap_or(PlayerClearOutcome {
                player: i,
                verdict: if exhaustive { ClearVerdict::NotClear } else { ClearVerdict::Unknown },
                sequence: None,
            })
        })
        .collect();
    Ok(ClearOutcomeReport { equilibrium, players })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = vec![current.clone()];
    // lexicographic successor
    loop {
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else { break };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginVerdict {
    pub player: usize,
    /// First elimination position used for `G^(k)`; `None` for players with one strategy.
    pub position: Option<usize>,
    pub equilibrium_utility: f64,
    pub threshold: f64,
    pub holds: bool,
}

/// Checks `u_i(NE) >= (2 delta max_G u_i + max_{G_k} u_i) / (1 - 2 delta)` per player.
///
/// `G_k` comes from the player's clear-outcome witness when one exists and
/// from the greedy sequence otherwise.
pub fn ic_margin_check(game: &Game, delta: f64, tb: &TieBreak, mode: NbrMode) -> Result<Vec<MarginVerdict>> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::input("delta must lie in [0, 1/2)"));
    }
    for s in game.profiles()? {
        for i in 0..game.n() {
            if game.payoff(i, &s) < 0.0 {
                return Err(Error::Precondition(format!(
                    "utilities must be non-negative (player {i} at {})",
                    Profile(s.clone())
                )));
            }
        }
    }
    let report = clear_outcome_check(game, tb, mode)?;
    let greedy = iterated_reduction(game, tb, mode)?;
    let greedy_subs = greedy.subgames(game);
    let ne = &report.equilibrium.0;
    let mut out = Vec::with_capacity(game.n());
    for p in &report.players {
        let i = p.player;
        let u_ne = game.payoff(i, ne);
        let (position, sub) = match (&p.verdict, &p.sequence) {
            (ClearVerdict::Holds { position, .. }, Some(seq)) => (Some(*position), Some(seq.subgames(game)[*position].clone())),
            (ClearVerdict::Vacuous, _) => (None, None),
            _ => match greedy.first_position(i) {
                Some(k) => (Some(k), Some(greedy_subs[k].clone())),
                None => (None, None),
            },
        };
        let Some(sub) = sub else {
            out.push(MarginVerdict { player: i, position, equilibrium_utility: u_ne, threshold: u_ne, holds: true });
            continue;
        };
        let max_all = game.profiles()?.map(|s| game.payoff(i, &s)).fold(f64::NEG_INFINITY, f64::max);
        let max_sub = sub.profiles().map(|s| game.payoff(i, &s)).fold(f64::NEG_INFINITY, f64::max);
        let threshold = (2.0 * delta * max_all + max_sub) / (1.0 - 2.0 * delta);
        out.push(MarginVerdict { player: i, position, equilibrium_utility: u_ne, threshold, holds: u_ne >= threshold });
    }
    Ok(out)
}
