//! Finite n-player games, strategy profiles and the best-response primitives.
//!
//! Profiles are ranked lexicographically with player 0 as the most
//! significant digit; dense utility tables and probability vectors over the
//! profile space all use this indexing.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of profiles of an enumerable game.
pub const DEFAULT_PROFILE_CAP: u64 = 1 << 20;

/// Tolerance used when verifying potential functions.
pub const POTENTIAL_TOLERANCE: f64 = 1e-9;

/// Environment variable overriding every state-space cap.
pub const CAP_ENV: &str = "IBRL_CAP";

pub(crate) fn cap_override() -> Option<u64> {
    std::env::var(CAP_ENV).ok().and_then(|v| v.trim().parse().ok())
}

/// Profile cap for dense tables and enumeration, honouring `IBRL_CAP`.
pub fn profile_cap() -> u64 {
    cap_override().unwrap_or(DEFAULT_PROFILE_CAP)
}

/// A pure strategy profile: entry `i` is player `i`'s strategy index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Profile(pub Vec<usize>);

impl Profile {
    pub fn new(strategies: Vec<usize>) -> Self {
        Profile(strategies)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The profile `(strategy, s_-i)`.
    pub fn with(&self, player: usize, strategy: usize) -> Profile {
        let mut s = self.0.clone();
        s[player] = strategy;
        Profile(s)
    }
}

impl From<Vec<usize>> for Profile {
    fn from(v: Vec<usize>) -> Self {
        Profile(v)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

/// Formula-backed utilities for games too large to tabulate.
#[derive(Clone, Debug, PartialEq)]
pub enum Oracle {
    /// Player `i` gets 0 for strategy 0; strategy 1 pays 1 when every
    /// lower-indexed player plays 1 and `-penalty` otherwise.
    Chain { n: usize, penalty: f64 },
    /// Rank-encoded route preferences of the chain routing instance: the
    /// route through all predecessors (strategy 1, predecessors all on 1)
    /// ranks 2, the direct route via the shared provider (strategy 0) ranks 1,
    /// anything else ranks 0.
    BgpChain { n: usize },
}

impl Oracle {
    pub fn name(&self) -> &'static str {
        match self {
            Oracle::Chain { .. } => "chain",
            Oracle::BgpChain { .. } => "bgp_chain",
        }
    }

    pub fn params(&self) -> serde_json::Map<String, serde_json::Value> {
        let mut m = serde_json::Map::new();
        match self {
            Oracle::Chain { n, penalty } => {
                m.insert("n".into(), (*n).into());
                m.insert("L".into(), (*penalty).into());
            }
            Oracle::BgpChain { n } => {
                m.insert("n".into(), (*n).into());
            }
        }
        m
    }

    fn n(&self) -> usize {
        match self {
            Oracle::Chain { n, .. } | Oracle::BgpChain { n } => *n,
        }
    }

    fn utility(&self, player: usize, s: &[usize]) -> f64 {
        let predecessors_on = s[..player].iter().all(|&x| x == 1);
        match self {
            Oracle::Chain { penalty, .. } => match (s[player], predecessors_on) {
                (0, _) => 0.0,
                (_, true) => 1.0,
                (_, false) => -penalty,
            },
            Oracle::BgpChain { .. } => match (s[player], predecessors_on) {
                (0, _) => 1.0,
                (_, true) => 2.0,
                (_, false) => 0.0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum UtilitySource {
    /// `table[player][rank]`.
    Table(Vec<Vec<f64>>),
    Oracle(Oracle),
}

/// A finite game in normal form.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    strategy_counts: Vec<usize>,
    strides: Vec<u64>,
    profile_count: Option<u64>,
    source: UtilitySource,
    labels: Option<Vec<Vec<String>>>,
}

fn strides_for(counts: &[usize]) -> (Vec<u64>, Option<u64>) {
    let mut strides = vec![0u64; counts.len()];
    let mut acc: Option<u64> = Some(1);
    for i in (0..counts.len()).rev() {
        strides[i] = acc.unwrap_or(0);
        acc = acc.and_then(|a| a.checked_mul(counts[i] as u64));
    }
    (strides, acc)
}

impl Game {
    /// Builds a table-backed game. `utilities[player][rank]` holds `u_i(s)`.
    pub fn from_table(strategy_counts: Vec<usize>, utilities: Vec<Vec<f64>>) -> Result<Game> {
        Self::check_counts(&strategy_counts)?;
        let (strides, total) = strides_for(&strategy_counts);
        let cap = profile_cap();
        let total = match total {
            Some(t) if t <= cap => t,
            _ => {
                return Err(Error::Capacity {
                    what: "dense utility table".into(),
                    count: product_u128(&strategy_counts),
                    cap,
                })
            }
        };
        if utilities.len() != strategy_counts.len() {
            return Err(Error::input(format!(
                "utilities has {} player rows, expected {}",
                utilities.len(),
                strategy_counts.len()
            )));
        }
        for (i, row) in utilities.iter().enumerate() {
            if row.len() as u64 != total {
                return Err(Error::input(format!(
                    "player {i} has {} utilities, expected {total}",
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|u| !u.is_finite()) {
                return Err(Error::input(format!("player {i} utility at rank {k} is not finite")));
            }
        }
        Ok(Game {
            strategy_counts,
            strides,
            profile_count: Some(total),
            source: UtilitySource::Table(utilities),
            labels: None,
        })
    }

    /// Tabulates `f(player, profile)` over every profile.
    pub fn from_fn(
        strategy_counts: Vec<usize>,
        mut f: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Game> {
        Self::check_counts(&strategy_counts)?;
        let n = strategy_counts.len();
        let count = product_u128(&strategy_counts);
        let cap = profile_cap();
        if count > cap as u128 {
            return Err(Error::Capacity { what: "dense utility table".into(), count, cap });
        }
        let mut table = vec![Vec::with_capacity(count as usize); n];
        for s in ProfileIter::new(strategy_counts.iter().map(|&m| (0..m).collect()).collect()) {
            for (i, row) in table.iter_mut().enumerate() {
                row.push(f(i, &s));
            }
        }
        Self::from_table(strategy_counts, table)
    }

    pub fn from_oracle(oracle: Oracle) -> Result<Game> {
        let n = oracle.n();
        if n == 0 {
            return Err(Error::input("oracle game needs at least one player"));
        }
        if n > 63 {
            return Err(Error::input("oracle games support at most 63 players"));
        }
        let counts = vec![2; n];
        let (strides, total) = strides_for(&counts);
        Ok(Game {
            strategy_counts: counts,
            strides,
            profile_count: total,
            source: UtilitySource::Oracle(oracle),
            labels: None,
        })
    }

    fn check_counts(counts: &[usize]) -> Result<()> {
        if counts.is_empty() {
            return Err(Error::input("a game needs at least one player"));
        }
        if let Some(i) = counts.iter().position(|&m| m == 0) {
            return Err(Error::input(format!("player {i} has no strategies")));
        }
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Result<Game> {
        if labels.len() != self.n()
            || labels.iter().zip(&self.strategy_counts).any(|(l, &m)| l.len() != m)
        {
            return Err(Error::input("labels must name every strategy of every player"));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.strategy_counts.len()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn max_strategies(&self) -> usize {
        self.strategy_counts.iter().copied().max().unwrap_or(1)
    }

    pub fn source(&self) -> &UtilitySource {
        &self.source
    }

    pub fn is_table(&self) -> bool {
        matches!(self.source, UtilitySource::Table(_))
    }

    pub fn labels(&self) -> Option<&[Vec<String>]> {
        self.labels.as_deref()
    }

    /// Looks up a strategy by label, falling back to a numeric index.
    pub fn strategy_by_label(&self, player: usize, label: &str) -> Option<usize> {
        if let Some(l) = self.labels.as_ref().and_then(|l| l.get(player)) {
            if let Some(k) = l.iter().position(|x| x == label) {
                return Some(k);
            }
        }
        let m = *self.strategy_counts.get(player)?;
        label.parse().ok().filter(|&k| k < m)
    }

    /// Number of profiles, if it fits in 64 bits.
    pub fn profile_count_raw(&self) -> Option<u64> {
        self.profile_count
    }

    /// Number of profiles, checked against `cap`.
    pub fn enumerable(&self, cap: u64) -> Result<u64> {
        match self.profile_count {
            Some(c) if c <= cap => Ok(c),
            _ => Err(Error::Capacity {
                what: "profile space".into(),
                count: product_u128(&self.strategy_counts),
                cap,
            }),
        }
    }

    /// Number of profiles, checked against the default cap.
    pub fn profile_count(&self) -> Result<u64> {
        self.enumerable(profile_cap())
    }

    pub(crate) fn strides(&self) -> &[u64] {
        &self.strides
    }

    pub fn rank(&self, s: &[usize]) -> u64 {
        s.iter().zip(&self.strides).map(|(&x, &w)| x as u64 * w).sum()
    }

    pub fn unrank(&self, mut rank: u64) -> Profile {
        let mut s = vec![0; self.n()];
        for (i, &w) in self.strides.iter().enumerate() {
            s[i] = (rank / w) as usize;
            rank %= w;
        }
        Profile(s)
    }

    pub fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.n() {
            return Err(Error::input(format!("player {player} out of range (n = {})", self.n())));
        }
        Ok(())
    }

    pub fn check_profile(&self, s: &[usize]) -> Result<()> {
        if s.len() != self.n() {
            return Err(Error::input(format!(
                "profile has {} entries, game has {} players",
                s.len(),
                self.n()
            )));
        }
        for (i, (&x, &m)) in s.iter().zip(&self.strategy_counts).enumerate() {
            if x >= m {
                return Err(Error::input(format!(
                    "player {i} strategy {x} out of range (m = {m})"
                )));
            }
        }
        Ok(())
    }

    /// `u_i(s)` with input validation.
    pub fn utility(&self, player: usize, s: &Profile) -> Result<f64> {
        self.check_player(player)?;
        self.check_profile(&s.0)?;
        Ok(self.payoff(player, &s.0))
    }

    /// `u_i(s)` without validation; `s` must be a valid profile.
    #[inline]
    pub fn payoff(&self, player: usize, s: &[usize]) -> f64 {
        match &self.source {
            UtilitySource::Table(t) => t[player][self.rank(s) as usize],
            UtilitySource::Oracle(o) => o.utility(player, s),
        }
    }

    /// Fills `out[j] = u_i(j, s_-i)` for every strategy `j` of `player`.
    pub fn own_payoffs(&self, player: usize, s: &[usize], out: &mut Vec<f64>) {
        let m = self.strategy_counts[player];
        out.clear();
        match &self.source {
            UtilitySource::Table(t) => {
                let stride = self.strides[player];
                let base = self.rank(s) - s[player] as u64 * stride;
                let row = &t[player];
                out.extend((0..m).map(|j| row[(base + j as u64 * stride) as usize]));
            }
            UtilitySource::Oracle(o) => {
                let mut scratch = s.to_vec();
                for j in 0..m {
                    scratch[player] = j;
                    out.push(o.utility(player, &scratch));
                }
            }
        }
    }

    /// Iterates every profile in rank order. Fails beyond the profile cap.
    pub fn profiles(&self) -> Result<ProfileIter> {
        self.profile_count()?;
        Ok(ProfileIter::new(self.strategy_counts.iter().map(|&m| (0..m).collect()).collect()))
    }

    /// Dense table game on the given per-player strategy subsets, re-indexed
    /// so that `allowed[i][k]` becomes strategy `k`.
    pub fn restricted_table(&self, allowed: &[Vec<usize>]) -> Result<Game> {
        if allowed.len() != self.n() {
            return Err(Error::input("restriction must list strategies for every player"));
        }
        for (i, a) in allowed.iter().enumerate() {
            if a.is_empty() || a.iter().any(|&x| x >= self.strategy_counts[i]) {
                return Err(Error::input(format!("invalid strategy subset for player {i}")));
            }
        }
        let counts: Vec<usize> = allowed.iter().map(Vec::len).collect();
        let mut mapped = vec![0; self.n()];
        let mut game = Game::from_fn(counts, |i, s| {
            for (k, &x) in s.iter().enumerate() {
                mapped[k] = allowed[k][x];
            }
            self.payoff(i, &mapped)
        })?;
        if let Some(labels) = &self.labels {
            game.labels = Some(
                allowed
                    .iter()
                    .zip(labels)
                    .map(|(a, l)| a.iter().map(|&x| l[x].clone()).collect())
                    .collect(),
            );
        }
        Ok(game)
    }

    /// Serializable description of the game.
    pub fn to_file(&self) -> GameFile {
        match &self.source {
            UtilitySource::Table(t) => GameFile::Table {
                n: self.n(),
                strategy_counts: self.strategy_counts.clone(),
                utilities: t.clone(),
                labels: self.labels.clone(),
            },
            UtilitySource::Oracle(o) => GameFile::Builtin {
                builtin: o.name().to_string(),
                params: o.params(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("game serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Game> {
        let file: GameFile = serde_json::from_str(text)?;
        file.into_game()
    }
}

fn product_u128(counts: &[usize]) -> u128 {
    counts.iter().fold(1u128, |a, &m| a.saturating_mul(m as u128))
}

/// On-disk game format: a dense table or a named builtin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameFile {
    Table {
        n: usize,
        strategy_counts: Vec<usize>,
        /// `utilities[player][rank]`, rank lexicographic with player 0 most significant.
        utilities: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<Vec<String>>>,
    },
    Builtin {
        builtin: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
    },
}

impl GameFile {
    pub fn into_game(self) -> Result<Game> {
        match self {
            GameFile::Table { n, strategy_counts, utilities, labels } => {
                if n != strategy_counts.len() {
                    return Err(Error::input(format!(
                        "n = {n} but strategy_counts lists {} players",
                        strategy_counts.len()
                    )));
                }
                let game = Game::from_table(strategy_counts, utilities)?;
                match labels {
                    Some(l) => game.with_labels(l),
                    None => Ok(game),
                }
            }
            GameFile::Builtin { builtin, params } => {
                crate::zoo::ZooSpec::from_name_params(&builtin, params)?.build()
            }
        }
    }
}

/// Odometer over the product of per-player strategy lists, last player fastest.
#[derive(Clone, Debug)]
pub struct ProfileIter {
    sets: Vec<Vec<usize>>,
    cursor: Vec<usize>,
    done: bool,
}

impl ProfileIter {
    pub fn new(sets: Vec<Vec<usize>>) -> Self {
        let done = sets.iter().any(Vec::is_empty);
        let cursor = vec![0; sets.len()];
        ProfileIter { sets, cursor, done }
    }
}

impl Iterator for ProfileIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let item: Vec<usize> = self.cursor.iter().zip(&self.sets).map(|(&c, s)| s[c]).collect();
        let mut i = self.sets.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.cursor[i] += 1;
            if self.cursor[i] < self.sets[i].len() {
                break;
            }
            self.cursor[i] = 0;
        }
        Some(item)
    }
}

/// Per-player total order used to break ties between equally good strategies.
///
/// Orders list strategies from most to least preferred. Without explicit
/// orders the lowest index is preferred.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TieBreak {
    orders: Option<Vec<Vec<usize>>>,
}

impl TieBreak {
    pub fn ascending() -> Self {
        TieBreak { orders: None }
    }

    pub fn new(orders: Vec<Vec<usize>>) -> Result<Self> {
        for (i, o) in orders.iter().enumerate() {
            let mut seen = vec![false; o.len()];
            for &x in o {
                if x >= o.len() || std::mem::replace(&mut seen[x], true) {
                    return Err(Error::input(format!("tie-break order of player {i} is not a permutation")));
                }
            }
        }
        Ok(TieBreak { orders: Some(orders) })
    }

    pub fn check(&self, game: &Game) -> Result<()> {
        if let Some(orders) = &self.orders {
            if orders.len() != game.n()
                || orders.iter().zip(game.strategy_counts()).any(|(o, &m)| o.len() != m)
            {
                return Err(Error::input("tie-break orders do not match the game's strategy counts"));
            }
        }
        Ok(())
    }

    /// Position of `strategy` in `player`'s order; 0 is most preferred.
    pub fn position(&self, player: usize, strategy: usize) -> usize {
        match &self.orders {
            None => strategy,
            Some(o) => o[player].iter().position(|&x| x == strategy).unwrap_or(usize::MAX),
        }
    }

    /// True when `a` is ranked above `b`.
    pub fn prefers(&self, player: usize, a: usize, b: usize) -> bool {
        self.position(player, a) < self.position(player, b)
    }

    pub fn sort(&self, player: usize, strategies: &mut [usize]) {
        strategies.sort_by_key(|&x| self.position(player, x));
    }
}

/// All maximizers of `u_i(., s_-i)`, most preferred first.
pub fn best_responses(game: &Game, player: usize, s: &Profile, tb: &TieBreak) -> Result<Vec<usize>> {
    game.check_player(player)?;
    game.check_profile(&s.0)?;
    tb.check(game)?;
    let mut payoffs = Vec::new();
    game.own_payoffs(player, &s.0, &mut payoffs);
    let mut br = argmax_all(&payoffs);
    tb.sort(player, &mut br);
    Ok(br)
}

/// Indices attaining the maximum, ascending. Exact comparison.
pub(crate) fn argmax_all(values: &[f64]) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..values.len()).filter(|&j| values[j] == max).collect()
}

fn is_best_response(game: &Game, player: usize, s: &[usize], scratch: &mut Vec<f64>) -> bool {
    game.own_payoffs(player, s, scratch);
    let max = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scratch[s[player]] == max
}

/// True if every player's strategy in `s` is a best response.
pub fn is_pure_nash(game: &Game, s: &[usize]) -> bool {
    let mut scratch = Vec::new();
    (0..game.n()).all(|i| is_best_response(game, i, s, &mut scratch))
}

/// All pure Nash equilibria, sorted lexicographically.
pub fn pure_nash_equilibria(game: &Game) -> Result<Vec<Profile>> {
    Ok(game.profiles()?.filter(|s| is_pure_nash(game, s)).map(Profile).collect())
}

/// Exact potential values indexed by profile rank (standard sign).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub values: Vec<f64>,
}

impl Potential {
    pub fn value(&self, game: &Game, s: &[usize]) -> f64 {
        self.values[game.rank(s) as usize]
    }

    pub fn shifted(&self, c: f64) -> Potential {
        Potential { values: self.values.iter().map(|v| v + c).collect() }
    }

    /// Largest violation of `phi(s_i', s_-i) - phi(s) = u_i(s_i', s_-i) - u_i(s)`.
    pub fn max_violation(&self, game: &Game) -> Result<f64> {
        let count = game.profile_count()?;
        if self.values.len() as u64 != count {
            return Err(Error::input("potential length does not match the profile count"));
        }
        let mut worst: f64 = 0.0;
        let mut payoffs = Vec::new();
        for s in game.profiles()? {
            let r = game.rank(&s);
            for i in 0..game.n() {
                game.own_payoffs(i, &s, &mut payoffs);
                let stride = game.strides()[i];
                let base = r - s[i] as u64 * stride;
                for (j, &u) in payoffs.iter().enumerate() {
                    let rj = (base + j as u64 * stride) as usize;
                    let lhs = self.values[rj] - self.values[r as usize];
                    let rhs = u - payoffs[s[i]];
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
        Ok(worst)
    }

    pub fn verifies(&self, game: &Game) -> Result<bool> {
        Ok(self.max_violation(game)? <= POTENTIAL_TOLERANCE)
    }
}

/// Finds an exact potential with value 0 at the first profile, or `None`.
///
/// Potential values are integrated along a breadth-first spanning tree of
/// the unilateral-deviation graph and then checked on every edge.
pub fn find_potential(game: &Game) -> Result<Option<Potential>> {
    let count = game.profile_count()? as usize;
    let mut values = vec![f64::NAN; count];
    let mut seen = vec![false; count];
    let mut queue = VecDeque::new();
    values[0] = 0.0;
    seen[0] = true;
    queue.push_back(0u64);
    let mut payoffs = Vec::new();
    while let Some(r) = queue.pop_front() {
        let s = game.unrank(r).0;
        for i in 0..game.n() {
            game.own_payoffs(i, &s, &mut payoffs);
            let stride = game.strides()[i];
            let base = r - s[i] as u64 * stride;
            for (j, &u) in payoffs.iter().enumerate() {
                let rj = base + j as u64 * stride;
                if !seen[rj as usize] {
                    seen[rj as usize] = true;
                    values[rj as usize] = values[r as usize] + u - payoffs[s[i]];
                    queue.push_back(rj);
                }
            }
        }
    }
    let potential = Potential { values };
    Ok(if potential.verifies(game)? { Some(potential) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::ZooSpec;

    fn zoo(spec: ZooSpec) -> Game {
        spec.build().unwrap()
    }

    #[test]
    fn utility_examples() {
        let ic = zoo(ZooSpec::IcCounterexample { l: 4.0 });
        assert_eq!(ic.utility(1, &Profile(vec![0, 0])).unwrap(), 1.0);
        let coord = zoo(ZooSpec::Coordination);
        assert_eq!(coord.utility(0, &Profile(vec![0, 0])).unwrap(), 1.0);
        let chain = zoo(ZooSpec::Chain { n: 3, penalty: 10.0 });
        assert_eq!(chain.utility(2, &Profile(vec![1, 1, 0])).unwrap(), 0.0);
    }

    #[test]
    fn utility_rejects_bad_indices() {
        let coord = zoo(ZooSpec::Coordination);
        assert!(matches!(coord.utility(2, &Profile(vec![0, 0])), Err(Error::Input(_))));
        assert!(matches!(coord.utility(0, &Profile(vec![0, 2])), Err(Error::Input(_))));
        assert!(matches!(coord.utility(0, &Profile(vec![0])), Err(Error::Input(_))));
    }

    #[test]
    fn rank_roundtrip_and_order() {
        let g = Game::from_fn(vec![2, 3, 2], |_, _| 0.0).unwrap();
        let all: Vec<_> = g.profiles().unwrap().collect();
        assert_eq!(all.len(), 12);
        for (r, s) in all.iter().enumerate() {
            assert_eq!(g.rank(s), r as u64);
            assert_eq!(g.unrank(r as u64).0, *s);
        }
        assert_eq!(all[1], vec![0, 0, 1]);
    }

    #[test]
    fn best_response_examples() {
        let coord = zoo(ZooSpec::Coordination);
        let tb = TieBreak::ascending();
        assert_eq!(best_responses(&coord, 0, &Profile(vec![0, 1]), &tb).unwrap(), vec![1]);

        let flat = Game::from_fn(vec![3, 2], |_, _| 7.0).unwrap();
        assert_eq!(best_responses(&flat, 0, &Profile(vec![2, 0]), &tb).unwrap(), vec![0, 1, 2]);
        let rev = TieBreak::new(vec![vec![2, 0, 1], vec![1, 0]]).unwrap();
        assert_eq!(best_responses(&flat, 0, &Profile(vec![2, 0]), &rev).unwrap(), vec![2, 0, 1]);

        let inter = zoo(ZooSpec::interference(0.5));
        assert_eq!(best_responses(&inter, 0, &Profile(vec![0, 0]), &tb).unwrap(), vec![1]);
    }

    #[test]
    fn tie_break_must_be_permutation() {
        assert!(TieBreak::new(vec![vec![0, 0]]).is_err());
        assert!(TieBreak::new(vec![vec![1, 2]]).is_err());
        let g = Game::from_fn(vec![2, 2], |_, _| 0.0).unwrap();
        assert!(TieBreak::new(vec![vec![0, 1]]).unwrap().check(&g).is_err());
    }

    #[test]
    fn nash_examples() {
        let p = |v: &[usize]| Profile(v.to_vec());
        assert_eq!(
            pure_nash_equilibria(&zoo(ZooSpec::Coordination)).unwrap(),
            vec![p(&[0, 0]), p(&[1, 1])]
        );
        assert_eq!(pure_nash_equilibria(&zoo(ZooSpec::UniqueNe)).unwrap(), vec![p(&[1, 0])]);
        assert_eq!(
            pure_nash_equilibria(&zoo(ZooSpec::Chain { n: 4, penalty: 10.0 })).unwrap(),
            vec![p(&[1, 1, 1, 1])]
        );
    }

    #[test]
    fn potential_of_ic_counterexample() {
        let l = 4.0;
        let ic = zoo(ZooSpec::IcCounterexample { l });
        let phi = find_potential(&ic).unwrap().expect("potential game");
        // Table from the counterexample, shifted so that (top,left) is 0.
        let expected = [l + 2.0, l + 1.0, 0.0, l];
        for (got, want) in phi.values.iter().zip(expected) {
            assert!((got - (want - (l + 2.0))).abs() < 1e-12);
        }
        assert!(phi.shifted(3.5).verifies(&ic).unwrap());
    }

    #[test]
    fn potential_of_interference_subgame() {
        let gamma = 0.5;
        let sub = zoo(ZooSpec::interference(gamma)).restricted_table(&[vec![0, 1], vec![0, 1]]).unwrap();
        let phi = find_potential(&sub).unwrap().expect("potential game");
        let expected = [0.0, gamma, gamma, gamma - 1.0];
        for (got, want) in phi.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn no_potential_for_unique_ne_game() {
        let g = zoo(ZooSpec::UniqueNe);
        // Independent check: the best-response 4-cycle has nonzero utility sum.
        let u = |i: usize, a: usize, b: usize| g.payoff(i, &[a, b]);
        let cycle = (u(1, 0, 1) - u(1, 0, 0))
            + (u(0, 1, 1) - u(0, 0, 1))
            + (u(1, 1, 0) - u(1, 1, 1))
            + (u(0, 0, 0) - u(0, 1, 0));
        assert!(cycle.abs() > 1e-9);
        assert!(find_potential(&g).unwrap().is_none());
    }

    #[test]
    fn capacity_guard() {
        let big = zoo(ZooSpec::Chain { n: 30, penalty: 10.0 });
        assert!(matches!(pure_nash_equilibria(&big), Err(Error::Capacity { .. })));
        assert_eq!(big.payoff(29, &[1; 30]), 1.0);
    }

    #[test]
    fn json_roundtrip() {
        let ic = zoo(ZooSpec::IcCounterexample { l: 4.0 });
        assert_eq!(Game::from_json(&ic.to_json()).unwrap(), ic);
        let chain = zoo(ZooSpec::Chain { n: 5, penalty: 3.0 });
        assert_eq!(Game::from_json(&chain.to_json()).unwrap(), chain);
        let bad = r#"{"n": 2, "strategy_counts": [2, 2], "utilities": [[0,0,0,0]]}"#;
        assert!(Game::from_json(bad).is_err());
    }
}
