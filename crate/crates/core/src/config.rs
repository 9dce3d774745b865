//! JSON experiment descriptors and their resolution into runnable pieces.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Event, HorizonMode, RunConfig, Start, DEFAULT_HORIZON};
use crate::error::{Error, Result};
use crate::game::{pure_nash_equilibria, Game, GameFile, Oracle, Profile, UtilitySource};
use crate::reduction::classify;
use crate::rules::{PlayerRule, ResponseRule};
use crate::schedule::Schedule;
use crate::zoo::ZooSpec;

/// A game given as `"zoo:name:k=v"`, a path to a game file, or an inline game file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameRef {
    Reference(String),
    Inline(GameFile),
}

impl GameRef {
    pub fn resolve(&self, base: Option<&Path>) -> Result<Game> {
        match self {
            GameRef::Reference(text) => resolve_game(text, base),
            GameRef::Inline(file) => file.clone().into_game(),
        }
    }
}

/// Resolves `zoo:name[:k=v]*` or a game-file path (relative to `base` if given).
pub fn resolve_game(text: &str, base: Option<&Path>) -> Result<Game> {
    if let Some(rest) = text.strip_prefix("zoo:") {
        return ZooSpec::parse(rest)?.build();
    }
    let path = match base {
        Some(b) if Path::new(text).is_relative() => b.join(text),
        _ => Path::new(text).to_path_buf(),
    };
    Game::from_json(&std::fs::read_to_string(&path)?)
}

/// `"ne"`, `"all"`, `"reduced"`, or a full event object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventRef {
    Named(String),
    Event(Event),
}

impl EventRef {
    pub fn resolve(&self, game: &Game) -> Result<Event> {
        match self {
            EventRef::Event(e) => {
                e.validate(game)?;
                Ok(e.clone())
            }
            EventRef::Named(name) => match name.as_str() {
                "ne" => Ok(Event::set(nash_set(game)?)),
                "all" => Ok(Event::set(game.profiles()?.map(Profile).collect())),
                "reduced" => Ok(Event::set(classify(game)?.reduced().profiles().map(Profile).collect())),
                other => Err(Error::input(format!("unknown event {other:?}; expected ne, all, reduced or an event object"))),
            },
        }
    }
}

/// Pure equilibria, using the known all-ones equilibrium of the chain games
/// when they are too large to enumerate.
pub fn nash_set(game: &Game) -> Result<Vec<Profile>> {
    match (game.source(), game.profile_count()) {
        (_, Ok(_)) => {
            let ne = pure_nash_equilibria(game)?;
            if ne.is_empty() {
                return Err(Error::input("the game has no pure Nash equilibrium"));
            }
            Ok(ne)
        }
        (UtilitySource::Oracle(Oracle::Chain { .. } | Oracle::BgpChain { .. }), Err(_)) => Ok(vec![Profile(vec![1; game.n()])]),
        (_, Err(e)) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcSection {
    pub player: usize,
    /// Deviation rules; empty means every constant strategy.
    #[serde(default)]
    pub deviations: Vec<serde_json::Value>,
    #[serde(default)]
    pub mode: Option<HorizonMode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub game: GameRef,
    pub schedule: serde_json::Value,
    /// Rule used by every player unless overridden in `rules`.
    #[serde(default)]
    pub rule: Option<serde_json::Value>,
    /// Per-player rules; `null` entries fall back to `rule`.
    #[serde(default)]
    pub rules: Option<Vec<Option<serde_json::Value>>>,
    #[serde(default = "default_start")]
    pub start: Start,
    #[serde(default)]
    pub event: Option<EventRef>,
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub horizon: Option<u64>,
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    pub seed: u64,
    #[serde(default)]
    pub ic: Option<IcSection>,
    #[serde(default)]
    pub output: Option<OutputPaths>,
}

fn default_start() -> Start {
    Start::Random(crate::dynamics::RandomStart::UniformRandom)
}

fn default_runs() -> u64 {
    1000
}

/// A config with its game, rules and event resolved.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub game: Game,
    pub run: RunConfig,
    pub runs: u64,
    pub event: Option<Event>,
    pub ic: Option<(usize, Vec<PlayerRule>, HorizonMode)>,
}

impl ExperimentConfig {
    /// Parses JSON text; errors carry serde's line and column.
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve(&self, base: Option<&Path>) -> Result<Experiment> {
        let game = self.game.resolve(base)?;
        let n = game.n();
        let schedule = Schedule::from_value(self.schedule.clone(), n)?;
        let rules = resolve_rules(&game, self.rule.as_ref(), self.rules.as_deref())?;
        let horizon = self.horizon.unwrap_or_else(|| self.checkpoints.iter().copied().max().unwrap_or(DEFAULT_HORIZON));
        let run = RunConfig { schedule, rules, start: self.start.clone(), horizon, seed: self.seed, checkpoints: self.checkpoints.clone(), record_log: false };
        run.validate(&game)?;
        let event = self.event.as_ref().map(|e| e.resolve(&game)).transpose()?;
        let ic = self
            .ic
            .as_ref()
            .map(|ic| -> Result<_> {
                game.check_player(ic.player)?;
                let devs = ic
                    .deviations
                    .iter()
                    .map(|v| Ok(PlayerRule::Memoryless(ResponseRule::from_value(v.clone(), &game, ic.player)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((ic.player, devs, ic.mode.unwrap_or_default()))
            })
            .transpose()?;
        Ok(Experiment { game, run, runs: self.runs, event, ic })
    }
}

/// Builds per-player rules from a default descriptor and optional overrides.
pub fn resolve_rules(game: &Game, default: Option<&serde_json::Value>, per_player: Option<&[Option<serde_json::Value>]>) -> Result<Vec<PlayerRule>> {
    if let Some(list) = per_player {
        if list.len() != game.n() {
            return Err(Error::input(format!("rules lists {} players, the game has {}", list.len(), game.n())));
        }
    }
    (0..game.n())
        .map(|i| {
            let value = per_player
                .and_then(|l| l[i].as_ref())
                .or(default)
                .ok_or_else(|| Error::input(format!("no rule given for player {i}")))?;
            Ok(PlayerRule::Memoryless(ResponseRule::from_value(value.clone(), game, i)?))
        })
        .collect()
}
