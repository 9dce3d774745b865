//! Constructors for the concrete games used by the experiments, and the
//! structural facts each of them is known to have.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Game, Oracle, Profile};
use crate::reduction::Classification;

fn default_n() -> usize {
    3
}
fn default_penalty() -> f64 {
    10.0
}
fn default_ic_l() -> f64 {
    4.0
}
fn default_gamma() -> f64 {
    0.5
}
fn default_interference_strategies() -> usize {
    4
}
fn default_two() -> usize {
    2
}
fn default_delta() -> f64 {
    0.25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZooSpec {
    /// n two-strategy players; player i wants strategy 1 exactly when all
    /// lower-indexed players play 1. Oracle-backed.
    Chain {
        #[serde(default = "default_n")]
        n: usize,
        #[serde(rename = "L", default = "default_penalty")]
        penalty: f64,
    },
    /// The chain routing instance with rank-encoded path preferences. Oracle-backed.
    BgpChain {
        #[serde(default = "default_n")]
        n: usize,
    },
    /// 2x2 game with a clear outcome where logit play is not incentive compatible.
    IcCounterexample {
        #[serde(rename = "L", default = "default_ic_l")]
        l: f64,
    },
    Coordination,
    /// 2x2 game with the unique equilibrium (1,0) that is not NBR-solvable.
    UniqueNe,
    /// Interference game: `u_i = v_i - s_i` if `s_i` exceeds the sum of the
    /// others' strategies, `-s_i` otherwise.
    Interference {
        #[serde(default = "default_gamma")]
        gamma: f64,
        /// Defaults to `1 + gamma` for every player.
        #[serde(default)]
        v: Option<Vec<f64>>,
        #[serde(default = "default_interference_strategies")]
        strategies: usize,
        #[serde(default = "default_two")]
        n: usize,
    },
    /// 3x3 game NBR-reducible to its upper-left 2x2 block.
    NbrExample,
    /// The 3x3 game with its upper-left block perturbed by `delta` so that it
    /// reduces to the single profile (0,0).
    NbrExampleModified {
        #[serde(default = "default_delta")]
        delta: f64,
    },
}

/// Registry of zoo names, in display order.
pub const ZOO_NAMES: [&str; 8] = [
    "chain",
    "bgp_chain",
    "ic_counterexample",
    "coordination",
    "unique_ne",
    "interference",
    "nbr_example",
    "nbr_example_modified",
];

impl ZooSpec {
    /// The 4x4 two-player interference game with `v_1 = v_2 = 1 + gamma`.
    pub fn interference(gamma: f64) -> ZooSpec {
        ZooSpec::Interference { gamma, v: None, strategies: 4, n: 2 }
    }

    /// Builds a spec from a name and a JSON parameter map; missing
    /// parameters take their defaults.
    pub fn from_name_params(
        name: &str,
        params: serde_json::Map<String, serde_json::Value>,
    ) -> Result<ZooSpec> {
        if !ZOO_NAMES.contains(&name) {
            return Err(Error::input(format!(
                "unknown zoo game '{name}' (known: {})",
                ZOO_NAMES.join(", ")
            )));
        }
        let mut obj = params;
        obj.insert("name".into(), name.into());
        serde_json::from_value(serde_json::Value::Object(obj))
            .map_err(|e| Error::input(format!("zoo game '{name}': {e}")))
    }

    /// Parses `name` or `name:key=value:key=value`, values as JSON literals.
    pub fn parse(text: &str) -> Result<ZooSpec> {
        let mut parts = text.split(':');
        let name = parts.next().unwrap_or_default();
        let mut params = serde_json::Map::new();
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::input(format!("expected key=value, got '{kv}'")))?;
            let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.into()));
            params.insert(k.to_string(), value);
        }
        Self::from_name_params(name, params)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ZooSpec::Chain { .. } => "chain",
            ZooSpec::BgpChain { .. } => "bgp_chain",
            ZooSpec::IcCounterexample { .. } => "ic_counterexample",
            ZooSpec::Coordination => "coordination",
            ZooSpec::UniqueNe => "unique_ne",
            ZooSpec::Interference { .. } => "interference",
            ZooSpec::NbrExample => "nbr_example",
            ZooSpec::NbrExampleModified { .. } => "nbr_example_modified",
        }
    }

    pub fn build(&self) -> Result<Game> {
        match *self {
            ZooSpec::Chain { n, penalty } => {
                if n == 0 || !(penalty > 0.0) || !penalty.is_finite() {
                    return Err(Error::input("chain needs n >= 1 and L > 0"));
                }
                Game::from_oracle(Oracle::Chain { n, penalty })
            }
            ZooSpec::BgpChain { n } => {
                if n == 0 {
                    return Err(Error::input("bgp_chain needs n >= 1"));
                }
                Game::from_oracle(Oracle::BgpChain { n })
            }
            ZooSpec::IcCounterexample { l } => {
                if !(l > 0.0) || !l.is_finite() {
                    return Err(Error::input("ic_counterexample needs L > 0"));
                }
                // rows top/bottom, columns left/right
                bimatrix(&[[(l + 2.0, 1.0), (1.0, 0.0)], [(0.0, 0.0), (0.0, l)]])?.with_labels(vec![
                    vec!["top".into(), "bottom".into()],
                    vec!["left".into(), "right".into()],
                ])
            }
            ZooSpec::Coordination => bimatrix(&[[(1.0, 1.0), (0.0, 0.0)], [(0.0, 0.0), (1.0, 1.0)]]),
            ZooSpec::UniqueNe => bimatrix(&[[(0.0, 0.0), (0.0, 1.0)], [(0.0, 1.0), (1.0, 0.0)]]),
            ZooSpec::Interference { gamma, ref v, strategies, n } => {
                let values = match v {
                    Some(v) => v.clone(),
                    None => {
                        if !(gamma > 0.0 && gamma < 1.0) {
                            return Err(Error::input("interference needs 0 < gamma < 1"));
                        }
                        vec![1.0 + gamma; n]
                    }
                };
                if n == 0 || strategies == 0 || values.len() != n {
                    return Err(Error::input("interference needs n >= 1, strategies >= 1 and one value per player"));
                }
                if values.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::input("interference values v_i must be positive"));
                }
                Game::from_fn(vec![strategies; n], |i, s| {
                    let own = s[i] as f64;
                    let others: usize = s.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x).sum();
                    if s[i] > others {
                        values[i] - own
                    } else {
                        -own
                    }
                })
            }
            ZooSpec::NbrExample => nbr_game(0.0, false),
            ZooSpec::NbrExampleModified { delta } => {
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(Error::input("nbr_example_modified needs 0 < delta < 1"));
                }
                nbr_game(delta, true)
            }
        }
    }

    /// Structural facts the construction is known to have, independent of
    /// the reduction and equilibrium code. `None` fields are not asserted.
    pub fn expected_structure(&self) -> ExpectedStructure {
        let p = |v: Vec<usize>| Profile(v);
        match *self {
            ZooSpec::Chain { n, .. } | ZooSpec::BgpChain { n } => ExpectedStructure {
                classification: Classification::Solvable,
                ell_hat: Some(n),
                equilibria: Some(vec![p(vec![1; n])]),
                reduced: Some(vec![vec![1]; n]),
                potential: None,
                reduced_potential: None,
            },
            ZooSpec::IcCounterexample { .. } => ExpectedStructure {
                classification: Classification::Solvable,
                ell_hat: Some(2),
                equilibria: Some(vec![p(vec![0, 0])]),
                reduced: Some(vec![vec![0], vec![0]]),
                potential: Some(true),
                reduced_potential: None,
            },
            ZooSpec::Coordination => ExpectedStructure {
                classification: Classification::Irreducible,
                ell_hat: Some(0),
                equilibria: Some(vec![p(vec![0, 0]), p(vec![1, 1])]),
                reduced: Some(vec![vec![0, 1], vec![0, 1]]),
                potential: None,
                reduced_potential: None,
            },
            ZooSpec::UniqueNe => ExpectedStructure {
                classification: Classification::Irreducible,
                ell_hat: Some(0),
                equilibria: Some(vec![p(vec![1, 0])]),
                reduced: Some(vec![vec![0, 1], vec![0, 1]]),
                potential: Some(false),
                reduced_potential: None,
            },
            ZooSpec::Interference { v: None, strategies: 4, n: 2, .. } => ExpectedStructure {
                classification: Classification::ReducibleOnly,
                ell_hat: Some(2),
                equilibria: Some(vec![p(vec![0, 1]), p(vec![1, 0])]),
                reduced: Some(vec![vec![0, 1], vec![0, 1]]),
                potential: None,
                reduced_potential: Some(true),
            },
            ZooSpec::Interference { .. } => ExpectedStructure::unknown(),
            ZooSpec::NbrExample => ExpectedStructure {
                classification: Classification::ReducibleOnly,
                ell_hat: Some(2),
                equilibria: None,
                reduced: Some(vec![vec![0, 1], vec![0, 1]]),
                potential: None,
                reduced_potential: None,
            },
            ZooSpec::NbrExampleModified { .. } => ExpectedStructure {
                classification: Classification::Solvable,
                ell_hat: Some(2),
                equilibria: Some(vec![p(vec![0, 0])]),
                reduced: Some(vec![vec![0], vec![0]]),
                potential: None,
                reduced_potential: None,
            },
        }
    }
}

/// Known structure of a zoo game, used as a regression oracle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedStructure {
    pub classification: Classification,
    pub ell_hat: Option<usize>,
    pub equilibria: Option<Vec<Profile>>,
    /// Per-player strategy sets of the reduced game.
    pub reduced: Option<Vec<Vec<usize>>>,
    pub potential: Option<bool>,
    /// Whether the reduced game is a potential game.
    pub reduced_potential: Option<bool>,
}

impl ExpectedStructure {
    fn unknown() -> Self {
        ExpectedStructure {
            classification: Classification::ReducibleOnly,
            ell_hat: None,
            equilibria: None,
            reduced: None,
            potential: None,
            reduced_potential: None,
        }
    }
}

fn bimatrix<const R: usize, const C: usize>(cells: &[[(f64, f64); C]; R]) -> Result<Game> {
    Game::from_fn(vec![R, C], |i, s| {
        let (a, b) = cells[s[0]][s[1]];
        if i == 0 {
            a
        } else {
            b
        }
    })
}

fn nbr_game(delta: f64, modified: bool) -> Result<Game> {
    let mut cells = [
        [(0.0, 0.0), (0.0, 0.0), (0.0, -2.0)],
        [(0.0, 0.0), (-1.0, -1.0), (-1.0, -2.0)],
        [(-2.0, 0.0), (-2.0, -1.0), (-2.0, -2.0)],
    ];
    if modified {
        cells[0][1] = (0.0, -delta);
        cells[1][0] = (-delta, 0.0);
    }
    bimatrix(&cells)
}
