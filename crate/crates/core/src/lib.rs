//! Laboratory for imperfect best-response dynamics on finite games.
//!
//! The crate is organised around the pieces of a dynamics experiment:
//!
//! - [`game`]: finite games, profiles, best responses, pure equilibria and
//!   exact potentials.
//! - [`reduction`]: never-best-response elimination, NBR-solvable/reducible
//!   classification, clear-outcome and incentive margin checks.
//! - [`schedule`]: who updates at each step, and how fair that is.
//! - [`rules`]: how a selected player responds (perfect, mutation, logit, ...).
//! - [`dynamics`]: seeded trajectories, hitting times and Monte Carlo estimates.
//! - [`chain`]: exact Markov-chain analysis of memoryless dynamics.
//! - [`zoo`]: the concrete games used throughout the experiments.
//! - [`ic`]: incentive-compatibility experiments.
//! - [`config`] and [`repro`]: experiment descriptors and the named
//!   reproducible experiments behind the acceptance suite.
//!
//! Potentials use the standard sign convention: moving from `s` to
//! `(s_i', s_-i)` changes the potential by exactly `u_i(s_i', s_-i) - u_i(s)`,
//! and the logit stationary distribution of a potential game is
//! `pi(s) ∝ exp(beta * phi(s))`.

pub mod chain;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod ic;
pub mod reduction;
pub mod repro;
pub mod rules;
pub mod schedule;
pub mod stats;
pub mod zoo;

pub use error::{Error, Result};
pub use game::{Game, Potential, Profile, TieBreak};
