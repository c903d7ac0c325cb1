//! Game-theoretic lag-vehicle decision model for highway on-ramp merges.
//!
//! A main-lane lag vehicle and a merging vehicle play a repeated 2×4 game at
//! discrete decision points. Payoffs come from bounded, peak-shifted tanh
//! curves over predictive time headways; the game is solved for a mixed Nash
//! equilibrium and softened by a quantal response. The chosen behavior is
//! executed through IDM-based dynamics. Recorded merges can be labeled and
//! used to calibrate the nine payoff parameters.
//!
//! Module map:
//! - [`types`]: shared value types.
//! - [`payoff`]: usmht curves, headways and the payoff bimatrix.
//! - [`game`]: equilibrium, quantal response and held decisions.
//! - [`dynamics`]: IDM and behavior execution.
//! - [`sim`]: fixed-step scenario engine and logs.
//! - [`data`]: trajectory files, smoothing, labeling, observations.
//! - [`calibrate`]: bi-level calibration and error metrics.
//! - [`cli`]: the `merge-game` command line.

#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod calibrate;
pub mod cli;
pub mod data;
pub mod error;
pub mod game;
pub mod payoff;
pub mod sim;
pub mod types;

pub use error::{Error, Result};
