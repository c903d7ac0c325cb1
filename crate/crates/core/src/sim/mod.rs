//! Fixed-step scenario engine: one ramp, one main lane, lag agents that play
//! the merge game at decision ticks, and a scripted or game-driven merger.

mod config;
mod engine;
mod log;
pub mod scenarios;
mod sweep;

pub use self::config::{AccelSegment, MaMode, ScenarioConfig, ScriptedProfile, VehicleSpec};
pub use self::engine::{actor_seed, run_scenario, INTERACTION_MARGIN, LANE_CHANGE_TIME};
pub use self::log::{CollisionEvent, LogRecord, TrajectoryLog};
pub use self::sweep::{entropy, mode_behavior, replica_seed, sweep_beta, BetaRow};
