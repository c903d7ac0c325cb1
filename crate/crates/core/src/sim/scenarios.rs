//! Preset scenarios.

use super::config::{MaMode, ScenarioConfig, ScriptedProfile, VehicleSpec};
use crate::dynamics::IdmParams;
use crate::types::{Lane, LagAction, ModelParams, RampGeometry, VehicleState};

pub const LAG_ID: u32 = 1;
pub const MERGER_ID: u32 = 2;
pub const LEADER_ID: u32 = 3;
/// Initial distance from the lag to the merger (m).
pub const MERGER_AHEAD: f64 = 51.0;

fn vehicle(id: u32, x: f64, lane: Lane, v: f64, ramp: &RampGeometry) -> VehicleState {
    let y = match lane {
        Lane::Main => ramp.lane_offset,
        Lane::Ramp => 0.0,
    };
    VehicleState { id, x, y, v, a: 0.0, lane }
}

/// IDM parameters of the lag in [`behavior_scenario`].
pub fn behavior_lag_idm() -> IdmParams {
    IdmParams {
        v0: 30.0,
        time_headway: 3.0,
        s0: 2.0,
        a_max: 2.0,
        b: 3.0,
        delta: 4.0,
    }
}

/// One lag at 25 m/s with a merger 51 m ahead on the ramp. Merger and leader
/// cruise at 25 m/s; the leader sits at the lag's steady-state following
/// distance, so a lag that does nothing keeps a constant speed. The merger
/// stays on the ramp, so the lag's response is the only thing that varies
/// with `params`.
pub fn behavior_scenario(params: ModelParams, seed: u64) -> ScenarioConfig {
    let ramp = RampGeometry {
        ramp_end_x: 1200.0,
        merge_zone_start_x: 0.0,
        lane_offset: 3.5,
    };
    let lag_idm = behavior_lag_idm();
    let cruise = IdmParams {
        v0: 25.0,
        ..IdmParams::default()
    };
    ScenarioConfig {
        vehicles: vec![
            VehicleSpec {
                state: vehicle(LAG_ID, 0.0, Lane::Main, 25.0, &ramp),
                idm: lag_idm,
                model: Some(params),
            },
            VehicleSpec {
                state: vehicle(MERGER_ID, MERGER_AHEAD, Lane::Ramp, 25.0, &ramp),
                idm: cruise,
                model: None,
            },
            VehicleSpec {
                state: vehicle(LEADER_ID, lag_idm.equilibrium_gap(25.0), Lane::Main, 25.0, &ramp),
                idm: cruise,
                model: None,
            },
        ],
        ramp,
        ma_mode: MaMode::Scripted(ScriptedProfile::default()),
        dt_dyn: 0.01,
        dt_decision: 0.1,
        duration: 40.0,
        seed,
        conditioning: Default::default(),
    }
}

/// Parameter sets whose dominant behavior is, in order, yield-behind,
/// yield-ahead, block and do-nothing. Each lowers the curvature of its own
/// behavior's payoff curve; the first three also make doing nothing
/// unattractive.
pub fn behavior_parameter_sets() -> [(LagAction, ModelParams); 4] {
    let base = ModelParams {
        beta: 0.01,
        ..ModelParams::default()
    };
    let with = |edits: &[(usize, f64)]| {
        let mut p = base;
        for &(i, v) in edits {
            p.phi[i] = v;
        }
        p
    };
    [
        (LagAction::YieldBehind, with(&[(0, 1.2), (5, -0.5)])),
        (LagAction::YieldAhead, with(&[(1, 1.05), (2, 50.0), (5, -0.5)])),
        (LagAction::Block, with(&[(6, 1.2), (5, -0.5)])),
        (LagAction::DoNothing, with(&[(5, 0.9)])),
    ]
}

/// A 20-vehicle platoon on the main lane passing one merger. Every
/// main-lane vehicle is a lag agent with default parameters; the merger is
/// game-driven.
pub fn highway(n_main: usize, seed: u64) -> ScenarioConfig {
    let ramp = RampGeometry {
        ramp_end_x: 600.0,
        merge_zone_start_x: 200.0,
        lane_offset: 3.5,
    };
    let idm = IdmParams {
        v0: 27.0,
        ..IdmParams::default()
    };
    let mut vehicles: Vec<VehicleSpec> = (0..n_main)
        .map(|k| {
            let x = 400.0 - 45.0 * k as f64;
            VehicleSpec {
                state: vehicle(k as u32 + 1, x, Lane::Main, 25.0, &ramp),
                idm,
                model: Some(ModelParams::default()),
            }
        })
        .collect();
    vehicles.push(VehicleSpec {
        state: vehicle(n_main as u32 + 1, 150.0, Lane::Ramp, 22.0, &ramp),
        idm: IdmParams { v0: 25.0, ..idm },
        model: None,
    });
    ScenarioConfig {
        ramp,
        vehicles,
        ma_mode: MaMode::GameDriven,
        dt_dyn: 0.01,
        dt_decision: 0.1,
        duration: 30.0,
        seed,
        conditioning: Default::default(),
    }
}
