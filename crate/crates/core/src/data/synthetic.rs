//! Synthetic merge events produced by the simulator from known parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{event_from_log, MergeEvent};
use crate::dynamics::IdmParams;
use crate::error::Result;
use crate::sim::{replica_seed, run_scenario, MaMode, ScenarioConfig, ScriptedProfile, VehicleSpec};
use crate::types::{Lane, ModelParams, RampGeometry, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticOptions {
    /// Length of each event (s).
    pub duration: f64,
    /// Sampling rate of the recorded series (Hz).
    pub sample_rate: f64,
    /// Range of the merger's initial distance ahead of the lag (m).
    pub merger_ahead: [f64; 2],
    /// Range of the merger's speed relative to the lag (m/s).
    pub merger_relative_speed: [f64; 2],
    /// Range of the leader's initial distance ahead of the lag (m).
    pub leader_ahead: [f64; 2],
    /// Car-following parameters of the lag. Its desired speed is replaced by
    /// the initial speed, so a lag left alone cruises.
    pub lag_idm: IdmParams,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            duration: 15.0,
            sample_rate: 10.0,
            merger_ahead: [-5.0, 60.0],
            merger_relative_speed: [-3.0, 3.0],
            leader_ahead: [80.0, 120.0],
            lag_idm: IdmParams {
                v0: 30.0,
                time_headway: 1.8,
                s0: 2.0,
                a_max: 2.5,
                b: 4.0,
                delta: 4.0,
            },
        }
    }
}

/// A randomized three-vehicle merge: a lag agent, a merger cruising on the
/// ramp somewhere around the lag, and a leader cruising at the lag's speed
/// farther ahead.
pub fn random_scenario<R: Rng + ?Sized>(params: &ModelParams, opts: &SyntheticOptions, seed: u64, rng: &mut R) -> ScenarioConfig {
    let v = rng.random_range(20.0..28.0);
    let ma_dx = rng.random_range(opts.merger_ahead[0]..opts.merger_ahead[1]);
    let ma_v = v + rng.random_range(opts.merger_relative_speed[0]..opts.merger_relative_speed[1]);
    let ramp = RampGeometry {
        ramp_end_x: rng.random_range(150.0..600.0),
        merge_zone_start_x: -100.0,
        lane_offset: 3.5,
    };
    let lead_x = rng.random_range(opts.leader_ahead[0]..opts.leader_ahead[1]);
    let lag_idm = IdmParams { v0: v, ..opts.lag_idm };
    let vehicle = |id, x, lane, v| VehicleState {
        id,
        x,
        y: if lane == Lane::Main { ramp.lane_offset } else { 0.0 },
        v,
        a: 0.0,
        lane,
    };
    let cruise = IdmParams {
        v0: v,
        ..IdmParams::default()
    };
    ScenarioConfig {
        vehicles: vec![
            VehicleSpec {
                state: vehicle(1, 0.0, Lane::Main, v),
                idm: lag_idm,
                model: Some(*params),
            },
            VehicleSpec {
                state: vehicle(2, ma_dx, Lane::Ramp, ma_v),
                idm: cruise,
                model: None,
            },
            VehicleSpec {
                state: vehicle(3, lead_x, Lane::Main, v),
                idm: cruise,
                model: None,
            },
        ],
        ramp,
        ma_mode: MaMode::Scripted(ScriptedProfile::default()),
        dt_dyn: 0.01,
        dt_decision: 0.1,
        duration: opts.duration,
        seed,
        conditioning: Default::default(),
    }
}

/// `n` events generated from `params`, named `{prefix}{k}`. Event `k` only
/// depends on `(params, opts, seed, k)`.
pub fn synthetic_events(
    params: &ModelParams,
    n: usize,
    seed: u64,
    prefix: &str,
    opts: &SyntheticOptions,
) -> Result<Vec<MergeEvent>> {
    let stride = ((1.0 / opts.sample_rate) / 0.01).round().max(1.0) as usize;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let s = replica_seed(seed, k);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let config = random_scenario(params, opts, s, &mut rng);
            let log = run_scenario(&config)?;
            event_from_log(&log, &config, &format!("{prefix}{k}"), "synthetic", stride)
        })
        .collect()
}
