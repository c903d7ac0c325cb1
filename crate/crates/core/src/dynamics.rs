//! Longitudinal execution of lag decisions on top of the Intelligent Driver
//! Model.
//!
//! The merge-reactive layer is a small stand-in: yield-behind adds the merger
//! as a virtual leader, yield-ahead and block retarget the gap to the real
//! leader with a boosted desired speed and shortened headway, and do-nothing
//! keeps whatever parameters are currently active.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LagAction, VehicleState, WorldState};

/// Hardest deceleration the model will ever command (m/s²).
pub const EMERGENCY_DECEL: f64 = 9.0;
/// Cap on the desired-speed increase for yield-ahead and block (m/s).
pub const V0_BOOST_MAX: f64 = 5.0;
/// Factor applied to `T` and `s0` under yield-ahead and block.
pub const HEADWAY_FACTOR: f64 = 0.5;
/// Time over which a requested gap change should be completed (s).
pub const CLOSING_TIME: f64 = 2.0;
/// Smallest effective gap fed to IDM when following a retargeted gap (m).
const GAP_FLOOR: f64 = 0.1;
/// Lower bound on the free-road term when computing equilibrium spacing.
const EQUILIBRIUM_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdmParams {
    /// Desired speed (m/s).
    pub v0: f64,
    /// Safe time headway (s).
    #[serde(rename = "T")]
    pub time_headway: f64,
    /// Standstill distance (m).
    pub s0: f64,
    /// Maximum acceleration (m/s²).
    pub a_max: f64,
    /// Comfortable deceleration (m/s²).
    pub b: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    4.0
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            v0: 30.0,
            time_headway: 1.5,
            s0: 2.0,
            a_max: 1.5,
            b: 2.0,
            delta: 4.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("v0", self.v0),
            ("T", self.time_headway),
            ("s0", self.s0),
            ("a_max", self.a_max),
            ("b", self.b),
            ("delta", self.delta),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("IDM parameter must be finite and > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Spacing at which a follower at steady speed `v` has zero acceleration.
    pub fn equilibrium_gap(&self, v: f64) -> f64 {
        let free = 1.0 - (v / self.v0).powf(self.delta);
        self.desired_gap(v, 0.0) / free.max(EQUILIBRIUM_FLOOR).sqrt()
    }

    /// Desired dynamic gap `s*` (m).
    pub fn desired_gap(&self, v: f64, approach: f64) -> f64 {
        self.s0 + v * self.time_headway + v * approach / (2.0 * (self.a_max * self.b).sqrt())
    }
}

/// IDM acceleration for speed `v`, bumper gap `gap` and approach rate
/// `approach = v - v_leader`. Use `gap = f64::INFINITY` on a free road.
pub fn idm_accel(v: f64, gap: f64, approach: f64, p: &IdmParams) -> Result<f64> {
    if gap.is_nan() || gap <= 0.0 {
        return Err(Error::NonPositiveGap { gap });
    }
    let free = 1.0 - (v / p.v0).powf(p.delta);
    let interaction = if gap.is_infinite() {
        0.0
    } else {
        // s* may go negative when the leader pulls away quickly; IDM keeps it at 0.
        let s_star = p.desired_gap(v, approach).max(0.0);
        (s_star / gap).powi(2)
    };
    Ok((p.a_max * (free - interaction)).clamp(-EMERGENCY_DECEL, p.a_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTarget {
    /// Follow the real leader at this gap (m).
    ToLeader(f64),
    /// No leader to reference: hold position beside the merger.
    BesideMerger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionState {
    pub base: IdmParams,
    pub active: IdmParams,
    pub decision: LagAction,
    pub target_gap_override: Option<GapTarget>,
}

impl ExecutionState {
    pub fn new(base: IdmParams) -> Self {
        Self {
            base,
            active: base,
            decision: LagAction::DoNothing,
            target_gap_override: None,
        }
    }
}

fn boosted(base: &IdmParams, dv_needed: f64) -> IdmParams {
    IdmParams {
        v0: base.v0 + dv_needed.clamp(0.0, V0_BOOST_MAX),
        time_headway: base.time_headway * HEADWAY_FACTOR,
        s0: base.s0 * HEADWAY_FACTOR,
        ..*base
    }
}

/// Updates the execution parameters for the current decision.
pub fn behavior_overrides(decision: LagAction, world: &WorldState, exec: &ExecutionState) -> ExecutionState {
    let (lag, ma) = (&world.lag, &world.ma);
    let base = exec.base;
    match decision {
        LagAction::YieldBehind => ExecutionState {
            base,
            active: base,
            decision,
            target_gap_override: None,
        },
        LagAction::YieldAhead => {
            // The reduced target is fixed when the behavior starts.
            if exec.decision == LagAction::YieldAhead && exec.target_gap_override.is_some() {
                return *exec;
            }
            match &world.lead {
                Some(lead) => {
                    let gap = lead.x - lag.x;
                    let merger_to_leader = (lead.x - ma.x).max(0.0);
                    // Aim for the midpoint between merger and leader; from
                    // behind the merger that shortens the gap by at least
                    // half the merger-to-leader distance.
                    let reduction = (gap - 0.5 * merger_to_leader).max(0.5 * merger_to_leader);
                    let v_needed = lead.v + reduction / CLOSING_TIME;
                    ExecutionState {
                        base,
                        active: boosted(&base, v_needed - base.v0),
                        decision,
                        target_gap_override: Some(GapTarget::ToLeader((gap - reduction).max(0.0))),
                    }
                }
                None => ExecutionState {
                    base,
                    active: boosted(&base, V0_BOOST_MAX),
                    decision,
                    target_gap_override: None,
                },
            }
        }
        LagAction::Block => {
            let v_needed = ma.v + (ma.x - lag.x) / CLOSING_TIME;
            let target = match &world.lead {
                Some(lead) => GapTarget::ToLeader((lead.x - ma.x).max(0.0)),
                None => GapTarget::BesideMerger,
            };
            ExecutionState {
                base,
                active: boosted(&base, v_needed - base.v0),
                decision,
                target_gap_override: Some(target),
            }
        }
        LagAction::DoNothing => ExecutionState {
            base,
            active: exec.active,
            decision,
            target_gap_override: None,
        },
    }
}

/// Acceleration of the lag vehicle under its current execution state.
pub fn mr_idm_accel(world: &WorldState, exec: &ExecutionState) -> Result<f64> {
    let lag = &world.lag;
    let ma = &world.ma;
    let p = &exec.active;
    let real = match &world.lead {
        Some(lead) => idm_accel(lag.v, lead.x - lag.x, lag.v - lead.v, p)?,
        None => idm_accel(lag.v, f64::INFINITY, 0.0, p)?,
    };
    // Shifting the gap by the equilibrium spacing makes IDM settle exactly
    // on the target.
    let s_ref = p.equilibrium_gap(lag.v);
    let accel = match (exec.decision, exec.target_gap_override) {
        (LagAction::YieldBehind, _) if ma.x > lag.x => {
            real.min(idm_accel(lag.v, ma.x - lag.x, lag.v - ma.v, p)?)
        }
        (decision, Some(GapTarget::ToLeader(target))) => match &world.lead {
            Some(lead) => {
                let gap_eff = (lead.x - lag.x - target + s_ref).max(GAP_FLOOR);
                // A blocking target moves with the merger, so the effective
                // gap closes at the speed difference to the merger.
                let approach = if decision == LagAction::Block { lag.v - ma.v } else { lag.v - lead.v };
                real.min(idm_accel(lag.v, gap_eff, approach, p)?)
            }
            None => real,
        },
        (_, Some(GapTarget::BesideMerger)) => {
            let gap_eff = (ma.x - lag.x + s_ref).max(GAP_FLOOR);
            real.min(idm_accel(lag.v, gap_eff, lag.v - ma.v, p)?)
        }
        _ => real,
    };
    Ok(accel)
}

/// Semi-implicit Euler step without reversing. The stored acceleration is
/// the one actually realized over the step.
pub fn step_vehicle(state: &VehicleState, a: f64, dt: f64) -> VehicleState {
    let v = (state.v + a * dt).max(0.0);
    VehicleState {
        x: state.x + v * dt,
        v,
        a: (v - state.v) / dt,
        ..*state
    }
}
