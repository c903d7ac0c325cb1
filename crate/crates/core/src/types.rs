//! Scenario, vehicle and parameter value types shared by every other module.
//!
//! All positions live on one longitudinal axis running along the road. The
//! ramp lane and the main lane differ only in their lateral coordinate: the
//! ramp-lane center sits at `y = 0` and the main-lane center at
//! `y = RampGeometry::lane_offset`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lane {
    Ramp,
    Main,
}

/// Kinematic state of one vehicle at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleState {
    pub id: u32,
    /// Longitudinal position along the road (m).
    pub x: f64,
    /// Lateral position (m), positive toward the main-lane center.
    pub y: f64,
    /// Speed (m/s).
    pub v: f64,
    /// Acceleration (m/s²).
    #[serde(default)]
    pub a: f64,
    pub lane: Lane,
}

impl VehicleState {
    pub fn new(id: u32, x: f64, y: f64, v: f64, a: f64, lane: Lane) -> Result<Self> {
        let state = Self {
            id,
            x,
            y,
            v,
            a,
            lane,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("x", self.x)?;
        ensure_finite("y", self.y)?;
        ensure_finite("v", self.v)?;
        ensure_finite("a", self.a)?;
        if self.v < 0.0 {
            return Err(Error::invalid("v", format!("speed must be >= 0, got {}", self.v)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampGeometry {
    /// Position of the ramp end (m).
    pub ramp_end_x: f64,
    /// Position from which merging is possible (m).
    pub merge_zone_start_x: f64,
    /// Lateral distance between ramp-lane and main-lane centers (m).
    pub lane_offset: f64,
}

impl RampGeometry {
    pub fn new(ramp_end_x: f64, merge_zone_start_x: f64, lane_offset: f64) -> Result<Self> {
        let ramp = Self {
            ramp_end_x,
            merge_zone_start_x,
            lane_offset,
        };
        ramp.validate()?;
        Ok(ramp)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("ramp_end_x", self.ramp_end_x)?;
        ensure_finite("merge_zone_start_x", self.merge_zone_start_x)?;
        ensure_finite("lane_offset", self.lane_offset)?;
        if self.merge_zone_start_x >= self.ramp_end_x {
            return Err(Error::invalid(
                "merge_zone_start_x",
                "merge zone must start before the ramp end",
            ));
        }
        if self.lane_offset <= 0.0 {
            return Err(Error::invalid("lane_offset", "must be > 0"));
        }
        Ok(())
    }

    /// Lateral position separating the two lanes.
    pub fn lane_boundary_y(&self) -> f64 {
        0.5 * self.lane_offset
    }

    /// Lane a vehicle occupies given its lateral position.
    pub fn lane_at(&self, y: f64) -> Lane {
        if y >= self.lane_boundary_y() {
            Lane::Main
        } else {
            Lane::Ramp
        }
    }

    /// Distance remaining to the ramp end, clamped at zero once passed.
    pub fn distance_to_end(&self, x: f64) -> f64 {
        (self.ramp_end_x - x).max(0.0)
    }
}

impl Default for RampGeometry {
    fn default() -> Self {
        Self {
            ramp_end_x: 300.0,
            merge_zone_start_x: 0.0,
            lane_offset: 3.5,
        }
    }
}

/// Snapshot of the interaction: lag, merging actor and optional leader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub t: f64,
    pub lag: VehicleState,
    pub ma: VehicleState,
    pub lead: Option<VehicleState>,
    pub ramp: RampGeometry,
}

impl WorldState {
    pub fn new(
        t: f64,
        lag: VehicleState,
        ma: VehicleState,
        lead: Option<VehicleState>,
        ramp: RampGeometry,
    ) -> Result<Self> {
        let world = Self {
            t,
            lag,
            ma,
            lead,
            ramp,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("t", self.t)?;
        self.lag.validate()?;
        self.ma.validate()?;
        self.ramp.validate()?;
        if self.lag.lane != Lane::Main {
            return Err(Error::invalid("lag.lane", "lag vehicle must be in the main lane"));
        }
        if let Some(lead) = &self.lead {
            lead.validate()?;
            if lead.x <= self.lag.x {
                return Err(Error::invalid("lead.x", "leader must be ahead of the lag vehicle"));
            }
        }
        Ok(())
    }

    pub fn actor(&self, role: ActorRole) -> Result<&VehicleState> {
        match role {
            ActorRole::Lag => Ok(&self.lag),
            ActorRole::Ma => Ok(&self.ma),
            ActorRole::Lead => self.lead.as_ref().ok_or(Error::MissingActor(ActorRole::Lead)),
        }
    }

    /// Longitudinal distance from the merging actor to the ramp end (m).
    pub fn ma_distance_to_ramp_end(&self) -> f64 {
        self.ramp.distance_to_end(self.ma.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorRole {
    Lag,
    Ma,
    Lead,
}

impl ActorRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ActorRole::Lag => "lag",
            ActorRole::Ma => "ma",
            ActorRole::Lead => "lead",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lag" => Some(ActorRole::Lag),
            "ma" => Some(ActorRole::Ma),
            "lead" => Some(ActorRole::Lead),
            _ => None,
        }
    }
}

impl fmt::Display for ActorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative longitudinal/lateral state between two actors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeState {
    /// `x_to - x_from` (m).
    pub dx: f64,
    /// `v_to - v_from` (m/s).
    pub dv: f64,
    /// `|y_to - y_from|` (m).
    pub dy: f64,
}

pub fn relative_state(world: &WorldState, from: ActorRole, to: ActorRole) -> Result<RelativeState> {
    let a = world.actor(from)?;
    let b = world.actor(to)?;
    Ok(RelativeState {
        dx: b.x - a.x,
        dv: b.v - a.v,
        dy: (b.y - a.y).abs(),
    })
}

/// Lag-vehicle actions, in the column order of the normal-form game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagAction {
    YieldBehind,
    YieldAhead,
    Block,
    DoNothing,
}

impl LagAction {
    pub const ALL: [LagAction; 4] = [
        LagAction::YieldBehind,
        LagAction::YieldAhead,
        LagAction::Block,
        LagAction::DoNothing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LagAction::YieldBehind => "yield_behind",
            LagAction::YieldAhead => "yield_ahead",
            LagAction::Block => "block",
            LagAction::DoNothing => "do_nothing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s)
    }
}

impl fmt::Display for LagAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Merging-actor actions, in the row order of the normal-form game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaAction {
    ChangeLanes,
    KeepStraight,
}

impl MaAction {
    pub const ALL: [MaAction; 2] = [MaAction::ChangeLanes, MaAction::KeepStraight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaAction::ChangeLanes => "change_lanes",
            MaAction::KeepStraight => "keep_straight",
        }
    }
}

impl fmt::Display for MaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decision-model parameters.
///
/// `phi[k]` holds φ_{k+1}: `phi[0]` yield-behind curvature, `phi[1]` yield-ahead
/// curvature, `phi[2]` leader dissuasion, `phi[3]` lateral scaling, `phi[4]` ramp
/// scaling, `phi[5]` do-nothing reward, `phi[6]` block curvature, `phi[7]` the
/// merger's lag-gap curvature. Together with `tau` these are the nine calibrated
/// values; the remaining fields are runtime knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub phi: [f64; 8],
    /// Prediction horizon τ (s).
    pub tau: f64,
    /// Bounded-rationality coefficient β.
    pub beta: f64,
    /// Mean decision window (s).
    pub t_window: f64,
    /// Decision window noise standard deviation (s).
    pub sigma: f64,
    /// Standstill distance in the merger's change-lanes payoff (m).
    pub s0: f64,
    /// Time headway in the merger's change-lanes payoff (s).
    #[serde(rename = "T")]
    pub time_headway: f64,
}

impl ModelParams {
    /// Index of φ6, the only φ that is a reward level rather than a curvature.
    pub const DO_NOTHING: usize = 5;

    pub fn validate(&self) -> Result<()> {
        for (k, &phi) in self.phi.iter().enumerate() {
            ensure_finite("phi", phi)?;
            if k == Self::DO_NOTHING {
                if !(phi > -1.0 && phi <= 1.0) {
                    return Err(Error::invalid("phi", format!("phi6 must lie in (-1, 1], got {phi}")));
                }
            } else if phi <= 1.0 {
                return Err(Error::invalid(
                    "phi",
                    format!("phi{} is a curvature and must be > 1, got {phi}", k + 1),
                ));
            }
        }
        for (field, value) in [
            ("tau", self.tau),
            ("beta", self.beta),
            ("t_window", self.t_window),
            ("sigma", self.sigma),
            ("s0", self.s0),
            ("T", self.time_headway),
        ] {
            ensure_finite(field, value)?;
        }
        if self.tau <= 0.0 {
            return Err(Error::invalid("tau", "must be > 0"));
        }
        if self.beta <= 0.0 {
            return Err(Error::invalid("beta", "must be > 0"));
        }
        for (field, value) in [
            ("t_window", self.t_window),
            ("sigma", self.sigma),
            ("s0", self.s0),
            ("T", self.time_headway),
        ] {
            if value < 0.0 {
                return Err(Error::invalid(field, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// The nine calibrated values `[φ1..φ8, τ]`.
    pub fn calibrated(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..8].copy_from_slice(&self.phi);
        out[8] = self.tau;
        out
    }

    pub fn with_calibrated(mut self, theta: &[f64; 9]) -> Self {
        self.phi.copy_from_slice(&theta[..8]);
        self.tau = theta[8];
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            phi: [2.0, 2.0, 2.0, 2.0, 2.0, 0.1, 2.0, 2.0],
            tau: 2.0,
            beta: 0.1,
            t_window: 2.0,
            sigma: 0.0,
            s0: 2.0,
            time_headway: 1.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vehicle(id: u32, x: f64, y: f64, v: f64, lane: Lane) -> VehicleState {
        VehicleState::new(id, x, y, v, 0.0, lane).unwrap()
    }

    fn world(lead: Option<VehicleState>) -> WorldState {
        WorldState::new(
            0.0,
            vehicle(1, 0.0, 3.5, 20.0, Lane::Main),
            vehicle(2, 30.0, 0.0, 25.0, Lane::Ramp),
            lead,
            RampGeometry::default(),
        )
        .unwrap()
    }

    #[test]
    fn relative_state_subtracts() {
        let w = world(None);
        let rel = relative_state(&w, ActorRole::Lag, ActorRole::Ma).unwrap();
        assert_eq!(rel.dx, 30.0);
        assert_eq!(rel.dv, 5.0);
        assert_eq!(rel.dy, 3.5);
    }

    #[test]
    fn relative_state_identity_is_zero() {
        let w = world(None);
        let rel = relative_state(&w, ActorRole::Ma, ActorRole::Ma).unwrap();
        assert_eq!((rel.dx, rel.dv, rel.dy), (0.0, 0.0, 0.0));
    }

    #[test]
    fn relative_state_to_absent_lead_fails() {
        let w = world(None);
        let err = relative_state(&w, ActorRole::Lag, ActorRole::Lead).unwrap_err();
        assert!(matches!(err, Error::MissingActor(ActorRole::Lead)));
    }

    #[test]
    fn relative_state_is_antisymmetric() {
        let w = world(Some(vehicle(3, 80.0, 3.5, 22.0, Lane::Main)));
        for (a, b) in [
            (ActorRole::Lag, ActorRole::Ma),
            (ActorRole::Ma, ActorRole::Lead),
            (ActorRole::Lag, ActorRole::Lead),
        ] {
            let fwd = relative_state(&w, a, b).unwrap();
            let back = relative_state(&w, b, a).unwrap();
            assert_eq!(fwd.dx, -back.dx);
            assert_eq!(fwd.dv, -back.dv);
            assert_eq!(fwd.dy, back.dy);
        }
    }

    #[test]
    fn constructors_reject_non_finite_values() {
        assert!(VehicleState::new(0, f64::NAN, 0.0, 1.0, 0.0, Lane::Main).is_err());
        assert!(VehicleState::new(0, 0.0, 0.0, f64::INFINITY, 0.0, Lane::Main).is_err());
        assert!(VehicleState::new(0, 0.0, 0.0, -1.0, 0.0, Lane::Main).is_err());
        assert!(RampGeometry::new(f64::NAN, 0.0, 3.5).is_err());
        assert!(RampGeometry::new(100.0, 200.0, 3.5).is_err());
        assert!(RampGeometry::new(100.0, 0.0, 0.0).is_err());

        let mut p = ModelParams::default();
        p.phi[0] = f64::NAN;
        assert!(p.validate().is_err());
        let p = ModelParams {
            tau: f64::INFINITY,
            ..ModelParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn world_rejects_leader_behind_lag() {
        let lead = vehicle(3, -5.0, 3.5, 22.0, Lane::Main);
        let res = WorldState::new(
            0.0,
            vehicle(1, 0.0, 3.5, 20.0, Lane::Main),
            vehicle(2, 30.0, 0.0, 25.0, Lane::Ramp),
            Some(lead),
            RampGeometry::default(),
        );
        assert!(res.is_err());
    }

    #[test]
    fn model_params_bounds() {
        assert!(ModelParams::default().validate().is_ok());
        let mut p = ModelParams::default();
        p.phi[5] = -1.0;
        assert!(p.validate().is_err());
        p.phi[5] = 1.0;
        assert!(p.validate().is_ok());
        p.phi[6] = 1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn action_enumerations_are_exhaustive() {
        assert_eq!(LagAction::ALL.len(), 4);
        assert_eq!(MaAction::ALL.len(), 2);
        for (i, a) in LagAction::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
            assert_eq!(LagAction::parse(a.as_str()), Some(*a));
        }
    }
}
