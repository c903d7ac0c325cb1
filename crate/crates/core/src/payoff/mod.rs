//! Payoffs of the merge game.
//!
//! Every interactive payoff is a usmht curve evaluated at a scaled predictive
//! time headway Ψ: the headway expected after the horizon τ, divided by a
//! lateral-proximity factor and a ramp-end urgency factor.

mod usmht;

use serde::{Deserialize, Serialize};

pub use self::usmht::{base as usmht_base, smht_shift, usmht, Direction, Usmht};
use crate::error::Result;
use crate::types::{ModelParams, WorldState};

/// Speed floor used wherever a headway divides by a speed (m/s).
pub const V_MIN: f64 = 0.1;

/// Floor on the distance to the ramp end in the change-lanes payoff (m).
pub const RAMP_END_EPS: f64 = 0.5;

/// Curvature `d` used by the two urgency scalings.
pub const SCALING_D: f64 = 1000.0;

/// Predicted time headway after `tau` seconds under constant speeds.
#[inline]
pub fn pth(dx: f64, dv: f64, v_ref: f64, tau: f64) -> f64 {
    (dx + tau * dv) / v_ref.max(V_MIN)
}

pub fn lat_scale(dy: f64, phi4: f64) -> Result<f64> {
    Ok(Usmht::new(phi4, SCALING_D)?.eval(dy, Direction::Forward) + 1.0)
}

pub fn ramp_scale(dx_ramp: f64, v_ma: f64, phi5: f64) -> Result<f64> {
    let time_to_end = dx_ramp.max(0.0) / v_ma.max(V_MIN);
    Ok(Usmht::new(phi5, SCALING_D)?.eval(time_to_end, Direction::Forward) + 1.0)
}

#[inline]
pub fn scaled_pth(raw_pth: f64, s_lat: f64, s_ramp: f64) -> f64 {
    raw_pth / (s_lat * s_ramp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagPayoffs {
    pub q_yb: f64,
    pub q_ya: f64,
    pub q_bk: f64,
    pub q_dn: f64,
}

impl LagPayoffs {
    /// Payoffs in game column order (YB, YA, Bk, DN).
    pub fn as_array(&self) -> [f64; 4] {
        [self.q_yb, self.q_ya, self.q_bk, self.q_dn]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaPayoffs {
    pub p_keep: f64,
    pub p_change: f64,
}

/// How the lag's payoffs depend on the merger's action within the bimatrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    /// Each player's payoff depends only on its own action.
    #[default]
    Literal,
    /// The keep-straight row re-evaluates lateral proximity as if the merger
    /// stays centered in its own lane.
    Conditioned,
}

/// The 2×4 bimatrix. Rows: (ChangeLanes, KeepStraight); columns: (YB, YA, Bk, DN).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    /// Merging-actor payoffs.
    pub p: [[f64; 4]; 2],
    /// Lag payoffs.
    pub q: [[f64; 4]; 2],
}

impl PayoffMatrix {
    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.q.iter()).flatten().all(|v| v.is_finite())
    }
}

/// The usmht curves of one parameter set, with shifts resolved.
#[derive(Debug, Clone, Copy)]
pub struct PayoffModel {
    yield_behind: Usmht,
    yield_ahead: Usmht,
    leader: Usmht,
    lateral: Usmht,
    ramp: Usmht,
    block: Usmht,
    ma_lag: Usmht,
    do_nothing: f64,
    tau: f64,
    s0: f64,
    time_headway: f64,
}

/// Headways between the actors, before urgency scaling.
#[derive(Debug, Clone, Copy)]
struct Headways {
    lag_ma: f64,
    lag_lead: f64,
    ma_lead: f64,
    ma_lag: f64,
}

impl PayoffModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let phi = &params.phi;
        Ok(Self {
            yield_behind: Usmht::new(phi[0], 1.0)?,
            yield_ahead: Usmht::new(phi[1], 1.0)?,
            leader: Usmht::new(phi[2], 1.0)?,
            lateral: Usmht::new(phi[3], SCALING_D)?,
            ramp: Usmht::new(phi[4], SCALING_D)?,
            do_nothing: phi[5],
            block: Usmht::new(phi[6], 1.0)?,
            ma_lag: Usmht::new(phi[7], 1.0)?,
            tau: params.tau,
            s0: params.s0,
            time_headway: params.time_headway,
        })
    }

    fn headways(&self, world: &WorldState) -> Headways {
        let (lag, ma) = (&world.lag, &world.ma);
        let (lag_lead, ma_lead) = match &world.lead {
            Some(lead) => (
                pth(lead.x - lag.x, lead.v - lag.v, lag.v, self.tau),
                pth(lead.x - ma.x, lead.v - ma.v, ma.v, self.tau),
            ),
            // Missing leader behaves like one infinitely far ahead.
            None => (f64::INFINITY, f64::INFINITY),
        };
        Headways {
            lag_ma: pth(ma.x - lag.x, ma.v - lag.v, lag.v, self.tau),
            lag_lead,
            ma_lead,
            ma_lag: pth(lag.x - ma.x, lag.v - ma.v, ma.v, self.tau),
        }
    }

    pub fn lat_scale(&self, dy: f64) -> f64 {
        self.lateral.eval(dy, Direction::Forward) + 1.0
    }

    pub fn ramp_scale(&self, world: &WorldState) -> f64 {
        let time_to_end = world.ma_distance_to_ramp_end() / world.ma.v.max(V_MIN);
        self.ramp.eval(time_to_end, Direction::Forward) + 1.0
    }

    fn lag_from(&self, h: &Headways, scale: f64) -> LagPayoffs {
        let psi_ma = h.lag_ma / scale;
        let psi_lead = h.lag_lead / scale;
        LagPayoffs {
            q_yb: self.yield_behind.eval(psi_ma, Direction::Forward),
            q_ya: self.yield_ahead.eval(psi_ma, Direction::Reverse)
                - self.leader.eval(psi_lead, Direction::Forward),
            q_bk: self.block.eval(psi_ma, Direction::Forward),
            q_dn: self.do_nothing,
        }
    }

    pub fn lag_payoffs(&self, world: &WorldState) -> LagPayoffs {
        let h = self.headways(world);
        let dy = (world.ma.y - world.lag.y).abs();
        self.lag_from(&h, self.lat_scale(dy) * self.ramp_scale(world))
    }

    pub fn ma_payoffs(&self, world: &WorldState) -> MaPayoffs {
        let h = self.headways(world);
        let dy = (world.ma.y - world.lag.y).abs();
        let scale = self.lat_scale(dy) * self.ramp_scale(world);
        let p_keep = 0.5
            * (self.yield_behind.eval(h.ma_lead / scale, Direction::Forward)
                + self.ma_lag.eval(h.ma_lag / scale, Direction::Reverse));
        let urgency = (self.s0 + world.ma.v * self.time_headway)
            / world.ma_distance_to_ramp_end().max(RAMP_END_EPS);
        MaPayoffs {
            p_keep,
            p_change: urgency - p_keep,
        }
    }

    pub fn matrix(&self, world: &WorldState, mode: Conditioning) -> PayoffMatrix {
        let ma = self.ma_payoffs(world);
        let current = self.lag_payoffs(world).as_array();
        let keep_row = match mode {
            Conditioning::Literal => current,
            Conditioning::Conditioned => {
                let h = self.headways(world);
                let scale = self.lat_scale(world.ramp.lane_offset) * self.ramp_scale(world);
                self.lag_from(&h, scale).as_array()
            }
        };
        PayoffMatrix {
            p: [[ma.p_change; 4], [ma.p_keep; 4]],
            q: [current, keep_row],
        }
    }
}

pub fn lag_payoffs(world: &WorldState, params: &ModelParams) -> Result<LagPayoffs> {
    Ok(PayoffModel::new(params)?.lag_payoffs(world))
}

pub fn ma_payoffs(world: &WorldState, params: &ModelParams) -> Result<MaPayoffs> {
    Ok(PayoffModel::new(params)?.ma_payoffs(world))
}

pub fn payoff_matrix(world: &WorldState, params: &ModelParams, mode: Conditioning) -> Result<PayoffMatrix> {
    Ok(PayoffModel::new(params)?.matrix(world, mode))
}
