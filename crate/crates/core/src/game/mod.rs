//! Solving the merge game and turning its solution into held decisions.

mod nash;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use self::nash::{enumerate_equilibria, nash_mixed, MixedProfile, NASH_EPS};
use crate::error::Result;
use crate::payoff::{Conditioning, PayoffMatrix, PayoffModel};
use crate::types::{LagAction, MaAction, ModelParams, WorldState};

/// Slack on the hold-window comparison so that a window ending on a tick
/// boundary is not extended by floating-point round-off.
const HOLD_EPS: f64 = 1e-9;

/// Expected lag payoff of each lag action against the merger's mixture.
pub fn expected_lag_payoffs(game: &PayoffMatrix, row_mix: &[f64; 2]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (j, o) in out.iter_mut().enumerate() {
        *o = row_mix[0] * game.q[0][j] + row_mix[1] * game.q[1][j];
    }
    out
}

/// Quantal response: softmax of expected payoffs at temperature `beta`.
pub fn qre_update(q_e: &[f64; 4], beta: f64) -> [f64; 4] {
    let max = q_e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w = [0.0; 4];
    for (wi, &q) in w.iter_mut().zip(q_e) {
        *wi = ((q - max) / beta).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|x| x / total)
}

/// Length of the next hold window: `max(0, t_window + N(0, sigma²))`.
pub fn decision_window<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> f64 {
    if params.sigma == 0.0 {
        return params.t_window.max(0.0);
    }
    let noise = Normal::new(0.0, params.sigma)
        .expect("sigma validated as finite and non-negative")
        .sample(rng);
    (params.t_window + noise).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub lag_action: LagAction,
    /// Quantal-response probabilities in (YB, YA, Bk, DN) order.
    pub lag_probs: [f64; 4],
    pub ma_action: MaAction,
    /// Time at which the decision was taken (s).
    pub decided_at: f64,
    /// The decision is held until this time (s).
    pub hold_until: f64,
}

impl Decision {
    /// A do-nothing decision with no game behind it, used when there is no
    /// merger to interact with.
    pub fn idle(t: f64) -> Self {
        Self {
            lag_action: LagAction::DoNothing,
            lag_probs: [0.0, 0.0, 0.0, 1.0],
            ma_action: MaAction::KeepStraight,
            decided_at: t,
            hold_until: t,
        }
    }

    pub fn is_held_at(&self, t: f64) -> bool {
        t + HOLD_EPS < self.hold_until
    }
}

/// Samples an index from a probability vector given a uniform draw.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1);
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc && p > 0.0 {
            return i;
        }
    }
    last
}

/// Full game solve at one instant: payoffs, equilibrium, quantal response.
#[derive(Debug, Clone, Copy)]
pub struct GameSolution {
    pub matrix: PayoffMatrix,
    pub equilibrium: MixedProfile,
    pub expected: [f64; 4],
    pub qre: [f64; 4],
}

pub fn solve(model: &PayoffModel, world: &WorldState, beta: f64, mode: Conditioning) -> GameSolution {
    let matrix = model.matrix(world, mode);
    let equilibrium = nash_mixed(&matrix);
    let expected = expected_lag_payoffs(&matrix, &equilibrium.row_mix);
    let qre = qre_update(&expected, beta);
    GameSolution {
        matrix,
        equilibrium,
        expected,
        qre,
    }
}

/// One decision step for a lag actor.
///
/// Within the hold window of `prev` the previous decision is returned as is.
/// Otherwise the game is solved, the lag action is sampled from the quantal
/// response, and the merger action follows the equilibrium row mixture.
pub fn decide<R: Rng + ?Sized>(
    world: &WorldState,
    params: &ModelParams,
    prev: Option<&Decision>,
    rng: &mut R,
) -> Result<Decision> {
    decide_with(&PayoffModel::new(params)?, world, params, Conditioning::Literal, prev, rng)
}

pub fn decide_with<R: Rng + ?Sized>(
    model: &PayoffModel,
    world: &WorldState,
    params: &ModelParams,
    mode: Conditioning,
    prev: Option<&Decision>,
    rng: &mut R,
) -> Result<Decision> {
    if let Some(prev) = prev {
        if prev.is_held_at(world.t) {
            return Ok(*prev);
        }
    }
    let sol = solve(model, world, params.beta, mode);
    Ok(decide_from(&sol, params, world.t, rng))
}

/// Samples a fresh decision at time `t` from an already solved game.
pub fn decide_from<R: Rng + ?Sized>(sol: &GameSolution, params: &ModelParams, t: f64, rng: &mut R) -> Decision {
    let lag_action = LagAction::from_index(sample_index(&sol.qre, rng.random::<f64>()))
        .expect("index within action set");
    let row = &sol.equilibrium.row_mix;
    let ma_index = if row[0] == 1.0 || row[1] == 1.0 {
        usize::from(row[1] == 1.0)
    } else {
        sample_index(row, rng.random::<f64>())
    };
    let ma_action = MaAction::from_index(ma_index).expect("index within action set");
    let window = decision_window(params, rng);
    Decision {
        lag_action,
        lag_probs: sol.qre,
        ma_action,
        decided_at: t,
        hold_until: t + window,
    }
}
