//! Bi-level calibration of the nine payoff parameters `[φ1..φ8, τ]`.
//!
//! The lower level solves the game at every observation and reads off the
//! lag's action probabilities. The upper level minimizes the summed
//! shortfall from certainty on the observed class, `Σ (1 − q_label)`, by
//! compass search from Halton start points.

mod search;

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::search::{compass_search, halton, SearchOutcome};
use crate::data::{BehaviorLabel, Observation};
use crate::error::{Error, Result};
use crate::game::{expected_lag_payoffs, nash_mixed, qre_update};
use crate::payoff::{Conditioning, PayoffModel};
use crate::types::{ModelParams, WorldState};

/// Where the lag's action probabilities come from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilitySource {
    /// The lag's equilibrium mixture.
    #[default]
    Nash,
    /// Quantal response to the equilibrium at temperature `beta`.
    Qre { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    /// One parameter set for all observations.
    #[default]
    Global,
    /// One parameter set per lag driver, in addition to the global fit.
    PerLag,
}

/// Probability the model gives the observed class. Gap closing is credited
/// with the larger of yield-ahead and block.
pub fn label_probability(label: BehaviorLabel, probs: &[f64; 4]) -> f64 {
    match label {
        BehaviorLabel::GapOpening => probs[0],
        BehaviorLabel::GapClosing => probs[1].max(probs[2]),
        BehaviorLabel::DoNothing => probs[3],
    }
}

/// Lower-level solve for one parameter set.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator {
    model: PayoffModel,
    source: ProbabilitySource,
    conditioning: Conditioning,
}

impl Evaluator {
    pub fn new(params: &ModelParams, source: ProbabilitySource, conditioning: Conditioning) -> Result<Self> {
        if let ProbabilitySource::Qre { beta } = source {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::invalid("beta", "must be finite and > 0"));
            }
        }
        Ok(Self {
            model: PayoffModel::new(params)?,
            source,
            conditioning,
        })
    }

    pub fn probabilities(&self, world: &WorldState) -> [f64; 4] {
        let matrix = self.model.matrix(world, self.conditioning);
        let eq = nash_mixed(&matrix);
        match self.source {
            ProbabilitySource::Nash => eq.col_mix,
            ProbabilitySource::Qre { beta } => qre_update(&expected_lag_payoffs(&matrix, &eq.row_mix), beta),
        }
    }

    pub fn objective(&self, observations: &[Observation]) -> Result<f64> {
        if observations.is_empty() {
            return Err(Error::EmptyObservations);
        }
        Ok(observations
            .iter()
            .map(|o| 1.0 - label_probability(o.label, &self.probabilities(&o.world)))
            .sum())
    }
}

pub fn model_probabilities(obs: &Observation, params: &ModelParams, source: ProbabilitySource) -> Result<[f64; 4]> {
    Ok(Evaluator::new(params, source, Conditioning::Literal)?.probabilities(&obs.world))
}

/// `Σ (1 − q_label)` with equilibrium probabilities.
pub fn objective(params: &ModelParams, observations: &[Observation]) -> Result<f64> {
    Evaluator::new(params, ProbabilitySource::Nash, Conditioning::Literal)?.objective(observations)
}

/// Mean shortfall from certainty on the observed class.
pub fn mae(params: &ModelParams, observations: &[Observation]) -> Result<f64> {
    Ok(objective(params, observations)? / observations.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Lower bounds of `[φ1..φ8, τ]`.
    pub lower: [f64; 9],
    /// Upper bounds of `[φ1..φ8, τ]`.
    pub upper: [f64; 9],
    pub n_starts: usize,
    /// Maximum compass-search sweeps per start.
    pub max_iters: usize,
    pub source: ProbabilitySource,
    pub mode: CalibrationMode,
    pub conditioning: Conditioning,
    /// Seeds the rotation of the Halton start points.
    pub seed: u64,
    /// Supplies the non-calibrated fields; its calibrated values are the
    /// first start point.
    pub base: ModelParams,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        let mut lower = [1.01; 9];
        let mut upper = [50.0; 9];
        lower[ModelParams::DO_NOTHING] = -0.999;
        upper[ModelParams::DO_NOTHING] = 1.0;
        lower[8] = 0.1;
        upper[8] = 10.0;
        Self {
            lower,
            upper,
            n_starts: 32,
            max_iters: 200,
            source: ProbabilitySource::Nash,
            mode: CalibrationMode::Global,
            conditioning: Conditioning::Literal,
            seed: 0,
            base: ModelParams::default(),
        }
    }
}

impl CalibrationOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::invalid("n_starts", "must be at least 1"));
        }
        for k in 0..9 {
            let (l, u) = (self.lower[k], self.upper[k]);
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::invalid("lower", format!("bound {k} must satisfy finite lower < upper, got [{l}, {u}]")));
            }
            let probe = self.base.with_calibrated(&{
                let mut t = self.base.calibrated();
                t[k] = l;
                t
            });
            probe
                .validate()
                .map_err(|e| Error::invalid("lower", format!("bound {k} leaves the valid parameter region: {e}")))?;
        }
        self.base.validate()
    }

    fn start_points(&self) -> Vec<[f64; 9]> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let shift: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let mut starts = vec![self.base.calibrated()];
        for k in 1..self.n_starts as u64 {
            let u = halton(k, 9, &shift);
            let mut x = [0.0; 9];
            for d in 0..9 {
                x[d] = self.lower[d] + u[d] * (self.upper[d] - self.lower[d]);
            }
            starts.push(x);
        }
        starts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub start: [f64; 9],
    pub end: [f64; 9],
    pub objective: f64,
    pub evaluations: usize,
    /// Lowest objective over this and all earlier starts.
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCalibration {
    pub lag_id: String,
    /// Most frequent ground-truth class among the lag's observations.
    pub dominant: BehaviorLabel,
    pub n_observations: usize,
    pub objective: f64,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub objective: f64,
    pub mae: f64,
    pub n_observations: usize,
    pub params: ModelParams,
    pub starts: Vec<StartSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_lag: Vec<LagCalibration>,
}

impl CalibrationResult {
    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(toml::from_str(&crate::error::read_to_string(path.as_ref())?)?)
    }
}

fn fit(observations: &[Observation], opts: &CalibrationOptions) -> Result<(ModelParams, f64, Vec<StartSummary>)> {
    let f = |theta: &[f64]| -> f64 {
        let mut t = [0.0; 9];
        t.copy_from_slice(theta);
        Evaluator::new(&opts.base.with_calibrated(&t), opts.source, opts.conditioning)
            .and_then(|ev| ev.objective(observations))
            .unwrap_or(f64::INFINITY)
    };
    let outcomes: Vec<SearchOutcome> = opts
        .start_points()
        .par_iter()
        .map(|x0| compass_search(f, x0, &opts.lower, &opts.upper, opts.max_iters, 1e-6))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    let mut starts = Vec::with_capacity(outcomes.len());
    for (index, (out, x0)) in outcomes.iter().zip(opts.start_points()).enumerate() {
        if best.is_none_or(|(_, v)| out.value < v) {
            best = Some((index, out.value));
        }
        let mut end = [0.0; 9];
        end.copy_from_slice(&out.x);
        starts.push(StartSummary {
            index,
            start: x0,
            end,
            objective: out.value,
            evaluations: out.evaluations,
            best_so_far: best.map_or(f64::INFINITY, |b| b.1),
        });
    }
    let (index, _) = best.expect("at least one start");
    let params = opts.base.with_calibrated(&starts[index].end);
    let value = Evaluator::new(&params, opts.source, opts.conditioning)?.objective(observations)?;
    Ok((params, value, starts))
}

fn dominant_label(observations: &[&Observation]) -> BehaviorLabel {
    let mut counts = [0usize; 3];
    for o in observations {
        counts[BehaviorLabel::ALL.iter().position(|l| *l == o.label).expect("label in ALL")] += 1;
    }
    let mut best = 0;
    for k in 1..3 {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    BehaviorLabel::ALL[best]
}

/// Multistart calibration. Starts run in parallel and are reported in
/// order; the result only depends on `(observations, opts)`.
pub fn calibrate(observations: &[Observation], opts: &CalibrationOptions) -> Result<CalibrationResult> {
    if observations.is_empty() {
        return Err(Error::EmptyObservations);
    }
    opts.validate()?;
    let (params, objective, starts) = fit(observations, opts)?;
    let per_lag = match opts.mode {
        CalibrationMode::Global => Vec::new(),
        CalibrationMode::PerLag => {
            let mut order: Vec<&str> = Vec::new();
            let mut groups: HashMap<&str, Vec<&Observation>> = HashMap::new();
            for o in observations {
                let g = groups.entry(o.lag_id.as_str()).or_default();
                if g.is_empty() {
                    order.push(o.lag_id.as_str());
                }
                g.push(o);
            }
            order
                .par_iter()
                .map(|id| {
                    let group = &groups[id];
                    let owned: Vec<Observation> = group.iter().map(|o| (*o).clone()).collect();
                    let (params, objective, _) = fit(&owned, opts)?;
                    Ok(LagCalibration {
                        lag_id: id.to_string(),
                        dominant: dominant_label(group),
                        n_observations: owned.len(),
                        objective,
                        params,
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(CalibrationResult {
        objective,
        mae: objective / observations.len() as f64,
        n_observations: observations.len(),
        params,
        starts,
        per_lag,
    })
}
