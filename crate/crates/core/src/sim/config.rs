use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::IdmParams;
use crate::error::{Error, Result};
use crate::payoff::Conditioning;
use crate::types::{Lane, ModelParams, RampGeometry, VehicleState};

/// One vehicle of a scenario. Main-lane vehicles with `model` set are lag
/// agents that play the merge game; the single ramp vehicle is the merger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub state: VehicleState,
    #[serde(default)]
    pub idm: IdmParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
}

/// Piecewise-constant acceleration command starting at `from` (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSegment {
    pub from: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedProfile {
    /// Acceleration schedule, sorted by `from`. Before the first segment the
    /// merger holds its speed.
    #[serde(default)]
    pub accel: Vec<AccelSegment>,
    /// Start time of the lane change (s); the merger stays on the ramp if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_change_at: Option<f64>,
}

impl ScriptedProfile {
    pub fn accel_at(&self, t: f64) -> f64 {
        self.accel
            .iter()
            .take_while(|seg| seg.from <= t + 1e-9)
            .last()
            .map_or(0.0, |seg| seg.accel)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaMode {
    Scripted(ScriptedProfile),
    /// The merger follows IDM on the ramp and starts its lane change when the
    /// equilibrium of its game with the current lag selects ChangeLanes.
    GameDriven,
}

impl Default for MaMode {
    fn default() -> Self {
        MaMode::Scripted(ScriptedProfile::default())
    }
}

fn default_dt_dyn() -> f64 {
    0.01
}

fn default_dt_decision() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub ramp: RampGeometry,
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub ma_mode: MaMode,
    /// Dynamics step (s).
    #[serde(default = "default_dt_dyn")]
    pub dt_dyn: f64,
    /// Decision step (s); an integer multiple of `dt_dyn`.
    #[serde(default = "default_dt_decision")]
    pub dt_decision: f64,
    /// Simulated time (s).
    pub duration: f64,
    pub seed: u64,
    #[serde(default)]
    pub conditioning: Conditioning,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&crate::error::read_to_string(path.as_ref())?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Number of dynamics steps per decision step.
    pub fn decision_stride(&self) -> usize {
        (self.dt_decision / self.dt_dyn).round() as usize
    }

    pub fn step_count(&self) -> usize {
        (self.duration / self.dt_dyn).round() as usize
    }

    pub fn merger_index(&self) -> Option<usize> {
        self.vehicles.iter().position(|v| v.state.lane == Lane::Ramp)
    }

    pub fn lag_indices(&self) -> Vec<usize> {
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.state.lane == Lane::Main && v.model.is_some())
            .map(|(i, _)| i)
            .collect()
    }

    /// Sets β for every lag agent.
    pub fn with_beta(mut self, beta: f64) -> Self {
        for v in &mut self.vehicles {
            if let Some(m) = v.model.as_mut() {
                m.beta = beta;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.ramp.validate()?;
        for (field, value) in [("dt_dyn", self.dt_dyn), ("dt_decision", self.dt_decision), ("duration", self.duration)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("`{field}` must be finite and > 0, got {value}")));
            }
        }
        let ratio = self.dt_decision / self.dt_dyn;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::Config(format!(
                "dt_decision ({}) must be an integer multiple of dt_dyn ({})",
                self.dt_decision, self.dt_dyn
            )));
        }
        let mut ids = HashSet::new();
        let mut mergers = 0;
        for spec in &self.vehicles {
            spec.state.validate()?;
            spec.idm.validate()?;
            if let Some(model) = &spec.model {
                model.validate()?;
            }
            if !ids.insert(spec.state.id) {
                return Err(Error::Config(format!("duplicate vehicle id {}", spec.state.id)));
            }
            if self.ramp.lane_at(spec.state.y) != spec.state.lane {
                return Err(Error::Config(format!(
                    "vehicle {} has lane {:?} but lateral position {} lies in the other lane",
                    spec.state.id, spec.state.lane, spec.state.y
                )));
            }
            if spec.state.lane == Lane::Ramp {
                mergers += 1;
            }
        }
        if mergers > 1 {
            return Err(Error::Config(format!("at most one merger is supported, found {mergers}")));
        }
        if self.lag_indices().is_empty() {
            return Err(Error::Config("at least one main-lane vehicle needs `model` parameters".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
duration = 10.0
seed = 7

[ramp]
ramp_end_x = 300.0
merge_zone_start_x = 0.0
lane_offset = 3.5

[ma_mode.scripted]
lane_change_at = 4.0
accel = [{ from = 0.0, accel = 0.5 }, { from = 2.0, accel = 0.0 }]

[[vehicles]]
state = { id = 1, x = 0.0, y = 3.5, v = 25.0, lane = "main" }
model = { phi = [2.0, 2.0, 2.0, 2.0, 2.0, 0.1, 2.0, 2.0], tau = 2.0, beta = 0.1, t_window = 2.0, sigma = 0.0, s0 = 2.0, T = 1.5 }

[[vehicles]]
state = { id = 2, x = 51.0, y = 0.0, v = 20.0, lane = "ramp" }
idm = { v0 = 25.0, T = 1.2, s0 = 2.0, a_max = 1.5, b = 2.0 }
"#;

    #[test]
    fn parses_sample_config() {
        let cfg = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.dt_dyn, 0.01);
        assert_eq!(cfg.decision_stride(), 10);
        assert_eq!(cfg.step_count(), 1000);
        assert_eq!(cfg.merger_index(), Some(1));
        assert_eq!(cfg.lag_indices(), vec![0]);
        let MaMode::Scripted(profile) = &cfg.ma_mode else { panic!() };
        assert_eq!(profile.accel_at(1.0), 0.5);
        assert_eq!(profile.accel_at(3.0), 0.0);
        assert_eq!(cfg.vehicles[1].idm.delta, 4.0);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::from_toml_str(SAMPLE).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_steps() {
        let bad = format!("dt_dyn_typo = 0.01\n{SAMPLE}");
        assert!(matches!(ScenarioConfig::from_toml_str(&bad), Err(Error::TomlDe(_))));
        let bad = format!("dt_decision = 0.015\n{SAMPLE}");
        assert!(matches!(ScenarioConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let bad = SAMPLE.replace("duration = 10.0", "duration = -1.0");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn rejects_lane_mismatch() {
        let bad = SAMPLE.replace("y = 0.0, v = 20.0, lane = \"ramp\"", "y = 0.0, v = 20.0, lane = \"main\"");
        assert!(ScenarioConfig::from_toml_str(&bad).is_err());
    }
}
