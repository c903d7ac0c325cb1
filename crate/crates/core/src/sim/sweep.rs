use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::engine::{run_scenario, splitmix64};
use super::log::TrajectoryLog;
use crate::error::{Error, Result};
use crate::types::LagAction;

/// Outcome of the replicas run at one β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaRow {
    pub beta: f64,
    /// Number of replicas whose mode behavior was each action (YB, YA, Bk, DN).
    pub counts: [usize; 4],
    pub mode: LagAction,
    /// Share of replicas agreeing with `mode`.
    pub mode_frequency: f64,
    /// Shannon entropy (nats) of the distribution of per-replica modes.
    pub entropy: f64,
}

/// Seed of replica `iteration`. Replicas share seeds across β values.
pub fn replica_seed(seed: u64, iteration: usize) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(iteration as u64)))
}

/// Most frequent behavior among the decisions the first lag agent took while
/// interacting with the merger. Ties go to the earlier action; a run without
/// any interaction counts as do-nothing.
pub fn mode_behavior(log: &TrajectoryLog, lag_id: u32) -> LagAction {
    let mut counts = [0usize; 4];
    let mut last = None;
    for r in log.vehicle(lag_id) {
        if let (Some(action), Some(at)) = (r.decision, r.decided_at) {
            if last != Some(at) {
                counts[action.index()] += 1;
                last = Some(at);
            }
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return LagAction::DoNothing;
    }
    LagAction::from_index(argmax_count(&counts)).expect("index within action set")
}

fn argmax_count(counts: &[usize; 4]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

pub fn entropy(counts: &[usize; 4]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            p * (1.0 / p).ln()
        })
        .sum()
}

/// Runs `iterations` seeded replicas of `config` at each β and tabulates the
/// mode behavior of the first lag agent.
pub fn sweep_beta(config: &ScenarioConfig, betas: &[f64], iterations: usize) -> Result<Vec<BetaRow>> {
    if iterations == 0 {
        return Err(Error::invalid("iterations", "must be at least 1"));
    }
    config.validate()?;
    let lag_index = config.lag_indices()[0];
    let lag_id = config.vehicles[lag_index].state.id;
    let jobs: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|b| (0..iterations).map(move |i| (b, i)))
        .collect();
    let modes: Vec<LagAction> = jobs
        .par_iter()
        .map(|&(b, i)| {
            let mut cfg = config.clone().with_beta(betas[b]);
            cfg.seed = replica_seed(config.seed, i);
            run_scenario(&cfg).map(|log| mode_behavior(&log, lag_id))
        })
        .collect::<Result<_>>()?;
    Ok(betas
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let mut counts = [0usize; 4];
            for m in &modes[b * iterations..(b + 1) * iterations] {
                counts[m.index()] += 1;
            }
            let best = argmax_count(&counts);
            BetaRow {
                beta,
                counts,
                mode: LagAction::from_index(best).expect("index within action set"),
                mode_frequency: counts[best] as f64 / iterations as f64,
                entropy: entropy(&counts),
            }
        })
        .collect())
}
