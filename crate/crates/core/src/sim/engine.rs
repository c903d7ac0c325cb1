use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{MaMode, ScenarioConfig};
use super::log::{CollisionEvent, LogRecord, TrajectoryLog};
use crate::dynamics::{behavior_overrides, idm_accel, mr_idm_accel, step_vehicle, ExecutionState, EMERGENCY_DECEL};
use crate::error::{Error, Result};
use crate::game::{decide_from, solve, Decision};
use crate::payoff::PayoffModel;
use crate::types::{LagAction, Lane, MaAction, ModelParams, VehicleState, WorldState};

/// Duration of the kinematic lane change (s).
pub const LANE_CHANGE_TIME: f64 = 3.0;
/// A lag keeps playing against the merger until it is this far ahead of it (m).
pub const INTERACTION_MARGIN: f64 = 5.0;

/// Seed of the random stream owned by one vehicle.
pub fn actor_seed(seed: u64, id: u32) -> u64 {
    splitmix64(seed ^ splitmix64(u64::from(id).wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct LagAgent {
    params: ModelParams,
    model: PayoffModel,
    decision: Decision,
    payoffs: Option<[f64; 4]>,
    interacting: bool,
}

struct Agent {
    state: VehicleState,
    exec: ExecutionState,
    lag: Option<LagAgent>,
    rng: ChaCha8Rng,
    frozen: bool,
}

/// Runs a scenario to completion.
pub fn run_scenario(config: &ScenarioConfig) -> Result<TrajectoryLog> {
    config.validate()?;
    Engine::new(config)?.run()
}

struct Engine<'a> {
    cfg: &'a ScenarioConfig,
    agents: Vec<Agent>,
    merger: Option<usize>,
    lane_change_started: Option<f64>,
    log: TrajectoryLog,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        let merger = cfg.merger_index();
        let mut agents = Vec::with_capacity(cfg.vehicles.len());
        for (i, spec) in cfg.vehicles.iter().enumerate() {
            let lag = match (&spec.model, Some(i) == merger) {
                (Some(params), false) => Some(LagAgent {
                    params: *params,
                    model: PayoffModel::new(params)?,
                    decision: Decision::idle(0.0),
                    payoffs: None,
                    interacting: false,
                }),
                _ => None,
            };
            agents.push(Agent {
                state: spec.state,
                exec: ExecutionState::new(spec.idm),
                lag,
                rng: ChaCha8Rng::seed_from_u64(actor_seed(cfg.seed, spec.state.id)),
                frozen: false,
            });
        }
        Ok(Self {
            cfg,
            agents,
            merger,
            lane_change_started: None,
            log: TrajectoryLog::default(),
        })
    }

    fn run(mut self) -> Result<TrajectoryLog> {
        let stride = self.cfg.decision_stride();
        let n = self.cfg.step_count();
        self.log.records.reserve(n * self.agents.len());
        for k in 0..n {
            let t = k as f64 * self.cfg.dt_dyn;
            let leaders = self.leaders();
            if k % stride == 0 {
                self.decision_tick(t, &leaders)?;
            }
            self.update_lane_change(t);
            let accels = self.accelerations(t, &leaders);
            self.record(t, &accels);
            self.advance(t, &accels, &leaders);
        }
        Ok(self.log)
    }

    fn merger_on_ramp(&self) -> Option<usize> {
        self.merger
            .filter(|&m| self.agents[m].state.lane == Lane::Ramp && !self.agents[m].frozen)
    }

    /// Nearest vehicle strictly ahead in the same lane, for every vehicle.
    fn leaders(&self) -> Vec<Option<usize>> {
        (0..self.agents.len())
            .map(|i| self.nearest_ahead(self.agents[i].state.x, self.agents[i].state.lane, i))
            .collect()
    }

    fn nearest_ahead(&self, x: f64, lane: Lane, skip: usize) -> Option<usize> {
        self.agents
            .iter()
            .enumerate()
            .filter(|&(j, a)| j != skip && a.state.lane == lane && a.state.x > x)
            .min_by(|(_, a), (_, b)| a.state.x.total_cmp(&b.state.x))
            .map(|(j, _)| j)
    }

    fn world_for(&self, t: f64, lag: usize, ma: usize, lead: Option<usize>) -> WorldState {
        WorldState {
            t,
            lag: self.agents[lag].state,
            ma: self.agents[ma].state,
            lead: lead.map(|l| self.agents[l].state),
            ramp: self.cfg.ramp,
        }
    }

    fn decision_tick(&mut self, t: f64, leaders: &[Option<usize>]) -> Result<()> {
        let ma = self.merger_on_ramp();
        for i in 0..self.agents.len() {
            if self.agents[i].lag.is_none() {
                continue;
            }
            let active = !self.agents[i].frozen
                && ma.is_some_and(|m| self.agents[m].state.x + INTERACTION_MARGIN > self.agents[i].state.x);
            let world = ma.map(|m| self.world_for(t, i, m, leaders[i]));
            let agent = &mut self.agents[i];
            let lag = agent.lag.as_mut().expect("checked above");
            match world.filter(|_| active) {
                Some(world) => {
                    if !(lag.interacting && lag.decision.is_held_at(t)) {
                        let sol = solve(&lag.model, &world, lag.params.beta, self.cfg.conditioning);
                        lag.decision = decide_from(&sol, &lag.params, t, &mut agent.rng);
                        lag.payoffs = Some(sol.expected);
                    }
                    lag.interacting = true;
                }
                None => {
                    // Leaving the interaction is a do-nothing: the active
                    // parameters stay, the gap target is dropped.
                    agent.exec.decision = LagAction::DoNothing;
                    agent.exec.target_gap_override = None;
                    lag.decision = Decision::idle(t);
                    lag.payoffs = None;
                    lag.interacting = false;
                }
            }
        }
        if let (MaMode::GameDriven, Some(m), None) = (&self.cfg.ma_mode, ma, self.lane_change_started) {
            let ma_state = self.agents[m].state;
            if ma_state.x >= self.cfg.ramp.merge_zone_start_x {
                // The merger plays against the closest lag agent behind it.
                let lag = self
                    .agents
                    .iter()
                    .filter(|a| a.lag.as_ref().is_some_and(|l| l.interacting) && a.state.x <= ma_state.x)
                    .max_by(|a, b| a.state.x.total_cmp(&b.state.x));
                let change = lag.is_none_or(|a| {
                    a.lag.as_ref().expect("filtered").decision.ma_action == MaAction::ChangeLanes
                });
                if change {
                    self.lane_change_started = Some(t);
                }
            }
        }
        Ok(())
    }

    fn update_lane_change(&mut self, t: f64) {
        if let (MaMode::Scripted(profile), None, Some(m)) = (&self.cfg.ma_mode, self.lane_change_started, self.merger) {
            if profile.lane_change_at.is_some_and(|at| t + 1e-9 >= at) && !self.agents[m].frozen {
                self.lane_change_started = Some(t);
            }
        }
    }

    fn accelerations(&mut self, t: f64, leaders: &[Option<usize>]) -> Vec<Result<f64>> {
        let ma = self.merger_on_ramp();
        let mut out = Vec::with_capacity(self.agents.len());
        for i in 0..self.agents.len() {
            if self.agents[i].frozen {
                out.push(Ok(0.0));
                continue;
            }
            let a = if Some(i) == self.merger {
                self.merger_accel(t, i)
            } else {
                let interacting = self.agents[i].lag.as_ref().is_some_and(|l| l.interacting);
                match (interacting, ma) {
                    (true, Some(m)) => {
                        let world = self.world_for(t, i, m, leaders[i]);
                        let agent = &mut self.agents[i];
                        let action = agent.lag.as_ref().expect("interacting lag").decision.lag_action;
                        agent.exec = behavior_overrides(action, &world, &agent.exec);
                        mr_idm_accel(&world, &agent.exec)
                    }
                    _ => self.follow(i, leaders[i]),
                }
            };
            out.push(a);
        }
        out
    }

    fn follow(&self, i: usize, leader: Option<usize>) -> Result<f64> {
        let me = &self.agents[i];
        match leader {
            Some(l) => {
                let lead = &self.agents[l].state;
                idm_accel(me.state.v, lead.x - me.state.x, me.state.v - lead.v, &me.exec.active)
            }
            None => idm_accel(me.state.v, f64::INFINITY, 0.0, &me.exec.active),
        }
    }

    fn merger_accel(&self, t: f64, m: usize) -> Result<f64> {
        let me = &self.agents[m];
        match &self.cfg.ma_mode {
            MaMode::Scripted(profile) => Ok(profile.accel_at(t)),
            MaMode::GameDriven => {
                if self.lane_change_started.is_some() {
                    // Follow whoever is ahead in the target lane.
                    return self.follow(m, self.nearest_ahead(me.state.x, Lane::Main, m));
                }
                let to_end = self.cfg.ramp.distance_to_end(me.state.x);
                if to_end <= 0.0 {
                    return Ok(-EMERGENCY_DECEL);
                }
                idm_accel(me.state.v, to_end, me.state.v, &me.exec.active)
            }
        }
    }

    fn record(&mut self, t: f64, accels: &[Result<f64>]) {
        for (agent, a) in self.agents.iter().zip(accels) {
            let s = &agent.state;
            let lag = agent.lag.as_ref();
            self.log.records.push(LogRecord {
                t,
                id: s.id,
                x: s.x,
                y: s.y,
                v: s.v,
                a: *a.as_ref().unwrap_or(&0.0),
                decision: lag.map(|l| l.decision.lag_action),
                lag_probs: lag.map(|l| l.decision.lag_probs),
                payoffs: lag.and_then(|l| l.payoffs),
                decided_at: lag.filter(|l| l.interacting).map(|l| l.decision.decided_at),
            });
        }
    }

    fn freeze(&mut self, t: f64, i: usize, leader: usize) {
        let follower = self.agents[i].state.id;
        let leader = self.agents[leader].state.id;
        log::warn!("collision at t={t:.2}s: vehicle {follower} ran into {leader}");
        self.log.collisions.push(CollisionEvent { t, follower, leader });
        let agent = &mut self.agents[i];
        agent.frozen = true;
        agent.state.v = 0.0;
        agent.state.a = 0.0;
    }

    fn advance(&mut self, t: f64, accels: &[Result<f64>], leaders: &[Option<usize>]) {
        let dt = self.cfg.dt_dyn;
        let mut collided = Vec::new();
        for (i, a) in accels.iter().enumerate() {
            if self.agents[i].frozen {
                continue;
            }
            match a {
                Ok(a) => {
                    let agent = &mut self.agents[i];
                    agent.state = step_vehicle(&agent.state, *a, dt);
                }
                Err(Error::NonPositiveGap { .. }) => collided.push(i),
                Err(e) => unreachable!("acceleration inputs are validated: {e}"),
            }
        }
        if let (Some(m), Some(start)) = (self.merger, self.lane_change_started) {
            let agent = &mut self.agents[m];
            if !agent.frozen {
                let offset = self.cfg.ramp.lane_offset;
                let progress = ((t + dt - start) / LANE_CHANGE_TIME).clamp(0.0, 1.0);
                agent.state.y = offset * progress;
                agent.state.lane = self.cfg.ramp.lane_at(agent.state.y);
            }
        }
        for (i, leader) in leaders.iter().enumerate() {
            if let Some(l) = *leader {
                let overtook = !self.agents[i].frozen
                    && self.agents[i].state.lane == self.agents[l].state.lane
                    && self.agents[i].state.x >= self.agents[l].state.x;
                if overtook && !collided.contains(&i) {
                    collided.push(i);
                }
            }
        }
        collided.sort_unstable();
        for i in collided {
            let leader = leaders[i].unwrap_or(i);
            self.freeze(t + dt, i, leader);
        }
    }
}
