//! The constrained-MDP environment: a deterministic stepped simulation that
//! binds mobility, demand, channel and radio, plus episode orchestration.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{all_sinrs, noise_power, shannon_rate, ChannelConfig, ChannelModel, LinkCache};
use crate::demand::{self, slot_of};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::math;
use crate::matrix::Matrix;
use crate::mobility::{generate_schedule, DepartureProfile, Mover, Population, Router, ScheduledMover};
use crate::radio::{compute_kpis, validate_action, AllocAction, Allocation, Grant, KpiRecord, StepTimings};
use crate::rng::{self, domain};
use crate::scenario::{BaseStationSite, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityKind {
    /// Users stay at uniformly drawn positions.
    Static,
    /// Users walk or drive straight between two uniform points.
    StraightLine,
    /// Users follow home/work travel schedules.
    Scheduled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DemandKind {
    /// Uniform(0, 60·B) episode totals.
    UniformEpisode,
    /// Hierarchical pattern generator summed over the episode.
    Hierarchical { clusters: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub steps: u32,
    pub dt_s: f64,
    pub n_users: usize,
    pub mobility: MobilityKind,
    pub demand: DemandKind,
    /// Wall-clock time of the first step, seconds after Monday 00:00.
    pub start_time_s: f64,
    /// Per-site user cap; defaults to the site's channel count.
    pub site_user_cap: Option<u32>,
    pub outage_threshold_bps: f64,
    pub channel: ChannelConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            steps: 20,
            dt_s: 1.0,
            n_users: 200,
            mobility: MobilityKind::Scheduled,
            demand: DemandKind::UniformEpisode,
            start_time_s: 7.5 * 3600.0,
            site_user_cap: None,
            outage_threshold_bps: crate::radio::OUTAGE_THRESHOLD_BPS,
            channel: ChannelConfig::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.steps == 0 {
            return bad("steps must be positive");
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return bad("dt must be positive");
        }
        if self.n_users == 0 {
            return bad("n_users must be positive");
        }
        if !(self.channel.radio.rb_bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        if let Some(f) = self.channel.fading {
            if !f.is_valid() {
                return bad("invalid fading parameters");
            }
        }
        if let DemandKind::Hierarchical { clusters: 0 } = self.demand {
            return bad("cluster count must be positive");
        }
        Ok(())
    }
}

/// What a policy sees: remaining time, remaining demands, site power
/// budgets and the current linear decay factors.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub remaining_time: u32,
    pub remaining_demand: &'a [f64],
    pub max_tx_power_w: &'a [f64],
    pub decay: &'a Matrix<f64>,
}

/// Static facts about the environment a policy may use.
#[derive(Clone, Copy, Debug)]
pub struct PolicyContext<'a> {
    pub sites: &'a [BaseStationSite],
    pub user_cap: &'a [u32],
    /// Noise power per resource block at each site, watts.
    pub noise_w: &'a [f64],
    pub dt_s: f64,
    pub steps: u32,
    pub positions: &'a [Point],
    pub initial_demand: &'a [f64],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    /// Total throughput this step, bits.
    pub reward: f64,
    /// Total satisfied demand this step, bits.
    pub cost: f64,
    pub done: bool,
}

pub trait Policy {
    fn name(&self) -> &str;

    fn begin_episode(&mut self, _ctx: &PolicyContext<'_>) {}

    fn act(&mut self, obs: &Observation<'_>, ctx: &PolicyContext<'_>) -> AllocAction;

    /// Called once with the episode's aggregate satisfaction ratio.
    fn end_episode(&mut self, _satisfaction: f64) {}
}

/// Monotonic time source for the step timing split.
pub trait Clock {
    fn now_s(&self) -> f64;
}

/// Outer-loop calibration point: where measurements from a physical
/// network would update the twin between episodes.
pub trait Calibration {
    fn calibrate(&mut self, _scenario: &Scenario, _trace: &EpisodeTrace) {}
}

/// The calibration hook used when no physical network is attached.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoCalibration;

impl Calibration for NoCalibration {}

pub struct Environment<'a> {
    scenario: &'a Scenario,
    config: EpisodeConfig,
    channel: ChannelModel<'a>,
    router: Router<'a>,
    population: Population,
    links: LinkCache,
    remaining_time: u32,
    remaining_demand: Vec<f64>,
    initial_demand: Vec<f64>,
    max_power: Vec<f64>,
    user_cap: Vec<u32>,
    noise_w: Vec<f64>,
    step_index: u64,
}

fn initial_movers(seed: u64, scenario: &Scenario, cfg: &EpisodeConfig) -> Vec<Mover> {
    let ext = scenario.extent;
    let uniform = |r: &mut rng::SimRng| {
        Point::new(
            r.random_range(ext.min_x..=ext.max_x),
            r.random_range(ext.min_y..=ext.max_y),
        )
    };
    let horizon = cfg.start_time_s + cfg.steps as f64 * cfg.dt_s + 1.0;
    let profile = DepartureProfile::default();
    (0..cfg.n_users)
        .map(|u| {
            let mut r = rng::stream(seed, domain::USER_INIT, &[u as u64]);
            match cfg.mobility {
                MobilityKind::Static => Mover::Static(uniform(&mut r)),
                MobilityKind::StraightLine => Mover::StraightLine {
                    start: uniform(&mut r),
                    end: uniform(&mut r),
                    speed: r.random_range(0.5..15.0),
                },
                MobilityKind::Scheduled => Mover::Scheduled(ScheduledMover::new(generate_schedule(
                    seed, scenario, horizon, u as u32, &profile,
                ))),
            }
        })
        .collect()
}

/// Demand arriving at each step, `[step][user]` in bits. Episode-total
/// demand arrives entirely at the first step.
pub fn demand_arrivals(seed: u64, cfg: &EpisodeConfig) -> Vec<Vec<f64>> {
    let steps = cfg.steps as usize;
    let mut out = vec![vec![0.0; cfg.n_users]; steps];
    match cfg.demand {
        DemandKind::UniformEpisode => {
            let totals = demand::sample_episode_demand(seed, cfg.n_users, cfg.channel.radio.rb_bandwidth_hz, cfg.steps);
            if let Some(first) = out.first_mut() {
                for (slot, d) in first.iter_mut().zip(totals) {
                    *slot = d.total_bits;
                }
            }
        }
        DemandKind::Hierarchical { clusters } => {
            let lib = demand::build_pattern_library(seed, clusters);
            for mut p in demand::user_processes(seed, cfg.n_users, clusters) {
                let mut r = rng::stream(seed, domain::DEMAND, &[p.user as u64, 1]);
                for (k, row) in out.iter_mut().enumerate() {
                    let t = cfg.start_time_s + k as f64 * cfg.dt_s;
                    row[p.user as usize] = demand::sample_demand(&mut p, &lib, slot_of(t), cfg.dt_s, &mut r);
                }
            }
        }
    }
    out
}

fn initial_demand(seed: u64, cfg: &EpisodeConfig) -> Vec<f64> {
    let mut total = vec![0.0; cfg.n_users];
    for row in demand_arrivals(seed, cfg) {
        for (t, d) in total.iter_mut().zip(row) {
            *t += d;
        }
    }
    total
}

impl<'a> Environment<'a> {
    /// Builds the environment and resets it for `seed`.
    pub fn reset(scenario: &'a Scenario, config: EpisodeConfig, seed: u64) -> Result<Self> {
        scenario.validate()?;
        config.validate()?;
        let channel = ChannelModel::new(scenario, config.channel, seed);
        let router = Router::new(&scenario.lanes);
        let population = Population::new(initial_movers(seed, scenario, &config), config.start_time_s, seed);
        let n_sites = scenario.sites.len();
        let mut env = Environment {
            scenario,
            config,
            channel,
            router,
            population,
            links: LinkCache::new(config.n_users, n_sites),
            remaining_time: config.steps,
            remaining_demand: Vec::new(),
            initial_demand: initial_demand(seed, &config),
            max_power: scenario.sites.iter().map(|s| s.max_tx_power_w()).collect(),
            user_cap: scenario
                .sites
                .iter()
                .map(|s| config.site_user_cap.map_or(s.n_channels, |c| c.min(s.n_channels)))
                .collect(),
            noise_w: scenario
                .sites
                .iter()
                .map(|s| {
                    math::dbm_to_watts(noise_power(config.channel.radio.noise_density_dbm_hz, s.rb_bandwidth_hz))
                })
                .collect(),
            step_index: 0,
        };
        env.remaining_demand = env.initial_demand.clone();
        env.links.update(&env.channel, env.population.positions(), 0);
        Ok(env)
    }

    pub fn observe(&self) -> Observation<'_> {
        Observation {
            remaining_time: self.remaining_time,
            remaining_demand: &self.remaining_demand,
            max_tx_power_w: &self.max_power,
            decay: self.links.gains(),
        }
    }

    pub fn context(&self) -> PolicyContext<'_> {
        PolicyContext {
            sites: &self.scenario.sites,
            user_cap: &self.user_cap,
            noise_w: &self.noise_w,
            dt_s: self.config.dt_s,
            steps: self.config.steps,
            positions: self.population.positions(),
            initial_demand: &self.initial_demand,
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn channel(&self) -> &ChannelModel<'a> {
        &self.channel
    }

    pub fn positions(&self) -> &[Point] {
        self.population.positions()
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn initial_demand(&self) -> &[f64] {
        &self.initial_demand
    }

    pub fn remaining_time(&self) -> u32 {
        self.remaining_time
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn user_cap(&self) -> &[u32] {
        &self.user_cap
    }

    /// Changes the seed of future fading draws. The current decay matrix
    /// is left untouched.
    pub fn set_fading_seed(&mut self, seed: u64) {
        self.channel.set_fading_seed(seed);
    }

    /// Validates `action`, serves traffic for one step, then advances
    /// mobility and the channel.
    pub fn step(&mut self, action: &AllocAction) -> Result<(StepOutcome, Allocation, Vec<f64>)> {
        if self.remaining_time == 0 {
            return Err(Error::InvalidConfig("episode already finished".into()));
        }
        let alloc = validate_action(action, &self.scenario.sites, &self.user_cap, self.config.n_users)?;
        let grants: Vec<Grant> = alloc.grants();
        let sinrs = all_sinrs(&grants, self.links.gains(), &self.noise_w);
        let mut rates = vec![0.0; self.config.n_users];
        for g in &grants {
            let bw = self.scenario.sites[g.site as usize].rb_bandwidth_hz;
            rates[g.user as usize] = shannon_rate(bw, sinrs[g.user as usize]);
        }
        let dt = self.config.dt_s;
        let mut outcome = StepOutcome::default();
        for (rem, &r) in self.remaining_demand.iter_mut().zip(&rates) {
            let bits = r * dt;
            let served = rem.min(bits);
            outcome.reward += bits;
            outcome.cost += served;
            *rem = (*rem - served).max(0.0);
        }
        self.remaining_time -= 1;
        self.step_index += 1;
        outcome.done = self.remaining_time == 0;
        if !outcome.done {
            self.population.step(self.scenario, &self.router, dt);
            self.links
                .update(&self.channel, self.population.positions(), self.step_index);
        }
        Ok((outcome, alloc, rates))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub remaining_time: u32,
    pub remaining_demand_bits: f64,
    pub action: AllocAction,
    pub outcome: StepOutcome,
    pub kpi: KpiRecord,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceTotals {
    pub reward: f64,
    pub cost: f64,
    pub initial_demand: f64,
    pub satisfaction: f64,
    pub per_user_satisfaction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub policy: alloc::string::String,
    pub steps: Vec<TraceStep>,
    pub totals: TraceTotals,
    /// Per-user served bits over the episode.
    pub served: Vec<f64>,
    pub initial_demand: Vec<f64>,
}

/// Aggregate satisfaction: served bits over demanded bits (1 when nothing
/// was demanded).
pub fn satisfaction_ratio(trace: &EpisodeTrace) -> f64 {
    aggregate_satisfaction(&trace.initial_demand, &trace.served)
}

pub fn aggregate_satisfaction(demand: &[f64], served: &[f64]) -> f64 {
    let total: f64 = demand.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    served.iter().sum::<f64>() / total
}

/// Mean over users with positive demand of their served fraction.
pub fn per_user_satisfaction(demand: &[f64], served: &[f64]) -> f64 {
    let (sum, n) = demand
        .iter()
        .zip(served)
        .filter(|(d, _)| **d > 0.0)
        .fold((0.0, 0usize), |(s, n), (d, v)| (s + (v / d).min(1.0), n + 1));
    if n == 0 {
        1.0
    } else {
        sum / n as f64
    }
}

/// Runs one episode to completion. With a clock, the time spent in the
/// policy and in the environment is recorded per step; without one the
/// timing fields stay zero.
pub fn run_episode(
    env: &mut Environment<'_>,
    policy: &mut dyn Policy,
    clock: Option<&dyn Clock>,
) -> Result<EpisodeTrace> {
    let now = || clock.map_or(0.0, |c| c.now_s());
    policy.begin_episode(&env.context());
    let mut steps = Vec::with_capacity(env.config.steps as usize);
    let mut served = vec![0.0; env.config.n_users];
    while env.remaining_time > 0 {
        let t0 = now();
        let (action, remaining_time, remaining_before) = {
            let obs = env.observe();
            let ctx = env.context();
            (policy.act(&obs, &ctx), obs.remaining_time, obs.remaining_demand.to_vec())
        };
        let t1 = now();
        let (outcome, alloc, rates) = env.step(&action)?;
        let t2 = now();
        for (s, (a, b)) in served.iter_mut().zip(remaining_before.iter().zip(&env.remaining_demand)) {
            *s += a - b;
        }
        let kpi = compute_kpis(
            (env.config.steps - remaining_time) as u32,
            &remaining_before,
            &alloc,
            &rates,
            env.config.dt_s,
            StepTimings {
                action_selection_s: t1 - t0,
                interaction_s: t2 - t1,
            },
            env.config.outage_threshold_bps,
        );
        steps.push(TraceStep {
            remaining_time,
            remaining_demand_bits: remaining_before.iter().sum(),
            action,
            outcome,
            kpi,
        });
    }
    let initial = env.initial_demand.clone();
    let totals = TraceTotals {
        reward: steps.iter().map(|s| s.outcome.reward).sum(),
        cost: steps.iter().map(|s| s.outcome.cost).sum(),
        initial_demand: initial.iter().sum(),
        satisfaction: aggregate_satisfaction(&initial, &served),
        per_user_satisfaction: per_user_satisfaction(&initial, &served),
    };
    policy.end_episode(totals.satisfaction);
    Ok(EpisodeTrace {
        policy: policy.name().into(),
        steps,
        totals,
        served,
        initial_demand: initial,
    })
}

/// Serves nobody.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdlePolicy;

impl Policy for IdlePolicy {
    fn name(&self) -> &str {
        "idle"
    }

    fn act(&mut self, _obs: &Observation<'_>, _ctx: &PolicyContext<'_>) -> AllocAction {
        AllocAction::default()
    }
}

/// Nearest site, random channel, fair power.
#[derive(Clone, Debug)]
pub struct NearestRandomPolicy {
    seed: u64,
    step: u64,
}

impl NearestRandomPolicy {
    pub fn new(seed: u64) -> Self {
        NearestRandomPolicy { seed, step: 0 }
    }
}

impl Policy for NearestRandomPolicy {
    fn name(&self) -> &str {
        "nearest_random"
    }

    fn act(&mut self, _obs: &Observation<'_>, ctx: &PolicyContext<'_>) -> AllocAction {
        let mut r = rng::stream(self.seed, domain::RB_ACCESS, &[self.step]);
        self.step += 1;
        crate::radio::default_action(ctx.positions, ctx.sites, &mut r)
    }
}
