//! Demand-decoupled resource allocation: per-step demand quotas, edge
//! scoring, Hungarian matching of users to sites and channels, explicit
//! power allocation, and the two comparison baselines.

mod controller;
mod hungarian;
mod matching;
mod power;
mod scoring;

pub use controller::{equal_division, single_step_demand, ProportionalController, SingleStepDemand};
pub use hungarian::{hungarian, Matching};
pub use matching::{match_users_to_bs, match_users_to_rb, replica_counts, MatchParams};
pub use power::{allocate_power, fair_split_power, site_power_split, Slot};
pub use scoring::{edge_score, predicted_bits, score_edges, EdgeScore, InterferenceSnapshot};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::{run_episode, EpisodeConfig, Environment, Observation, Policy, PolicyContext};
use crate::error::Result;
use crate::radio::{AllocAction, Grant};
use crate::rng::{self, domain};
use crate::scenario::Scenario;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Demand-aware: controller-driven quotas, weighted matching,
    /// explicit power.
    Ours,
    /// Fixed quota of `initial/T` per step.
    Equal,
    /// Throughput-only matching with a fair power split.
    Ignore,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Ours, Method::Equal, Method::Ignore];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Equal => "equal",
            Method::Ignore => "ignore",
        }
    }

    pub fn parse(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocParams {
    pub matching: MatchParams,
    /// Fixed-point passes in power allocation.
    pub power_rounds: usize,
    pub controller: ProportionalController,
    /// Episodes used to tune the controller before evaluation.
    pub training_episodes: u32,
}

impl Default for AllocParams {
    fn default() -> Self {
        AllocParams {
            matching: MatchParams::default(),
            power_rounds: 3,
            controller: ProportionalController::default(),
            training_episodes: 5,
        }
    }
}

/// One of the three allocation methods as an environment policy.
#[derive(Clone, Debug)]
pub struct AllocPolicy {
    method: Method,
    params: AllocParams,
    controller: ProportionalController,
    learning: bool,
    prev: Vec<Grant>,
}

impl AllocPolicy {
    pub fn new(method: Method, params: AllocParams) -> Self {
        AllocPolicy {
            method,
            params,
            controller: params.controller,
            learning: false,
            prev: Vec::new(),
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// The weight on predicted unmet demand this method uses.
    pub fn lambda(&self) -> f64 {
        match self.method {
            Method::Ignore => 0.0,
            _ => self.params.matching.lambda,
        }
    }

    pub fn controller(&self) -> &ProportionalController {
        &self.controller
    }

    pub fn set_controller(&mut self, c: ProportionalController) {
        self.controller = c;
    }

    /// When set, the controller is updated at every episode end.
    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
    }

    fn quotas(&self, obs: &Observation<'_>, ctx: &PolicyContext<'_>) -> SingleStepDemand {
        match self.method {
            Method::Ours => single_step_demand(obs.remaining_demand, obs.remaining_time, &self.controller),
            Method::Equal | Method::Ignore => equal_division(ctx.initial_demand, obs.remaining_demand, ctx.steps),
        }
    }
}

impl Policy for AllocPolicy {
    fn name(&self) -> &str {
        self.method.as_str()
    }

    fn begin_episode(&mut self, _ctx: &PolicyContext<'_>) {
        self.prev.clear();
    }

    fn act(&mut self, obs: &Observation<'_>, ctx: &PolicyContext<'_>) -> AllocAction {
        let delta = self.quotas(obs, ctx);
        let snapshot = InterferenceSnapshot::new(&self.prev, obs.decay);
        let mut params = self.params.matching;
        params.lambda = self.lambda();
        let assoc = match_users_to_bs(obs, ctx, &delta, &snapshot, &params);

        let mut members: Vec<Vec<u32>> = vec![Vec::new(); ctx.sites.len()];
        for (u, b) in assoc.iter().enumerate() {
            if let Some(b) = b {
                members[*b as usize].push(u as u32);
            }
        }
        let mut slots = Vec::new();
        for (b, users) in members.iter().enumerate() {
            let channels = match_users_to_rb(b as u32, users, obs, ctx, &snapshot);
            slots.extend(users.iter().zip(channels).map(|(&user, channel)| Slot {
                user,
                site: b as u32,
                channel,
            }));
        }
        let powers = match self.method {
            Method::Ignore => fair_split_power(&slots, obs),
            _ => allocate_power(&slots, &delta.bits, obs, ctx, &snapshot, self.params.power_rounds),
        };
        let grants: Vec<Grant> = slots
            .iter()
            .zip(powers)
            .filter(|(_, p)| *p > 0.0)
            .map(|(s, power_w)| Grant {
                user: s.user,
                site: s.site,
                channel: s.channel,
                power_w,
            })
            .collect();
        self.prev = grants.clone();
        AllocAction { grants }
    }

    fn end_episode(&mut self, satisfaction: f64) {
        if self.learning && self.method == Method::Ours {
            self.controller.update(satisfaction);
        }
    }
}

/// Tunes the demand controller over training episodes whose seeds are
/// derived from `seed`, then returns it frozen.
pub fn train_controller(
    scenario: &Scenario,
    config: EpisodeConfig,
    seed: u64,
    params: AllocParams,
) -> Result<ProportionalController> {
    let mut policy = AllocPolicy::new(Method::Ours, params);
    policy.set_learning(true);
    for i in 0..params.training_episodes {
        let episode_seed = rng::mix(seed, &[domain::TRAINING, i as u64]);
        let mut env = Environment::reset(scenario, config, episode_seed)?;
        run_episode(&mut env, &mut policy, None)?;
    }
    Ok(*policy.controller())
}

/// A ready-to-run policy for `method`, training the controller first when
/// the method uses one.
pub fn build_policy(
    method: Method,
    scenario: &Scenario,
    config: EpisodeConfig,
    seed: u64,
    params: AllocParams,
) -> Result<AllocPolicy> {
    let mut policy = AllocPolicy::new(method, params);
    if method == Method::Ours && params.training_episodes > 0 {
        policy.set_controller(train_controller(scenario, config, seed, params)?);
    }
    Ok(policy)
}

pub fn method_names() -> Vec<String> {
    Method::ALL.iter().map(|m| m.as_str().into()).collect()
}
