//! Hierarchical traffic demand: diurnal pattern clusters at the macro level,
//! per-user regime-switching generators at the micro level.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::math;
use crate::rng::{self, domain, SimRng};

pub const SLOTS_PER_DAY: usize = 48;
pub const SLOT_S: f64 = 1800.0;

/// Slot of day for a wall-clock time in seconds.
pub fn slot_of(t_s: f64) -> usize {
    let day = math::floor(t_s / 86_400.0);
    let tod = t_s - day * 86_400.0;
    ((tod / SLOT_S) as usize).min(SLOTS_PER_DAY - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Flat,
    Commuter,
    Office,
    Residential,
    Entertainment,
    LowActivity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandPattern {
    pub archetype: Archetype,
    /// Mean demand rate in bits/s for each half-hour slot.
    pub slot_means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandPatternSet {
    pub patterns: Vec<DemandPattern>,
}

impl DemandPatternSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn mean(&self, cluster: usize, slot: usize) -> f64 {
        self.patterns[cluster].slot_means[slot % SLOTS_PER_DAY]
    }
}

fn bump(hour: f64, center: f64, width: f64) -> f64 {
    let z = (hour - center) / width;
    math::exp(-0.5 * z * z)
}

/// Smooth plateau between `start` and `end` hours with soft edges.
fn plateau(hour: f64, start: f64, end: f64, edge: f64) -> f64 {
    let rise = 1.0 / (1.0 + math::exp(-(hour - start) / edge));
    let fall = 1.0 / (1.0 + math::exp((hour - end) / edge));
    rise * fall
}

/// Evaluates an archetype's diurnal shape at `hour` (slot midpoint), scaled so
/// the peak sits near `peak_bps`.
pub fn archetype_rate(kind: Archetype, hour: f64, peak_bps: f64) -> f64 {
    let shape = match kind {
        Archetype::Flat => 1.0,
        Archetype::Commuter => {
            0.1 + 0.9 * (bump(hour, 8.0, 1.0) + bump(hour, 18.0, 1.2)).min(1.0)
        }
        Archetype::Office => 0.05 + 0.95 * plateau(hour, 9.0, 18.0, 0.25),
        Archetype::Residential => {
            0.15 + 0.25 * bump(hour, 7.5, 1.0) + 0.6 * plateau(hour, 19.0, 23.5, 0.5)
        }
        Archetype::Entertainment => {
            0.1 + 0.9 * (bump(hour, 21.0, 1.5) + bump(hour, -3.0, 1.5)).min(1.0)
        }
        Archetype::LowActivity => 0.3 + 0.1 * bump(hour, 13.0, 3.0),
    };
    shape * peak_bps
}

const FIVE: [Archetype; 5] = [
    Archetype::Commuter,
    Archetype::Office,
    Archetype::Residential,
    Archetype::Entertainment,
    Archetype::LowActivity,
];

/// Peak rate of a pattern before per-seed jitter.
pub const DEFAULT_PEAK_BPS: f64 = 2.0e5;

/// Builds `k` diurnal patterns. `k = 1` yields a single flat pattern; larger
/// `k` cycles through the five archetypes with seeded peak jitter so every
/// pattern is distinct.
pub fn build_pattern_library(seed: u64, k: usize) -> DemandPatternSet {
    let k = k.max(1);
    let mut rng = rng::stream(seed, domain::PATTERNS, &[k as u64]);
    let patterns = (0..k)
        .map(|i| {
            let archetype = if k == 1 { Archetype::Flat } else { FIVE[i % FIVE.len()] };
            let peak = DEFAULT_PEAK_BPS * rng.random_range(0.8..1.2) * (1.0 + 0.1 * (i / FIVE.len()) as f64);
            let slot_means = (0..SLOTS_PER_DAY)
                .map(|s| archetype_rate(archetype, (s as f64 + 0.5) * 0.5, peak))
                .collect();
            DemandPattern {
                archetype,
                slot_means,
            }
        })
        .collect();
    DemandPatternSet { patterns }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    Normal,
    Burst,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchChain {
    pub stay_normal: f64,
    pub stay_burst: f64,
}

impl SwitchChain {
    pub fn transition(&self) -> [[f64; 2]; 2] {
        [
            [self.stay_normal, 1.0 - self.stay_normal],
            [1.0 - self.stay_burst, self.stay_burst],
        ]
    }
}

impl Default for SwitchChain {
    fn default() -> Self {
        SwitchChain {
            stay_normal: 0.95,
            stay_burst: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserDemandProcess {
    pub user: u32,
    pub cluster: usize,
    pub chain: SwitchChain,
    pub burst_multiplier: f64,
    /// Gamma shape; larger is less dispersed.
    pub dispersion: f64,
    pub mode: DemandMode,
}

impl UserDemandProcess {
    pub fn new(user: u32, cluster: usize) -> Self {
        UserDemandProcess {
            user,
            cluster,
            chain: SwitchChain::default(),
            burst_multiplier: 3.0,
            dispersion: 2.0,
            mode: DemandMode::Normal,
        }
    }
}

/// Advances the regime chain one step, then draws this step's demand in bits.
pub fn sample_demand(
    process: &mut UserDemandProcess,
    patterns: &DemandPatternSet,
    slot: usize,
    step_s: f64,
    rng: &mut SimRng,
) -> f64 {
    let u: f64 = rng.random();
    process.mode = match process.mode {
        DemandMode::Normal if u >= process.chain.stay_normal => DemandMode::Burst,
        DemandMode::Burst if u >= process.chain.stay_burst => DemandMode::Normal,
        m => m,
    };
    let mut mean = patterns.mean(process.cluster, slot) * step_s;
    if process.mode == DemandMode::Burst {
        mean *= process.burst_multiplier;
    }
    if !(mean > 0.0) {
        return 0.0;
    }
    let shape = process.dispersion.max(f64::MIN_POSITIVE);
    match Gamma::new(shape, mean / shape) {
        Ok(g) => g.sample(rng).max(0.0),
        Err(_) => mean,
    }
}

/// Uniform cluster assignment; each user gets exactly one index in `[0, k)`.
pub fn assign_clusters(seed: u64, n_users: usize, k: usize) -> Vec<usize> {
    let k = k.max(1);
    (0..n_users)
        .map(|u| {
            rng::stream(seed, domain::DEMAND, &[u as u64, 0]).random_range(0..k)
        })
        .collect()
}

/// One process per user with clusters from [`assign_clusters`].
pub fn user_processes(seed: u64, n_users: usize, k: usize) -> Vec<UserDemandProcess> {
    assign_clusters(seed, n_users, k)
        .into_iter()
        .enumerate()
        .map(|(u, c)| UserDemandProcess::new(u as u32, c))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDemand {
    pub user: u32,
    pub total_bits: f64,
}

/// Uniform(0, 60·B) totals for a `steps`-long episode.
pub fn sample_episode_demand(
    seed: u64,
    n_users: usize,
    bandwidth_hz: f64,
    steps: u32,
) -> Vec<EpisodeDemand> {
    let mut rng = rng::stream(seed, domain::EPISODE_DEMAND, &[n_users as u64, steps as u64]);
    let hi = 60.0 * bandwidth_hz.max(0.0);
    (0..n_users)
        .map(|u| EpisodeDemand {
            user: u as u32,
            total_bits: rng.random::<f64>() * hi,
        })
        .collect()
}
