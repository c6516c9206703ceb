use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::controller::SingleStepDemand;
use crate::channel::shannon_rate;
use crate::engine::{Observation, PolicyContext};
use crate::matrix::Matrix;
use crate::radio::Grant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeScore {
    /// Predicted bits served on this edge.
    pub reward: f64,
    /// Predicted unmet single-step demand, bits.
    pub cost: f64,
    /// `reward - λ·cost`.
    pub weight: f64,
}

impl EdgeScore {
    pub fn new(reward: f64, delta: f64, lambda: f64) -> Self {
        let cost = (delta - reward).max(0.0);
        EdgeScore {
            reward,
            cost,
            weight: reward - lambda * cost,
        }
    }

    /// The weight shifted by the row constant `λ·δ`. Maximizing it over a
    /// matching that may leave users out is the same as maximizing the
    /// plain weight while charging each unmatched user its full `λ·δ`.
    pub fn matching_weight(&self, delta: f64, lambda: f64) -> f64 {
        self.weight + lambda * delta
    }
}

/// The previous step's transmissions, used as the interference estimate
/// for the next decision.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InterferenceSnapshot {
    site_power: Vec<f64>,
    by_channel: Vec<Vec<(u32, f64)>>,
    user_total: Vec<f64>,
}

impl InterferenceSnapshot {
    pub fn new(prev: &[Grant], gains: &Matrix<f64>) -> Self {
        let n_sites = gains.cols();
        let mut site_power = vec![0.0; n_sites];
        let n_ch = prev.iter().map(|g| g.channel as usize + 1).max().unwrap_or(0);
        let mut by_channel = vec![Vec::new(); n_ch];
        for g in prev {
            if (g.site as usize) < n_sites {
                site_power[g.site as usize] += g.power_w;
                by_channel[g.channel as usize].push((g.site, g.power_w));
            }
        }
        let user_total = if prev.is_empty() {
            vec![0.0; gains.rows()]
        } else {
            (0..gains.rows())
                .map(|u| gains.row(u).iter().zip(&site_power).map(|(g, p)| g * p).sum())
                .collect()
        };
        InterferenceSnapshot {
            site_power,
            by_channel,
            user_total,
        }
    }

    /// Interference at `user` averaged over the channels of `site`,
    /// excluding the site's own transmissions.
    pub fn site_average(&self, gains: &Matrix<f64>, user: usize, site: usize, n_channels: u32) -> f64 {
        if self.site_power.is_empty() {
            return 0.0;
        }
        let own = gains[(user, site)] * self.site_power[site];
        (self.user_total[user] - own).max(0.0) / n_channels.max(1) as f64
    }

    /// Interference at `user` on `channel` from sites other than `site`.
    pub fn on_channel(&self, gains: &Matrix<f64>, user: usize, channel: u32, site: u32) -> f64 {
        let row = gains.row(user);
        self.by_channel
            .get(channel as usize)
            .map_or(0.0, |tx| {
                tx.iter()
                    .filter(|(b, _)| *b != site)
                    .map(|&(b, p)| row[b as usize] * p)
                    .sum()
            })
    }
}

/// Bits over `dt_s` at the Shannon rate for the given link.
#[inline]
pub fn predicted_bits(bandwidth_hz: f64, gain: f64, power_w: f64, noise_interference_w: f64, dt_s: f64) -> f64 {
    shannon_rate(bandwidth_hz, gain * power_w / noise_interference_w) * dt_s
}

/// Score of one user↔site edge with the site's power split evenly over
/// `replicas` users.
pub fn edge_score(
    obs: &Observation<'_>,
    ctx: &PolicyContext<'_>,
    snapshot: &InterferenceSnapshot,
    user: usize,
    site: usize,
    replicas: u32,
    delta: f64,
    lambda: f64,
) -> EdgeScore {
    let s = &ctx.sites[site];
    let share = obs.max_tx_power_w[site] / replicas.max(1) as f64;
    let interf = snapshot.site_average(obs.decay, user, site, s.n_channels);
    let reward = predicted_bits(
        s.rb_bandwidth_hz,
        obs.decay[(user, site)],
        share,
        ctx.noise_w[site] + interf,
        ctx.dt_s,
    );
    EdgeScore::new(reward, delta, lambda)
}

/// Scores for every user↔site pair.
pub fn score_edges(
    obs: &Observation<'_>,
    ctx: &PolicyContext<'_>,
    delta: &SingleStepDemand,
    snapshot: &InterferenceSnapshot,
    replicas: &[u32],
    lambda: f64,
) -> Matrix<EdgeScore> {
    Matrix::from_fn(obs.decay.rows(), obs.decay.cols(), |u, b| {
        edge_score(obs, ctx, snapshot, u, b, replicas[b], delta.bits[u], lambda)
    })
}
