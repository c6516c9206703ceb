use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::controller::SingleStepDemand;
use super::hungarian::hungarian;
use super::scoring::{edge_score, predicted_bits, InterferenceSnapshot};
use crate::engine::{Observation, PolicyContext};
use crate::geom::Rect;
use crate::math;
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchParams {
    /// Weight of predicted unmet demand against predicted throughput.
    pub lambda: f64,
    /// Extra replicas per site beyond an even share of users.
    pub slack: u32,
    /// Above this many users × replica columns the problem is split into
    /// spatial neighbourhoods.
    pub partition_cells: usize,
    /// Target number of sites per neighbourhood once split.
    pub sites_per_partition: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            lambda: 10.0,
            slack: 2,
            partition_cells: 4_000_000,
            sites_per_partition: 4,
        }
    }
}

/// How many users each site may take in one matching.
pub fn replica_counts(n_users: usize, sites: &[u32], ctx: &PolicyContext<'_>, slack: u32) -> Vec<u32> {
    let even = n_users.div_ceil(sites.len().max(1)) as u32 + slack;
    sites
        .iter()
        .map(|&b| {
            let s = &ctx.sites[b as usize];
            s.n_channels.min(ctx.user_cap[b as usize]).min(even)
        })
        .collect()
}

/// Groups sites into spatial tiles holding about `per_group` sites each.
fn site_groups(ctx: &PolicyContext<'_>, per_group: usize) -> Vec<Vec<u32>> {
    let n = ctx.sites.len();
    let tiles = math::ceil(math::sqrt(n as f64 / per_group.max(1) as f64)).max(1.0) as usize;
    let mut bb = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in ctx.sites {
        bb.min_x = bb.min_x.min(s.position.x);
        bb.min_y = bb.min_y.min(s.position.y);
        bb.max_x = bb.max_x.max(s.position.x);
        bb.max_y = bb.max_y.max(s.position.y);
    }
    let w = (bb.width() / tiles as f64).max(1e-9);
    let h = (bb.height() / tiles as f64).max(1e-9);
    let mut groups = vec![Vec::new(); tiles * tiles];
    for (b, s) in ctx.sites.iter().enumerate() {
        let tx = (((s.position.x - bb.min_x) / w) as usize).min(tiles - 1);
        let ty = (((s.position.y - bb.min_y) / h) as usize).min(tiles - 1);
        groups[ty * tiles + tx].push(b as u32);
    }
    groups.retain(|g| !g.is_empty());
    groups
}

fn match_group(
    obs: &Observation<'_>,
    ctx: &PolicyContext<'_>,
    delta: &SingleStepDemand,
    snapshot: &InterferenceSnapshot,
    users: &[u32],
    sites: &[u32],
    params: &MatchParams,
    out: &mut [Option<u32>],
) {
    if users.is_empty() {
        return;
    }
    let replicas = replica_counts(users.len(), sites, ctx, params.slack);
    let mut columns: Vec<(u32, u32)> = Vec::new();
    for (&b, &r) in sites.iter().zip(&replicas) {
        columns.extend((0..r).map(|_| (b, r)));
    }
    if columns.is_empty() {
        return;
    }
    // One score per (user, site); replicas of a site share it.
    let site_scores = Matrix::from_fn(users.len(), sites.len(), |i, k| {
        let u = users[i] as usize;
        edge_score(obs, ctx, snapshot, u, sites[k] as usize, replicas[k], delta.bits[u], params.lambda)
            .matching_weight(delta.bits[u], params.lambda)
    });
    let mut col_site_idx = Vec::with_capacity(columns.len());
    for (k, &r) in replicas.iter().enumerate() {
        col_site_idx.extend((0..r).map(|_| k));
    }
    let weights = Matrix::from_fn(users.len(), columns.len(), |i, j| site_scores[(i, col_site_idx[j])]);
    let m = hungarian(&weights, true);
    for (i, c) in m.row_to_col.iter().enumerate() {
        if let Some(j) = *c {
            out[users[i] as usize] = Some(columns[j].0);
        }
    }
}

/// Capacity-aware user↔site matching on the edge weights. Returns the
/// site index per user, `None` when unmatched this step.
pub fn match_users_to_bs(
    obs: &Observation<'_>,
    ctx: &PolicyContext<'_>,
    delta: &SingleStepDemand,
    snapshot: &InterferenceSnapshot,
    params: &MatchParams,
) -> Vec<Option<u32>> {
    let n_users = obs.decay.rows();
    let mut out = vec![None; n_users];
    let all_sites: Vec<u32> = (0..ctx.sites.len() as u32).collect();
    let total_cols: usize = replica_counts(n_users, &all_sites, ctx, params.slack)
        .iter()
        .map(|&r| r as usize)
        .sum();
    let all_users: Vec<u32> = (0..n_users as u32).collect();
    if n_users.saturating_mul(total_cols) <= params.partition_cells || ctx.sites.len() <= 1 {
        match_group(obs, ctx, delta, snapshot, &all_users, &all_sites, params, &mut out);
        return out;
    }
    let groups = site_groups(ctx, params.sites_per_partition);
    let mut group_of_site = vec![0usize; ctx.sites.len()];
    for (k, g) in groups.iter().enumerate() {
        for &b in g {
            group_of_site[b as usize] = k;
        }
    }
    let mut members = vec![Vec::new(); groups.len()];
    for u in 0..n_users {
        let row = obs.decay.row(u);
        let best = row
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (b, &g)| if g > acc.1 { (b, g) } else { acc })
            .0;
        members[group_of_site[best]].push(u as u32);
    }
    for (g, users) in groups.iter().zip(&members) {
        match_group(obs, ctx, delta, snapshot, users, g, params, &mut out);
    }
    out
}

/// Channel per user at one site, maximizing the summed predicted rate under
/// last-step co-channel interference from other sites.
pub fn match_users_to_rb(
    site: u32,
    users: &[u32],
    obs: &Observation<'_>,
    ctx: &PolicyContext<'_>,
    snapshot: &InterferenceSnapshot,
) -> Vec<u32> {
    let s = &ctx.sites[site as usize];
    let n_ch = s.n_channels as usize;
    if users.is_empty() || n_ch == 0 {
        return Vec::new();
    }
    let share = obs.max_tx_power_w[site as usize] / users.len() as f64;
    let weights = Matrix::from_fn(users.len(), n_ch, |i, c| {
        let u = users[i] as usize;
        let interf = snapshot.on_channel(obs.decay, u, c as u32, site);
        predicted_bits(
            s.rb_bandwidth_hz,
            obs.decay[(u, site as usize)],
            share,
            ctx.noise_w[site as usize] + interf,
            ctx.dt_s,
        )
    });
    let m = hungarian(&weights, true);
    m.row_to_col
        .iter()
        .map(|c| c.expect("users do not exceed channels") as u32)
        .collect()
}
