use alloc::vec;
use alloc::vec::Vec;

use super::scoring::InterferenceSnapshot;
use crate::channel::min_power_for_rate;
use crate::engine::{Observation, PolicyContext};

/// A user's site and channel before power is set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub user: u32,
    pub site: u32,
    pub channel: u32,
}

/// Splits one site's budget: requirements are scaled down together when
/// they exceed it, and any surplus is shared equally. The result never
/// sums above `budget_w`.
pub fn site_power_split(budget_w: f64, required_w: &[f64]) -> Vec<f64> {
    let k = required_w.len();
    if k == 0 || !(budget_w > 0.0) {
        return vec![0.0; k];
    }
    let mut p: Vec<f64> = required_w.iter().map(|&r| r.clamp(0.0, budget_w)).collect();
    let sum: f64 = p.iter().sum();
    if sum > budget_w {
        let f = budget_w / sum;
        p.iter_mut().for_each(|x| *x *= f);
    } else {
        let extra = (budget_w - sum) / k as f64;
        p.iter_mut().for_each(|x| *x += extra);
    }
    fit_exact(budget_w, &mut p);
    p
}

/// Shrinks `p` until its left-to-right sum is at most `budget_w`.
fn fit_exact(budget_w: f64, p: &mut [f64]) {
    loop {
        let sum: f64 = p.iter().sum();
        if sum <= budget_w {
            return;
        }
        let f = budget_w / sum * (1.0 - 4.0 * f64::EPSILON);
        p.iter_mut().for_each(|x| *x *= f);
    }
}

/// Powers for every slot: a fixed point over `rounds` passes in which each
/// user asks for the minimum power meeting its single-step demand against
/// the current interference estimate, the first pass using last step's
/// interference and later passes the tentative powers of other sites.
/// Each site's budget is then split by [`site_power_split`].
pub fn allocate_power(
    slots: &[Slot],
    delta_bits: &[f64],
    obs: &Observation<'_>,
    ctx: &PolicyContext<'_>,
    snapshot: &InterferenceSnapshot,
    rounds: usize,
) -> Vec<f64> {
    let n_sites = ctx.sites.len();
    let mut at_site: Vec<Vec<usize>> = vec![Vec::new(); n_sites];
    for (i, s) in slots.iter().enumerate() {
        at_site[s.site as usize].push(i);
    }
    let n_ch = slots.iter().map(|s| s.channel as usize + 1).max().unwrap_or(0);
    let mut on_channel: Vec<Vec<usize>> = vec![Vec::new(); n_ch];
    for (i, s) in slots.iter().enumerate() {
        on_channel[s.channel as usize].push(i);
    }
    let mut power = vec![0.0; slots.len()];
    let mut interf: Vec<f64> = slots
        .iter()
        .map(|s| snapshot.on_channel(obs.decay, s.user as usize, s.channel, s.site))
        .collect();
    for round in 0..rounds.max(1) {
        if round > 0 {
            for (i, s) in slots.iter().enumerate() {
                let row = obs.decay.row(s.user as usize);
                interf[i] = on_channel[s.channel as usize]
                    .iter()
                    .filter(|&&j| slots[j].site != s.site)
                    .map(|&j| row[slots[j].site as usize] * power[j])
                    .sum();
            }
        }
        for (b, idx) in at_site.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let site = &ctx.sites[b];
            let budget = obs.max_tx_power_w[b];
            let req: Vec<f64> = idx
                .iter()
                .map(|&i| {
                    let s = slots[i];
                    let rate = delta_bits[s.user as usize] / ctx.dt_s;
                    let g = obs.decay[(s.user as usize, b)];
                    min_power_for_rate(rate, site.rb_bandwidth_hz, g, ctx.noise_w[b] + interf[i])
                })
                .collect();
            let last = round + 1 == rounds.max(1);
            let split = if last {
                site_power_split(budget, &req)
            } else {
                scale_only(budget, &req)
            };
            for (&i, p) in idx.iter().zip(split) {
                power[i] = p;
            }
        }
    }
    power
}

/// Tentative powers between passes: requirements, scaled down to the
/// budget if needed, without surplus.
fn scale_only(budget_w: f64, required_w: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = required_w.iter().map(|&r| r.clamp(0.0, budget_w)).collect();
    let sum: f64 = p.iter().sum();
    if sum > budget_w && sum > 0.0 {
        let f = budget_w / sum;
        p.iter_mut().for_each(|x| *x *= f);
    }
    p
}

/// Equal split of each site's full budget over its slots.
pub fn fair_split_power(slots: &[Slot], obs: &Observation<'_>) -> Vec<f64> {
    let mut count = vec![0usize; obs.max_tx_power_w.len()];
    for s in slots {
        count[s.site as usize] += 1;
    }
    slots
        .iter()
        .map(|s| obs.max_tx_power_w[s.site as usize] / count[s.site as usize] as f64)
        .collect()
}
