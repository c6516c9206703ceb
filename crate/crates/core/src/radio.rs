//! Base-station behaviours: allocation actions and their validation,
//! default association and power policies, sequential admission and KPIs.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Constraint, ConstraintViolation};
use crate::geom::Point;
use crate::rng::SimRng;
use crate::scenario::BaseStationSite;

/// One user's resource grant. `site` is an index into the scenario's site
/// list, not a site id.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grant {
    pub user: u32,
    pub site: u32,
    pub channel: u32,
    pub power_w: f64,
}

/// A raw allocation decision, validated by [`validate_action`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AllocAction {
    pub grants: Vec<Grant>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub site: u32,
    pub channel: u32,
    pub power_w: f64,
}

/// A validated allocation: at most one assignment per user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub per_user: Vec<Option<Assignment>>,
}

impl Allocation {
    pub fn empty(n_users: usize) -> Self {
        Allocation {
            per_user: vec![None; n_users],
        }
    }

    pub fn grants(&self) -> Vec<Grant> {
        self.per_user
            .iter()
            .enumerate()
            .filter_map(|(u, a)| {
                a.map(|a| Grant {
                    user: u as u32,
                    site: a.site,
                    channel: a.channel,
                    power_w: a.power_w,
                })
            })
            .collect()
    }

    pub fn served(&self) -> usize {
        self.per_user.iter().filter(|a| a.is_some()).count()
    }

    pub fn total_power_w(&self) -> f64 {
        self.per_user.iter().flatten().map(|a| a.power_w).sum()
    }

    pub fn site_power_w(&self, n_sites: usize) -> Vec<f64> {
        let mut p = vec![0.0; n_sites];
        for a in self.per_user.iter().flatten() {
            p[a.site as usize] += a.power_w;
        }
        p
    }
}

/// Relative slack on the per-site power budget for rounding in sums.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// Checks an action against every constraint. `user_cap[b]` bounds the
/// number of users at site `b`.
pub fn validate_action(
    action: &AllocAction,
    sites: &[BaseStationSite],
    user_cap: &[u32],
    n_users: usize,
) -> Result<Allocation, ConstraintViolation> {
    let violated = |constraint, site: usize, user: Option<usize>| ConstraintViolation::Violated {
        constraint,
        site,
        user,
    };
    let mut alloc = Allocation::empty(n_users);
    let mut rb_owner: Vec<Vec<Option<u32>>> =
        sites.iter().map(|s| vec![None; s.n_channels as usize]).collect();
    let mut load = vec![0u32; sites.len()];
    let mut power = vec![0.0f64; sites.len()];

    for g in &action.grants {
        let (u, b) = (g.user as usize, g.site as usize);
        if u >= n_users {
            return Err(ConstraintViolation::UnknownUser(u));
        }
        if b >= sites.len() {
            return Err(ConstraintViolation::UnknownSite(b));
        }
        if g.channel >= sites[b].n_channels {
            return Err(ConstraintViolation::ChannelOutOfRange {
                site: b,
                channel: g.channel,
            });
        }
        if !(g.power_w > 0.0 && g.power_w.is_finite()) {
            return Err(ConstraintViolation::InvalidPower {
                user: u,
                power_w: g.power_w,
            });
        }
        if let Some(prev) = alloc.per_user[u] {
            let c = if prev.site == g.site {
                Constraint::OneResourceBlockPerUser
            } else {
                Constraint::OneSitePerUser
            };
            return Err(violated(c, b, Some(u)));
        }
        let slot = &mut rb_owner[b][g.channel as usize];
        if slot.is_some() {
            return Err(violated(Constraint::ExclusiveResourceBlock, b, Some(u)));
        }
        *slot = Some(g.user);
        load[b] += 1;
        if load[b] > user_cap.get(b).copied().unwrap_or(sites[b].n_channels) {
            return Err(violated(Constraint::SiteUserCapacity, b, Some(u)));
        }
        power[b] += g.power_w;
        alloc.per_user[u] = Some(Assignment {
            site: g.site,
            channel: g.channel,
            power_w: g.power_w,
        });
    }
    for (b, s) in sites.iter().enumerate() {
        if power[b] > s.max_tx_power_w() * (1.0 + POWER_TOLERANCE) {
            return Err(violated(Constraint::PowerBudget, b, None));
        }
    }
    Ok(alloc)
}

/// Scales powers at each site down so their sum fits the budget exactly.
pub fn fit_budget(grants: &mut [Grant], sites: &[BaseStationSite]) {
    let mut sum = vec![0.0f64; sites.len()];
    for g in grants.iter() {
        sum[g.site as usize] += g.power_w;
    }
    for g in grants.iter_mut() {
        let b = g.site as usize;
        let budget = sites[b].max_tx_power_w();
        if sum[b] > budget {
            g.power_w *= budget / sum[b];
        }
    }
}

/// Euclidean-nearest site per user, ties to the lowest index.
pub fn nearest_bs_association(users: &[Point], sites: &[BaseStationSite]) -> Vec<u32> {
    users
        .iter()
        .map(|&p| {
            let mut best = (0u32, f64::INFINITY);
            for (i, s) in sites.iter().enumerate() {
                let d = s.position.dist_sq(p);
                if d < best.1 {
                    best = (i as u32, d);
                }
            }
            best.0
        })
        .collect()
}

/// Random distinct channels per site; users beyond the channel count get
/// none.
pub fn random_rb_assignment(
    association: &[u32],
    sites: &[BaseStationSite],
    rng: &mut SimRng,
) -> Vec<Option<u32>> {
    let mut out = vec![None; association.len()];
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); sites.len()];
    for (u, &b) in association.iter().enumerate() {
        members[b as usize].push(u);
    }
    for (b, users) in members.iter_mut().enumerate() {
        if users.is_empty() {
            continue;
        }
        users.shuffle(rng);
        let mut channels: Vec<u32> = (0..sites[b].n_channels).collect();
        channels.shuffle(rng);
        for (&u, &c) in users.iter().zip(&channels) {
            out[u] = Some(c);
        }
    }
    out
}

/// Equal split of a site's budget among `k` served users.
pub fn fair_power_allocation(site: &BaseStationSite, k: usize) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    vec![site.max_tx_power_w() / k as f64; k]
}

/// The default policy: nearest site, random channel, fair power.
pub fn default_action(users: &[Point], sites: &[BaseStationSite], rng: &mut SimRng) -> AllocAction {
    let assoc = nearest_bs_association(users, sites);
    let channels = random_rb_assignment(&assoc, sites, rng);
    let mut count = vec![0usize; sites.len()];
    for (u, c) in channels.iter().enumerate() {
        if c.is_some() {
            count[assoc[u] as usize] += 1;
        }
    }
    let grants = channels
        .iter()
        .enumerate()
        .filter_map(|(u, c)| {
            let b = assoc[u] as usize;
            c.map(|channel| Grant {
                user: u as u32,
                site: b as u32,
                channel,
                power_w: sites[b].max_tx_power_w() / count[b] as f64,
            })
        })
        .collect();
    AllocAction { grants }
}

/// Free channels and residual power per site during sequential admission.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteLedger {
    free: Vec<Vec<u32>>,
    residual_w: Vec<f64>,
}

impl SiteLedger {
    pub fn new(sites: &[BaseStationSite]) -> Self {
        SiteLedger {
            free: sites
                .iter()
                .map(|s| (0..s.n_channels).rev().collect())
                .collect(),
            residual_w: sites.iter().map(|s| s.max_tx_power_w()).collect(),
        }
    }

    pub fn residual_w(&self, site: usize) -> f64 {
        self.residual_w[site]
    }

    pub fn free_channels(&self, site: usize) -> usize {
        self.free[site].len()
    }
}

/// Admission outcome for one user.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Admission {
    Admitted { site: u32, channel: u32 },
    Outage,
}

/// Sequential admission: try candidate sites in order, admitting at the
/// first with a free channel and enough residual power for the user's
/// required power.
pub fn three_phase_admission(
    user: u32,
    candidates: &[u32],
    required_power_w: impl Fn(u32) -> f64,
    ledger: &mut SiteLedger,
    alloc: &mut Allocation,
) -> Admission {
    for &b in candidates {
        let site = b as usize;
        let need = required_power_w(b);
        let eligible = !ledger.free[site].is_empty()
            && need > 0.0
            && need.is_finite()
            && ledger.residual_w[site] >= need;
        if eligible {
            let channel = ledger.free[site].pop().expect("free channel");
            ledger.residual_w[site] -= need;
            alloc.per_user[user as usize] = Some(Assignment {
                site: b,
                channel,
                power_w: need,
            });
            return Admission::Admitted { site: b, channel };
        }
    }
    Admission::Outage
}

/// Default outage threshold in bits/s.
pub const OUTAGE_THRESHOLD_BPS: f64 = 1e3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub t: u32,
    pub sum_bs_rate: f64,
    pub total_tx_power_w: f64,
    pub per_user_rate: Vec<f64>,
    pub network_throughput: f64,
    pub outage_ratio: f64,
    pub action_selection_time_s: f64,
    pub interaction_time_s: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepTimings {
    pub action_selection_s: f64,
    pub interaction_s: f64,
}

pub fn compute_kpis(
    t: u32,
    remaining_demand: &[f64],
    alloc: &Allocation,
    rates: &[f64],
    dt_s: f64,
    timings: StepTimings,
    outage_threshold_bps: f64,
) -> KpiRecord {
    let n = rates.len();
    let throughput = rates
        .iter()
        .zip(remaining_demand)
        .map(|(&r, &d)| d.min(r * dt_s))
        .sum();
    let outage = if n == 0 {
        0.0
    } else {
        rates.iter().filter(|&&r| r < outage_threshold_bps).count() as f64 / n as f64
    };
    KpiRecord {
        t,
        sum_bs_rate: rates.iter().sum(),
        total_tx_power_w: alloc.total_power_w(),
        per_user_rate: rates.to_vec(),
        network_throughput: throughput,
        outage_ratio: outage,
        action_selection_time_s: timings.action_selection_s,
        interaction_time_s: timings.interaction_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    pub(crate) fn site(id: u32, x: f64, y: f64, dbm: f64, n_channels: u32) -> BaseStationSite {
        BaseStationSite {
            id,
            position: Point::new(x, y),
            indoor: dbm < 30.0,
            max_tx_power_dbm: dbm,
            antenna_height_m: 25.0,
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            carrier_freq_mhz: 2600.0,
            n_channels,
            rb_bandwidth_hz: 1.8e5,
        }
    }

    #[test]
    fn nearest_examples() {
        let one = [site(0, 0.0, 0.0, 30.0, 45)];
        let users = [Point::new(5.0, 5.0), Point::new(-100.0, 3.0)];
        assert_eq!(nearest_bs_association(&users, &one), vec![0, 0]);
        let mut many: Vec<_> = (0..10).map(|i| site(i, 1000.0 + i as f64, 0.0, 30.0, 5)).collect();
        many[3].position = Point::new(-10.0, 0.0);
        many[7].position = Point::new(10.0, 0.0);
        assert_eq!(nearest_bs_association(&[Point::new(0.0, 0.0)], &many), vec![3]);
    }

    #[test]
    fn rb_examples() {
        let sites = [site(0, 0.0, 0.0, 30.0, 45)];
        let mut r = rng::stream(1, 0, &[]);
        let one = random_rb_assignment(&[0], &sites, &mut r);
        assert!(one[0].unwrap() < 45);
        let fifty = random_rb_assignment(&[0; 50], &sites, &mut r);
        assert_eq!(fifty.iter().filter(|c| c.is_none()).count(), 5);
        let mut used: Vec<u32> = fifty.iter().flatten().copied().collect();
        used.sort();
        used.dedup();
        assert_eq!(used.len(), 45);
        let a = random_rb_assignment(&[0; 50], &sites, &mut rng::stream(2, 0, &[]));
        let b = random_rb_assignment(&[0; 50], &sites, &mut rng::stream(2, 0, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn fair_power_examples() {
        assert!((fair_power_allocation(&site(0, 0.0, 0.0, 30.0, 45), 1)[0] - 1.0).abs() < 1e-12);
        assert_eq!(fair_power_allocation(&site(0, 0.0, 0.0, 30.0, 45), 4), vec![0.25; 4]);
        let p = fair_power_allocation(&site(0, 0.0, 0.0, 24.0, 45), 2);
        let oracle = 10f64.powf(2.4) / 1000.0 / 2.0;
        assert!((p[0] - oracle).abs() < 1e-15 && (p[0] - 0.1256).abs() < 1e-4);
    }

    #[test]
    fn admission_examples() {
        let sites = [site(0, 0.0, 0.0, 30.0, 1), site(1, 0.0, 0.0, 30.0, 1)];
        let mut ledger = SiteLedger::new(&sites);
        let mut alloc = Allocation::empty(3);
        let need = |_b: u32| 0.5;
        assert_eq!(
            three_phase_admission(0, &[0, 1], need, &mut ledger, &mut alloc),
            Admission::Admitted { site: 0, channel: 0 }
        );
        assert_eq!(
            three_phase_admission(1, &[0, 1], need, &mut ledger, &mut alloc),
            Admission::Admitted { site: 1, channel: 0 }
        );
        let before = alloc.clone();
        assert_eq!(three_phase_admission(2, &[0, 1], need, &mut ledger, &mut alloc), Admission::Outage);
        assert_eq!(alloc, before);
    }

    #[test]
    fn kpi_examples() {
        let empty = compute_kpis(0, &[], &Allocation::empty(0), &[], 1.0, StepTimings::default(), 1e3);
        assert_eq!((empty.sum_bs_rate, empty.outage_ratio, empty.network_throughput), (0.0, 0.0, 0.0));
        let k = compute_kpis(1, &[1e9, 1e9], &Allocation::empty(2), &[2e5, 0.0], 1.0, StepTimings::default(), 1e3);
        assert_eq!(k.outage_ratio, 0.5);
        let k = compute_kpis(1, &[100.0], &Allocation::empty(1), &[1e5], 1.0, StepTimings::default(), 1e3);
        assert_eq!(k.network_throughput, 100.0);
    }

    #[test]
    fn validation_flags_each_constraint() {
        let sites = [site(0, 0.0, 0.0, 30.0, 3), site(1, 0.0, 0.0, 30.0, 3)];
        let caps = [2, 3];
        let g = |user, site, channel, power_w| Grant { user, site, channel, power_w };
        let check = |grants: Vec<Grant>| validate_action(&AllocAction { grants }, &sites, &caps, 4);
        assert!(check(vec![g(0, 0, 0, 0.5), g(1, 0, 1, 0.5), g(2, 1, 0, 1.0)]).is_ok());
        let kind = |r: Result<Allocation, ConstraintViolation>| r.unwrap_err().constraint();
        assert_eq!(kind(check(vec![g(0, 0, 0, 0.1), g(0, 1, 0, 0.1)])), Some(Constraint::OneSitePerUser));
        assert_eq!(kind(check(vec![g(0, 0, 0, 0.1), g(0, 0, 1, 0.1)])), Some(Constraint::OneResourceBlockPerUser));
        assert_eq!(kind(check(vec![g(0, 0, 0, 0.1), g(1, 0, 0, 0.1)])), Some(Constraint::ExclusiveResourceBlock));
        assert_eq!(
            kind(check(vec![g(0, 0, 0, 0.1), g(1, 0, 1, 0.1), g(2, 0, 2, 0.1)])),
            Some(Constraint::SiteUserCapacity)
        );
        assert_eq!(kind(check(vec![g(0, 0, 0, 0.6), g(1, 0, 1, 0.6)])), Some(Constraint::PowerBudget));
        assert!(matches!(check(vec![g(9, 0, 0, 0.1)]), Err(ConstraintViolation::UnknownUser(9))));
        assert!(matches!(check(vec![g(0, 0, 0, 0.0)]), Err(ConstraintViolation::InvalidPower { .. })));
    }
}
