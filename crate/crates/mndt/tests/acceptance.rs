use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use mndt_core::alloc_opt::{build_policy, hungarian, AllocParams, AllocPolicy, Method};
use mndt_core::channel::{fading_sample, min_power_for_rate, noise_power, shannon_rate, ChannelConfig, ChannelModel, FadingModel};
use mndt_core::engine::{run_episode, EpisodeConfig, Environment, NearestRandomPolicy, Policy};
use mndt_core::mobility::{krauss_step, KraussParams, Router, VehicleState};
use mndt_core::radio::{AllocAction, Grant};
use mndt_core::rng;
use mndt_core::scenario::{build_grid, generate_scenario, Lane, LaneGraph, ScenarioSpec, DEFAULT_GRID_CELL_M};
use mndt_core::sleep_opt::{pearson, run_week, synth_weekly_traffic, CellLayout, SleepConfig, WeekResult, SLOTS_PER_WEEK};
use mndt_core::{Constraint, ConstraintViolation, Error, Matrix, Point};
use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table2_ordering() -> Verdict {
    let t0 = Instant::now();
    let seeds = [1u64, 2, 3, 4, 5];
    let mut thr = [0.0f64; 3];
    let mut sat = [0.0f64; 3];
    for &seed in &seeds {
        let scenario = generate_scenario(seed, &ScenarioSpec::desk()).map_err(|e| e.to_string())?;
        let cfg = EpisodeConfig::default();
        let bw = cfg.channel.radio.rb_bandwidth_hz;
        for (k, &m) in Method::ALL.iter().enumerate() {
            let mut policy = build_policy(m, &scenario, cfg, seed, AllocParams::default()).map_err(|e| e.to_string())?;
            let mut env = Environment::reset(&scenario, cfg, seed).map_err(|e| e.to_string())?;
            let trace = run_episode(&mut env, &mut policy, None).map_err(|e| e.to_string())?;
            thr[k] += trace.totals.reward / bw / seeds.len() as f64;
            sat[k] += trace.totals.satisfaction / seeds.len() as f64;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let [ours, equal, ignore] = [0, 1, 2];
    let checks = [
        ("thr ignore > ours +2%", thr[ignore] > thr[ours] * 1.02),
        ("thr ours > equal +2%", thr[ours] > thr[equal] * 1.02),
        ("sat ours >= 0.95", sat[ours] >= 0.95),
        ("sat equal > ours", sat[equal] > sat[ours]),
        ("sat ours > ignore", sat[ours] > sat[ignore]),
        ("runtime <= 120 s", secs <= 120.0),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let detail = format!(
        "throughput xB ours {:.0} equal {:.0} ignore {:.0}; satisfaction ours {:.4} equal {:.4} ignore {:.4}; {secs:.1} s; failed: {}",
        thr[ours],
        thr[equal],
        thr[ignore],
        sat[ours],
        sat[equal],
        sat[ignore],
        if failed.is_empty() { "none".into() } else { failed.join(", ") }
    );
    check(failed.is_empty(), detail)
}

fn noise_floor() -> Verdict {
    let n = noise_power(-174.0, 1.8e5);
    check((n - -121.45).abs() <= 0.01, format!("{n:.4} dBm"))
}

fn brute_force(w: &Matrix<f64>) -> f64 {
    fn go(w: &Matrix<f64>, row: usize, used: &mut [bool]) -> f64 {
        if row == w.rows() {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for c in 0..w.cols() {
            if !used[c] {
                used[c] = true;
                best = best.max(w[(row, c)] + go(w, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    go(w, 0, &mut vec![false; w.cols()])
}

fn hungarian_oracle() -> Verdict {
    let t0 = Instant::now();
    let mut r = rng::stream(101, 0, &[]);
    let mut mismatches = 0;
    let mut total = 0;
    for n in 2..=7 {
        for i in 0..200 {
            // Integer weights make the optimum exactly representable.
            let integral = i % 2 == 0;
            let w = Matrix::from_fn(n, n, |_, _| {
                if integral {
                    r.random_range(-1000i32..=1000) as f64
                } else {
                    r.random_range(-1.0..1.0)
                }
            });
            let m = hungarian(&w, true);
            let mut used = vec![false; n];
            let mut sum = 0.0;
            let mut perm = true;
            for (row, c) in m.row_to_col.iter().enumerate() {
                match c {
                    Some(c) if !used[*c] => {
                        used[*c] = true;
                        sum += w[(row, *c)];
                    }
                    _ => perm = false,
                }
            }
            let opt = brute_force(&w);
            let equal = if integral { sum == opt } else { (sum - opt).abs() <= 1e-12 * n as f64 };
            if !perm || !equal {
                mismatches += 1;
            }
            total += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        mismatches == 0 && secs <= 10.0,
        format!("{total} instances, {mismatches} mismatches, {secs:.2} s"),
    )
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn fading_normalization() -> Verdict {
    let n = 100_000;
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, model) in [
        FadingModel::Rayleigh,
        FadingModel::Rician { k_factor: 5.0 },
        FadingModel::Nakagami { m: 2.0 },
    ]
    .into_iter()
    .enumerate()
    {
        let mut r = rng::stream(202, 0, &[k as u64]);
        let mean = (0..n).map(|_| fading_sample(model, &mut r)).sum::<f64>() / n as f64;
        ok &= (mean - 1.0).abs() <= 0.02;
        parts.push(format!("{model:?} mean {mean:.4}"));
    }
    let mut ra = rng::stream(203, 0, &[]);
    let mut rb = rng::stream(204, 0, &[]);
    let rician: Vec<f64> = (0..n).map(|_| fading_sample(FadingModel::Rician { k_factor: 0.0 }, &mut ra)).collect();
    let rayleigh: Vec<f64> = (0..n).map(|_| fading_sample(FadingModel::Rayleigh, &mut rb)).collect();
    let d = ks_statistic(rician, rayleigh);
    let nf = n as f64;
    let critical = 1.628 * ((2.0 * nf) / (nf * nf)).sqrt();
    ok &= d <= critical;
    parts.push(format!("KS D {d:.5} (critical {critical:.5})"));
    check(ok, parts.join("; "))
}

fn path_loss_additivity() -> Verdict {
    let scenario = generate_scenario(5, &ScenarioSpec::desk()).map_err(|e| e.to_string())?;
    let cfg = ChannelConfig {
        fading: Some(FadingModel::Rayleigh),
        ..ChannelConfig::default()
    };
    let model = ChannelModel::new(&scenario, cfg, 5);
    let mut r = rng::stream(205, 0, &[]);
    let ext = scenario.extent;
    let mut worst = 0.0f64;
    for i in 0..10_000u32 {
        let p = Point::new(r.random_range(ext.min_x..ext.max_x), r.random_range(ext.min_y..ext.max_y));
        let site = r.random_range(0..scenario.sites.len());
        let lb = model.path_loss(i, p, site, &mut r);
        let resid = (lb.pl - (lb.l_d + lb.l_s + lb.l_f)).abs() / lb.pl.abs().max(1.0);
        worst = worst.max(resid);
    }
    check(worst <= 4.0 * f64::EPSILON, format!("10000 links, max relative residual {worst:e}"))
}

fn shannon_inversion() -> Verdict {
    let mut r = rng::stream(206, 0, &[]);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let bw = 10f64.powf(r.random_range(4.0..7.0));
        let g = 10f64.powf(r.random_range(-14.0..-2.0));
        let n = 10f64.powf(r.random_range(-16.0..-9.0));
        let target = bw * r.random_range(1e-3..12.0);
        let p = min_power_for_rate(target, bw, g, n);
        let back = shannon_rate(bw, g * p / n);
        worst = worst.max(((back - target) / target).abs());
    }
    check(worst <= 1e-9, format!("10000 tuples, max relative error {worst:e}"))
}

fn krauss_safety() -> Verdict {
    const LEN: f64 = 5.0;
    let n = 100;
    let steps = 100_000;
    let mut negative = 0usize;
    let mut min_gap = f64::INFINITY;
    for seed in 0..3u64 {
        let mut r = rng::stream(207, 0, &[seed]);
        let mut cars: Vec<VehicleState> = (0..n)
            .map(|i| VehicleState {
                lane: 0,
                position_m: (n - 1 - i) as f64 * r.random_range(LEN + 0.5..LEN + 30.0),
                speed_mps: r.random_range(0.0..13.9),
                params: KraussParams {
                    v_max: r.random_range(8.0..16.7),
                    ..KraussParams::default()
                },
            })
            .collect();
        cars.sort_by(|a, b| b.position_m.total_cmp(&a.position_m));
        for i in 1..n {
            let cap = cars[i - 1].position_m - LEN - 0.5;
            cars[i].position_m = cars[i].position_m.min(cap);
        }
        let per_seed = if seed == 0 { steps } else { steps / 10 };
        for _ in 0..per_seed {
            let prev = cars.clone();
            for i in 0..n {
                let (leader, gap) = if i == 0 {
                    (None, f64::INFINITY)
                } else {
                    (Some(&prev[i - 1]), prev[i - 1].position_m - LEN - prev[i].position_m)
                };
                cars[i] = krauss_step(&prev[i], leader, gap, 1.0, &mut r);
            }
            for i in 1..n {
                let gap = cars[i - 1].position_m - LEN - cars[i].position_m;
                min_gap = min_gap.min(gap);
                if gap < 0.0 {
                    negative += 1;
                }
            }
        }
    }
    check(
        negative == 0,
        format!("100 vehicles, 100000 steps (+2 seeds x 10000), negative gaps {negative}, min gap {min_gap:.4} m"),
    )
}

fn astar_optimality() -> Verdict {
    let mut r = rng::stream(208, 0, &[]);
    let mut mismatches = 0;
    let mut queries = 0;
    for _ in 0..500 {
        let n = r.random_range(2..=200usize);
        let nodes: Vec<Point> = (0..n)
            .map(|_| Point::new(r.random_range(0.0..2000.0), r.random_range(0.0..2000.0)))
            .collect();
        let m = r.random_range(n..4 * n);
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let a = r.random_range(0..n);
            let b = r.random_range(0..n);
            if a == b {
                continue;
            }
            edges.push(Lane {
                from: a as u32,
                to: b as u32,
                length_m: (nodes[a].dist(nodes[b]) * r.random_range(1.0..1.6)).max(1.0),
                speed_limit_mps: r.random_range(3.0..30.0),
            });
        }
        let g = LaneGraph { nodes, edges };
        let mut pg = DiGraph::<(), f64>::new();
        let idx: Vec<NodeIndex> = (0..n).map(|_| pg.add_node(())).collect();
        for e in &g.edges {
            pg.add_edge(idx[e.from as usize], idx[e.to as usize], e.length_m / e.speed_limit_mps);
        }
        let router = Router::new(&g);
        for _ in 0..5 {
            let (o, d) = (r.random_range(0..n), r.random_range(0..n));
            let oracle = dijkstra(&pg, idx[o], Some(idx[d]), |e| *e.weight());
            let same = match router.route(o as u32, d as u32) {
                Ok(route) => oracle.get(&idx[d]) == Some(&route.cost_s),
                Err(_) => !oracle.contains_key(&idx[d]),
            };
            queries += 1;
            if !same {
                mismatches += 1;
            }
        }
    }
    check(mismatches == 0, format!("500 graphs, {queries} queries, {mismatches} mismatches"))
}

/// A random action that satisfies every constraint under `cap` users per
/// site and a power sum at most 90% of each budget.
fn random_valid_action(r: &mut impl Rng, sites: &[mndt_core::scenario::BaseStationSite], cap: u32, n_users: usize) -> AllocAction {
    let mut users: Vec<u32> = (0..n_users as u32).collect();
    users.shuffle(r);
    let mut users = users.into_iter();
    let mut grants = Vec::new();
    for (b, s) in sites.iter().enumerate() {
        let k = r.random_range(0..=cap.min(s.n_channels)) as usize;
        let mut chans: Vec<u32> = (0..s.n_channels).collect();
        chans.shuffle(r);
        let raw: Vec<f64> = (0..k).map(|_| r.random_range(0.01..1.0)).collect();
        let scale = s.max_tx_power_w() * r.random_range(0.1..0.9) / raw.iter().sum::<f64>().max(1e-12);
        for (i, p) in raw.iter().enumerate() {
            let Some(u) = users.next() else { break };
            grants.push(Grant {
                user: u,
                site: b as u32,
                channel: chans[i],
                power_w: p * scale,
            });
        }
    }
    grants.shuffle(r);
    AllocAction { grants }
}

/// Applies a mutation that breaks exactly `which`; `None` when the base
/// action offers no opening for it.
fn break_one(
    r: &mut impl Rng,
    base: &AllocAction,
    sites: &[mndt_core::scenario::BaseStationSite],
    cap: u32,
    n_users: usize,
    which: Constraint,
) -> Option<AllocAction> {
    let n_sites = sites.len();
    let mut load = vec![0u32; n_sites];
    let mut used = vec![vec![false; 0]; n_sites];
    for (b, s) in sites.iter().enumerate() {
        used[b] = vec![false; s.n_channels as usize];
    }
    let mut power = vec![0.0; n_sites];
    let mut served = vec![false; n_users];
    for g in &base.grants {
        load[g.site as usize] += 1;
        used[g.site as usize][g.channel as usize] = true;
        power[g.site as usize] += g.power_w;
        served[g.user as usize] = true;
    }
    let free_channel = |b: usize| used[b].iter().position(|u| !u).map(|c| c as u32);
    let open: Vec<usize> = (0..n_sites).filter(|&b| load[b] < cap && free_channel(b).is_some()).collect();
    let idle: Vec<u32> = (0..n_users as u32).filter(|&u| !served[u as usize]).collect();
    let tiny = 1e-6;
    let mut a = base.clone();
    let extra = match which {
        Constraint::OneSitePerUser => {
            let g = *base.grants.choose(r)?;
            let b = *open.iter().filter(|&&b| b != g.site as usize).collect::<Vec<_>>().choose(r)?;
            Grant { user: g.user, site: *b as u32, channel: free_channel(*b)?, power_w: tiny }
        }
        Constraint::OneResourceBlockPerUser => {
            let g = *base.grants.iter().filter(|g| open.contains(&(g.site as usize))).collect::<Vec<_>>().choose(r)?;
            let b = g.site as usize;
            Grant { user: g.user, site: g.site, channel: free_channel(b)?, power_w: tiny }
        }
        Constraint::ExclusiveResourceBlock => {
            let g = *base.grants.iter().filter(|g| load[g.site as usize] < cap).collect::<Vec<_>>().choose(r)?;
            Grant { user: *idle.choose(r)?, site: g.site, channel: g.channel, power_w: tiny }
        }
        Constraint::SiteUserCapacity => {
            let full: Vec<usize> = (0..n_sites).filter(|&b| load[b] == cap && free_channel(b).is_some()).collect();
            let b = *full.choose(r)?;
            Grant { user: *idle.choose(r)?, site: b as u32, channel: free_channel(b)?, power_w: tiny }
        }
        Constraint::PowerBudget => {
            let i = r.random_range(0..a.grants.len().max(1));
            let g = a.grants.get_mut(i)?;
            let b = g.site as usize;
            g.power_w += sites[b].max_tx_power_w() * (1.0 + 1e-6) - power[b];
            return Some(a);
        }
    };
    let at = r.random_range(0..=a.grants.len());
    a.grants.insert(at, extra);
    Some(a)
}

fn constraint_fuzz() -> Verdict {
    let scenario = generate_scenario(9, &ScenarioSpec::desk()).map_err(|e| e.to_string())?;
    let cap = 3;
    let cfg = EpisodeConfig {
        steps: 20_000,
        n_users: 120,
        site_user_cap: Some(cap),
        mobility: mndt_core::engine::MobilityKind::Static,
        ..EpisodeConfig::default()
    };
    let mut env = Environment::reset(&scenario, cfg, 9).map_err(|e| e.to_string())?;
    let mut r = rng::stream(209, 0, &[]);
    let (mut valid, mut accepted, mut invalid, mut rejected) = (0, 0, 0, 0);
    let mut wrong = Vec::new();
    let mut i = 0;
    while valid + invalid < 10_000 {
        let base = random_valid_action(&mut r, &scenario.sites, cap, cfg.n_users);
        if i % 2 == 0 {
            valid += 1;
            match env.step(&base) {
                Ok(_) => accepted += 1,
                Err(e) => wrong.push(format!("valid action rejected: {e}")),
            }
        } else {
            let which = Constraint::ALL[(i / 2) % 5];
            let Some(bad) = break_one(&mut r, &base, &scenario.sites, cap, cfg.n_users, which) else {
                continue;
            };
            invalid += 1;
            match env.step(&bad) {
                Err(Error::Constraint(ConstraintViolation::Violated { constraint, .. })) if constraint == which => {
                    rejected += 1
                }
                other => wrong.push(format!("{which} mutation gave {:?}", other.map(|_| ()))),
            }
        }
        i += 1;
    }
    wrong.truncate(3);
    check(
        accepted == valid && rejected == invalid,
        format!("valid {accepted}/{valid} accepted, violations {rejected}/{invalid} rejected {wrong:?}"),
    )
}

fn sleep_week() -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for (preset, spec) in [("table1", ScenarioSpec::table1()), ("desk", ScenarioSpec::desk())] {
        for seed in [1u64, 2, 3] {
            let scenario = generate_scenario(seed, &spec).map_err(|e| e.to_string())?;
            let grid = build_grid(&scenario, DEFAULT_GRID_CELL_M).map_err(|e| e.to_string())?;
            let cfg = SleepConfig::default();
            let layout = CellLayout::uniform(&grid, cfg.cells_per_site, cfg.cell_capacity_bps).map_err(|e| e.to_string())?;
            let traffic = synth_weekly_traffic(seed, &layout, &cfg);
            let week = run_week(&layout, &traffic, &cfg).map_err(|e| e.to_string())?;
            let slots = week.rows.len();
            let per_slot = week
                .ours
                .iter()
                .zip(&week.always_on)
                .all(|(o, a)| o.energy_wh <= a.energy_wh + 1e-9);
            let e_ours = WeekResult::total_energy(&week.ours);
            let e_on = WeekResult::total_energy(&week.always_on);
            let mut unserved_when_feasible = 0.0;
            for (t, o) in week.ours.iter().enumerate() {
                let feasible = (0..layout.n_grids()).all(|g| traffic.demand_bps[t][g] <= layout.grid_capacity(g));
                if feasible {
                    unserved_when_feasible += o.unserved_bps;
                }
                unserved_when_feasible += o.avoidable_unserved_bps;
            }
            let energy: Vec<f64> = week.ours.iter().map(|o| o.energy_wh).collect();
            let load: Vec<f64> = (0..slots).map(|t| traffic.demand_bps[t].iter().sum()).collect();
            let rho = pearson(&energy, &load);
            let day = mndt_core::demand::SLOTS_PER_DAY;
            let sw_ours = WeekResult::switches_from(&week.ours, day);
            let sw_min = WeekResult::switches_from(&week.minimal_cells, day);
            let pass = slots == SLOTS_PER_WEEK
                && per_slot
                && e_ours <= 0.8 * e_on
                && unserved_when_feasible == 0.0
                && rho >= 0.8
                && sw_ours < sw_min;
            ok &= pass;
            parts.push(format!(
                "{preset}/{seed}: {slots} slots, per-slot {per_slot}, ratio {:.3}, unserved {unserved_when_feasible}, r {rho:.3}, switches {sw_ours} < {sw_min}, h {}",
                e_ours / e_on,
                week.hysteresis
            ));
        }
    }
    check(ok, parts.join("; "))
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn cli_determinism() -> Verdict {
    let commands: [&[&str]; 4] = [
        &["gen-scenario", "--seed", "3"],
        &[
            "allocate",
            "--seed",
            "3",
            "--users",
            "80",
            "--steps",
            "5",
            "--dump-trajectories",
            "--dump-demand",
            "--dump-links",
        ],
        &["sleep", "--seed", "3"],
        &["report"],
    ];
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    for d in &dirs {
        for c in commands {
            let mut args = vec!["mndt"];
            args.extend_from_slice(c);
            args.push("--out");
            args.push(d.path().to_str().unwrap());
            let code = mndt::cli::run_from(&args);
            if code != 0 {
                return Err(format!("{c:?} exited {code}"));
            }
        }
    }
    let a = tree_bytes(dirs[0].path());
    let b = tree_bytes(dirs[1].path());
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    check(
        a.len() == b.len() && differing.is_empty(),
        format!("{} files compared ({}), differing: {differing:?}", names.len(), names.join(" ")),
    )
}

fn performance() -> Verdict {
    let scenario = generate_scenario(1, &ScenarioSpec::table1()).map_err(|e| e.to_string())?;
    let cfg = EpisodeConfig {
        n_users: 13_000,
        ..EpisodeConfig::default()
    };
    let mut env = Environment::reset(&scenario, cfg, 1).map_err(|e| e.to_string())?;
    let mut policy = NearestRandomPolicy::new(1);
    policy.begin_episode(&env.context());
    let mut times = Vec::new();
    for _ in 0..7 {
        let action = policy.act(&env.observe(), &env.context());
        let t = Instant::now();
        env.step(&action).map_err(|e| e.to_string())?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];

    let t = Instant::now();
    let params = AllocParams {
        training_episodes: 0,
        ..AllocParams::default()
    };
    let mut policy = AllocPolicy::new(Method::Ours, params);
    let mut env = Environment::reset(&scenario, cfg, 2).map_err(|e| e.to_string())?;
    let trace = run_episode(&mut env, &mut policy, None).map_err(|e| e.to_string())?;
    let episode = t.elapsed().as_secs_f64();
    check(
        median <= 1.0 && episode <= 120.0 && trace.steps.len() == 20,
        format!(
            "13000 users, {} sites: step median {median:.3} s, 20-step optimizer episode {episode:.1} s",
            scenario.sites.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("table2-ordering-desk", table2_ordering),
        ("noise-floor", noise_floor),
        ("hungarian-oracle", hungarian_oracle),
        ("fading-normalization", fading_normalization),
        ("path-loss-additivity", path_loss_additivity),
        ("shannon-inversion", shannon_inversion),
        ("krauss-safety", krauss_safety),
        ("astar-optimality", astar_optimality),
        ("constraint-soundness", constraint_fuzz),
        ("sleep-week", sleep_week),
        ("cli-determinism", cli_determinism),
        ("performance", performance),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let verdict = run();
        let secs = t.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("PASS {name} ({secs:.1} s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1} s): {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
