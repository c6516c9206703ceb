use mndt_core::alloc_opt::{hungarian, site_power_split, AllocParams, AllocPolicy, Method};
use mndt_core::channel::{min_power_for_rate, shannon_rate};
use mndt_core::engine::{run_episode, EpisodeConfig, Environment, NearestRandomPolicy, Policy};
use mndt_core::mobility::{krauss_step, KraussParams, Router, VehicleState};
use mndt_core::radio::validate_action;
use mndt_core::rng;
use mndt_core::scenario::{generate_scenario, Lane, LaneGraph, ScenarioSpec};
use mndt_core::sleep_opt::{
    always_on, greedy_sleep_policy, network_loads, network_power, site_powered, Cell, CellLayout, CellStatus,
    EnergyModel,
};
use mndt_core::{Matrix, Point};
use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use proptest::prelude::*;

fn lane_graph() -> impl Strategy<Value = LaneGraph> {
    (2usize..40).prop_flat_map(|n| {
        let nodes = prop::collection::vec((0.0..1000.0f64, 0.0..1000.0f64), n);
        let edges = prop::collection::vec((0..n, 0..n, 1.0..1.6f64, 3.0..30.0f64), 0..4 * n);
        (nodes, edges).prop_map(|(nodes, edges)| {
            let nodes: Vec<Point> = nodes.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let edges = edges
                .into_iter()
                .filter(|(a, b, _, _)| a != b)
                .map(|(a, b, stretch, speed)| Lane {
                    from: a as u32,
                    to: b as u32,
                    length_m: (nodes[a].dist(nodes[b]) * stretch).max(1.0),
                    speed_limit_mps: speed,
                })
                .collect();
            LaneGraph { nodes, edges }
        })
    })
}

fn brute_force_max(w: &Matrix<f64>) -> f64 {
    fn go(w: &Matrix<f64>, row: usize, used: &mut Vec<bool>) -> f64 {
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

fn sleep_layout(sites: &[u8]) -> CellLayout {
    let mut cells = Vec::new();
    for (s, &k) in sites.iter().enumerate() {
        for i in 0..k.max(1) {
            cells.push(Cell {
                site: s,
                grid: s % 2,
                capacity_bps: 10.0 + 5.0 * i as f64,
            });
        }
    }
    CellLayout::new(cells, sites.len(), 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn astar_cost_equals_dijkstra(g in lane_graph(), o in 0usize..40, d in 0usize..40) {
        let n = g.nodes.len();
        let (o, d) = (o % n, d % n);
        let mut pg = DiGraph::<(), f64>::new();
        let idx: Vec<NodeIndex> = (0..n).map(|_| pg.add_node(())).collect();
        for e in &g.edges {
            pg.add_edge(idx[e.from as usize], idx[e.to as usize], e.length_m / e.speed_limit_mps);
        }
        let oracle = dijkstra(&pg, idx[o], Some(idx[d]), |e| *e.weight());
        match Router::new(&g).route(o as u32, d as u32) {
            Ok(r) => {
                prop_assert_eq!(Some(&r.cost_s), oracle.get(&idx[d]));
                let walked: f64 = r.lanes.iter().fold(0.0, |acc, &l| {
                    let e = &g.edges[l as usize];
                    acc + e.length_m / e.speed_limit_mps
                });
                prop_assert_eq!(walked, r.cost_s);
            }
            Err(_) => prop_assert!(!oracle.contains_key(&idx[d])),
        }
    }

    #[test]
    fn hungarian_is_optimal(n in 1usize..6, extra in 0usize..3, vals in prop::collection::vec(-50.0..50.0f64, 64)) {
        let cols = n + extra;
        let w = Matrix::from_fn(n, cols, |r, c| vals[(r * cols + c) % vals.len()]);
        let m = hungarian(&w, true);
        let mut used = vec![false; cols];
        let mut total = 0.0;
        for (r, c) in m.row_to_col.iter().enumerate() {
            let c = c.expect("every row assigned when rows <= cols");
            prop_assert!(!used[c]);
            used[c] = true;
            total += w[(r, c)];
        }
        prop_assert!((total - brute_force_max(&w)).abs() < 1e-9);
    }

    #[test]
    fn power_split_respects_budget(budget in 1e-3..10.0f64, req in prop::collection::vec(0.0..20.0f64, 1..30)) {
        let p = site_power_split(budget, &req);
        prop_assert_eq!(p.len(), req.len());
        prop_assert!(p.iter().all(|&x| x >= 0.0 && x.is_finite()));
        prop_assert!(p.iter().sum::<f64>() <= budget);
        if req.iter().sum::<f64>() <= budget {
            for (a, r) in p.iter().zip(&req) {
                prop_assert!(*a >= r * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn shannon_inverse_round_trip(bw in 1e4..1e7f64, g in 1e-14..1e-2f64, n in 1e-16..1e-9f64, se in 1e-3..12.0f64) {
        let target = bw * se;
        let p = min_power_for_rate(target, bw, g, n);
        let back = shannon_rate(bw, g * p / n);
        prop_assert!(((back - target) / target).abs() <= 1e-9);
    }

    #[test]
    fn krauss_gap_stays_nonnegative(seed in any::<u64>(), gap in 0.0..50.0f64, vf in 0.0..20.0f64, vl in 0.0..20.0f64) {
        let mut r = rng::stream(seed, 0, &[]);
        let p = KraussParams::default();
        let follower = VehicleState { lane: 0, position_m: 0.0, speed_mps: vf, params: p };
        let leader = VehicleState { lane: 0, position_m: gap + 5.0, speed_mps: vl, params: p };
        let lnext = krauss_step(&leader, None, f64::INFINITY, 1.0, &mut r);
        let fnext = krauss_step(&follower, Some(&leader), gap, 1.0, &mut r);
        prop_assert!(lnext.position_m - 5.0 - fnext.position_m >= -1e-9);
    }

    #[test]
    fn greedy_sleep_invariants(
        sites in prop::collection::vec(1u8..4, 1..8),
        demand in prop::collection::vec(0.0..120.0f64, 2),
        prev_on in prop::collection::vec(any::<bool>(), 32),
        h in 0.0..0.4f64,
    ) {
        let layout = sleep_layout(&sites);
        let m = EnergyModel::default();
        let prev: Vec<CellStatus> = (0..layout.n_cells())
            .map(|c| if prev_on[c % prev_on.len()] { CellStatus::On } else { CellStatus::Sleeping })
            .collect();
        let st = greedy_sleep_policy(&layout, &demand, &prev, h);
        let (loads, unserved) = network_loads(&layout, &demand, &st);
        for g in 0..2 {
            if layout.grid_capacity(g) >= demand[g] {
                prop_assert_eq!(unserved[g], 0.0);
            }
        }
        let all = always_on(&layout);
        let (all_loads, _) = network_loads(&layout, &demand, &all);
        prop_assert!(network_power(&layout, &st, &loads, &m) <= network_power(&layout, &all, &all_loads, &m) + 1e-9);
        let powered = site_powered(&layout, &st, &EnergyModel { sleeping_keeps_site_on: false, ..m });
        for s in 0..layout.n_sites {
            let any_on = layout.site_cells(s).iter().any(|&c| st[c] == CellStatus::On);
            prop_assert_eq!(powered[s], any_on);
            if !any_on {
                prop_assert!(layout.site_cells(s).iter().all(|&c| st[c] == CellStatus::Off));
            } else {
                prop_assert!(layout.site_cells(s).iter().all(|&c| st[c] != CellStatus::Off));
            }
        }
    }

    #[test]
    fn sleeping_never_costs_more(sites in prop::collection::vec(1u8..4, 1..6), demand in 0.0..30.0f64, pick in any::<prop::sample::Index>()) {
        let layout = sleep_layout(&sites);
        let m = EnergyModel::default();
        let demands = [demand, demand];
        let on = always_on(&layout);
        let c = pick.index(layout.n_cells());
        let g = layout.cells[c].grid;
        let mut slept = on.clone();
        slept[c] = CellStatus::Sleeping;
        prop_assume!(layout.on_capacity(g, &slept) >= demand);
        let (l0, _) = network_loads(&layout, &demands, &on);
        let (l1, _) = network_loads(&layout, &demands, &slept);
        prop_assert!(network_power(&layout, &slept, &l1, &m) <= network_power(&layout, &on, &l0, &m) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn policy_actions_satisfy_constraints(seed in 0u64..1000, method in 0usize..4) {
        let scenario = generate_scenario(seed, &ScenarioSpec::desk()).unwrap();
        let cfg = EpisodeConfig { steps: 3, n_users: 120, ..Default::default() };
        let mut policy: Box<dyn Policy> = match method {
            0 => Box::new(NearestRandomPolicy::new(seed)),
            m => Box::new(AllocPolicy::new(Method::ALL[m - 1], AllocParams { training_episodes: 0, ..Default::default() })),
        };
        let env = Environment::reset(&scenario, cfg, seed).unwrap();
        let ctx = env.context();
        policy.begin_episode(&ctx);
        let action = policy.act(&env.observe(), &env.context());
        prop_assert!(validate_action(&action, &scenario.sites, env.user_cap(), cfg.n_users).is_ok());
        let mut env = Environment::reset(&scenario, cfg, seed).unwrap();
        let trace = run_episode(&mut env, policy.as_mut(), None).unwrap();
        prop_assert!(trace.totals.satisfaction >= 0.0 && trace.totals.satisfaction <= 1.0 + 1e-12);
        for (served, demand) in trace.served.iter().zip(&trace.initial_demand) {
            prop_assert!(*served >= 0.0 && *served <= demand + 1e-6);
        }
    }
}
