use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scenario::LaneGraph;

/// A lane sequence and its free-flow travel time.
#[derive(Clone, Debug, PartialEq)]
pub struct Route {
    pub lanes: Vec<u32>,
    pub cost_s: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    f: f64,
    g: f64,
    node: u32,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Min-heap on f, then on node id for determinism.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* router over a lane graph with travel-time edge costs.
pub struct Router<'a> {
    graph: &'a LaneGraph,
    out: Vec<Vec<u32>>,
    /// Euclidean distance → lower bound on travel time.
    heuristic_scale: f64,
}

impl<'a> Router<'a> {
    pub fn new(graph: &'a LaneGraph) -> Self {
        let mut out = vec![Vec::new(); graph.nodes.len()];
        let mut detour = 1.0f64;
        for (i, e) in graph.edges.iter().enumerate() {
            out[e.from as usize].push(i as u32);
            let euclid = graph.nodes[e.from as usize].dist(graph.nodes[e.to as usize]);
            if euclid > 0.0 {
                detour = detour.min(e.length_m / euclid);
            }
        }
        let vmax = graph.max_speed();
        // Lanes may be up to a tolerance shorter than their chord; scaling by
        // the smallest length/chord ratio keeps the bound admissible.
        let heuristic_scale = if vmax > 0.0 {
            detour.max(0.0) * (1.0 - 1e-12) / vmax
        } else {
            0.0
        };
        Router {
            graph,
            out,
            heuristic_scale,
        }
    }

    pub fn route(&self, origin: u32, destination: u32) -> Result<Route> {
        let n = self.graph.nodes.len();
        for node in [origin, destination] {
            if node as usize >= n {
                return Err(Error::UnknownNode(node));
            }
        }
        if origin == destination {
            return Ok(Route {
                lanes: Vec::new(),
                cost_s: 0.0,
            });
        }
        let target = self.graph.nodes[destination as usize];
        let h = |v: u32| self.graph.nodes[v as usize].dist(target) * self.heuristic_scale;

        let mut best = vec![f64::INFINITY; n];
        let mut via: Vec<Option<u32>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        best[origin as usize] = 0.0;
        heap.push(Frontier {
            f: h(origin),
            g: 0.0,
            node: origin,
        });
        while let Some(Frontier { g, node, .. }) = heap.pop() {
            if g > best[node as usize] {
                continue;
            }
            if node == destination {
                let mut lanes = Vec::new();
                let mut cur = destination;
                while let Some(l) = via[cur as usize] {
                    lanes.push(l);
                    cur = self.graph.edges[l as usize].from;
                }
                lanes.reverse();
                return Ok(Route { lanes, cost_s: g });
            }
            for &l in &self.out[node as usize] {
                let e = &self.graph.edges[l as usize];
                let ng = g + e.length_m / e.speed_limit_mps;
                if ng < best[e.to as usize] {
                    best[e.to as usize] = ng;
                    via[e.to as usize] = Some(l);
                    heap.push(Frontier {
                        f: ng + h(e.to),
                        g: ng,
                        node: e.to,
                    });
                }
            }
        }
        Err(Error::Unreachable {
            origin,
            destination,
        })
    }
}

/// Minimum travel-time route between two lane nodes.
pub fn plan_route(graph: &LaneGraph, origin: u32, destination: u32) -> Result<Route> {
    Router::new(graph).route(origin, destination)
}
