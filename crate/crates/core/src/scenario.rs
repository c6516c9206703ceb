//! The static world: lane graph, areas of interest, buildings, base-station
//! sites, and the grid partition used by the sleep controller.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, Polygon, Rect};
use crate::math;
use crate::rng::{self, domain, SimRng};

/// Geometry tolerance for extent and boundary checks, in meters.
const GEOM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    pub from: u32,
    pub to: u32,
    pub length_m: f64,
    pub speed_limit_mps: f64,
}

/// Directed lane graph. Node and lane ids are their indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneGraph {
    pub nodes: Vec<Point>,
    pub edges: Vec<Lane>,
}

impl LaneGraph {
    pub fn lane_count(&self) -> usize {
        self.edges.len()
    }

    pub fn max_speed(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.speed_limit_mps)
            .fold(0.0, f64::max)
    }

    pub fn nearest_node(&self, p: Point) -> Option<u32> {
        let mut best: Option<(f64, u32)> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.dist_sq(p);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i as u32));
            }
        }
        best.map(|(_, i)| i)
    }

    /// Position along a lane at `offset_m` from its start.
    pub fn point_on_lane(&self, lane: u32, offset_m: f64) -> Point {
        let e = &self.edges[lane as usize];
        let a = self.nodes[e.from as usize];
        let b = self.nodes[e.to as usize];
        let t = if e.length_m > 0.0 {
            (offset_m / e.length_m).clamp(0.0, 1.0)
        } else {
            0.0
        };
        a.lerp(b, t)
    }

    /// Size of the largest weakly connected component, in nodes.
    pub fn largest_component(&self) -> usize {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.from as usize].push(e.to as usize);
            adj[e.to as usize].push(e.from as usize);
        }
        let mut seen = vec![false; n];
        let mut best = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut size = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                size += 1;
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            best = best.max(size);
        }
        best
    }
}

/// Area of interest: an indoor region with entrances and obstacles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aoi {
    pub footprint: Polygon,
    pub entrances: Vec<Point>,
    pub obstacles: Vec<Polygon>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Building {
    pub footprint: Polygon,
    pub height_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStationSite {
    pub id: u32,
    pub position: Point,
    pub indoor: bool,
    pub max_tx_power_dbm: f64,
    pub antenna_height_m: f64,
    /// Boresight direction, degrees counter-clockwise from +x.
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub carrier_freq_mhz: f64,
    pub n_channels: u32,
    pub rb_bandwidth_hz: f64,
}

impl BaseStationSite {
    pub const OUTDOOR_MAX_POWER_DBM: f64 = 30.0;
    pub const INDOOR_MAX_POWER_DBM: f64 = 24.0;

    pub fn default_max_power_dbm(indoor: bool) -> f64 {
        if indoor {
            Self::INDOOR_MAX_POWER_DBM
        } else {
            Self::OUTDOOR_MAX_POWER_DBM
        }
    }

    pub fn max_tx_power_w(&self) -> f64 {
        math::dbm_to_watts(self.max_tx_power_dbm)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub extent: Rect,
    pub lanes: LaneGraph,
    pub aois: Vec<Aoi>,
    pub buildings: Vec<Building>,
    pub sites: Vec<BaseStationSite>,
}

fn invalid(invariant: &'static str, detail: alloc::string::String) -> Error {
    Error::InvalidScenario { invariant, detail }
}

impl Scenario {
    pub fn indoor_site_count(&self) -> usize {
        self.sites.iter().filter(|s| s.indoor).count()
    }

    /// Checks every scenario invariant, reporting the first that fails.
    pub fn validate(&self) -> Result<()> {
        let ext = self.extent;
        if !(ext.width() > 0.0 && ext.height() > 0.0) || !ext.area().is_finite() {
            return Err(invalid("positive-extent", format!("{ext:?}")));
        }
        if self.lanes.edges.is_empty() {
            return Err(invalid("positive-lane-count", "no lanes".into()));
        }
        if self.aois.is_empty() {
            return Err(invalid("positive-aoi-count", "no AoIs".into()));
        }
        if self.sites.is_empty() {
            return Err(invalid("positive-site-count", "no sites".into()));
        }

        let inside = |p: &Point| p.x.is_finite() && p.y.is_finite() && ext.contains_tol(*p, GEOM_TOL);
        for (i, n) in self.lanes.nodes.iter().enumerate() {
            if !inside(n) {
                return Err(invalid("geometry-within-extent", format!("lane node {i} at {n:?}")));
            }
        }
        for (i, e) in self.lanes.edges.iter().enumerate() {
            let n = self.lanes.nodes.len() as u32;
            if e.from >= n || e.to >= n {
                return Err(invalid("lane-endpoints-exist", format!("lane {i}")));
            }
            let euclid = self.lanes.nodes[e.from as usize].dist(self.lanes.nodes[e.to as usize]);
            if !(e.length_m >= euclid - GEOM_TOL) || !e.length_m.is_finite() {
                return Err(invalid(
                    "lane-length-at-least-euclidean",
                    format!("lane {i}: length {} < distance {euclid}", e.length_m),
                ));
            }
            if !(e.speed_limit_mps > 0.0) || !e.speed_limit_mps.is_finite() {
                return Err(invalid("positive-speed-limit", format!("lane {i}")));
            }
        }
        let component = self.lanes.largest_component();
        if (component as f64) < 0.9 * self.lanes.nodes.len() as f64 {
            return Err(invalid(
                "lane-graph-connected",
                format!(
                    "largest component covers {component} of {} nodes",
                    self.lanes.nodes.len()
                ),
            ));
        }

        for (i, aoi) in self.aois.iter().enumerate() {
            if !aoi.footprint.is_simple() {
                return Err(invalid("aoi-footprint-simple", format!("AoI {i}")));
            }
            if let Some(v) = aoi.footprint.vertices.iter().find(|v| !inside(v)) {
                return Err(invalid("geometry-within-extent", format!("AoI {i} vertex {v:?}")));
            }
            if aoi.entrances.is_empty() {
                return Err(invalid("aoi-has-entrance", format!("AoI {i}")));
            }
            for e in &aoi.entrances {
                if aoi.footprint.boundary_distance(*e) > GEOM_TOL {
                    return Err(invalid("aoi-entrance-on-boundary", format!("AoI {i} entrance {e:?}")));
                }
            }
            for (j, obs) in aoi.obstacles.iter().enumerate() {
                if !obs.is_simple() || !aoi.footprint.contains_polygon(obs) {
                    return Err(invalid(
                        "obstacle-contained-in-aoi",
                        format!("AoI {i} obstacle {j}"),
                    ));
                }
            }
        }

        for (i, b) in self.buildings.iter().enumerate() {
            if !b.footprint.is_simple() {
                return Err(invalid("building-footprint-simple", format!("building {i}")));
            }
            if let Some(v) = b.footprint.vertices.iter().find(|v| !inside(v)) {
                return Err(invalid("geometry-within-extent", format!("building {i} vertex {v:?}")));
            }
            if !(b.height_m > 0.0) || !b.height_m.is_finite() {
                return Err(invalid("positive-building-height", format!("building {i}")));
            }
        }

        let mut ids = BTreeSet::new();
        for s in &self.sites {
            if !ids.insert(s.id) {
                return Err(invalid("unique-site-ids", format!("duplicate site id {}", s.id)));
            }
            if !inside(&s.position) {
                return Err(invalid("geometry-within-extent", format!("site {}", s.id)));
            }
            if s.n_channels < 1 {
                return Err(invalid("site-has-channels", format!("site {}", s.id)));
            }
            if !(s.carrier_freq_mhz > 0.0) {
                return Err(invalid("positive-carrier-frequency", format!("site {}", s.id)));
            }
            if !(s.rb_bandwidth_hz > 0.0) {
                return Err(invalid("positive-rb-bandwidth", format!("site {}", s.id)));
            }
            if !s.max_tx_power_dbm.is_finite() || !(s.antenna_height_m > 0.0) {
                return Err(invalid("finite-site-parameters", format!("site {}", s.id)));
            }
        }
        Ok(())
    }
}

/// Counts and extent for [`generate_scenario`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub lanes: usize,
    pub aois: usize,
    pub indoor_sites: usize,
    pub outdoor_sites: usize,
    pub n_channels: u32,
    pub carrier_freq_mhz: f64,
    pub rb_bandwidth_hz: f64,
}

impl ScenarioSpec {
    /// 2×2 km², 1,850 lanes, 1,417 AoIs, 145 indoor + 39 outdoor sites,
    /// 45 channels of 180 kHz.
    pub fn table1() -> Self {
        ScenarioSpec {
            width_m: 2000.0,
            height_m: 2000.0,
            lanes: 1850,
            aois: 1417,
            indoor_sites: 145,
            outdoor_sites: 39,
            n_channels: 45,
            carrier_freq_mhz: 2600.0,
            rb_bandwidth_hz: 1.8e5,
        }
    }

    /// 500×500 m with 10 sites of 5 channels; other counts scale with area.
    pub fn desk() -> Self {
        ScenarioSpec {
            width_m: 500.0,
            height_m: 500.0,
            lanes: 116,
            aois: 89,
            indoor_sites: 8,
            outdoor_sites: 2,
            n_channels: 5,
            carrier_freq_mhz: 2600.0,
            rb_bandwidth_hz: 1.8e5,
        }
    }

    pub fn total_sites(&self) -> usize {
        self.indoor_sites + self.outdoor_sites
    }
}

/// Minimum spacing between lane-grid nodes.
const MIN_LANE_SPACING_M: f64 = 5.0;
/// Minimum lattice cell for AoI placement.
const MIN_AOI_CELL_M: f64 = 4.0;
const SPEED_LIMIT_RANGE: (f64, f64) = (8.3, 16.7);

/// Synthesizes a world: a perturbed Manhattan lane grid, rectangular-ish
/// AoIs with obstacles, one building per AoI, indoor sites inside AoIs and
/// outdoor sites on lane nodes. Pure in `(seed, spec)`.
pub fn generate_scenario(seed: u64, spec: &ScenarioSpec) -> Result<Scenario> {
    let (w, h) = (spec.width_m, spec.height_m);
    if !(w > 0.0 && h > 0.0) || !(w * h).is_finite() {
        return Err(Error::InfeasibleSpec(format!("extent {w}×{h} m has no area")));
    }
    if spec.lanes == 0 || spec.aois == 0 || spec.total_sites() == 0 {
        return Err(Error::InfeasibleSpec("lane, AoI and site counts must be positive".into()));
    }
    if spec.n_channels == 0 || !(spec.carrier_freq_mhz > 0.0) || !(spec.rb_bandwidth_hz > 0.0) {
        return Err(Error::InfeasibleSpec("radio parameters must be positive".into()));
    }
    if spec.indoor_sites > spec.aois {
        return Err(Error::InfeasibleSpec(format!(
            "{} indoor sites need as many AoIs, have {}",
            spec.indoor_sites, spec.aois
        )));
    }
    let extent = Rect::from_size(w, h);
    let mut rng = rng::stream(seed, domain::SCENARIO, &[]);
    let lanes = generate_lanes(&mut rng, extent, spec.lanes)?;
    if spec.outdoor_sites > lanes.nodes.len() {
        return Err(Error::InfeasibleSpec(format!(
            "{} outdoor sites need as many lane nodes, have {}",
            spec.outdoor_sites,
            lanes.nodes.len()
        )));
    }
    let aois = generate_aois(&mut rng, extent, spec.aois)?;
    let buildings = aois
        .iter()
        .map(|a| Building {
            footprint: a.footprint.clone(),
            height_m: rng.random_range(10.0..60.0),
        })
        .collect();

    let mut sites = Vec::with_capacity(spec.total_sites());
    let mut hosts: Vec<usize> = (0..aois.len()).collect();
    hosts.shuffle(&mut rng);
    for &a in hosts.iter().take(spec.indoor_sites) {
        let inner = inner_rect(&aois[a]);
        let position = Point::new(
            rng.random_range(inner.min_x..=inner.max_x),
            rng.random_range(inner.min_y..=inner.max_y),
        );
        sites.push(BaseStationSite {
            id: sites.len() as u32,
            position,
            indoor: true,
            max_tx_power_dbm: BaseStationSite::INDOOR_MAX_POWER_DBM,
            antenna_height_m: 3.0,
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            carrier_freq_mhz: spec.carrier_freq_mhz,
            n_channels: spec.n_channels,
            rb_bandwidth_hz: spec.rb_bandwidth_hz,
        });
    }
    let mut nodes: Vec<usize> = (0..lanes.nodes.len()).collect();
    nodes.shuffle(&mut rng);
    for &n in nodes.iter().take(spec.outdoor_sites) {
        sites.push(BaseStationSite {
            id: sites.len() as u32,
            position: lanes.nodes[n],
            indoor: false,
            max_tx_power_dbm: BaseStationSite::OUTDOOR_MAX_POWER_DBM,
            antenna_height_m: 25.0,
            azimuth_deg: rng.random_range(0.0..360.0),
            elevation_deg: 0.0,
            carrier_freq_mhz: spec.carrier_freq_mhz,
            n_channels: spec.n_channels,
            rb_bandwidth_hz: spec.rb_bandwidth_hz,
        });
    }

    let scenario = Scenario {
        extent,
        lanes,
        aois,
        buildings,
        sites,
    };
    debug_assert_eq!(scenario.validate(), Ok(()));
    Ok(scenario)
}

/// Smallest near-square grid whose undirected edge count reaches `need`.
fn grid_dims(need: usize) -> (usize, usize) {
    let edges = |r: usize, c: usize| r * (c - 1) + c * (r - 1);
    let mut r = 1;
    loop {
        for c in [r, r + 1] {
            if edges(r, c) >= need {
                return (r, c);
            }
        }
        r += 1;
    }
}

fn generate_lanes(rng: &mut SimRng, extent: Rect, n_lanes: usize) -> Result<LaneGraph> {
    let roads = n_lanes.div_ceil(2);
    let (rows, cols) = grid_dims(roads);
    let (sx, sy) = (extent.width() / cols as f64, extent.height() / rows as f64);
    if sx.min(sy) < MIN_LANE_SPACING_M {
        return Err(Error::InfeasibleSpec(format!(
            "{n_lanes} lanes need node spacing {:.2} m < {MIN_LANE_SPACING_M} m",
            sx.min(sy)
        )));
    }
    let idx = |r: usize, c: usize| r * cols + c;
    let mut nodes = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let jx = rng.random_range(-0.15..=0.15) * sx;
            let jy = rng.random_range(-0.15..=0.15) * sy;
            nodes.push(Point::new(
                extent.min_x + (c as f64 + 0.5) * sx + jx,
                extent.min_y + (r as f64 + 0.5) * sy + jy,
            ));
        }
    }
    let mut adjacency = vec![Vec::new(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                adjacency[idx(r, c)].push(idx(r, c + 1));
                adjacency[idx(r, c + 1)].push(idx(r, c));
            }
            if r + 1 < rows {
                adjacency[idx(r, c)].push(idx(r + 1, c));
                adjacency[idx(r + 1, c)].push(idx(r, c));
            }
        }
    }
    // BFS discovery order: every prefix of the tree edges is connected.
    let start = idx(rows / 2, cols / 2);
    let mut seen = vec![false; rows * cols];
    let mut tree = Vec::new();
    let mut in_tree = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                tree.push((u, v));
                in_tree.insert((u.min(v), u.max(v)));
                queue.push_back(v);
            }
        }
    }
    let mut rest: Vec<(usize, usize)> = Vec::new();
    for u in 0..rows * cols {
        for &v in &adjacency[u] {
            if u < v && !in_tree.contains(&(u, v)) {
                rest.push((u, v));
            }
        }
    }
    rest.shuffle(rng);
    let roads_used: Vec<(usize, usize)> = tree.into_iter().chain(rest).take(roads).collect();

    let mut edges = Vec::with_capacity(n_lanes);
    for (k, &(u, v)) in roads_used.iter().enumerate() {
        let euclid = nodes[u].dist(nodes[v]);
        let length_m = euclid * (1.0 + rng.random_range(0.0..0.05));
        let speed = rng.random_range(SPEED_LIMIT_RANGE.0..=SPEED_LIMIT_RANGE.1);
        edges.push(Lane {
            from: u as u32,
            to: v as u32,
            length_m,
            speed_limit_mps: speed,
        });
        let last_odd = k + 1 == roads_used.len() && n_lanes % 2 == 1;
        if !last_odd {
            edges.push(Lane {
                from: v as u32,
                to: u as u32,
                length_m,
                speed_limit_mps: speed,
            });
        }
    }

    // Drop nodes no lane touches and renumber.
    let mut used = vec![false; nodes.len()];
    for e in &edges {
        used[e.from as usize] = true;
        used[e.to as usize] = true;
    }
    let mut remap = vec![u32::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, p) in nodes.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept.len() as u32;
            kept.push(p);
        }
    }
    for e in &mut edges {
        e.from = remap[e.from as usize];
        e.to = remap[e.to as usize];
    }
    Ok(LaneGraph { nodes: kept, edges })
}

/// Axis-aligned rectangle guaranteed to lie inside a generated AoI.
fn inner_rect(aoi: &Aoi) -> Rect {
    let b = aoi.footprint.bbox();
    b.shrink(0.1 * b.width(), 0.1 * b.height())
}

fn generate_aois(rng: &mut SimRng, extent: Rect, n: usize) -> Result<Vec<Aoi>> {
    let aspect = extent.width() / extent.height();
    let mx = math::ceil(math::sqrt(n as f64 * aspect)).max(1.0) as usize;
    let my = n.div_ceil(mx);
    let (cw, ch) = (extent.width() / mx as f64, extent.height() / my as f64);
    if cw.min(ch) < MIN_AOI_CELL_M {
        return Err(Error::InfeasibleSpec(format!(
            "{n} AoIs need cells of {:.2} m < {MIN_AOI_CELL_M} m",
            cw.min(ch)
        )));
    }
    let mut cells: Vec<usize> = (0..mx * my).collect();
    cells.shuffle(rng);
    cells.truncate(n);
    cells.sort_unstable();

    let mut aois = Vec::with_capacity(n);
    for cell in cells {
        let (cx, cy) = ((cell % mx) as f64, (cell / mx) as f64);
        let fw = cw * rng.random_range(0.5..0.8);
        let fh = ch * rng.random_range(0.5..0.8);
        let x0 = extent.min_x + cx * cw + rng.random_range(0.0..=(cw - fw));
        let y0 = extent.min_y + cy * ch + rng.random_range(0.0..=(ch - fh));
        let rect = Rect::new(x0, y0, x0 + fw, y0 + fh);
        // Corners pulled inward by up to 5% keep the shape simple and
        // contain the 10%-shrunk rectangle.
        let mut jitter = || (rng.random_range(0.0..0.05) * fw, rng.random_range(0.0..0.05) * fh);
        let (a, b, c, d) = (jitter(), jitter(), jitter(), jitter());
        let footprint = Polygon::new(vec![
            Point::new(rect.min_x + a.0, rect.min_y + a.1),
            Point::new(rect.max_x - b.0, rect.min_y + b.1),
            Point::new(rect.max_x - c.0, rect.max_y - c.1),
            Point::new(rect.min_x + d.0, rect.max_y - d.1),
        ]);
        let edges: Vec<(Point, Point)> = footprint.edges().collect();
        let n_entr = rng.random_range(1..=2usize);
        let mut entrances = Vec::with_capacity(n_entr);
        let first = rng.random_range(0..4usize);
        for k in 0..n_entr {
            let (p, q) = edges[(first + 2 * k) % 4];
            entrances.push(p.lerp(q, 0.5));
        }
        let zone = rect.shrink(0.25 * fw, 0.25 * fh);
        let n_obs = rng.random_range(0..=3usize);
        let mut obstacles = Vec::with_capacity(n_obs);
        for _ in 0..n_obs {
            let ow = zone.width() * rng.random_range(0.2..0.5);
            let oh = zone.height() * rng.random_range(0.2..0.5);
            let ox = zone.min_x + rng.random_range(0.0..=(zone.width() - ow));
            let oy = zone.min_y + rng.random_range(0.0..=(zone.height() - oh));
            obstacles.push(Polygon::from_rect(&Rect::new(ox, oy, ox + ow, oy + oh)));
        }
        aois.push(Aoi {
            footprint,
            entrances,
            obstacles,
        });
    }
    Ok(aois)
}

/// Regular tiling of the extent; the last row/column is clipped to it.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPartition {
    pub cell_size_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<Rect>,
    /// Grid index for each site, in scenario site order.
    pub site_grid: Vec<usize>,
    extent: Rect,
}

pub const DEFAULT_GRID_CELL_M: f64 = 500.0;

impl GridPartition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the grid cell containing `p` (clamped to the extent).
    pub fn grid_of(&self, p: Point) -> usize {
        let q = self.extent.clamp(p);
        let gx = (math::floor((q.x - self.extent.min_x) / self.cell_size_m) as usize).min(self.nx - 1);
        let gy = (math::floor((q.y - self.extent.min_y) / self.cell_size_m) as usize).min(self.ny - 1);
        gy * self.nx + gx
    }

    /// Sites of each grid cell, in ascending site index.
    pub fn sites_per_grid(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells.len()];
        for (s, &g) in self.site_grid.iter().enumerate() {
            out[g].push(s);
        }
        out
    }
}

pub fn build_grid(scenario: &Scenario, cell_size_m: f64) -> Result<GridPartition> {
    if !(cell_size_m > 0.0) || !cell_size_m.is_finite() {
        return Err(Error::InvalidConfig(format!("grid cell size {cell_size_m} must be positive")));
    }
    let ext = scenario.extent;
    let nx = (math::ceil(ext.width() / cell_size_m) as usize).max(1);
    let ny = (math::ceil(ext.height() / cell_size_m) as usize).max(1);
    let mut cells = Vec::with_capacity(nx * ny);
    for gy in 0..ny {
        for gx in 0..nx {
            let x0 = ext.min_x + gx as f64 * cell_size_m;
            let y0 = ext.min_y + gy as f64 * cell_size_m;
            cells.push(Rect::new(
                x0,
                y0,
                (x0 + cell_size_m).min(ext.max_x),
                (y0 + cell_size_m).min(ext.max_y),
            ));
        }
    }
    let mut grid = GridPartition {
        cell_size_m,
        nx,
        ny,
        cells,
        site_grid: Vec::new(),
        extent: ext,
    };
    grid.site_grid = scenario.sites.iter().map(|s| grid.grid_of(s.position)).collect();
    Ok(grid)
}
