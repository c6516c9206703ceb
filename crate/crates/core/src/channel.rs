//! Link budgets: free-space loss, shadowing, small-scale fading, LoS
//! occlusion, antenna pattern, noise, SINR and Shannon rate.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{segment_intersection, Point, Rect};
use crate::math;
use crate::matrix::Matrix;
use crate::radio::Grant;
use crate::rng::{self, domain, SimRng};
use crate::scenario::{Building, Scenario};

/// Attenuation terms of one link, all in dB.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub distance_m: f64,
    pub los: bool,
    /// Free-space loss.
    pub l_d: f64,
    /// Shadowing plus NLoS and wall-penetration penalties.
    pub l_s: f64,
    /// Small-scale fading loss for this step.
    pub l_f: f64,
    /// Total path loss, `l_d + l_s + l_f`.
    pub pl: f64,
    pub antenna_gain: f64,
}

impl LinkBudget {
    /// Linear path gain net of antenna gain, in (0, 1].
    pub fn gain(&self) -> f64 {
        clamp_gain(math::db_to_linear(self.antenna_gain - self.pl))
    }
}

#[inline]
fn clamp_gain(g: f64) -> f64 {
    if g > 1.0 {
        1.0
    } else if g > f64::MIN_POSITIVE {
        g
    } else {
        f64::MIN_POSITIVE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingModel {
    Rayleigh,
    Rician { k_factor: f64 },
    Nakagami { m: f64 },
}

impl FadingModel {
    pub fn is_valid(&self) -> bool {
        match *self {
            FadingModel::Rayleigh => true,
            FadingModel::Rician { k_factor } => k_factor >= 0.0 && k_factor.is_finite(),
            FadingModel::Nakagami { m } => m >= 0.5 && m.is_finite(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub noise_density_dbm_hz: f64,
    pub rb_bandwidth_hz: f64,
    pub carrier_freq_mhz: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            noise_density_dbm_hz: -174.0,
            rb_bandwidth_hz: 1.8e5,
            carrier_freq_mhz: 2600.0,
        }
    }
}

impl RadioConfig {
    pub fn noise_w(&self) -> f64 {
        math::dbm_to_watts(noise_power(self.noise_density_dbm_hz, self.rb_bandwidth_hz))
    }
}

/// Horizontal parabolic pattern for sectored outdoor sites; indoor sites
/// radiate omnidirectionally.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub beamwidth_deg: f64,
    pub max_attenuation_db: f64,
    pub outdoor_gain_dbi: f64,
    pub indoor_gain_dbi: f64,
}

impl Default for AntennaPattern {
    fn default() -> Self {
        AntennaPattern {
            beamwidth_deg: 65.0,
            max_attenuation_db: 30.0,
            outdoor_gain_dbi: 15.0,
            indoor_gain_dbi: 5.0,
        }
    }
}

impl AntennaPattern {
    /// Gain in dBi toward a receiver at bearing `bearing_deg` from a site
    /// whose boresight points at `azimuth_deg`.
    pub fn gain_db(&self, indoor: bool, azimuth_deg: f64, bearing_deg: f64) -> f64 {
        if indoor {
            return self.indoor_gain_dbi;
        }
        let off = math::wrap_degrees(bearing_deg - azimuth_deg) / self.beamwidth_deg;
        self.outdoor_gain_dbi - (12.0 * off * off).min(self.max_attenuation_db)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub radio: RadioConfig,
    pub sigma_los_db: f64,
    pub sigma_nlos_db: f64,
    pub nlos_penalty_db: f64,
    pub penetration_db: f64,
    /// `None` disables small-scale fading.
    pub fading: Option<FadingModel>,
    pub user_height_m: f64,
    pub antenna: AntennaPattern,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            radio: RadioConfig::default(),
            sigma_los_db: 4.0,
            sigma_nlos_db: 8.0,
            nlos_penalty_db: 20.0,
            penetration_db: 20.0,
            fading: Some(FadingModel::Rayleigh),
            user_height_m: 1.5,
            antenna: AntennaPattern::default(),
        }
    }
}

/// Free-space loss in dB, distance clamped to at least 1 m.
pub fn free_space_loss(distance_m: f64, freq_mhz: f64) -> f64 {
    let d_km = distance_m.max(1.0) / 1000.0;
    32.44 + 20.0 * math::log10(d_km) + 20.0 * math::log10(freq_mhz)
}

/// Linear free-space gain, the reciprocal of `10^(L_d/10)`.
#[inline]
fn free_space_gain(distance_m: f64, freq_mhz: f64) -> f64 {
    const FSPL_CONST: f64 = 1753.880501841762; // 10^3.244
    let d_km = distance_m.max(1.0) / 1000.0;
    let x = d_km * freq_mhz;
    1.0 / (FSPL_CONST * x * x)
}

/// A transmitter or receiver position with antenna height.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub position: Point,
    pub height_m: f64,
}

/// Whether the 3D segment between `a` and `b` passes through a building.
fn blocks(building: &Building, a: Endpoint, b: Endpoint) -> bool {
    blocks_shaped(building, Shape::of(building), a, b)
}

/// Cached bounding box of a footprint, and whether the footprint is that
/// box exactly.
#[derive(Clone, Copy, Debug)]
struct Shape {
    bbox: Rect,
    is_box: bool,
}

impl Shape {
    fn of(building: &Building) -> Shape {
        let bbox = building.footprint.bbox();
        let v = &building.footprint.vertices;
        let on_corner = |p: &Point| (p.x == bbox.min_x || p.x == bbox.max_x) && (p.y == bbox.min_y || p.y == bbox.max_y);
        let is_box = v.len() == 4
            && v.iter().all(on_corner)
            && (0..4).all(|i| v[i] != v[(i + 1) % 4] && (v[i].x == v[(i + 1) % 4].x || v[i].y == v[(i + 1) % 4].y));
        Shape { bbox, is_box }
    }
}

fn blocks_shaped(building: &Building, shape: Shape, a: Endpoint, b: Endpoint) -> bool {
    let h = building.height_m;
    if h <= a.height_m && h <= b.height_m {
        return false;
    }
    let Some((t0, t1)) = shape.bbox.segment_span(a.position, b.position) else {
        return false;
    };
    let ray_height = |t: f64| a.height_m + t * (b.height_m - a.height_m);
    if shape.is_box {
        // The ray is inside the box exactly on [t0, t1] and its height is
        // linear in t.
        return ray_height(t0).min(ray_height(t1)) < h;
    }
    for (p, q) in building.footprint.edges() {
        if let Some((t, _)) = segment_intersection(a.position, b.position, p, q) {
            if ray_height(t) < h {
                return true;
            }
        }
    }
    (building.footprint.contains(a.position) && a.height_m < h)
        || (building.footprint.contains(b.position) && b.height_m < h)
}

/// True iff the segment between the endpoints clears every building.
pub fn los_check(a: Endpoint, b: Endpoint, buildings: &[Building]) -> bool {
    !buildings.iter().any(|bld| blocks(bld, a, b))
}

/// Uniform grid over building bounding boxes.
#[derive(Clone, Debug)]
pub struct BuildingIndex {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
    shapes: Vec<Shape>,
}

impl BuildingIndex {
    pub fn new(extent: Rect, buildings: &[Building]) -> Self {
        let area = extent.area().max(1.0);
        let cell = if buildings.is_empty() {
            extent.width().max(extent.height()).max(1.0)
        } else {
            math::sqrt(area / buildings.len() as f64).clamp(10.0, 250.0)
        };
        let nx = (math::ceil(extent.width() / cell) as usize).max(1);
        let ny = (math::ceil(extent.height() / cell) as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let origin = Point::new(extent.min_x, extent.min_y);
        let mut idx = BuildingIndex {
            origin,
            cell,
            nx,
            ny,
            cells: Vec::new(),
            shapes: buildings.iter().map(Shape::of).collect(),
        };
        for (i, b) in buildings.iter().enumerate() {
            let bb = b.footprint.bbox();
            let (x0, y0) = idx.cell_xy(Point::new(bb.min_x, bb.min_y));
            let (x1, y1) = idx.cell_xy(Point::new(bb.max_x, bb.max_y));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    cells[y * nx + x].push(i as u32);
                }
            }
        }
        idx.cells = cells;
        idx
    }

    #[inline]
    fn cell_xy(&self, p: Point) -> (usize, usize) {
        let fx = math::floor((p.x - self.origin.x) / self.cell);
        let fy = math::floor((p.y - self.origin.y) / self.cell);
        (
            (fx.max(0.0) as usize).min(self.nx - 1),
            (fy.max(0.0) as usize).min(self.ny - 1),
        )
    }

    /// Index of a building whose footprint contains `p`.
    pub fn building_at(&self, buildings: &[Building], p: Point) -> Option<usize> {
        let (x, y) = self.cell_xy(p);
        self.cells[y * self.nx + x]
            .iter()
            .map(|&i| i as usize)
            .find(|&i| buildings[i].footprint.contains(p))
    }

    /// Visits grid cells along a→b in order from `a`; stops when `f`
    /// returns true and reports whether it did.
    fn walk(&self, a: Point, b: Point, mut f: impl FnMut(&[u32]) -> bool) -> bool {
        let (mut x, mut y) = self.cell_xy(a);
        let (xe, ye) = self.cell_xy(b);
        let d = b - a;
        let step_x: isize = if d.x > 0.0 { 1 } else { -1 };
        let step_y: isize = if d.y > 0.0 { 1 } else { -1 };
        let boundary = |c: usize, step: isize, o: f64| {
            o + (c as f64 + if step > 0 { 1.0 } else { 0.0 }) * self.cell
        };
        let mut t_max_x = if d.x != 0.0 {
            (boundary(x, step_x, self.origin.x) - a.x) / d.x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if d.y != 0.0 {
            (boundary(y, step_y, self.origin.y) - a.y) / d.y
        } else {
            f64::INFINITY
        };
        let t_dx = if d.x != 0.0 { self.cell / d.x.abs() } else { f64::INFINITY };
        let t_dy = if d.y != 0.0 { self.cell / d.y.abs() } else { f64::INFINITY };
        let max_steps = self.nx + self.ny + 2;
        for _ in 0..max_steps {
            if f(&self.cells[y * self.nx + x]) {
                return true;
            }
            if x == xe && y == ye {
                break;
            }
            if t_max_x < t_max_y {
                let nx = x as isize + step_x;
                if nx < 0 || nx >= self.nx as isize {
                    break;
                }
                x = nx as usize;
                t_max_x += t_dx;
            } else {
                let ny = y as isize + step_y;
                if ny < 0 || ny >= self.ny as isize {
                    break;
                }
                y = ny as usize;
                t_max_y += t_dy;
            }
        }
        false
    }

    /// Line-of-sight test skipping the given host buildings.
    pub fn los(
        &self,
        buildings: &[Building],
        a: Endpoint,
        b: Endpoint,
        skip: [Option<usize>; 2],
    ) -> bool {
        !self.walk(a.position, b.position, |ids| {
            ids.iter().any(|&i| {
                let i = i as usize;
                skip[0] != Some(i) && skip[1] != Some(i) && blocks_shaped(&buildings[i], self.shapes[i], a, b)
            })
        })
    }
}

/// Standard-normal deviate hashed from `(seed, user, site)`.
fn shadow_deviate(seed: u64, user: u32, site: u32) -> f64 {
    let h1 = rng::mix(seed, &[domain::SHADOWING, user as u64, site as u64]);
    let h2 = rng::mix(h1, &[]);
    let u1 = ((h1 >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (h2 >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(core::f64::consts::TAU * u2)
}

/// Static log-normal shadowing for a link, in dB.
pub fn shadowing_sample(user: u32, site: u32, sigma_db: f64, seed: u64) -> f64 {
    if sigma_db == 0.0 {
        return 0.0;
    }
    sigma_db * shadow_deviate(seed, user, site)
}

/// One unit-mean power gain `|h|²`.
pub fn fading_sample<R: Rng + ?Sized>(model: FadingModel, rng: &mut R) -> f64 {
    let g = match model {
        FadingModel::Rayleigh => -math::ln(1.0 - rng.random::<f64>()),
        FadingModel::Rician { k_factor } => {
            let k = k_factor.max(0.0);
            let los = math::sqrt(k / (k + 1.0));
            let s = math::sqrt(1.0 / (2.0 * (k + 1.0)));
            let x: f64 = StandardNormal.sample(rng);
            let y: f64 = StandardNormal.sample(rng);
            let re = los + s * x;
            let im = s * y;
            re * re + im * im
        }
        FadingModel::Nakagami { m } => {
            let m = m.max(0.5);
            Gamma::new(m, 1.0 / m).map(|d| d.sample(rng)).unwrap_or(1.0)
        }
    };
    g.max(f64::MIN_POSITIVE)
}

/// Fading loss in dB for a power gain.
pub fn fading_loss_db(power_gain: f64) -> f64 {
    -math::log10(power_gain.max(f64::MIN_POSITIVE)) * 10.0
}

/// Noise power in dBm over `bandwidth_hz`.
pub fn noise_power(n0_dbm_hz: f64, bandwidth_hz: f64) -> f64 {
    n0_dbm_hz + 10.0 * math::log10(bandwidth_hz)
}

pub fn shannon_rate(bandwidth_hz: f64, sinr: f64) -> f64 {
    bandwidth_hz * math::log2(1.0 + sinr.max(0.0))
}

/// Transmit power needed to reach `target_bps` on a link with linear gain
/// `gain` against `noise_interference_w`.
pub fn min_power_for_rate(
    target_bps: f64,
    bandwidth_hz: f64,
    gain: f64,
    noise_interference_w: f64,
) -> f64 {
    if target_bps <= 0.0 {
        return 0.0;
    }
    math::exp_m1(target_bps / bandwidth_hz * core::f64::consts::LN_2) * noise_interference_w / gain
}

/// Static geometry of one user↔site link.
#[derive(Clone, Copy, Debug, PartialEq)]
struct LinkGeometry {
    distance_m: f64,
    los: bool,
    one_side_indoor: bool,
    antenna_gain_db: f64,
}

/// Channel evaluator bound to one scenario and seed.
#[derive(Clone, Debug)]
pub struct ChannelModel<'a> {
    scenario: &'a Scenario,
    index: BuildingIndex,
    config: ChannelConfig,
    seed: u64,
    fading_seed: u64,
    site_host: Vec<Option<usize>>,
}

impl<'a> ChannelModel<'a> {
    pub fn new(scenario: &'a Scenario, config: ChannelConfig, seed: u64) -> Self {
        let index = BuildingIndex::new(scenario.extent, &scenario.buildings);
        let site_host = scenario
            .sites
            .iter()
            .map(|s| {
                if s.indoor {
                    index.building_at(&scenario.buildings, s.position)
                } else {
                    None
                }
            })
            .collect();
        ChannelModel {
            scenario,
            index,
            config,
            seed,
            fading_seed: seed,
            site_host,
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Reseeds small-scale fading only; shadowing stays tied to `seed`.
    pub fn set_fading_seed(&mut self, seed: u64) {
        self.fading_seed = seed;
    }

    pub fn index(&self) -> &BuildingIndex {
        &self.index
    }

    /// Building hosting a user position, if any.
    pub fn user_host(&self, p: Point) -> Option<usize> {
        self.index.building_at(&self.scenario.buildings, p)
    }

    fn geometry(&self, pos: Point, host: Option<usize>, site: usize) -> LinkGeometry {
        let s = &self.scenario.sites[site];
        let user = Endpoint {
            position: pos,
            height_m: self.config.user_height_m,
        };
        let tx = Endpoint {
            position: s.position,
            height_m: s.antenna_height_m,
        };
        let flat = pos - s.position;
        let dh = s.antenna_height_m - self.config.user_height_m;
        let distance_m = math::sqrt(flat.norm_sq() + dh * dh);
        let los = self
            .index
            .los(&self.scenario.buildings, user, tx, [host, self.site_host[site]]);
        let antenna_gain_db = if s.indoor {
            self.config.antenna.indoor_gain_dbi
        } else {
            let bearing = math::atan2(flat.y, flat.x).to_degrees();
            self.config.antenna.gain_db(false, s.azimuth_deg, bearing)
        };
        LinkGeometry {
            distance_m,
            los,
            one_side_indoor: host.is_some() != s.indoor,
            antenna_gain_db,
        }
    }

    fn excess_loss_db(&self, user: u32, site: usize, g: &LinkGeometry) -> f64 {
        let c = &self.config;
        let sigma = if g.los { c.sigma_los_db } else { c.sigma_nlos_db };
        let mut l_s = shadowing_sample(user, self.scenario.sites[site].id, sigma, self.seed);
        if !g.los {
            l_s += c.nlos_penalty_db;
        }
        if g.one_side_indoor {
            l_s += c.penetration_db;
        }
        l_s
    }

    /// Link budget for one user↔site link; draws one fading sample from
    /// `rng` when fading is enabled.
    pub fn path_loss<R: Rng + ?Sized>(
        &self,
        user: u32,
        pos: Point,
        site: usize,
        rng: &mut R,
    ) -> LinkBudget {
        let host = self.user_host(pos);
        let g = self.geometry(pos, host, site);
        let l_d = free_space_loss(g.distance_m, self.scenario.sites[site].carrier_freq_mhz);
        let l_s = self.excess_loss_db(user, site, &g);
        let l_f = match self.config.fading {
            Some(m) => fading_loss_db(fading_sample(m, rng)),
            None => 0.0,
        };
        LinkBudget {
            distance_m: g.distance_m,
            los: g.los,
            l_d,
            l_s,
            l_f,
            pl: l_d + l_s + l_f,
            antenna_gain: g.antenna_gain_db,
        }
    }

    /// Per-step fading stream for a user; draws go in site order.
    pub fn fading_stream(&self, step: u64, user: u32) -> SimRng {
        rng::stream(self.fading_seed, domain::FADING, &[step, user as u64])
    }

    /// All of a user's link budgets at `step`, consistent with
    /// [`LinkCache::update`].
    pub fn budgets_for_user(&self, user: u32, pos: Point, step: u64) -> Vec<LinkBudget> {
        let mut rng = self.fading_stream(step, user);
        (0..self.scenario.sites.len())
            .map(|b| self.path_loss(user, pos, b, &mut rng))
            .collect()
    }

    /// Linear gain without fading for every site, written into `row`.
    fn static_row(&self, user: u32, pos: Point, row: &mut [f64]) {
        let host = self.user_host(pos);
        for (b, out) in row.iter_mut().enumerate() {
            let g = self.geometry(pos, host, b);
            let fs = free_space_gain(g.distance_m, self.scenario.sites[b].carrier_freq_mhz);
            let excess = self.excess_loss_db(user, b, &g);
            *out = fs * math::db_to_linear(g.antenna_gain_db - excess);
        }
    }

    fn faded_row(&self, user: u32, step: u64, stat: &[f64], out: &mut [f64]) {
        match self.config.fading {
            Some(m) => {
                let mut rng = self.fading_stream(step, user);
                for (o, &s) in out.iter_mut().zip(stat) {
                    *o = clamp_gain(s * fading_sample(m, &mut rng));
                }
            }
            None => {
                for (o, &s) in out.iter_mut().zip(stat) {
                    *o = clamp_gain(s);
                }
            }
        }
    }
}

/// Users × sites gain matrix with the fading-free part cached per user
/// position.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkCache {
    static_gain: Matrix<f64>,
    positions: Vec<Option<Point>>,
    gains: Matrix<f64>,
}

impl LinkCache {
    pub fn new(n_users: usize, n_sites: usize) -> Self {
        LinkCache {
            static_gain: Matrix::filled(n_users, n_sites, 0.0),
            positions: vec![None; n_users],
            gains: Matrix::filled(n_users, n_sites, 0.0),
        }
    }

    pub fn gains(&self) -> &Matrix<f64> {
        &self.gains
    }

    /// Recomputes the gain matrix for `step`. Only users whose position
    /// changed pay for the geometry and occlusion work.
    pub fn update(&mut self, model: &ChannelModel<'_>, positions: &[Point], step: u64) {
        let n_sites = self.gains.cols();
        if n_sites == 0 {
            return;
        }
        let stat_rows = self.static_gain.as_mut_slice().chunks_mut(n_sites);
        let gain_rows = self.gains.as_mut_slice().chunks_mut(n_sites);
        let work = |(u, ((stat, out), last)): (usize, ((&mut [f64], &mut [f64]), &mut Option<Point>))| {
            let pos = positions[u];
            if *last != Some(pos) {
                model.static_row(u as u32, pos, stat);
                *last = Some(pos);
            }
            model.faded_row(u as u32, step, stat, out);
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let stat: Vec<&mut [f64]> = stat_rows.collect();
            let out: Vec<&mut [f64]> = gain_rows.collect();
            stat.into_par_iter()
                .zip(out)
                .zip(self.positions.par_iter_mut())
                .enumerate()
                .for_each(work);
        }
        #[cfg(not(feature = "parallel"))]
        {
            stat_rows
                .zip(gain_rows)
                .zip(self.positions.iter_mut())
                .enumerate()
                .for_each(work);
        }
    }
}

/// Convenience wrapper: the full gain matrix for one step.
pub fn link_gains(model: &ChannelModel<'_>, positions: &[Point], step: u64) -> Matrix<f64> {
    let mut cache = LinkCache::new(positions.len(), model.scenario.sites.len());
    cache.update(model, positions, step);
    cache.gains
}

/// Co-channel interference at `user` from every other grant on `channel`.
pub fn interference_w(user: u32, channel: u32, grants: &[Grant], gains: &Matrix<f64>) -> f64 {
    let row = gains.row(user as usize);
    grants
        .iter()
        .filter(|g| g.channel == channel && g.user != user)
        .map(|g| row[g.site as usize] * g.power_w)
        .sum()
}

/// SINR of an assigned user. Site indices in grants are positions in the
/// scenario's site list.
pub fn sinr(user: u32, grants: &[Grant], gains: &Matrix<f64>, noise_w: f64) -> Result<f64> {
    let own = grants
        .iter()
        .find(|g| g.user == user && g.power_w > 0.0)
        .ok_or(Error::Unassigned { user: user as usize })?;
    let signal = gains[(user as usize, own.site as usize)] * own.power_w;
    Ok(signal / (noise_w + interference_w(user, own.channel, grants, gains)))
}

/// SINR for every user (zero when unassigned). `noise_w[b]` is the noise
/// power over one resource block at site `b`.
pub fn all_sinrs(grants: &[Grant], gains: &Matrix<f64>, noise_w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; gains.rows()];
    let n_ch = grants.iter().map(|g| g.channel as usize + 1).max().unwrap_or(0);
    let mut by_channel: Vec<Vec<&Grant>> = vec![Vec::new(); n_ch];
    for g in grants.iter().filter(|g| g.power_w > 0.0) {
        by_channel[g.channel as usize].push(g);
    }
    for group in &by_channel {
        for g in group {
            let row = gains.row(g.user as usize);
            let mut interf = 0.0;
            for o in group {
                if o.user != g.user {
                    interf += row[o.site as usize] * o.power_w;
                }
            }
            out[g.user as usize] =
                row[g.site as usize] * g.power_w / (noise_w[g.site as usize] + interf);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Polygon;
    use crate::scenario::{generate_scenario, ScenarioSpec};
    use rand::SeedableRng;

    #[test]
    fn fspl_examples() {
        assert!((free_space_loss(1000.0, 1.0) - 32.44).abs() < 1e-12);
        let oracle = 32.44 + 20.0 * (2600f64).log10();
        assert!((free_space_loss(1000.0, 2600.0) - oracle).abs() < 1e-9);
        assert!((oracle - 100.74).abs() < 0.01);
        let d = free_space_loss(2000.0, 2600.0) - free_space_loss(1000.0, 2600.0);
        assert!((d - 20.0 * 2f64.log10()).abs() < 1e-9);
        assert!(free_space_loss(0.1, 2600.0) == free_space_loss(1.0, 2600.0));
        for d in [1.0, 10.0, 777.0] {
            let lin = free_space_gain(d, 2600.0);
            assert!((-10.0 * lin.log10() - free_space_loss(d, 2600.0)).abs() < 1e-9);
        }
    }

    fn tower(x0: f64, y0: f64, x1: f64, y1: f64, h: f64) -> Building {
        Building {
            footprint: Polygon::from_rect(&Rect::new(x0, y0, x1, y1)),
            height_m: h,
        }
    }

    fn ep(x: f64, y: f64, h: f64) -> Endpoint {
        Endpoint {
            position: Point::new(x, y),
            height_m: h,
        }
    }

    #[test]
    fn los_examples() {
        assert!(los_check(ep(0.0, 0.0, 1.5), ep(100.0, 0.0, 25.0), &[]));
        let tall = [tower(40.0, -5.0, 60.0, 5.0, 50.0)];
        assert!(!los_check(ep(0.0, 0.0, 1.5), ep(100.0, 0.0, 25.0), &tall));
        // Ray rises from 0 to 50 m over 100 m; at x=50 it is 25 m high.
        let low = [tower(50.0, -5.0, 60.0, 5.0, 10.0)];
        assert!(los_check(ep(0.0, 0.0, 0.0), ep(100.0, 0.0, 50.0), &low));
        assert!(!los_check(ep(0.0, 0.0, 0.0), ep(100.0, 0.0, 15.0), &low));
    }

    #[test]
    fn index_matches_brute_force() {
        let sc = generate_scenario(8, &ScenarioSpec::desk()).unwrap();
        let idx = BuildingIndex::new(sc.extent, &sc.buildings);
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..2000 {
            let a = ep(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0), 1.5);
            let b = ep(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0), rng.random_range(1.0..40.0));
            assert_eq!(idx.los(&sc.buildings, a, b, [None, None]), los_check(a, b, &sc.buildings));
            let brute = sc.buildings.iter().position(|bl| bl.footprint.contains(a.position));
            assert_eq!(idx.building_at(&sc.buildings, a.position).is_some(), brute.is_some());
        }
    }

    #[test]
    fn box_shortcut_matches_edge_crossings() {
        let mut rng = SimRng::seed_from_u64(2);
        let mut blocked = 0;
        for _ in 0..200 {
            let (x, y) = (rng.random_range(0.0..400.0), rng.random_range(0.0..400.0));
            let (w, h) = (rng.random_range(5.0..60.0), rng.random_range(5.0..60.0));
            let bl = &Building {
                footprint: Polygon::from_rect(&Rect::new(x, y, x + w, y + h)),
                height_m: rng.random_range(10.0..60.0),
            };
            assert!(Shape::of(bl).is_box);
            let shape = Shape::of(bl);
            let general = Shape { is_box: false, ..shape };
            for _ in 0..50 {
                let bb = shape.bbox;
                let a = ep(rng.random_range(bb.min_x - 40.0..bb.max_x + 40.0), rng.random_range(bb.min_y - 40.0..bb.max_y + 40.0), 1.5);
                let b = ep(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0), rng.random_range(1.0..70.0));
                let fast = blocks_shaped(bl, shape, a, b);
                assert_eq!(fast, blocks_shaped(bl, general, a, b));
                blocked += fast as usize;
            }
        }
        assert!(blocked > 100);
        let tri = Building {
            footprint: Polygon::new(vec![Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)]),
            height_m: 20.0,
        };
        assert!(!Shape::of(&tri).is_box);
        assert!(!blocks(&tri, ep(9.0, 9.0, 1.5), ep(20.0, 20.0, 1.5)));
    }

    #[test]
    fn noise_examples() {
        assert!((noise_power(-174.0, 1.8e5) - (-121.4473)).abs() < 1e-3);
        assert_eq!(noise_power(-174.0, 1.0), -174.0);
        assert!((noise_power(-174.0, 1.8e6) - noise_power(-174.0, 1.8e5) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn shannon_examples() {
        assert_eq!(shannon_rate(1.8e5, 0.0), 0.0);
        assert_eq!(shannon_rate(1.8e5, 1.0), 1.8e5);
        assert_eq!(shannon_rate(1.8e5, 3.0), 3.6e5);
        assert_eq!(min_power_for_rate(0.0, 1.8e5, 1e-9, 1e-15), 0.0);
        let p = min_power_for_rate(1.8e5, 1.8e5, 1e-9, 1e-15);
        assert!((p - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn shadowing_examples() {
        assert_eq!(shadowing_sample(3, 4, 0.0, 9), 0.0);
        assert_eq!(shadowing_sample(3, 4, 8.0, 9), shadowing_sample(3, 4, 8.0, 9));
        assert_ne!(shadowing_sample(3, 4, 8.0, 9), shadowing_sample(4, 3, 8.0, 9));
    }

    #[test]
    fn antenna_pattern() {
        let a = AntennaPattern::default();
        assert_eq!(a.gain_db(true, 0.0, 123.0), 5.0);
        assert_eq!(a.gain_db(false, 90.0, 90.0), 15.0);
        assert!((a.gain_db(false, 0.0, 32.5) - 12.0).abs() < 1e-12);
        assert_eq!(a.gain_db(false, 0.0, 180.0), -15.0);
    }

    #[test]
    fn cached_matrix_matches_budgets() {
        let sc = generate_scenario(2, &ScenarioSpec::desk()).unwrap();
        let model = ChannelModel::new(&sc, ChannelConfig::default(), 77);
        let mut rng = SimRng::seed_from_u64(4);
        let pos: Vec<Point> = (0..30)
            .map(|_| Point::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)))
            .collect();
        let mut cache = LinkCache::new(pos.len(), sc.sites.len());
        for step in 0..3 {
            cache.update(&model, &pos, step);
            for (u, &p) in pos.iter().enumerate() {
                let budgets = model.budgets_for_user(u as u32, p, step);
                for (b, lb) in budgets.iter().enumerate() {
                    let g = cache.gains()[(u, b)];
                    assert!(g > 0.0 && g <= 1.0);
                    assert!((g - lb.gain()).abs() <= 1e-9 * lb.gain(), "{g} vs {}", lb.gain());
                    assert_eq!(lb.pl, lb.l_d + lb.l_s + lb.l_f);
                }
            }
        }
    }

    #[test]
    fn composition_collapses() {
        let sc = generate_scenario(2, &ScenarioSpec::desk()).unwrap();
        let cfg = ChannelConfig {
            sigma_los_db: 0.0,
            sigma_nlos_db: 0.0,
            fading: None,
            ..ChannelConfig::default()
        };
        let model = ChannelModel::new(&sc, cfg, 1);
        let mut rng = SimRng::seed_from_u64(0);
        let mut seen = [false; 2];
        for _ in 0..500 {
            let p = Point::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0));
            if model.user_host(p).is_some() {
                continue;
            }
            for b in 0..sc.sites.len() {
                if sc.sites[b].indoor {
                    continue;
                }
                let lb = model.path_loss(0, p, b, &mut rng);
                let expect = if lb.los { lb.l_d } else { lb.l_d + 20.0 };
                assert!((lb.pl - expect).abs() < 1e-9);
                seen[lb.los as usize] = true;
            }
        }
        assert!(seen[0] && seen[1]);
    }
}
