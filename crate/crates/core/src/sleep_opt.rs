//! Cell sleep control: grid load assignment, the demand and site-closure
//! masks, the energy and switching objective, a hysteresis greedy
//! controller and the minimal-cells baseline, run over a synthetic week.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::demand::SLOTS_PER_DAY;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, domain};
use crate::scenario::GridPartition;

pub const DAYS_PER_WEEK: usize = 7;
pub const SLOTS_PER_WEEK: usize = SLOTS_PER_DAY * DAYS_PER_WEEK;
pub const SLOT_HOURS: f64 = 24.0 / SLOTS_PER_DAY as f64;
pub const HYSTERESIS_GRID: [f64; 5] = [0.05, 0.1, 0.15, 0.2, 0.3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    On,
    Sleeping,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub on_static_w: f64,
    /// Extra draw of an on cell at full utilization.
    pub on_slope_w: f64,
    pub sleep_w: f64,
    /// Baseband and cooling, paid once per powered site.
    pub site_overhead_w: f64,
    pub switch_on_off: f64,
    pub switch_sleep: f64,
    /// Whether a site whose cells are all asleep still pays its overhead.
    pub sleeping_keeps_site_on: bool,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            on_static_w: 130.0,
            on_slope_w: 120.0,
            sleep_w: 25.0,
            site_overhead_w: 300.0,
            switch_on_off: 10.0,
            switch_sleep: 2.0,
            sleeping_keeps_site_on: true,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.on_static_w,
            self.on_slope_w,
            self.sleep_w,
            self.site_overhead_w,
            self.switch_on_off,
            self.switch_sleep,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig("energy constants must be finite and non-negative".into()));
        }
        if self.sleep_w >= self.on_static_w {
            return Err(Error::InvalidConfig("sleep power must be below on power".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SleepConfig {
    pub cells_per_site: u32,
    pub cell_capacity_bps: f64,
    pub energy: EnergyModel,
    /// Range of each grid's busiest-hour demand as a fraction of its capacity.
    pub peak_load_min: f64,
    pub peak_load_max: f64,
    /// Relative standard deviation of slot-to-slot traffic noise.
    pub noise: f64,
    pub weekend_factor: f64,
}

impl Default for SleepConfig {
    fn default() -> Self {
        SleepConfig {
            cells_per_site: 3,
            cell_capacity_bps: 50e6,
            energy: EnergyModel::default(),
            peak_load_min: 0.35,
            peak_load_max: 0.6,
            noise: 0.05,
            weekend_factor: 0.75,
        }
    }
}

impl SleepConfig {
    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        if self.cells_per_site == 0 || !(self.cell_capacity_bps > 0.0) || !self.cell_capacity_bps.is_finite() {
            return Err(Error::InvalidConfig("cells need a positive count and capacity".into()));
        }
        if !(0.0 <= self.peak_load_min && self.peak_load_min <= self.peak_load_max) || !self.peak_load_max.is_finite() {
            return Err(Error::InvalidConfig("peak load range must satisfy 0 <= min <= max".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) || !(self.weekend_factor >= 0.0 && self.weekend_factor.is_finite()) {
            return Err(Error::InvalidConfig("noise and weekend factor must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub site: usize,
    pub grid: usize,
    pub capacity_bps: f64,
}

/// Cells with their sites and grids, plus per-grid cell order by
/// descending capacity.
#[derive(Clone, Debug, PartialEq)]
pub struct CellLayout {
    pub cells: Vec<Cell>,
    pub n_sites: usize,
    site_cells: Vec<Vec<usize>>,
    grid_cells: Vec<Vec<usize>>,
}

impl CellLayout {
    pub fn new(cells: Vec<Cell>, n_sites: usize, n_grids: usize) -> Result<Self> {
        let mut site_cells = vec![Vec::new(); n_sites];
        let mut grid_cells = vec![Vec::new(); n_grids];
        for (i, c) in cells.iter().enumerate() {
            if c.site >= n_sites || c.grid >= n_grids {
                return Err(Error::InvalidConfig("cell refers to an unknown site or grid".into()));
            }
            if !(c.capacity_bps > 0.0) || !c.capacity_bps.is_finite() {
                return Err(Error::InvalidConfig("cell capacity must be positive".into()));
            }
            site_cells[c.site].push(i);
            grid_cells[c.grid].push(i);
        }
        for g in &mut grid_cells {
            g.sort_by(|&a, &b| cells[b].capacity_bps.total_cmp(&cells[a].capacity_bps).then(a.cmp(&b)));
        }
        Ok(CellLayout {
            cells,
            n_sites,
            site_cells,
            grid_cells,
        })
    }

    /// `cells_per_site` equal cells at every site, each in its site's grid.
    pub fn uniform(grid: &GridPartition, cells_per_site: u32, capacity_bps: f64) -> Result<Self> {
        let cells = grid
            .site_grid
            .iter()
            .enumerate()
            .flat_map(|(site, &g)| {
                (0..cells_per_site).map(move |_| Cell {
                    site,
                    grid: g,
                    capacity_bps,
                })
            })
            .collect();
        CellLayout::new(cells, grid.site_grid.len(), grid.len())
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_grids(&self) -> usize {
        self.grid_cells.len()
    }

    /// The grid's cells, highest capacity first.
    pub fn grid_cells(&self, grid: usize) -> &[usize] {
        &self.grid_cells[grid]
    }

    pub fn site_cells(&self, site: usize) -> &[usize] {
        &self.site_cells[site]
    }

    pub fn grid_capacity(&self, grid: usize) -> f64 {
        self.grid_cells[grid].iter().map(|&c| self.cells[c].capacity_bps).sum()
    }

    pub fn on_capacity(&self, grid: usize, statuses: &[CellStatus]) -> f64 {
        self.grid_cells[grid]
            .iter()
            .filter(|&&c| statuses[c] == CellStatus::On)
            .map(|&c| self.cells[c].capacity_bps)
            .sum()
    }
}

/// Splits a grid's demand over its on cells in proportion to capacity.
/// Returns one load per entry of `cells`; sleeping and off cells get zero.
pub fn grid_load_assignment(demand_bps: f64, capacities: &[f64], statuses: &[CellStatus]) -> Vec<f64> {
    let total: f64 = capacities
        .iter()
        .zip(statuses)
        .filter(|(_, s)| **s == CellStatus::On)
        .map(|(c, _)| *c)
        .sum();
    capacities
        .iter()
        .zip(statuses)
        .map(|(&c, &s)| {
            if s == CellStatus::On && total > 0.0 {
                demand_bps.max(0.0) * c / total
            } else {
                0.0
            }
        })
        .collect()
}

/// Per-cell loads for the whole network and the demand left unserved in
/// each grid.
pub fn network_loads(layout: &CellLayout, demands: &[f64], statuses: &[CellStatus]) -> (Vec<f64>, Vec<f64>) {
    let mut loads = vec![0.0; layout.n_cells()];
    let mut unserved = vec![0.0; layout.n_grids()];
    for g in 0..layout.n_grids() {
        let cells = layout.grid_cells(g);
        let caps: Vec<f64> = cells.iter().map(|&c| layout.cells[c].capacity_bps).collect();
        let st: Vec<CellStatus> = cells.iter().map(|&c| statuses[c]).collect();
        for (&c, l) in cells.iter().zip(grid_load_assignment(demands[g], &caps, &st)) {
            loads[c] = l;
        }
        unserved[g] = (demands[g] - caps.iter().zip(&st).filter(|(_, s)| **s == CellStatus::On).map(|(c, _)| c).sum::<f64>()).max(0.0);
    }
    (loads, unserved)
}

/// Whether the grid's demand is still covered with `candidate` no longer on.
pub fn mask_demand_satisfiable(
    layout: &CellLayout,
    grid: usize,
    candidate: usize,
    statuses: &[CellStatus],
    demand_bps: f64,
) -> bool {
    let cap: f64 = layout
        .grid_cells(grid)
        .iter()
        .filter(|&&c| c != candidate && statuses[c] == CellStatus::On)
        .map(|&c| layout.cells[c].capacity_bps)
        .sum();
    cap >= demand_bps
}

/// Whether the cell's site could shut down: every other cell there is off.
pub fn mask_bs_closable(layout: &CellLayout, cell: usize, statuses: &[CellStatus]) -> bool {
    layout
        .site_cells(layout.cells[cell].site)
        .iter()
        .all(|&c| c == cell || statuses[c] == CellStatus::Off)
}

/// Powered state of each site under `model`.
pub fn site_powered(layout: &CellLayout, statuses: &[CellStatus], model: &EnergyModel) -> Vec<bool> {
    (0..layout.n_sites)
        .map(|s| {
            layout.site_cells(s).iter().any(|&c| match statuses[c] {
                CellStatus::On => true,
                CellStatus::Sleeping => model.sleeping_keeps_site_on,
                CellStatus::Off => false,
            })
        })
        .collect()
}

/// Instantaneous network draw in watts.
pub fn network_power(layout: &CellLayout, statuses: &[CellStatus], loads: &[f64], model: &EnergyModel) -> f64 {
    let cells: f64 = layout
        .cells
        .iter()
        .zip(statuses)
        .zip(loads)
        .map(|((cell, s), &load)| match s {
            CellStatus::On => model.on_static_w + model.on_slope_w * (load / cell.capacity_bps).clamp(0.0, 1.0),
            CellStatus::Sleeping => model.sleep_w,
            CellStatus::Off => 0.0,
        })
        .sum();
    let sites = site_powered(layout, statuses, model).iter().filter(|&&on| on).count() as f64;
    cells + sites * model.site_overhead_w
}

pub fn switch_cost(prev: &[CellStatus], cur: &[CellStatus], model: &EnergyModel) -> f64 {
    prev.iter()
        .zip(cur)
        .map(|(a, b)| match (a, b) {
            _ if a == b => 0.0,
            (CellStatus::On, CellStatus::Off) | (CellStatus::Off, CellStatus::On) => model.switch_on_off,
            _ => model.switch_sleep,
        })
        .sum()
}

/// Cells whose status differs.
pub fn count_switches(prev: &[CellStatus], cur: &[CellStatus]) -> usize {
    prev.iter().zip(cur).filter(|(a, b)| a != b).count()
}

/// Cells that moved into or out of the on status.
pub fn count_activations(prev: &[CellStatus], cur: &[CellStatus]) -> usize {
    prev.iter()
        .zip(cur)
        .filter(|(a, b)| (**a == CellStatus::On) != (**b == CellStatus::On))
        .count()
}

/// Non-on cells sleep while their site keeps an on cell and are off
/// otherwise.
fn settle_inactive(layout: &CellLayout, on: &[bool]) -> Vec<CellStatus> {
    let provisional: Vec<CellStatus> = on
        .iter()
        .map(|&o| if o { CellStatus::On } else { CellStatus::Off })
        .collect();
    (0..on.len())
        .map(|c| match provisional[c] {
            CellStatus::Off if !mask_bs_closable(layout, c, &provisional) => CellStatus::Sleeping,
            s => s,
        })
        .collect()
}

/// Hysteresis greedy: per grid, wakes the largest idle cells while the on
/// capacity is below `demand·(1+h)`, then releases the smallest on cells
/// while the remainder still covers `demand·(1+2h)` and the demand mask
/// allows it.
pub fn greedy_sleep_policy(layout: &CellLayout, demands: &[f64], prev: &[CellStatus], h: f64) -> Vec<CellStatus> {
    let h = h.max(0.0);
    let mut st: Vec<CellStatus> = prev.to_vec();
    let mut on: Vec<bool> = prev.iter().map(|&s| s == CellStatus::On).collect();
    for g in 0..layout.n_grids() {
        let d = demands[g].max(0.0);
        let cells = layout.grid_cells(g);
        let mut cap = layout.on_capacity(g, prev);
        for &c in cells {
            if cap >= d * (1.0 + h) {
                break;
            }
            if !on[c] {
                on[c] = true;
                st[c] = CellStatus::On;
                cap += layout.cells[c].capacity_bps;
            }
        }
        for &c in cells.iter().rev() {
            if !on[c] {
                continue;
            }
            let rest = cap - layout.cells[c].capacity_bps;
            if rest >= d * (1.0 + 2.0 * h) && mask_demand_satisfiable(layout, g, c, &st, d) {
                on[c] = false;
                st[c] = CellStatus::Sleeping;
                cap = rest;
            }
        }
    }
    settle_inactive(layout, &on)
}

/// The smallest capacity-ordered prefix covering each grid's demand;
/// everything else off.
pub fn baseline_minimal_cells(layout: &CellLayout, demands: &[f64]) -> Vec<CellStatus> {
    let mut st = vec![CellStatus::Off; layout.n_cells()];
    for g in 0..layout.n_grids() {
        let d = demands[g].max(0.0);
        let mut cap = 0.0;
        for &c in layout.grid_cells(g) {
            if cap >= d {
                break;
            }
            st[c] = CellStatus::On;
            cap += layout.cells[c].capacity_bps;
        }
    }
    st
}

pub fn always_on(layout: &CellLayout) -> Vec<CellStatus> {
    vec![CellStatus::On; layout.n_cells()]
}

/// Decides the next statuses from the grid demands and the current ones.
pub trait SleepController {
    fn decide(&mut self, layout: &CellLayout, demands: &[f64], prev: &[CellStatus]) -> Vec<CellStatus>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Greedy {
    pub hysteresis: f64,
}

impl Default for Greedy {
    fn default() -> Self {
        Greedy { hysteresis: 0.15 }
    }
}

impl SleepController for Greedy {
    fn decide(&mut self, layout: &CellLayout, demands: &[f64], prev: &[CellStatus]) -> Vec<CellStatus> {
        greedy_sleep_policy(layout, demands, prev, self.hysteresis)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MinimalCells;

impl SleepController for MinimalCells {
    fn decide(&mut self, layout: &CellLayout, demands: &[f64], _prev: &[CellStatus]) -> Vec<CellStatus> {
        baseline_minimal_cells(layout, demands)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AlwaysOn;

impl SleepController for AlwaysOn {
    fn decide(&mut self, layout: &CellLayout, _demands: &[f64], _prev: &[CellStatus]) -> Vec<CellStatus> {
        always_on(layout)
    }
}

/// Traffic demand in bits/s, indexed `[slot][grid]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridTraffic {
    pub demand_bps: Vec<Vec<f64>>,
}

impl GridTraffic {
    pub fn n_slots(&self) -> usize {
        self.demand_bps.len()
    }

    pub fn total(&self, slot: usize) -> f64 {
        self.demand_bps[slot].iter().sum()
    }

    pub fn day(&self, day: usize) -> GridTraffic {
        let lo = (day * SLOTS_PER_DAY).min(self.n_slots());
        let hi = ((day + 1) * SLOTS_PER_DAY).min(self.n_slots());
        GridTraffic {
            demand_bps: self.demand_bps[lo..hi].to_vec(),
        }
    }
}

/// Daily shape in [0.12, 1): a morning and an evening peak over a trough
/// near 04:00.
pub fn diurnal_shape(hour: f64) -> f64 {
    let x = 2.0 * core::f64::consts::PI * (hour - 4.0) / 24.0;
    let daily = (1.0 - math::cos(x)) / 2.0;
    let twice = (1.0 - math::cos(2.0 * x)) / 2.0;
    0.12 + 0.88 * (0.6 * daily + 0.4 * twice)
}

/// One week of half-hourly grid traffic starting Monday 00:00.
pub fn synth_weekly_traffic(seed: u64, layout: &CellLayout, cfg: &SleepConfig) -> GridTraffic {
    let n_grids = layout.n_grids();
    let mut scale = vec![0.0; n_grids];
    let mut phase = vec![0.0; n_grids];
    for g in 0..n_grids {
        let mut r = rng::stream(seed, domain::TRAFFIC, &[g as u64]);
        let peak = cfg.peak_load_min + (cfg.peak_load_max - cfg.peak_load_min) * r.random::<f64>();
        scale[g] = peak * layout.grid_capacity(g);
        phase[g] = r.random::<f64>() - 0.5;
    }
    let peak_shape = (0..SLOTS_PER_DAY * 10)
        .map(|i| diurnal_shape(i as f64 * 0.1 * SLOT_HOURS))
        .fold(0.0, f64::max);
    let demand_bps = (0..SLOTS_PER_WEEK)
        .map(|slot| {
            let day = slot / SLOTS_PER_DAY;
            let hour = (slot % SLOTS_PER_DAY) as f64 * SLOT_HOURS;
            let weekday = if day >= 5 { cfg.weekend_factor } else { 1.0 };
            (0..n_grids)
                .map(|g| {
                    let mut r = rng::stream(seed, domain::TRAFFIC, &[g as u64, slot as u64 + 1]);
                    let z: f64 = StandardNormal.sample(&mut r);
                    let base = diurnal_shape(hour + phase[g]) / peak_shape;
                    (scale[g] * base * weekday * (1.0 + cfg.noise * z)).max(0.0)
                })
                .collect()
        })
        .collect();
    GridTraffic { demand_bps }
}

/// Per-slot outcome of one controller.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub energy_wh: f64,
    pub power_w: f64,
    /// Cells that started or stopped serving.
    pub switches: usize,
    /// Every cell status change, sleeping and off included.
    pub status_changes: usize,
    pub switch_cost: f64,
    pub unserved_bps: f64,
    /// Unserved demand in grids whose full capacity would cover it.
    pub avoidable_unserved_bps: f64,
    pub cells_on: usize,
}

/// Runs a controller over the traffic starting from all cells on.
pub fn run_controller(
    layout: &CellLayout,
    traffic: &GridTraffic,
    model: &EnergyModel,
    controller: &mut dyn SleepController,
) -> Vec<SlotOutcome> {
    let mut prev = always_on(layout);
    let mut out = Vec::with_capacity(traffic.n_slots());
    for demands in &traffic.demand_bps {
        let st = controller.decide(layout, demands, &prev);
        let (loads, unserved) = network_loads(layout, demands, &st);
        let power = network_power(layout, &st, &loads, model);
        let avoidable = (0..layout.n_grids())
            .filter(|&g| layout.grid_capacity(g) >= demands[g])
            .map(|g| unserved[g])
            .sum();
        out.push(SlotOutcome {
            energy_wh: power * SLOT_HOURS,
            power_w: power,
            switches: count_activations(&prev, &st),
            status_changes: count_switches(&prev, &st),
            switch_cost: switch_cost(&prev, &st, model),
            unserved_bps: unserved.iter().sum(),
            avoidable_unserved_bps: avoidable,
            cells_on: st.iter().filter(|&&s| s == CellStatus::On).count(),
        });
        prev = st;
    }
    out
}

/// Energy plus switching cost of a run.
pub fn objective(outcomes: &[SlotOutcome]) -> f64 {
    outcomes.iter().map(|o| o.energy_wh + o.switch_cost).sum()
}

/// The candidate hysteresis with the lowest objective on `traffic`; the
/// first wins ties.
pub fn tune_hysteresis(layout: &CellLayout, traffic: &GridTraffic, model: &EnergyModel, candidates: &[f64]) -> f64 {
    let mut best = (Greedy::default().hysteresis, f64::INFINITY);
    for &h in candidates {
        let score = objective(&run_controller(layout, traffic, model, &mut Greedy { hysteresis: h }));
        if score < best.1 {
            best = (h, score);
        }
    }
    best.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeekRow {
    pub slot: usize,
    pub traffic_total: f64,
    pub energy_ours: f64,
    pub energy_always_on: f64,
    pub energy_minimal_cells: f64,
    pub switches_ours: usize,
    pub switches_minimal: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeekResult {
    pub hysteresis: f64,
    pub rows: Vec<WeekRow>,
    pub ours: Vec<SlotOutcome>,
    pub always_on: Vec<SlotOutcome>,
    pub minimal_cells: Vec<SlotOutcome>,
}

impl WeekResult {
    pub fn total_energy(outcomes: &[SlotOutcome]) -> f64 {
        outcomes.iter().map(|o| o.energy_wh).sum()
    }

    /// Switches from slot `from` onwards.
    pub fn switches_from(outcomes: &[SlotOutcome], from: usize) -> usize {
        outcomes.iter().skip(from).map(|o| o.switches).sum()
    }
}

/// Tunes the hysteresis on day one, then runs the whole week for the
/// greedy controller and both baselines.
pub fn run_week(layout: &CellLayout, traffic: &GridTraffic, cfg: &SleepConfig) -> Result<WeekResult> {
    cfg.validate()?;
    if traffic.demand_bps.iter().any(|d| d.len() != layout.n_grids()) {
        return Err(Error::InvalidConfig("traffic grid count does not match the layout".into()));
    }
    let model = &cfg.energy;
    let hysteresis = tune_hysteresis(layout, &traffic.day(0), model, &HYSTERESIS_GRID);
    let ours = run_controller(layout, traffic, model, &mut Greedy { hysteresis });
    let always = run_controller(layout, traffic, model, &mut AlwaysOn);
    let minimal = run_controller(layout, traffic, model, &mut MinimalCells);
    let rows = (0..traffic.n_slots())
        .map(|t| WeekRow {
            slot: t,
            traffic_total: traffic.total(t),
            energy_ours: ours[t].energy_wh,
            energy_always_on: always[t].energy_wh,
            energy_minimal_cells: minimal[t].energy_wh,
            switches_ours: ours[t].switches,
            switches_minimal: minimal[t].switches,
        })
        .collect();
    Ok(WeekResult {
        hysteresis,
        rows,
        ours,
        always_on: always,
        minimal_cells: minimal,
    })
}

/// Sample Pearson correlation; zero when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 2 {
        return 0.0;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (a, b) = (x[i] - mx, y[i] - my);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / math::sqrt(sxx * syy)
    }
}
