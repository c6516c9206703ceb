//! The `mndt` command line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mndt_core::alloc_opt::{build_policy, AllocParams, Method};
use mndt_core::engine::{demand_arrivals, run_episode, Clock, EpisodeConfig, EpisodeTrace, Environment, MobilityKind};
use mndt_core::scenario::{build_grid, generate_scenario, Scenario, ScenarioSpec, DEFAULT_GRID_CELL_M};
use mndt_core::sleep_opt::{
    run_controller, run_week, synth_weekly_traffic, CellLayout, Greedy, SleepConfig, WeekResult, HYSTERESIS_GRID,
};
use serde_json::{json, Value};

use crate::config::ConfigFile;
use crate::output::{self, DemandRow, LinkRow, TrajectoryRow, WriteError};
use crate::scenario_io::{self, ScenarioFileError};
use crate::{report, StdClock};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_WRITE: i32 = 3;
pub const EXIT_CONSTRAINT: i32 = 4;
pub const EXIT_MISSING_INPUT: i32 = 5;

pub const SEED_ENV: &str = "MNDT_SEED";

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn missing(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_MISSING_INPUT,
            message: message.into(),
        }
    }
}

impl From<WriteError> for CliError {
    fn from(e: WriteError) -> Self {
        CliError {
            code: EXIT_WRITE,
            message: e.to_string(),
        }
    }
}

impl From<mndt_core::Error> for CliError {
    fn from(e: mndt_core::Error) -> Self {
        let code = match e {
            mndt_core::Error::Constraint(_) => EXIT_CONSTRAINT,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ScenarioFileError> for CliError {
    fn from(e: ScenarioFileError) -> Self {
        let code = match e {
            ScenarioFileError::Write { .. } => EXIT_WRITE,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "mndt",
    version,
    about = "Mobile-network digital twin: scenario generation, resource allocation and cell sleep experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic scenario and write scenario.json.
    GenScenario(GenArgs),
    /// Run allocation episodes and write kpi.csv and the summary.
    Allocate(AllocateArgs),
    /// Run the synthetic sleep week and write week.csv and the summary.
    Sleep(SleepArgs),
    /// Render report.txt and plot series from earlier outputs.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Table1,
}

impl Preset {
    pub fn spec(self) -> ScenarioSpec {
        match self {
            Preset::Desk => ScenarioSpec::desk(),
            Preset::Table1 => ScenarioSpec::table1(),
        }
    }

    /// Users in an allocation episode.
    pub fn users(self) -> usize {
        match self {
            Preset::Desk => 200,
            Preset::Table1 => 8000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Table1 => "table1",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ours,
    Equal,
    Ignore,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Ours => vec![Method::Ours],
            MethodArg::Equal => vec![Method::Equal],
            MethodArg::Ignore => vec![Method::Ignore],
            MethodArg::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MobilityArg {
    Static,
    StraightLine,
    Scheduled,
}

impl From<MobilityArg> for MobilityKind {
    fn from(m: MobilityArg) -> Self {
        match m {
            MobilityArg::Static => MobilityKind::Static,
            MobilityArg::StraightLine => MobilityKind::StraightLine,
            MobilityArg::Scheduled => MobilityKind::Scheduled,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; falls back to the config file, then MNDT_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub lanes: Option<usize>,
    #[arg(long)]
    pub aois: Option<usize>,
    #[arg(long)]
    pub indoor_sites: Option<usize>,
    #[arg(long)]
    pub outdoor_sites: Option<usize>,
    #[arg(long)]
    pub channels: Option<u32>,
}

#[derive(Args, Debug, Clone)]
pub struct AllocateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario file; generated from the preset and seed when absent.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub steps: Option<u32>,
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub mobility: Option<MobilityArg>,
    /// Weight of predicted unmet demand in the matching.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Initial demand-controller gain.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub training_episodes: Option<u32>,
    /// Record wall-clock step timings (outputs are then not reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Also write trajectories.csv.
    #[arg(long)]
    pub dump_trajectories: bool,
    /// Also write demand.csv.
    #[arg(long)]
    pub dump_demand: bool,
    /// Also write links.csv.
    #[arg(long)]
    pub dump_links: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SleepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Fixed hysteresis margin instead of tuning it on the first day.
    #[arg(long)]
    pub hysteresis: Option<f64>,
    #[arg(long)]
    pub cells_per_site: Option<u32>,
    #[arg(long)]
    pub cell_capacity_mbps: Option<f64>,
    #[arg(long)]
    pub grid_cell_m: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ReportArgs {
    /// Directory holding earlier outputs (default `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const COMMON_KEYS: [&str; 3] = ["seed", "preset", "out"];
const GEN_KEYS: [&str; 7] = ["width", "height", "lanes", "aois", "indoor_sites", "outdoor_sites", "channels"];
const ALLOC_KEYS: [&str; 8] = [
    "scenario",
    "method",
    "steps",
    "users",
    "dt",
    "mobility",
    "lambda",
    "kappa",
];
const ALLOC_EXTRA_KEYS: [&str; 1] = ["training_episodes"];
const SLEEP_KEYS: [&str; 5] = ["scenario", "hysteresis", "cells_per_site", "cell_capacity_mbps", "grid_cell_m"];

/// Resolved common settings.
struct Run {
    out: PathBuf,
    seed: u64,
    preset: Preset,
    file: ConfigFile,
}

fn load_config(path: Option<&Path>, extra: &[&[&str]]) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let file = ConfigFile::parse(&text)?;
    let known: Vec<&str> = COMMON_KEYS.iter().chain(extra.iter().flat_map(|k| k.iter())).copied().collect();
    file.check_keys(&known)?;
    Ok(file)
}

fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => Ok(file.get(key)?),
    }
}

fn pick_enum<T: ValueEnum + Clone>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.raw(key) {
        None => Ok(None),
        Some(v) => T::from_str(v, true)
            .map(Some)
            .map_err(|_| CliError::usage(format!("invalid value `{v}` for `{key}` in config"))),
    }
}

fn resolve(common: &Common, extra: &[&[&str]]) -> Result<Run, CliError> {
    let file = load_config(common.config.as_deref(), extra)?;
    let seed = match pick(common.seed, &file, "seed")? {
        Some(s) => s,
        None => match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer")))?,
            Err(_) => return Err(CliError::usage(format!("a seed is required: pass --seed or set {SEED_ENV}"))),
        },
    };
    let preset = pick_enum(common.preset, &file, "preset")?.unwrap_or(Preset::Desk);
    let out = pick(common.out.clone(), &file, "out")?.unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| CliError {
        code: EXIT_WRITE,
        message: format!("cannot create {}: {e}", out.display()),
    })?;
    Ok(Run {
        out,
        seed,
        preset,
        file,
    })
}

fn positive<T: PartialOrd + Default + std::fmt::Display>(v: T, name: &str) -> Result<T, CliError> {
    if v > T::default() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("--{name} must be positive, got {v}")))
    }
}

fn scenario_for(run: &Run, path: Option<PathBuf>) -> Result<Scenario, CliError> {
    match pick(path, &run.file, "scenario")? {
        Some(p) => scenario_io::load_scenario(&p).map_err(|e| match e {
            ScenarioFileError::Read { .. } => CliError::missing(e.to_string()),
            e => e.into(),
        }),
        None => Ok(generate_scenario(run.seed, &run.preset.spec())?),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenScenario(a) => cmd_gen_scenario(a),
        Command::Allocate(a) => cmd_allocate(a),
        Command::Sleep(a) => cmd_sleep(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn cmd_gen_scenario(a: GenArgs) -> Result<(), CliError> {
    let run = resolve(&a.common, &[&GEN_KEYS])?;
    let f = &run.file;
    let mut spec = run.preset.spec();
    spec.width_m = pick(a.width, f, "width")?.unwrap_or(spec.width_m);
    spec.height_m = pick(a.height, f, "height")?.unwrap_or(spec.height_m);
    spec.lanes = pick(a.lanes, f, "lanes")?.unwrap_or(spec.lanes);
    spec.aois = pick(a.aois, f, "aois")?.unwrap_or(spec.aois);
    spec.indoor_sites = pick(a.indoor_sites, f, "indoor_sites")?.unwrap_or(spec.indoor_sites);
    spec.outdoor_sites = pick(a.outdoor_sites, f, "outdoor_sites")?.unwrap_or(spec.outdoor_sites);
    spec.n_channels = pick(a.channels, f, "channels")?.unwrap_or(spec.n_channels);
    positive(spec.width_m, "width")?;
    positive(spec.height_m, "height")?;
    positive(spec.lanes, "lanes")?;
    positive(spec.aois, "aois")?;
    positive(spec.n_channels, "channels")?;
    positive(spec.indoor_sites + spec.outdoor_sites, "indoor-sites plus --outdoor-sites")?;
    let scenario = generate_scenario(run.seed, &spec)?;
    let path = run.out.join("scenario.json");
    scenario_io::save_scenario(&path, &scenario)?;
    println!(
        "wrote {}: {} lanes, {} AoIs, {} buildings, {} sites ({} indoor, {} outdoor)",
        path.display(),
        scenario.lanes.lane_count(),
        scenario.aois.len(),
        scenario.buildings.len(),
        scenario.sites.len(),
        scenario.indoor_site_count(),
        scenario.sites.len() - scenario.indoor_site_count()
    );
    Ok(())
}

fn cmd_allocate(a: AllocateArgs) -> Result<(), CliError> {
    let run = resolve(&a.common, &[&ALLOC_KEYS, &ALLOC_EXTRA_KEYS])?;
    let f = &run.file;
    let scenario = scenario_for(&run, a.scenario.clone())?;
    let method = pick_enum(a.method, f, "method")?.unwrap_or(MethodArg::All);
    let mut cfg = EpisodeConfig {
        n_users: run.preset.users(),
        ..EpisodeConfig::default()
    };
    cfg.steps = pick(a.steps, f, "steps")?.unwrap_or(cfg.steps);
    cfg.n_users = pick(a.users, f, "users")?.unwrap_or(cfg.n_users);
    cfg.dt_s = pick(a.dt, f, "dt")?.unwrap_or(cfg.dt_s);
    if let Some(m) = pick_enum(a.mobility, f, "mobility")? {
        cfg.mobility = m.into();
    }
    if let Some(b) = scenario.sites.first() {
        cfg.channel.radio.rb_bandwidth_hz = b.rb_bandwidth_hz;
    }
    let mut params = AllocParams::default();
    params.matching.lambda = pick(a.lambda, f, "lambda")?.unwrap_or(params.matching.lambda);
    params.controller.kappa = pick(a.kappa, f, "kappa")?.unwrap_or(params.controller.kappa);
    params.training_episodes = pick(a.training_episodes, f, "training_episodes")?.unwrap_or(params.training_episodes);
    if !(params.matching.lambda >= 0.0 && params.matching.lambda.is_finite()) {
        return Err(CliError::usage("--lambda must be finite and non-negative"));
    }
    if !(params.controller.kappa > 0.0 && params.controller.kappa.is_finite()) {
        return Err(CliError::usage("--kappa must be finite and positive"));
    }
    cfg.validate()?;

    let clock = StdClock::new();
    let clock: Option<&dyn Clock> = if a.timing { Some(&clock) } else { None };
    let bandwidth = cfg.channel.radio.rb_bandwidth_hz;
    let mut traces: Vec<(Method, EpisodeTrace, f64)> = Vec::new();
    for m in method.methods() {
        let mut policy = build_policy(m, &scenario, cfg, run.seed, params)?;
        let mut env = Environment::reset(&scenario, cfg, run.seed)?;
        let trace = run_episode(&mut env, &mut policy, clock)?;
        traces.push((m, trace, policy.controller().kappa));
    }

    let rows: Vec<(&str, &EpisodeTrace)> = traces.iter().map(|(m, t, _)| (m.as_str(), t)).collect();
    output::write_kpi_csv(&run.out.join("kpi.csv"), &rows)?;
    let mut methods = serde_json::Map::new();
    for (m, t, kappa) in &traces {
        let mut entry = json!({
            "throughput_x_bandwidth": t.totals.reward / bandwidth,
            "throughput_bits": t.totals.reward,
            "satisfied_bits": t.totals.cost,
            "demand_bits": t.totals.initial_demand,
            "satisfaction": t.totals.satisfaction,
            "per_user_satisfaction": t.totals.per_user_satisfaction,
        });
        if *m == Method::Ours {
            entry["kappa"] = json!(kappa);
        }
        methods.insert(m.as_str().into(), entry);
    }
    let section = json!({
        "preset": run.preset.as_str(),
        "seed": run.seed,
        "n_users": cfg.n_users,
        "n_sites": scenario.sites.len(),
        "steps": cfg.steps,
        "bandwidth_hz": bandwidth,
        "methods": Value::Object(methods),
    });
    output::merge_summary(&run.out.join("summary.json"), "allocate", section)?;

    if a.dump_trajectories || a.dump_demand || a.dump_links {
        let (_, first, _) = &traces[0];
        write_dumps(&run.out, &scenario, cfg, run.seed, first, &a)?;
    }
    for (m, t, _) in &traces {
        println!(
            "{:<7} throughput {:>10.1} xB  satisfaction {:.4}",
            m.as_str(),
            t.totals.reward / bandwidth,
            t.totals.satisfaction
        );
    }
    Ok(())
}

/// Replays an episode's actions to dump the state behind it.
fn write_dumps(
    out: &Path,
    scenario: &Scenario,
    cfg: EpisodeConfig,
    seed: u64,
    trace: &EpisodeTrace,
    a: &AllocateArgs,
) -> Result<(), CliError> {
    if a.dump_demand {
        let rows: Vec<DemandRow> = demand_arrivals(seed, &cfg)
            .into_iter()
            .enumerate()
            .flat_map(|(t, row)| {
                row.into_iter().enumerate().map(move |(u, d)| DemandRow {
                    t: t as u32,
                    user_id: u as u32,
                    demand_bits: d,
                })
            })
            .collect();
        output::write_csv(&out.join("demand.csv"), &rows)?;
    }
    if !(a.dump_trajectories || a.dump_links) {
        return Ok(());
    }
    let mut env = Environment::reset(scenario, cfg, seed)?;
    let mut traj = Vec::new();
    let mut links = Vec::new();
    for (t, step) in trace.steps.iter().enumerate() {
        let t = t as u32;
        if a.dump_trajectories {
            for (u, (p, mover)) in env.positions().iter().zip(env.population().movers()).enumerate() {
                traj.push(TrajectoryRow {
                    t,
                    user_id: u as u32,
                    x: p.x,
                    y: p.y,
                    mode: mover.mode().as_str(),
                });
            }
        }
        if a.dump_links {
            for (u, &p) in env.positions().iter().enumerate() {
                for (b, lb) in env.channel().budgets_for_user(u as u32, p, env.step_index()).iter().enumerate() {
                    let site = &scenario.sites[b];
                    links.push(LinkRow {
                        t,
                        user_id: u as u32,
                        site_id: site.id,
                        los: lb.los,
                        l_d: lb.l_d,
                        l_s: lb.l_s,
                        l_f: lb.l_f,
                        pl_db: lb.pl,
                        rx_dbm: site.max_tx_power_dbm + lb.antenna_gain - lb.pl,
                    });
                }
            }
        }
        env.step(&step.action)?;
    }
    if a.dump_trajectories {
        output::write_csv(&out.join("trajectories.csv"), &traj)?;
    }
    if a.dump_links {
        output::write_csv(&out.join("links.csv"), &links)?;
    }
    Ok(())
}

fn cmd_sleep(a: SleepArgs) -> Result<(), CliError> {
    let run = resolve(&a.common, &[&SLEEP_KEYS])?;
    let f = &run.file;
    let scenario = scenario_for(&run, a.scenario.clone())?;
    let mut cfg = SleepConfig::default();
    cfg.cells_per_site = pick(a.cells_per_site, f, "cells_per_site")?.unwrap_or(cfg.cells_per_site);
    cfg.cell_capacity_bps = pick(a.cell_capacity_mbps, f, "cell_capacity_mbps")?
        .map(|m| m * 1e6)
        .unwrap_or(cfg.cell_capacity_bps);
    cfg.validate()?;
    let grid_m = pick(a.grid_cell_m, f, "grid_cell_m")?.unwrap_or(DEFAULT_GRID_CELL_M);
    let hysteresis = pick(a.hysteresis, f, "hysteresis")?;
    if let Some(h) = hysteresis {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(CliError::usage("--hysteresis must be finite and non-negative"));
        }
    }
    let grid = build_grid(&scenario, grid_m)?;
    let layout = CellLayout::uniform(&grid, cfg.cells_per_site, cfg.cell_capacity_bps)?;
    let traffic = synth_weekly_traffic(run.seed, &layout, &cfg);
    let mut week = run_week(&layout, &traffic, &cfg)?;
    if let Some(h) = hysteresis {
        week.ours = run_controller(&layout, &traffic, &cfg.energy, &mut Greedy { hysteresis: h });
        week.hysteresis = h;
        for (row, o) in week.rows.iter_mut().zip(&week.ours) {
            row.energy_ours = o.energy_wh;
            row.switches_ours = o.switches;
        }
    }
    output::write_week_csv(&run.out.join("week.csv"), &week)?;

    let from = mndt_core::demand::SLOTS_PER_DAY;
    let summary = |o: &[mndt_core::sleep_opt::SlotOutcome]| {
        json!({
            "energy_wh": WeekResult::total_energy(o),
            "switches": WeekResult::switches_from(o, 0),
            "switches_after_day1": WeekResult::switches_from(o, from),
            "status_changes": o.iter().map(|s| s.status_changes).sum::<usize>(),
            "switch_cost": o.iter().map(|s| s.switch_cost).sum::<f64>(),
            "unserved_bits": o.iter().map(|s| s.unserved_bps).sum::<f64>() * mndt_core::sleep_opt::SLOT_HOURS * 3600.0,
        })
    };
    let energy_ours = WeekResult::total_energy(&week.ours);
    let energy_on = WeekResult::total_energy(&week.always_on);
    let section = json!({
        "preset": run.preset.as_str(),
        "seed": run.seed,
        "slots": week.rows.len(),
        "grids": layout.n_grids(),
        "cells": layout.n_cells(),
        "hysteresis": week.hysteresis,
        "hysteresis_candidates": HYSTERESIS_GRID.to_vec(),
        "tuned": hysteresis.is_none(),
        "energy_ratio_ours_to_always_on": energy_ours / energy_on,
        "ours": summary(&week.ours),
        "always_on": summary(&week.always_on),
        "minimal_cells": summary(&week.minimal_cells),
    });
    output::merge_summary(&run.out.join("summary.json"), "sleep", section)?;
    println!(
        "sleep week: {} slots, h = {}, energy ours/always-on = {:.3}, minimal-cells/always-on = {:.3}",
        week.rows.len(),
        week.hysteresis,
        energy_ours / energy_on,
        WeekResult::total_energy(&week.minimal_cells) / energy_on
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let out = a.out.unwrap_or_else(|| PathBuf::from("out"));
    let text = report::render(&out)?;
    print!("{text}");
    Ok(())
}
