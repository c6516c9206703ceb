//! CSV and JSON artifacts.

use std::fs;
use std::io;
use std::path::Path;

use mndt_core::engine::EpisodeTrace;
use mndt_core::sleep_opt::WeekResult;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {message}")]
pub struct WriteError {
    pub path: String,
    pub message: String,
}

impl WriteError {
    fn new(path: &Path, e: impl std::fmt::Display) -> Self {
        WriteError {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), WriteError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| WriteError::new(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| WriteError::new(path, e))?;
    }
    w.flush().map_err(|e| WriteError::new(path, e))
}

#[derive(Serialize)]
struct KpiRow<'a> {
    method: &'a str,
    t: u32,
    sum_bs_rate: f64,
    total_tx_power_w: f64,
    throughput_bits: f64,
    outage_ratio: f64,
    action_time_s: f64,
    interaction_time_s: f64,
}

/// One row per method and step.
pub fn write_kpi_csv(path: &Path, runs: &[(&str, &EpisodeTrace)]) -> Result<(), WriteError> {
    write_rows(
        path,
        runs.iter().flat_map(|(method, trace)| {
            trace.steps.iter().map(move |s| KpiRow {
                method,
                t: s.kpi.t,
                sum_bs_rate: s.kpi.sum_bs_rate,
                total_tx_power_w: s.kpi.total_tx_power_w,
                throughput_bits: s.kpi.network_throughput,
                outage_ratio: s.kpi.outage_ratio,
                action_time_s: s.kpi.action_selection_time_s,
                interaction_time_s: s.kpi.interaction_time_s,
            })
        }),
    )
}

pub fn write_week_csv(path: &Path, week: &WeekResult) -> Result<(), WriteError> {
    write_rows(path, &week.rows)
}

#[derive(Serialize)]
pub struct TrajectoryRow {
    pub t: u32,
    pub user_id: u32,
    pub x: f64,
    pub y: f64,
    pub mode: &'static str,
}

#[derive(Serialize)]
pub struct DemandRow {
    pub t: u32,
    pub user_id: u32,
    pub demand_bits: f64,
}

#[derive(Serialize)]
pub struct LinkRow {
    pub t: u32,
    pub user_id: u32,
    pub site_id: u32,
    pub los: bool,
    #[serde(rename = "L_d")]
    pub l_d: f64,
    #[serde(rename = "L_s")]
    pub l_s: f64,
    #[serde(rename = "L_f")]
    pub l_f: f64,
    #[serde(rename = "PL_dB")]
    pub pl_db: f64,
    pub rx_dbm: f64,
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<(), WriteError> {
    write_rows(path, rows)
}

/// `x,y` pairs for external plotting.
pub fn write_series(path: &Path, points: &[(f64, f64)]) -> Result<(), WriteError> {
    #[derive(Serialize)]
    struct Xy {
        x: f64,
        y: f64,
    }
    write_rows(path, points.iter().map(|&(x, y)| Xy { x, y }))
}

/// Reads `summary.json` as an object; a missing file is empty.
pub fn read_summary(path: &Path) -> io::Result<Option<Map<String, Value>>> {
    match fs::read_to_string(path) {
        Ok(text) => match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(m)) => Ok(Some(m)),
            _ => Err(io::Error::new(io::ErrorKind::InvalidData, "summary.json is not a JSON object")),
        },
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

/// Replaces the `key` section of `summary.json`, keeping the others.
pub fn merge_summary(path: &Path, key: &str, value: Value) -> Result<(), WriteError> {
    let mut map = match read_summary(path) {
        Ok(Some(m)) => m,
        _ => Map::new(),
    };
    map.insert(key.to_string(), value);
    write_json(path, &Value::Object(map))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), WriteError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| WriteError::new(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| WriteError::new(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), WriteError> {
    fs::write(path, text).map_err(|e| WriteError::new(path, e))
}
