//! Versioned JSON scenario files.

use std::fs;
use std::io;
use std::path::Path;

use mndt_core::scenario::{Aoi, BaseStationSite, Building, LaneGraph, Scenario};
use mndt_core::Rect;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("{0}")]
    Invalid(mndt_core::Error),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: u32,
    extent: Rect,
    lanes: LaneGraph,
    aois: Vec<Aoi>,
    buildings: Vec<Building>,
    sites: Vec<BaseStationSite>,
}

pub fn to_json(scenario: &Scenario) -> String {
    let file = ScenarioFile {
        schema_version: SCHEMA_VERSION,
        extent: scenario.extent,
        lanes: scenario.lanes.clone(),
        aois: scenario.aois.clone(),
        buildings: scenario.buildings.clone(),
        sites: scenario.sites.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("scenario serializes");
    s.push('\n');
    s
}

/// Parses and validates a scenario document.
pub fn from_json(text: &str) -> Result<Scenario, ScenarioFileError> {
    let version: serde_json::Value = serde_json::from_str(text)?;
    match version.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(ScenarioFileError::Version { found: v as u32 }),
        None => return Err(ScenarioFileError::Version { found: 0 }),
    }
    let file: ScenarioFile = serde_json::from_value(version)?;
    let scenario = Scenario {
        extent: file.extent,
        lanes: file.lanes,
        aois: file.aois,
        buildings: file.buildings,
        sites: file.sites,
    };
    scenario.validate().map_err(ScenarioFileError::Invalid)?;
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioFileError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioFileError::Read {
        path: path.display().to_string(),
        source,
    })?;
    from_json(&text)
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<(), ScenarioFileError> {
    fs::write(path, to_json(scenario)).map_err(|source| ScenarioFileError::Write {
        path: path.display().to_string(),
        source,
    })
}
