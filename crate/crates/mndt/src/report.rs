//! Human-readable report and plot series from a run directory.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::cli::CliError;
use crate::output;

const METHOD_ORDER: [&str; 3] = ["ours", "equal", "ignore"];
const METHOD_LABEL: [&str; 3] = ["ours (demand-aware)", "equally dividing", "ignoring demands"];

#[derive(Deserialize)]
struct KpiIn {
    method: String,
    t: u32,
    throughput_bits: f64,
}

#[derive(Deserialize)]
struct WeekIn {
    slot: usize,
    traffic_total: f64,
    energy_ours: f64,
    energy_always_on: f64,
    energy_minimal_cells: f64,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::missing(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::missing(format!("{}: {e}", path.display())))
}

fn num(v: &Value, key: &str) -> f64 {
    v.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn allocation_section(out: &Path, alloc: &Value, text: &mut String) -> Result<(), CliError> {
    let bandwidth = num(alloc, "bandwidth_hz");
    let _ = writeln!(
        text,
        "Resource allocation: preset {}, seed {}, {} users, {} sites, {} steps",
        alloc.get("preset").and_then(Value::as_str).unwrap_or("?"),
        alloc.get("seed").unwrap_or(&Value::Null),
        alloc.get("n_users").unwrap_or(&Value::Null),
        alloc.get("n_sites").unwrap_or(&Value::Null),
        alloc.get("steps").unwrap_or(&Value::Null),
    );
    let _ = writeln!(text, "{:<22}{:>26}{:>16}", "Method", "Throughput(xBandwidth)", "Satisfaction");
    let methods = alloc.get("methods").and_then(Value::as_object).cloned().unwrap_or_default();
    for (name, label) in METHOD_ORDER.iter().zip(METHOD_LABEL) {
        if let Some(m) = methods.get(*name) {
            let _ = writeln!(
                text,
                "{:<22}{:>26.1}{:>15.2}%",
                label,
                num(m, "throughput_x_bandwidth"),
                100.0 * num(m, "satisfaction")
            );
        }
    }
    let kpi = read_csv::<KpiIn>(&out.join("kpi.csv"))?;
    for name in METHOD_ORDER.iter().filter(|n| methods.contains_key(**n)) {
        let pts: Vec<(f64, f64)> = kpi
            .iter()
            .filter(|r| r.method == *name)
            .map(|r| (r.t as f64, r.throughput_bits / bandwidth))
            .collect();
        output::write_series(&out.join(format!("series_throughput_{name}.csv")), &pts)?;
    }
    Ok(())
}

fn sleep_section(out: &Path, sleep: &Value, text: &mut String) -> Result<(), CliError> {
    let _ = writeln!(
        text,
        "Cell sleep week: {} slots, {} grids, {} cells, hysteresis {}",
        sleep.get("slots").unwrap_or(&Value::Null),
        sleep.get("grids").unwrap_or(&Value::Null),
        sleep.get("cells").unwrap_or(&Value::Null),
        sleep.get("hysteresis").unwrap_or(&Value::Null),
    );
    let _ = writeln!(
        text,
        "{:<16}{:>14}{:>14}{:>12}{:>16}",
        "Controller", "Energy (kWh)", "vs always-on", "Switches", "Unserved (Gb)"
    );
    let base = sleep.get("always_on").map(|v| num(v, "energy_wh")).unwrap_or(f64::NAN);
    for (key, label) in [("ours", "ours (greedy)"), ("always_on", "always on"), ("minimal_cells", "minimal cells")] {
        if let Some(v) = sleep.get(key) {
            let e = num(v, "energy_wh");
            let _ = writeln!(
                text,
                "{:<16}{:>14.1}{:>13.1}%{:>12}{:>16.3}",
                label,
                e / 1000.0,
                100.0 * e / base,
                v.get("switches").and_then(Value::as_u64).unwrap_or(0),
                num(v, "unserved_bits") / 1e9
            );
        }
    }
    let week = read_csv::<WeekIn>(&out.join("week.csv"))?;
    let series: [(&str, fn(&WeekIn) -> f64); 4] = [
        ("traffic", |r| r.traffic_total),
        ("energy_ours", |r| r.energy_ours),
        ("energy_always_on", |r| r.energy_always_on),
        ("energy_minimal_cells", |r| r.energy_minimal_cells),
    ];
    for (name, f) in series {
        let pts: Vec<(f64, f64)> = week.iter().map(|r| (r.slot as f64, f(r))).collect();
        output::write_series(&out.join(format!("series_{name}.csv")), &pts)?;
    }
    Ok(())
}

/// Writes `report.txt` and the `series_*.csv` files under `out` and
/// returns the report text.
pub fn render(out: &Path) -> Result<String, CliError> {
    let summary_path = out.join("summary.json");
    let summary: Map<String, Value> = match output::read_summary(&summary_path) {
        Ok(Some(m)) => m,
        Ok(None) => {
            return Err(CliError::missing(format!(
                "{} not found; run `allocate` or `sleep` first",
                summary_path.display()
            )))
        }
        Err(e) => return Err(CliError::missing(format!("{}: {e}", summary_path.display()))),
    };
    let mut text = String::new();
    if let Some(alloc) = summary.get("allocate") {
        allocation_section(out, alloc, &mut text)?;
    }
    if let Some(sleep) = summary.get("sleep") {
        if !text.is_empty() {
            text.push('\n');
        }
        sleep_section(out, sleep, &mut text)?;
    }
    if text.is_empty() {
        return Err(CliError::missing(format!(
            "{} holds no allocate or sleep results",
            summary_path.display()
        )));
    }
    output::write_text(&out.join("report.txt"), &text)?;
    Ok(text)
}
