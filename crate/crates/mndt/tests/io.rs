use mndt::config::{ConfigError, ConfigFile};
use mndt::scenario_io::{from_json, load_scenario, save_scenario, to_json, ScenarioFileError};
use mndt_core::scenario::{generate_scenario, Aoi, BaseStationSite, Lane, LaneGraph, Scenario, ScenarioSpec};
use mndt_core::{Error, Point, Polygon, Rect};

fn minimal() -> Scenario {
    Scenario {
        extent: Rect::from_size(100.0, 100.0),
        lanes: LaneGraph {
            nodes: vec![Point::new(10.0, 10.0), Point::new(90.0, 10.0)],
            edges: vec![Lane {
                from: 0,
                to: 1,
                length_m: 80.0,
                speed_limit_mps: 10.0,
            }],
        },
        aois: vec![Aoi {
            footprint: Polygon::from_rect(&Rect::new(20.0, 20.0, 60.0, 60.0)),
            entrances: vec![Point::new(40.0, 20.0)],
            obstacles: vec![Polygon::from_rect(&Rect::new(30.0, 30.0, 35.0, 35.0))],
        }],
        buildings: vec![],
        sites: vec![BaseStationSite {
            id: 0,
            position: Point::new(10.0, 10.0),
            indoor: false,
            max_tx_power_dbm: 30.0,
            antenna_height_m: 25.0,
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            carrier_freq_mhz: 2600.0,
            n_channels: 45,
            rb_bandwidth_hz: 1.8e5,
        }],
    }
}

fn invariant(r: Result<Scenario, ScenarioFileError>) -> &'static str {
    match r {
        Err(ScenarioFileError::Invalid(Error::InvalidScenario { invariant, .. })) => invariant,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_scenario_round_trips() {
    let s = minimal();
    let text = to_json(&s);
    let back = from_json(&text).unwrap();
    assert_eq!(back, s);
    assert_eq!(to_json(&back), text);
}

#[test]
fn generated_scenario_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    let s = generate_scenario(3, &ScenarioSpec::desk()).unwrap();
    save_scenario(&path, &s).unwrap();
    assert_eq!(load_scenario(&path).unwrap(), s);
}

#[test]
fn obstacle_outside_aoi_names_containment() {
    let mut s = minimal();
    s.aois[0].obstacles[0] = Polygon::from_rect(&Rect::new(70.0, 70.0, 75.0, 75.0));
    assert_eq!(invariant(from_json(&to_json(&s))), "obstacle-contained-in-aoi");
}

#[test]
fn other_invariants_are_named() {
    let mut s = minimal();
    s.lanes.edges[0].length_m = 10.0;
    assert_eq!(invariant(from_json(&to_json(&s))), "lane-length-at-least-euclidean");

    let mut s = minimal();
    s.sites.push(s.sites[0].clone());
    assert_eq!(invariant(from_json(&to_json(&s))), "unique-site-ids");

    let mut s = minimal();
    s.sites[0].position = Point::new(500.0, 10.0);
    assert_eq!(invariant(from_json(&to_json(&s))), "geometry-within-extent");
}

#[test]
fn schema_version_and_unknown_fields_are_checked() {
    let text = to_json(&minimal());
    let v2 = text.replacen("\"schema_version\": 1", "\"schema_version\": 2", 1);
    assert!(matches!(from_json(&v2), Err(ScenarioFileError::Version { found: 2 })));
    let extra = text.replacen('{', "{\n  \"colour\": \"red\",", 1);
    assert!(matches!(from_json(&extra), Err(ScenarioFileError::Parse(_))));
    let nested = text.replacen("\"height_m\"", "\"colour\": 1, \"height_m\"", 1);
    let nested = if nested == text {
        text.replacen("\"length_m\"", "\"colour\": 1, \"length_m\"", 1)
    } else {
        nested
    };
    assert_ne!(nested, text);
    assert!(matches!(from_json(&nested), Err(ScenarioFileError::Parse(_))));
    assert!(matches!(from_json("not json"), Err(ScenarioFileError::Parse(_))));
}

#[test]
fn missing_file_is_a_read_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_scenario(&dir.path().join("absent.json")),
        Err(ScenarioFileError::Read { .. })
    ));
}

#[test]
fn config_file_parses_and_rejects_bad_input() {
    let f = ConfigFile::parse("# comment\nseed = 7\ncells-per-site = 2\n\nmethod = ours  # trailing\n").unwrap();
    assert_eq!(f.get::<u64>("seed").unwrap(), Some(7));
    assert_eq!(f.get::<u32>("cells_per_site").unwrap(), Some(2));
    assert_eq!(f.raw("method"), Some("ours"));
    assert!(f.check_keys(&["seed", "cells_per_site", "method"]).is_ok());
    assert!(matches!(f.check_keys(&["seed"]), Err(ConfigError::UnknownKey { .. })));
    assert!(matches!(f.get::<u64>("method"), Err(ConfigError::BadValue { .. })));
    assert!(matches!(ConfigFile::parse("seed 7"), Err(ConfigError::Syntax { .. })));
    assert!(ConfigFile::parse("seed = 1\nseed = 2").is_err());
}
