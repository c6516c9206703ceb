use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::rng::{self, domain, SimRng};
use crate::scenario::{Aoi, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveMode {
    Vehicle,
    Pedestrian,
    Indoor,
    StraightLine,
}

impl MoveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MoveMode::Vehicle => "vehicle",
            MoveMode::Pedestrian => "pedestrian",
            MoveMode::Indoor => "indoor",
            MoveMode::StraightLine => "straight_line",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub origin: Point,
    pub destination: Point,
    pub departure_s: f64,
    pub mode: MoveMode,
    /// The AoI an indoor leg takes place in.
    pub aoi: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelSchedule {
    pub user: u32,
    pub legs: Vec<Leg>,
}

impl TravelSchedule {
    /// Departures strictly increase and each leg starts where the previous
    /// one ended.
    pub fn is_consistent(&self) -> bool {
        self.legs.windows(2).all(|w| {
            w[1].departure_s > w[0].departure_s && w[1].origin == w[0].destination
        })
    }
}

/// A truncated-normal departure window, in hours of the day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakWindow {
    pub mean_h: f64,
    pub sd_h: f64,
    pub lo_h: f64,
    pub hi_h: f64,
}

/// Two-peak diurnal departure profile: one outbound trip in the morning
/// window and one return trip in the evening window per day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartureProfile {
    pub morning: PeakWindow,
    pub evening: PeakWindow,
}

impl Default for DepartureProfile {
    fn default() -> Self {
        DepartureProfile {
            morning: PeakWindow {
                mean_h: 8.0,
                sd_h: 1.0,
                lo_h: 5.0,
                hi_h: 11.0,
            },
            evening: PeakWindow {
                mean_h: 18.0,
                sd_h: 1.5,
                lo_h: 14.0,
                hi_h: 23.0,
            },
        }
    }
}

impl PeakWindow {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        let normal = Normal::new(self.mean_h, self.sd_h).expect("positive sd");
        for _ in 0..64 {
            let h = normal.sample(rng);
            if (self.lo_h..=self.hi_h).contains(&h) {
                return h;
            }
        }
        self.mean_h.clamp(self.lo_h, self.hi_h)
    }
}

/// Walking is chosen for trips shorter than this.
const WALK_LIMIT_M: f64 = 800.0;
const VEHICLE_SPEED_ESTIMATE: f64 = 10.0;
const WALK_SPEED_ESTIMATE: f64 = 1.34;

/// A random point inside the AoI footprint and outside its obstacles.
pub fn random_interior_point(aoi: &Aoi, rng: &mut SimRng) -> Point {
    let b = aoi.footprint.bbox();
    for _ in 0..64 {
        let p = Point::new(
            rng.random_range(b.min_x..=b.max_x),
            rng.random_range(b.min_y..=b.max_y),
        );
        if aoi.footprint.contains(p) && !aoi.obstacles.iter().any(|o| o.contains(p)) {
            return p;
        }
    }
    aoi.footprint.centroid()
}

fn entrance(aoi: &Aoi, rng: &mut SimRng) -> Point {
    aoi.entrances[rng.random_range(0..aoi.entrances.len())]
}

/// Home/work schedule for one user: dwell at home, commute in the morning
/// window, dwell at work, return in the evening window, repeated daily.
/// Pure in `(seed, user)`.
pub fn generate_schedule(
    seed: u64,
    scenario: &Scenario,
    horizon_s: f64,
    user: u32,
    profile: &DepartureProfile,
) -> TravelSchedule {
    let mut rng = rng::stream(seed, domain::SCHEDULE, &[user as u64]);
    let n_aoi = scenario.aois.len();
    let home = rng.random_range(0..n_aoi);
    let work = if n_aoi > 1 {
        let w = rng.random_range(0..n_aoi - 1);
        if w >= home {
            w + 1
        } else {
            w
        }
    } else {
        home
    };
    let home_aoi = &scenario.aois[home];
    let work_aoi = &scenario.aois[work];
    let home_spot = random_interior_point(home_aoi, &mut rng);
    let work_spot = random_interior_point(work_aoi, &mut rng);
    let home_door = entrance(home_aoi, &mut rng);
    let work_door = entrance(work_aoi, &mut rng);

    let trip_mode = |a: Point, b: Point| {
        let d = a.dist(b);
        if d < WALK_LIMIT_M {
            (MoveMode::Pedestrian, d / WALK_SPEED_ESTIMATE)
        } else {
            (MoveMode::Vehicle, d / VEHICLE_SPEED_ESTIMATE)
        }
    };

    let mut legs = Vec::new();
    let push = |leg: Leg, legs: &mut Vec<Leg>| {
        if leg.departure_s < horizon_s {
            legs.push(leg);
        }
    };
    push(
        Leg {
            origin: home_door,
            destination: home_spot,
            departure_s: 0.0,
            mode: MoveMode::Indoor,
            aoi: Some(home as u32),
        },
        &mut legs,
    );
    let mut day = 0.0;
    while day * 86_400.0 < horizon_s {
        let base = day * 86_400.0;
        let out_t = base + profile.morning.sample(&mut rng) * 3600.0;
        let back_t = base + profile.evening.sample(&mut rng) * 3600.0;
        let (mode, est) = trip_mode(home_spot, work_door);
        push(
            Leg {
                origin: home_spot,
                destination: work_door,
                departure_s: out_t,
                mode,
                aoi: None,
            },
            &mut legs,
        );
        push(
            Leg {
                origin: work_door,
                destination: work_spot,
                departure_s: out_t + est + 60.0,
                mode: MoveMode::Indoor,
                aoi: Some(work as u32),
            },
            &mut legs,
        );
        let (mode, est) = trip_mode(work_spot, home_door);
        push(
            Leg {
                origin: work_spot,
                destination: home_door,
                departure_s: back_t,
                mode,
                aoi: None,
            },
            &mut legs,
        );
        push(
            Leg {
                origin: home_door,
                destination: home_spot,
                departure_s: back_t + est + 60.0,
                mode: MoveMode::Indoor,
                aoi: Some(home as u32),
            },
            &mut legs,
        );
        day += 1.0;
    }
    TravelSchedule { user, legs }
}
