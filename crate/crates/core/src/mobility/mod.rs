//! User trajectories: A* routes, Krauss car-following, indoor social-force
//! motion, straight-line motion, and schedule-driven populations.

mod indoor;
mod krauss;
mod route;
mod schedule;

pub use indoor::{indoor_step, social_force, PedestrianParams, PedestrianState};
pub use krauss::{krauss_step, KraussParams, VehicleState};
pub use route::{plan_route, Route, Router};
pub use schedule::{
    generate_schedule, random_interior_point, DepartureProfile, Leg, MoveMode, PeakWindow,
    TravelSchedule,
};

use alloc::vec::Vec;

use crate::geom::Point;
use crate::rng::{self, domain};
use crate::scenario::Scenario;

/// Position after `t_s` seconds of uniform motion from `start` toward `end`,
/// stopping at `end`.
pub fn straight_line_position(start: Point, end: Point, speed: f64, t_s: f64) -> Point {
    let span = end - start;
    let len = span.norm();
    let travelled = (speed.max(0.0) * t_s.max(0.0)).min(len);
    if travelled >= len {
        return end;
    }
    start + span.unit() * travelled
}

/// Bumper-to-bumper spacing reserved per vehicle.
pub const VEHICLE_LENGTH_M: f64 = 5.0;

fn pedestrian_on_road() -> KraussParams {
    KraussParams {
        v_max: 1.34,
        accel: 0.5,
        decel: 1.0,
        tau: 1.0,
        imperfection: 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Activity {
    Idle,
    Indoor {
        aoi: u32,
        ped: PedestrianState,
    },
    Road {
        route: Vec<u32>,
        leg_index: usize,
        state: VehicleState,
        is_vehicle: bool,
        destination: Point,
    },
}

/// Schedule-driven mover: executes legs once their departure time passes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScheduledMover {
    schedule: TravelSchedule,
    next_leg: usize,
    activity: Activity,
    position: Point,
}

impl ScheduledMover {
    pub fn new(schedule: TravelSchedule) -> Self {
        let position = schedule
            .legs
            .first()
            .map(|l| l.origin)
            .unwrap_or_default();
        ScheduledMover {
            schedule,
            next_leg: 0,
            activity: Activity::Idle,
            position,
        }
    }

    pub fn schedule(&self) -> &TravelSchedule {
        &self.schedule
    }

    pub fn mode(&self) -> MoveMode {
        match &self.activity {
            Activity::Idle | Activity::Indoor { .. } => MoveMode::Indoor,
            Activity::Road { is_vehicle, .. } => {
                if *is_vehicle {
                    MoveMode::Vehicle
                } else {
                    MoveMode::Pedestrian
                }
            }
        }
    }

    fn vehicle(&self) -> Option<&VehicleState> {
        match &self.activity {
            Activity::Road {
                state,
                is_vehicle: true,
                ..
            } => Some(state),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mover {
    Static(Point),
    StraightLine { start: Point, end: Point, speed: f64 },
    Scheduled(ScheduledMover),
}

impl Mover {
    pub fn mode(&self) -> MoveMode {
        match self {
            Mover::Static(_) => MoveMode::Indoor,
            Mover::StraightLine { .. } => MoveMode::StraightLine,
            Mover::Scheduled(s) => s.mode(),
        }
    }
}

/// All users' movement state, advanced in lock-step.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    movers: Vec<Mover>,
    positions: Vec<Point>,
    elapsed_s: f64,
    start_s: f64,
    seed: u64,
    steps: u64,
}

struct LaneSnapshot {
    /// (lane, position, speed, user) for vehicles, sorted by lane then position.
    vehicles: Vec<(u32, f64, f64, usize)>,
}

impl LaneSnapshot {
    fn leader(&self, lane: u32, position: f64, user: usize) -> Option<(f64, f64)> {
        let start = self.vehicles.partition_point(|v| (v.0, v.1) < (lane, position));
        self.vehicles[start..]
            .iter()
            .take_while(|v| v.0 == lane)
            .find(|v| v.3 != user && (v.1 > position || (v.1 == position && v.3 > user)))
            .map(|v| (v.1, v.2))
    }
}

impl Population {
    /// Builds a population; scheduled movers are fast-forwarded to
    /// `start_s` by starting the latest leg that departed before it.
    pub fn new(movers: Vec<Mover>, start_s: f64, seed: u64) -> Self {
        let mut pop = Population {
            positions: Vec::with_capacity(movers.len()),
            movers,
            elapsed_s: 0.0,
            start_s,
            seed,
            steps: 0,
        };
        for m in &mut pop.movers {
            if let Mover::Scheduled(s) = m {
                while s.next_leg + 1 < s.schedule.legs.len()
                    && s.schedule.legs[s.next_leg + 1].departure_s <= start_s
                {
                    s.next_leg += 1;
                }
                if let Some(leg) = s.schedule.legs.get(s.next_leg) {
                    s.position = if leg.departure_s <= start_s {
                        leg.origin
                    } else {
                        s.position
                    };
                }
            }
        }
        pop.positions = pop.movers.iter().map(|m| current_position(m, 0.0)).collect();
        pop
    }

    pub fn len(&self) -> usize {
        self.movers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.movers.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn movers(&self) -> &[Mover] {
        &self.movers
    }

    pub fn clock_s(&self) -> f64 {
        self.start_s + self.elapsed_s
    }

    /// Advances every user by `dt_s`. Vehicles read their leader from the
    /// previous snapshot, so the update is independent of user order.
    pub fn step(&mut self, scenario: &Scenario, router: &Router<'_>, dt_s: f64) {
        let now = self.start_s + self.elapsed_s + dt_s;
        let mut vehicles: Vec<(u32, f64, f64, usize)> = self
            .movers
            .iter()
            .enumerate()
            .filter_map(|(u, m)| match m {
                Mover::Scheduled(s) => s.vehicle().map(|v| (v.lane, v.position_m, v.speed_mps, u)),
                _ => None,
            })
            .collect();
        vehicles.sort_by(|a, b| (a.0, a.1, a.3).partial_cmp(&(b.0, b.1, b.3)).unwrap());
        let snapshot = LaneSnapshot { vehicles };
        let (seed, step) = (self.seed, self.steps);
        let elapsed = self.elapsed_s + dt_s;
        for (u, m) in self.movers.iter_mut().enumerate() {
            if let Mover::Scheduled(s) = m {
                advance_scheduled(s, u, scenario, router, &snapshot, dt_s, now, seed, step);
            }
        }
        self.elapsed_s = elapsed;
        self.steps += 1;
        for (p, m) in self.positions.iter_mut().zip(&self.movers) {
            *p = current_position(m, elapsed);
        }
    }
}

fn current_position(m: &Mover, elapsed_s: f64) -> Point {
    match m {
        Mover::Static(p) => *p,
        Mover::StraightLine { start, end, speed } => {
            straight_line_position(*start, *end, *speed, elapsed_s)
        }
        Mover::Scheduled(s) => s.position,
    }
}

#[allow(clippy::too_many_arguments)]
fn advance_scheduled(
    s: &mut ScheduledMover,
    user: usize,
    scenario: &Scenario,
    router: &Router<'_>,
    snapshot: &LaneSnapshot,
    dt_s: f64,
    now_s: f64,
    seed: u64,
    step: u64,
) {
    let mut rng = rng::stream(seed, domain::MOBILITY, &[user as u64, step]);
    let lanes = &scenario.lanes;

    let in_transit = matches!(s.activity, Activity::Road { .. });
    if !in_transit {
        if let Some(leg) = s.schedule.legs.get(s.next_leg) {
            if leg.departure_s <= now_s {
                let leg = leg.clone();
                s.next_leg += 1;
                s.position = leg.origin;
                s.activity = start_leg(&leg, scenario, router);
                if matches!(s.activity, Activity::Idle) {
                    s.position = leg.destination;
                }
            }
        }
    }

    match &mut s.activity {
        Activity::Idle => {}
        Activity::Indoor { aoi, ped } => {
            *ped = indoor_step(ped, &scenario.aois[*aoi as usize], dt_s);
            s.position = ped.position;
        }
        Activity::Road {
            route,
            leg_index,
            state,
            is_vehicle,
            destination,
        } => {
            let leader = if *is_vehicle {
                snapshot.leader(state.lane, state.position_m, user)
            } else {
                None
            };
            let next = match leader {
                Some((pos, speed)) => {
                    let lead = VehicleState {
                        position_m: pos,
                        speed_mps: speed,
                        ..*state
                    };
                    let gap = pos - state.position_m - VEHICLE_LENGTH_M;
                    krauss_step(state, Some(&lead), gap, dt_s, &mut rng)
                }
                None => krauss_step(state, None, 0.0, dt_s, &mut rng),
            };
            *state = next;
            let mut arrived = false;
            loop {
                let len = lanes.edges[state.lane as usize].length_m;
                if state.position_m < len {
                    break;
                }
                state.position_m -= len;
                *leg_index += 1;
                if *leg_index >= route.len() {
                    arrived = true;
                    break;
                }
                state.lane = route[*leg_index];
                if *is_vehicle {
                    state.params.v_max = lanes.edges[state.lane as usize].speed_limit_mps;
                }
            }
            if arrived {
                s.position = *destination;
                s.activity = Activity::Idle;
            } else {
                s.position = lanes.point_on_lane(state.lane, state.position_m);
            }
        }
    }
}

fn start_leg(leg: &Leg, scenario: &Scenario, router: &Router<'_>) -> Activity {
    match leg.mode {
        MoveMode::Indoor => match leg.aoi {
            Some(aoi) if (aoi as usize) < scenario.aois.len() => Activity::Indoor {
                aoi,
                ped: PedestrianState {
                    position: leg.origin,
                    velocity: Point::default(),
                    destination: leg.destination,
                    params: PedestrianParams::default(),
                },
            },
            _ => Activity::Idle,
        },
        MoveMode::Vehicle | MoveMode::Pedestrian => {
            let lanes = &scenario.lanes;
            let (Some(o), Some(d)) = (lanes.nearest_node(leg.origin), lanes.nearest_node(leg.destination))
            else {
                return Activity::Idle;
            };
            match router.route(o, d) {
                Ok(route) if !route.lanes.is_empty() => {
                    let lane = route.lanes[0];
                    let is_vehicle = leg.mode == MoveMode::Vehicle;
                    let params = if is_vehicle {
                        KraussParams::with_speed_limit(lanes.edges[lane as usize].speed_limit_mps)
                    } else {
                        pedestrian_on_road()
                    };
                    Activity::Road {
                        route: route.lanes,
                        leg_index: 0,
                        state: VehicleState {
                            lane,
                            position_m: 0.0,
                            speed_mps: 0.0,
                            params,
                        },
                        is_vehicle,
                        destination: leg.destination,
                    }
                }
                // Same node or no path: the trip completes immediately.
                _ => Activity::Idle,
            }
        }
        MoveMode::StraightLine => Activity::Idle,
    }
}
