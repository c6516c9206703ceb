use serde::{Deserialize, Serialize};

use crate::geom::Point;
use crate::math;
use crate::scenario::Aoi;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedestrianParams {
    pub desired_speed: f64,
    pub relaxation_s: f64,
    /// Obstacle repulsion strength A_obs (m/s²).
    pub obstacle_strength: f64,
    /// Obstacle repulsion range B_obs (m).
    pub obstacle_range: f64,
}

impl Default for PedestrianParams {
    fn default() -> Self {
        PedestrianParams {
            desired_speed: 1.34,
            relaxation_s: 0.5,
            obstacle_strength: 2.0,
            obstacle_range: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedestrianState {
    pub position: Point,
    pub velocity: Point,
    pub destination: Point,
    pub params: PedestrianParams,
}

/// Longest explicit-Euler substep; a fifth of the default relaxation time.
const MAX_SUBSTEP_S: f64 = 0.1;

/// Social-force acceleration: relaxation toward the desired velocity plus
/// exponential repulsion from each obstacle's nearest point.
pub fn social_force(ped: &PedestrianState, aoi: &Aoi) -> Point {
    let p = &ped.params;
    let desired = (ped.destination - ped.position).unit() * p.desired_speed;
    let mut acc = (desired - ped.velocity) * (1.0 / p.relaxation_s);
    for obs in &aoi.obstacles {
        let (q, d) = obs.nearest_boundary_point(ped.position);
        let mut away = (ped.position - q).unit();
        if obs.contains(ped.position) {
            away = away * -1.0;
        }
        acc = acc + away * (p.obstacle_strength * math::exp(-d / p.obstacle_range));
    }
    acc
}

/// Advances a pedestrian inside an AoI by `dt_s`, integrating the social
/// force explicitly in substeps and projecting back inside the footprint.
pub fn indoor_step(ped: &PedestrianState, aoi: &Aoi, dt_s: f64) -> PedestrianState {
    let mut s = *ped;
    if !(dt_s > 0.0) {
        return s;
    }
    let n = math::ceil(dt_s / MAX_SUBSTEP_S).max(1.0) as usize;
    let h = dt_s / n as f64;
    let v_cap = 1.5 * s.params.desired_speed;
    for _ in 0..n {
        let acc = social_force(&s, aoi);
        let mut vel = s.velocity + acc * h;
        let speed = vel.norm();
        if speed > v_cap {
            vel = vel * (v_cap / speed);
        }
        let mut pos = s.position + vel * h;
        if !aoi.footprint.contains(pos) {
            let (q, _) = aoi.footprint.nearest_boundary_point(pos);
            let outward = (pos - q).unit();
            let inward = (aoi.footprint.centroid() - q).unit();
            pos = q + inward * 1e-3;
            vel = vel - outward * vel.dot(outward);
        }
        s.position = pos;
        s.velocity = vel;
    }
    s
}
