use rand::Rng;
use serde::{Deserialize, Serialize};

/// Krauss car-following parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KraussParams {
    pub v_max: f64,
    pub accel: f64,
    pub decel: f64,
    pub tau: f64,
    /// Driver imperfection ε in [0, 1].
    pub imperfection: f64,
}

impl KraussParams {
    pub fn with_speed_limit(v_max: f64) -> Self {
        KraussParams {
            v_max,
            ..KraussParams::default()
        }
    }
}

impl Default for KraussParams {
    fn default() -> Self {
        KraussParams {
            v_max: 13.9,
            accel: 2.0,
            decel: 4.0,
            tau: 1.0,
            imperfection: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub lane: u32,
    pub position_m: f64,
    pub speed_mps: f64,
    pub params: KraussParams,
}

/// One Krauss update. `gap_m` is the bumper-to-bumper distance to the
/// leader. Exactly one uniform is drawn from `rng` per call.
pub fn krauss_step<R: Rng + ?Sized>(
    follower: &VehicleState,
    leader: Option<&VehicleState>,
    gap_m: f64,
    dt_s: f64,
    rng: &mut R,
) -> VehicleState {
    let p = follower.params;
    let accel = p.accel.max(f64::MIN_POSITIVE);
    let decel = p.decel.max(f64::MIN_POSITIVE);
    let tau = p.tau.max(f64::MIN_POSITIVE);
    let eps = p.imperfection.clamp(0.0, 1.0);
    let v_max = p.v_max.max(0.0);
    let v = follower.speed_mps.clamp(0.0, v_max);
    let gap = gap_m.max(0.0);

    let v_safe = match leader {
        Some(l) => {
            let vl = l.speed_mps.max(0.0);
            let v_mean = 0.5 * (v + vl);
            vl + (gap - vl * tau) / (v_mean / decel + tau)
        }
        None => f64::INFINITY,
    };
    let v_des = v_max.min(v + accel * dt_s).min(v_safe);
    let eta = rng.random::<f64>() * eps * accel * dt_s;
    let mut v_new = (v_des - eta).max(0.0);
    if leader.is_some() {
        // The leader never moves backwards, so covering at most the current
        // gap keeps the gap non-negative under simultaneous updates.
        v_new = v_new.min(gap / dt_s);
    }
    VehicleState {
        lane: follower.lane,
        position_m: follower.position_m + v_new * dt_s,
        speed_mps: v_new,
        params: follower.params,
    }
}
