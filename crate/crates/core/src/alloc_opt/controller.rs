use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Per-user bits to aim for in the current step.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleStepDemand {
    pub bits: Vec<f64>,
}

/// Proportional feedback on the episode satisfaction ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionalController {
    pub kappa: f64,
    pub gain: f64,
    pub target: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
}

impl Default for ProportionalController {
    fn default() -> Self {
        ProportionalController {
            kappa: 1.0,
            gain: 2.0,
            target: 0.95,
            kappa_min: 0.5,
            kappa_max: 3.0,
        }
    }
}

impl ProportionalController {
    pub fn update(&mut self, achieved: f64) {
        self.kappa = (self.kappa + self.gain * (self.target - achieved)).clamp(self.kappa_min, self.kappa_max);
    }
}

/// `κ·remaining/T_rem`, clipped to the remaining demand.
pub fn single_step_demand(
    remaining: &[f64],
    remaining_time: u32,
    controller: &ProportionalController,
) -> SingleStepDemand {
    let t = remaining_time.max(1) as f64;
    SingleStepDemand {
        bits: remaining
            .iter()
            .map(|&r| (controller.kappa * r / t).clamp(0.0, r.max(0.0)))
            .collect(),
    }
}

/// `initial/T`, clipped to the remaining demand.
pub fn equal_division(initial: &[f64], remaining: &[f64], steps: u32) -> SingleStepDemand {
    let t = steps.max(1) as f64;
    SingleStepDemand {
        bits: initial
            .iter()
            .zip(remaining)
            .map(|(&d, &r)| (d / t).min(r).max(0.0))
            .collect(),
    }
}
