//! File formats, configuration, reports and the `mndt` command line for
//! the mobile-network digital twin in [`mndt_core`].

pub mod cli;
pub mod config;
pub mod output;
pub mod report;
pub mod scenario_io;

use std::time::Instant;

use mndt_core::engine::Clock;

/// Monotonic wall clock measured from its creation.
#[derive(Clone, Copy, Debug)]
pub struct StdClock {
    origin: Instant,
}

impl StdClock {
    pub fn new() -> Self {
        StdClock { origin: Instant::now() }
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_s(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}
