//! Mobile-network digital twin: a discrete-time simulation engine for users,
//! base stations and the radio channel, exposed as a constrained-MDP
//! environment, together with a demand-decoupled resource allocator and a
//! cell sleep controller.
//!
//! The crate is `no_std` + `alloc`. Enable the `std` feature for
//! `std::error::Error` integration and `parallel` for rayon-backed link
//! computation.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod alloc_opt;
pub mod channel;
pub mod demand;
pub mod engine;
mod error;
pub mod geom;
pub mod math;
pub mod matrix;
pub mod mobility;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod sleep_opt;

pub use error::{Constraint, ConstraintViolation, Error, Result};
pub use geom::{Point, Polygon, Rect};
pub use matrix::Matrix;
