//! Simulation and verification of one-dimensional systems of hard Brownian rods.
//!
//! Rods are intervals of width `epsilon` whose centers diffuse and reflect off
//! each other. Three systems are provided:
//!
//! * **barrier-pushed** (model A): a fixed number of rods pushed from the left
//!   by a wall moving at constant speed;
//! * **influx-killed** (model C): rods are pushed into `[0, 1]` at the left at a
//!   constant rate and removed when they reach the right end;
//! * **jump-reset** (model R): a fixed number of rods in `[0, 1]`, a rod hitting
//!   `1` is moved back to `0`.
//!
//! Models A and C are simulated exactly through an order-statistics coupling
//! with independent reflected Brownian motions; a direct projection integrator
//! is kept for cross-validation and drives model R.

pub mod analytics;
pub mod error;
pub mod harness;
pub mod measurement;
pub mod particles;
pub mod sde_kernel;
pub mod statcheck;

pub use analytics::DiffusionParams;
pub use error::{Error, Result};
pub use particles::{ModelKind, SystemState};
pub use sde_kernel::{RandomStream, StepScheme};
