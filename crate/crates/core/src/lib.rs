//! Launcher ascent-flight attitude control toolkit.
//!
//! A rigid-body pitch/drift launcher model with thrust-vector control and
//! tail-wags-dog nozzle effects, four attitude controllers (scheduled PD,
//! scheduled PD with angular-acceleration feedback, incremental nonlinear
//! dynamic inversion with and without output low-pass filter), a multirate
//! simulator, Monte-Carlo corner-case campaigns and a linearization-based
//! stability-margin pipeline.
//!
//! Module map:
//!
//! * [`trajectory`]: time-varying vehicle parameters, dispersions, corner cases.
//! * [`dynamics`]: nonlinear plant, TVC actuator, RK4 integration.
//! * [`environment`]: Dryden wind, sensor noise, command delay.
//! * [`control`]: filters, gain schedules and the four control laws.
//! * [`sim`]: the multirate closed-loop simulator and telemetry.
//! * [`linear`]: polynomials, transfer functions, state space, numerical linearization.
//! * [`stability`]: gain/phase margins, Nichols data, margin sweeps.
//! * [`campaign`]: Monte-Carlo, sensitivity and Pareto orchestration.
//! * [`config`]: JSON scenario configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod linear;
pub mod sim;
pub mod stability;
pub mod trajectory;

pub use error::{Error, Result};
