//! Polynomials, transfer functions, state-space models, frequency responses
//! and finite-difference linearization of the nonlinear closed loop.

pub mod freq;
pub mod linearize;
pub mod poly;
pub mod ss;
pub mod tf;

pub use freq::{default_grid, freq_response, log_grid, FrequencyDomain, FrequencyResponse};
pub use linearize::{
    linearize, linearize_closed_loop, linearize_with, ContinuousSystem, LauncherLoop, LoopChannel, LoopConfig,
    LoopState, StepRule,
};
pub use poly::Polynomial;
pub use ss::LinearSystem;
pub use tf::{
    closed_loop_pd_qdot_tf, closed_loop_pd_tf, coupled_tf, simplified_attitude_tf, tvc_tf, TransferFunction,
};
