//! Pathlength-optimal controllers and filters for discrete-time linear
//! time-invariant systems.
//!
//! The controller achieves `ALG(w) − OPT(w) ≤ γ²·pathlength(w)` against the
//! clairvoyant offline optimum; the filter bounds its regret against the
//! noncausal smoother by `γ²(energy(w) + pathlength(v))`. Both reduce to
//! standard H∞ and Nehari problems solved through Riccati and Stein
//! equations.

pub mod control;
pub mod factor;
pub mod filter;
pub mod numerics;
pub mod sim;
mod sweep;
pub mod xfer;

pub use control::{
    bisect_gamma, h2_synthesize, hinf_gamma_star, hinf_synthesize, offline_optimal, pathlength_gamma_star,
    pathlength_synthesize, CausalPolicy, ControlError, ControlPlant, FeasibilityReport, Mode, Synthesis,
};
pub use filter::{
    kalman_synthesize, nehari_solve, pathlength_filter_gamma_star, pathlength_filter_synthesize, smoothed_oracle,
    CausalEstimator, FilterError, FilterPlant, KalmanFilter, NehariData, PathlengthFilter,
};
pub use numerics::{Inertia, Mat, NumericsError, RiccatiSolution, Vector};
pub use sim::{DisturbanceSpec, PathlengthMode, Signal};
pub use xfer::StateSpace;
