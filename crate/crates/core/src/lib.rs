//! Simulator for a pump-controlled cavity-optomechanical transistor.
//!
//! A strong pump sets the optomechanical operating point (the steady state of
//! the cavity field and the mechanical displacement); a weak signal beam is
//! then transmitted with a gain that the pump controls. The crate computes
//!
//! * steady states of the driven system, including bistable branches,
//! * the linear response of the signal (closed form and two independent
//!   reference solvers),
//! * spectra, transistor characteristic curves and instability thresholds,
//! * CSV/SVG output and a conformance report through the `omtx` binary.
//!
//! All rates are angular frequencies in rad/µs, times are in µs and drive
//! amplitudes are in the model-native unit photon^½·rad/µs.

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod oracles;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use model::{
    Branch, BranchPolicy, DriveConfig, Method, OptomechParams, ResponsePoint, ResponseSettings,
    SteadyState,
};
pub use num_complex::Complex64;
