//! Reference solvers used to check the closed-form response: a direct
//! first-order sideband solve, a time-domain integrator with demodulation, and
//! the fluctuation Jacobian.

mod demod;
mod dynamics;
mod linearized;
pub mod stability;

use std::f64::consts::PI;

pub use demod::{demodulate, demodulate_with, DemodulationResult, DEFAULT_RESIDUAL_FRACTION};
pub use dynamics::{
    integrate_dynamics, DynamicsOptions, EscapeCriterion, InitialState, StepControl, Trajectory,
};
pub use linearized::{
    linearized_response, linearized_response_with_floor, sideband_matrix, LinearizedResponse,
};
pub use stability::{jacobian_eigenvalues, jacobian_matrix, leading_real_part};

use crate::error::{Error, Result};
use crate::model::{DriveConfig, OptomechParams, SteadyState};

/// Controls for [`time_domain_response`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainSettings {
    pub tolerance: f64,
    /// Beat periods 2π/|δ| in the demodulation window.
    pub window_periods: u32,
    pub samples_per_period: u32,
    /// Transient skip in units of the slowest decay time.
    pub transient_factor: f64,
    pub residual_fraction: f64,
    pub max_steps: usize,
}

impl Default for TimeDomainSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            window_periods: 20,
            samples_per_period: 32,
            transient_factor: 10.0,
            residual_fraction: DEFAULT_RESIDUAL_FRACTION,
            max_steps: 50_000_000,
        }
    }
}

/// Slowest decay rate of fluctuations about `steady`: min(κ, γₘ/2) and the
/// damping of the least-damped Jacobian mode when that mode is stable.
pub fn slowest_decay_rate(params: &OptomechParams, steady: &SteadyState) -> f64 {
    let mut rate = params.kappa;
    if params.gamma_m > 0.0 {
        rate = rate.min(params.gamma_m / 2.0);
    }
    let lead = steady.leading_real_part();
    if lead < 0.0 {
        rate = rate.min(-lead);
    }
    rate
}

/// Drive the system from its steady state with the signal switched on, wait
/// out the transient, and demodulate b₊ from the field.
pub fn time_domain_response(
    delta: f64,
    params: &OptomechParams,
    steady: &SteadyState,
    e_signal: f64,
    settings: &TimeDomainSettings,
) -> Result<DemodulationResult> {
    if !(delta.is_finite() && delta != 0.0) {
        return Err(Error::InvalidArgument(
            "time-domain response needs a nonzero signal-pump detuning".into(),
        ));
    }
    if settings.samples_per_period < 4 {
        return Err(Error::InvalidArgument(
            "need at least 4 samples per period".into(),
        ));
    }
    let period = 2.0 * PI / delta.abs();
    let transient = settings.transient_factor / slowest_decay_rate(params, steady);
    let t_end = transient + settings.window_periods as f64 * period;
    let drive = DriveConfig::new(steady.e_pump, e_signal, delta)?;
    let initial = InitialState {
        b: steady.b0,
        q: steady.q0,
        v: 0.0,
    };
    let radius = (0.5 * steady.b0.norm()).max(100.0 * e_signal / params.kappa);
    let options = DynamicsOptions {
        tolerance: settings.tolerance,
        sample_dt: period / settings.samples_per_period as f64,
        escape: EscapeCriterion::DeviationFromInitial(radius),
        max_steps: settings.max_steps,
    };
    let traj = integrate_dynamics(params, &drive, initial, t_end, &options)?;
    let result = demodulate_with(
        &traj,
        delta,
        settings.window_periods,
        settings.residual_fraction,
    )?;
    if !result.converged {
        return Err(Error::NotConverged {
            residual: result.residual,
            limit: settings.residual_fraction
                * result
                    .b0_est
                    .norm()
                    .max(result.b_plus_est.norm())
                    .max(result.b_minus_est.norm()),
        });
    }
    Ok(result)
}
