//! Signal response in the closed form, plus the dispatch to the reference
//! solvers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Method, OptomechParams, SteadyState};
use crate::error::{Error, Result};
use crate::oracles::{self, TimeDomainSettings};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// |f(δ)| below this multiple of ωₘ²κ² is reported as a singular response.
pub const DEFAULT_SINGULAR_FLOOR: f64 = 1e-18;

/// Normalisation scale for the singularity test, ωₘ²κ².
pub fn singular_scale(params: &OptomechParams) -> f64 {
    (params.omega_m * params.kappa).powi(2)
}

/// Mechanical susceptibility ratio η(δ) = ωₘ²/(ωₘ² − iγₘδ − δ²).
pub fn eta(delta: f64, params: &OptomechParams) -> Result<Complex64> {
    let wm2 = params.omega_m * params.omega_m;
    let denom = Complex64::new(wm2 - delta * delta, -params.gamma_m * delta);
    if denom == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain { delta });
    }
    Ok(wm2 / denom)
}

/// f(δ) = (κ−iδ)²ωₘ² + [ωₘΔ_p − G₀²w₀(η+1)]² − G₀⁴η²w₀².
pub fn f_denominator(delta: f64, params: &OptomechParams, w0: f64) -> Result<Complex64> {
    let eta = eta(delta, params)?;
    let wm = params.omega_m;
    let g2w = params.g0 * params.g0 * w0;
    let cavity = Complex64::new(params.kappa, -delta);
    let shifted = wm * params.delta_p - g2w * (eta + 1.0);
    Ok(cavity * cavity * wm * wm + shifted * shifted - g2w * g2w * eta * eta)
}

/// b₊ = E_s[(κ − iδ − iΔ_p)ωₘ² + iG₀²w₀(η+1)]/f(δ), with the default
/// singularity floor.
pub fn b_plus_closed_form(
    delta: f64,
    params: &OptomechParams,
    w0: f64,
    e_signal: f64,
) -> Result<Complex64> {
    b_plus_closed_form_with_floor(delta, params, w0, e_signal, DEFAULT_SINGULAR_FLOOR)
}

pub fn b_plus_closed_form_with_floor(
    delta: f64,
    params: &OptomechParams,
    w0: f64,
    e_signal: f64,
    floor: f64,
) -> Result<Complex64> {
    let eta = eta(delta, params)?;
    let f = f_denominator(delta, params, w0)?;
    if f.norm() < floor * singular_scale(params) {
        return Err(Error::SingularResponse {
            delta,
            magnitude: f.norm(),
        });
    }
    let wm2 = params.omega_m * params.omega_m;
    let numerator = Complex64::new(params.kappa, -delta - params.delta_p) * wm2
        + I * params.g0 * params.g0 * w0 * (eta + 1.0);
    Ok(e_signal * numerator / f)
}

/// Output-field sideband √(2κ)·b₊.
pub fn output_field(b_plus: Complex64, kappa: f64) -> Complex64 {
    (2.0 * kappa).sqrt() * b_plus
}

/// One point of a signal spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    /// Signal-pump detuning δ.
    pub delta: f64,
    /// Signal-cavity detuning Δ_s = δ − Δ_p.
    pub delta_s: f64,
    pub b_plus: Complex64,
    pub b_out_plus: Complex64,
    /// Normalised response ε_T = 2κ·b₊/E_s.
    pub eps_t: Complex64,
    /// |ε_T|².
    pub power_response: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseSettings {
    pub singular_floor: f64,
    pub time_domain: TimeDomainSettings,
}

impl Default for ResponseSettings {
    fn default() -> Self {
        Self {
            singular_floor: DEFAULT_SINGULAR_FLOOR,
            time_domain: TimeDomainSettings::default(),
        }
    }
}

/// Signal response at δ about `steady`, computed with `method`.
pub fn response_eps(
    delta: f64,
    params: &OptomechParams,
    steady: &SteadyState,
    e_signal: f64,
    method: Method,
    settings: &ResponseSettings,
) -> Result<ResponsePoint> {
    if !(e_signal.is_finite() && e_signal > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "signal amplitude must be > 0, got {e_signal}"
        )));
    }
    let b_plus = match method {
        Method::ClosedForm => b_plus_closed_form_with_floor(
            delta,
            params,
            steady.w0,
            e_signal,
            settings.singular_floor,
        )?,
        Method::Linearized => {
            oracles::linearized_response_with_floor(
                delta,
                params,
                steady,
                e_signal,
                settings.singular_floor,
            )?
            .b_plus
        }
        Method::TimeDomain => {
            oracles::time_domain_response(delta, params, steady, e_signal, &settings.time_domain)?
                .b_plus_est
        }
    };
    let eps_t = 2.0 * params.kappa * b_plus / e_signal;
    Ok(ResponsePoint {
        delta,
        delta_s: delta - params.delta_p,
        b_plus,
        b_out_plus: output_field(b_plus, params.kappa),
        eps_t,
        power_response: eps_t.norm_sqr(),
    })
}
