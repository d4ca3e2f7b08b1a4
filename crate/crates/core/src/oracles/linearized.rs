//! First-order sideband solver.
//!
//! Inserting b = b₀ + b₊e^{−iδt} + b₋e^{iδt} and Q = Q₀ + Q₊e^{−iδt} + Q₊*e^{iδt}
//! into the equations of motion and keeping first-order terms gives, with
//! Δ̃ = Δ_p − G₀Q₀ and c = b₋*,
//!
//! ```text
//! (κ + iΔ̃ − iδ)·b₊ − iG₀b₀·Q₊                = E_s
//! (κ − iΔ̃ − iδ)·c  + iG₀b₀*·Q₊               = 0
//! −ωₘG₀b₀*·b₊ − ωₘG₀b₀·c + (ωₘ² − δ² − iγₘδ)·Q₊ = 0
//! ```

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{singular_scale, OptomechParams, SteadyState, DEFAULT_SINGULAR_FLOOR};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizedResponse {
    pub b_plus: Complex64,
    /// Conjugate of the idler sideband, (b₋)*.
    pub b_minus_conj: Complex64,
    pub q_plus: Complex64,
}

/// Coefficient matrix of the sideband system at δ.
pub fn sideband_matrix(
    delta: f64,
    params: &OptomechParams,
    steady: &SteadyState,
) -> Matrix3<Complex64> {
    let OptomechParams {
        g0,
        omega_m,
        kappa,
        gamma_m,
        ..
    } = *params;
    let detuning = params.delta_p - g0 * steady.q0;
    let b0 = steady.b0;
    let zero = Complex64::new(0.0, 0.0);
    Matrix3::new(
        Complex64::new(kappa, detuning - delta),
        zero,
        -I * g0 * b0,
        zero,
        Complex64::new(kappa, -detuning - delta),
        I * g0 * b0.conj(),
        -omega_m * g0 * b0.conj(),
        -omega_m * g0 * b0,
        Complex64::new(omega_m * omega_m - delta * delta, -gamma_m * delta),
    )
}

pub fn linearized_response(
    delta: f64,
    params: &OptomechParams,
    steady: &SteadyState,
    e_signal: f64,
) -> Result<LinearizedResponse> {
    linearized_response_with_floor(delta, params, steady, e_signal, DEFAULT_SINGULAR_FLOOR)
}

/// Solve the sideband system. A determinant smaller than `floor`·ωₘ²κ²/|η|
/// (the same threshold the closed form applies to f = η·det) is singular.
pub fn linearized_response_with_floor(
    delta: f64,
    params: &OptomechParams,
    steady: &SteadyState,
    e_signal: f64,
    floor: f64,
) -> Result<LinearizedResponse> {
    params.validate()?;
    let m = sideband_matrix(delta, params, steady);
    let lu = m.lu();
    let det = lu.determinant();
    let wm2 = params.omega_m * params.omega_m;
    let mech = m[(2, 2)];
    // |f| = |det|·ωₘ²/|ωₘ² − δ² − iγₘδ|
    let f_norm = if mech.norm() > 0.0 {
        det.norm() * wm2 / mech.norm()
    } else {
        f64::INFINITY
    };
    if det.norm() == 0.0 || f_norm < floor * singular_scale(params) {
        return Err(Error::SingularResponse {
            delta,
            magnitude: f_norm.min(det.norm()),
        });
    }
    let rhs = Vector3::new(
        Complex64::new(e_signal, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    );
    let x = lu.solve(&rhs).ok_or(Error::SingularResponse {
        delta,
        magnitude: det.norm(),
    })?;
    Ok(LinearizedResponse {
        b_plus: x[0],
        b_minus_conj: x[1],
        q_plus: x[2],
    })
}
