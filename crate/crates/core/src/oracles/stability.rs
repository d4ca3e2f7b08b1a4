//! Linear stability of a steady state.
//!
//! Fluctuations (δx, δy, δQ, δV) of (Re b, Im b, Q, dQ/dt) obey a real 4×4
//! system obtained by linearising the same right-hand sides that
//! [`integrate_dynamics`](super::integrate_dynamics) integrates. Its trace is
//! −2κ − γₘ for every pump level.

use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::model::{OptomechParams, SteadyState};

/// Jacobian of the drive-free fluctuation dynamics about (b₀, Q₀).
pub fn jacobian_matrix(params: &OptomechParams, b0: Complex64, q0: f64) -> Matrix4<f64> {
    let OptomechParams {
        g0,
        omega_m,
        kappa,
        gamma_m,
        delta_p,
    } = *params;
    let detuning = delta_p - g0 * q0;
    #[rustfmt::skip]
    let j = Matrix4::new(
        -kappa,                      detuning,                    -g0 * b0.im,          0.0,
        -detuning,                   -kappa,                      g0 * b0.re,           0.0,
        0.0,                         0.0,                         0.0,                  1.0,
        2.0 * omega_m * g0 * b0.re,  2.0 * omega_m * g0 * b0.im,  -omega_m * omega_m,   -gamma_m,
    );
    j
}

pub(crate) fn eigenvalues_at(params: &OptomechParams, b0: Complex64, q0: f64) -> [Complex64; 4] {
    let ev = jacobian_matrix(params, b0, q0).complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2], ev[3]];
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

/// Eigenvalues of the fluctuation Jacobian, sorted by descending real part.
/// The steady state is stable iff all real parts are negative.
pub fn jacobian_eigenvalues(params: &OptomechParams, steady: &SteadyState) -> [Complex64; 4] {
    eigenvalues_at(params, steady.b0, steady.q0)
}

/// Largest real part among the eigenvalues.
pub fn leading_real_part(params: &OptomechParams, steady: &SteadyState) -> f64 {
    jacobian_eigenvalues(params, steady)[0].re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steady_state_roots;

    #[test]
    fn uncoupled_blocks() {
        let p = OptomechParams::transistor_reference().with_g0(0.0);
        let s = steady_state_roots(&p, 3.0).unwrap()[0];
        let ev = jacobian_eigenvalues(&p, &s);
        let nu = (p.omega_m.powi(2) - p.gamma_m.powi(2) / 4.0).sqrt();
        let mut expect = [
            Complex64::new(-p.kappa, p.delta_p),
            Complex64::new(-p.kappa, -p.delta_p),
            Complex64::new(-p.gamma_m / 2.0, nu),
            Complex64::new(-p.gamma_m / 2.0, -nu),
        ];
        expect.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        for (a, b) in ev.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn passive_system_is_damped() {
        let p = OptomechParams::transistor_reference();
        let s = steady_state_roots(&p, 0.0).unwrap()[0];
        let bound = -p.kappa.min(p.gamma_m / 2.0) + 1e-9;
        assert!(jacobian_eigenvalues(&p, &s).iter().all(|l| l.re <= bound));
        assert!(s.stable);
    }

    #[test]
    fn trace_identity() {
        let p = OptomechParams::transistor_reference();
        for e in [0.0, 1.0, 5.0, 12.0, 20.0] {
            let s = steady_state_roots(&p, e).unwrap()[0];
            let sum: Complex64 = jacobian_eigenvalues(&p, &s).iter().sum();
            let trace = -2.0 * p.kappa - p.gamma_m;
            assert!((sum.re - trace).abs() <= 1e-9 * trace.abs());
            assert!(sum.im.abs() < 1e-9);
        }
    }

    #[test]
    fn blue_pump_destabilises() {
        let p = OptomechParams::transistor_reference();
        let weak = steady_state_roots(&p, 2.0).unwrap()[0];
        let strong = steady_state_roots(&p, 30.0).unwrap()[0];
        assert!(leading_real_part(&p, &weak) < 0.0);
        assert!(leading_real_part(&p, &strong) > 0.0);
    }
}
