//! Three-tone least-squares demodulation of a field trace.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::Trajectory;
use crate::error::{Error, Result};

pub const DEFAULT_RESIDUAL_FRACTION: f64 = 0.01;
const MIN_WINDOW_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodulationResult {
    pub b0_est: Complex64,
    /// Coefficient of e^{−iδt}.
    pub b_plus_est: Complex64,
    /// Coefficient of e^{+iδt}.
    pub b_minus_est: Complex64,
    /// RMS of the fit residual over the window.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub converged: bool,
}

pub fn demodulate(
    traj: &Trajectory,
    delta: f64,
    window_periods: u32,
) -> Result<DemodulationResult> {
    demodulate_with(traj, delta, window_periods, DEFAULT_RESIDUAL_FRACTION)
}

/// Fit b(t) ≈ b₀ + b₊e^{−iδt} + b₋e^{iδt} over the last `window_periods`
/// beat periods 2π/|δ| of the trace. The result is marked not converged when
/// the residual exceeds `residual_fraction`·|b₀| (or of the largest sideband,
/// for a trace with no carrier).
pub fn demodulate_with(
    traj: &Trajectory,
    delta: f64,
    window_periods: u32,
    residual_fraction: f64,
) -> Result<DemodulationResult> {
    if !(delta.is_finite() && delta != 0.0) {
        return Err(Error::InvalidArgument(format!(
            "demodulation needs a nonzero finite delta, got {delta}"
        )));
    }
    if window_periods == 0 {
        return Err(Error::WindowTooShort("zero beat periods requested".into()));
    }
    let (Some(&t_first), Some(&t_last)) = (traj.times.first(), traj.times.last()) else {
        return Err(Error::WindowTooShort("empty trajectory".into()));
    };
    let span = window_periods as f64 * 2.0 * PI / delta.abs();
    let t_start = t_last - span;
    let slack = 1e-9 * span;
    if t_start < t_first - slack {
        return Err(Error::WindowTooShort(format!(
            "need {span} us of trace, have {}",
            t_last - t_first
        )));
    }
    // half-open window [t_start, t_last) keeps an integer number of periods
    let first = traj.times.partition_point(|&t| t < t_start - slack);
    let idx: Vec<usize> = (first..traj.times.len())
        .filter(|&i| traj.times[i] < t_last - slack)
        .collect();
    if idx.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::WindowTooShort(format!(
            "{} samples in window, need {MIN_WINDOW_SAMPLES}",
            idx.len()
        )));
    }

    let basis = |t: f64| {
        let down = Complex64::from_polar(1.0, -delta * t);
        [Complex64::new(1.0, 0.0), down, down.conj()]
    };
    let mut gram = Matrix3::<Complex64>::zeros();
    let mut rhs = Vector3::<Complex64>::zeros();
    for &i in &idx {
        let phi = basis(traj.times[i]);
        for j in 0..3 {
            for k in 0..3 {
                gram[(j, k)] += phi[j].conj() * phi[k];
            }
            rhs[j] += phi[j].conj() * traj.b[i];
        }
    }
    let coef = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::WindowTooShort("degenerate sample set".into()))?;

    let mut sq = 0.0;
    for &i in &idx {
        let phi = basis(traj.times[i]);
        let fit = coef[0] * phi[0] + coef[1] * phi[1] + coef[2] * phi[2];
        sq += (traj.b[i] - fit).norm_sqr();
    }
    let residual = (sq / idx.len() as f64).sqrt();
    Ok(DemodulationResult {
        b0_est: coef[0],
        b_plus_est: coef[1],
        b_minus_est: coef[2],
        residual,
        window: (traj.times[idx[0]], t_last),
        samples: idx.len(),
        converged: residual <= residual_fraction * reference_magnitude(&coef),
    })
}

fn reference_magnitude(coef: &Vector3<Complex64>) -> f64 {
    coef[0].norm().max(coef[1].norm()).max(coef[2].norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(delta: f64, f: impl Fn(f64) -> Complex64) -> Trajectory {
        let dt = 2.0 * PI / delta.abs() / 25.0;
        let times: Vec<f64> = (0..1000).map(|k| k as f64 * dt).collect();
        let b = times.iter().map(|&t| f(t)).collect();
        Trajectory::from_field_samples(times, b).unwrap()
    }

    #[test]
    fn recovers_exact_model() {
        let delta = 3.7;
        let bp = Complex64::new(0.1, 0.2);
        let traj = synthetic(delta, |t| 3.0 + bp * Complex64::from_polar(1.0, -delta * t));
        let r = demodulate(&traj, delta, 10).unwrap();
        assert!((r.b0_est - 3.0).norm() < 1e-12);
        assert!((r.b_plus_est - bp).norm() < 1e-12);
        assert!(r.b_minus_est.norm() < 1e-12);
        assert!(r.residual < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn sign_flip_swaps_sidebands() {
        let delta = 2.0;
        let bp = Complex64::new(0.1, -0.05);
        let bm = Complex64::new(-0.02, 0.03);
        let traj = synthetic(delta, |t| {
            Complex64::new(1.0, 1.0)
                + bp * Complex64::from_polar(1.0, -delta * t)
                + bm * Complex64::from_polar(1.0, delta * t)
        });
        let pos = demodulate(&traj, delta, 7).unwrap();
        let neg = demodulate(&traj, -delta, 7).unwrap();
        assert!((pos.b_plus_est - neg.b_minus_est).norm() < 1e-12);
        assert!((pos.b_minus_est - neg.b_plus_est).norm() < 1e-12);
    }

    #[test]
    fn flags_unmodelled_content() {
        let delta = 2.0;
        let traj = synthetic(delta, |t| 1.0 + 0.5 * Complex64::from_polar(1.0, -3.3 * t));
        let r = demodulate(&traj, delta, 5).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn window_too_short() {
        let traj = synthetic(1.0, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(
            demodulate(&traj, 1.0, 100),
            Err(Error::WindowTooShort(_))
        ));
        assert!(matches!(
            demodulate(&traj, 1.0, 0),
            Err(Error::WindowTooShort(_))
        ));
        assert!(demodulate(&traj, 0.0, 1).is_err());
    }
}
