//! Steady states of the pump-driven cavity.
//!
//! The intracavity photon number w solves
//!
//! ```text
//! g(w) = w·[κ² + (Δ_p − k·w)²] = E_p²,   k = G₀²/ωₘ
//! ```
//!
//! g is a cubic with g(0) = 0 and g(w) ≥ κ²w, so every root lies in
//! [0, E_p²/κ²]. Its derivative 3k²w² − 4kΔ_p·w + κ² + Δ_p² vanishes at
//! w± = [2Δ_p ± √(Δ_p² − 3κ²)]/(3k), which exist and are positive only for
//! Δ_p > √3·κ. Splitting [0, E_p²/κ²] at w± gives monotone pieces, each
//! holding at most one root, which are found by safeguarded Newton iteration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OptomechParams;
use crate::error::{Error, Result};
use crate::oracles::stability;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Middle,
    Upper,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Lower => "lower",
            Branch::Middle => "middle",
            Branch::Upper => "upper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchPolicy {
    Lowest,
    Highest,
    /// Root nearest to the photon number of the previous sweep point.
    Continuation(f64),
}

/// A root of the steady-state equation together with its field, displacement
/// and linear-stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// Pump amplitude the state was solved for.
    pub e_pump: f64,
    /// Mean intracavity photon number |b₀|².
    pub w0: f64,
    /// Steady field amplitude, E_p/(κ + iΔ̃) with the pump phase taken real.
    pub b0: Complex64,
    /// Steady displacement G₀w₀/ωₘ.
    pub q0: f64,
    pub branch: Branch,
    /// Set when the root is a double root (touching a fold of the S-curve).
    pub degenerate: bool,
    pub stable: bool,
    /// Jacobian eigenvalues, sorted by descending real part.
    pub eigenvalues: [Complex64; 4],
}

impl SteadyState {
    /// Assemble the state for a known photon number.
    pub fn from_photon_number(
        params: &OptomechParams,
        e_pump: f64,
        w0: f64,
        branch: Branch,
        degenerate: bool,
    ) -> Self {
        let detuning = params.effective_detuning(w0);
        let b0 = Complex64::new(e_pump, 0.0) / Complex64::new(params.kappa, detuning);
        let q0 = params.g0 * w0 / params.omega_m;
        let eigenvalues = stability::eigenvalues_at(params, b0, q0);
        Self {
            e_pump,
            w0,
            b0,
            q0,
            branch,
            degenerate,
            stable: eigenvalues.iter().all(|l| l.re < 0.0),
            eigenvalues,
        }
    }

    pub fn leading_real_part(&self) -> f64 {
        self.eigenvalues[0].re
    }

    /// w₀[κ² + Δ̃²] − E_p², relative to E_p² (absolute when E_p = 0).
    pub fn relative_residual(&self, params: &OptomechParams) -> f64 {
        let r = photon_balance(params, self.w0) - self.e_pump * self.e_pump;
        if self.e_pump > 0.0 {
            (r / (self.e_pump * self.e_pump)).abs()
        } else {
            r.abs()
        }
    }
}

fn photon_balance(params: &OptomechParams, w: f64) -> f64 {
    let d = params.effective_detuning(w);
    w * (params.kappa * params.kappa + d * d)
}

fn photon_balance_slope(params: &OptomechParams, w: f64) -> f64 {
    let k = params.shift_per_photon();
    let d = params.effective_detuning(w);
    params.kappa * params.kappa + d * d - 2.0 * k * w * d
}

/// Turning points of the S-curve, when the pump detuning allows bistability.
fn fold_points(params: &OptomechParams) -> Option<(f64, f64)> {
    let k = params.shift_per_photon();
    let (dp, kappa) = (params.delta_p, params.kappa);
    let disc = dp * dp - 3.0 * kappa * kappa;
    if k <= 0.0 || dp <= 0.0 || disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let upper = (2.0 * dp + s) / (3.0 * k);
    // product of the two roots is (κ² + Δ_p²)/(3k²)
    let lower = (kappa * kappa + dp * dp) / (3.0 * k * k * upper);
    Some((lower, upper))
}

/// Relative size of |g(w) − E²| below which a fold point counts as a root.
const FOLD_TOL: f64 = 1e-12;

/// All non-negative real roots of the steady-state cubic, ascending.
pub fn steady_state_roots(params: &OptomechParams, e_pump: f64) -> Result<Vec<SteadyState>> {
    params.validate()?;
    if !(e_pump.is_finite() && e_pump >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pump amplitude must be finite and >= 0, got {e_pump}"
        )));
    }
    let target = e_pump * e_pump;
    let mk = |w, branch, degenerate| {
        SteadyState::from_photon_number(params, e_pump, w, branch, degenerate)
    };
    if e_pump == 0.0 {
        return Ok(vec![mk(0.0, Branch::Lower, false)]);
    }
    let kappa2 = params.kappa * params.kappa;
    if params.shift_per_photon() == 0.0 {
        let w = target / (kappa2 + params.delta_p * params.delta_p);
        return Ok(vec![mk(w, Branch::Lower, false)]);
    }

    let h = |w: f64| photon_balance(params, w) - target;
    let w_max = target / kappa2;

    // (position, h, is_fold)
    let mut marks: Vec<(f64, f64, bool)> = vec![(0.0, -target, false)];
    if let Some((a, b)) = fold_points(params) {
        for c in [a, b] {
            if c < w_max {
                marks.push((c, h(c), true));
            }
        }
    }
    marks.push((w_max, h(w_max), false));

    let mut found: Vec<(f64, bool)> = Vec::with_capacity(3);
    let is_zero = |hv: f64, fold: bool| {
        if fold {
            hv.abs() <= FOLD_TOL * target
        } else {
            hv == 0.0
        }
    };
    for (i, &(w, hv, fold)) in marks.iter().enumerate() {
        if is_zero(hv, fold) {
            found.push((w, fold));
        }
        if let Some(&(w_next, h_next, fold_next)) = marks.get(i + 1) {
            let opposite = (hv < 0.0 && h_next > 0.0) || (hv > 0.0 && h_next < 0.0);
            if opposite && !is_zero(hv, fold) && !is_zero(h_next, fold_next) {
                found.push((bracketed_root(params, target, w, w_next), false));
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.dedup_by(|a, b| a.0 == b.0);

    let labels: &[Branch] = match found.len() {
        1 => &[Branch::Lower],
        2 => &[Branch::Lower, Branch::Upper],
        _ => &[Branch::Lower, Branch::Middle, Branch::Upper],
    };
    Ok(found
        .iter()
        .zip(labels)
        .map(|(&(w, degenerate), &branch)| mk(w, branch, degenerate))
        .collect())
}

/// Safeguarded Newton on a bracket where g − E² changes sign once.
fn bracketed_root(params: &OptomechParams, target: f64, a: f64, b: f64) -> f64 {
    let h = |w: f64| photon_balance(params, w) - target;
    let (mut lo, mut hi) = if h(a) < 0.0 { (a, b) } else { (b, a) };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let hx = h(x);
        if hx == 0.0 {
            return x;
        }
        if hx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = photon_balance_slope(params, x);
        let newton = x - hx / slope;
        let (left, right) = if lo < hi { (lo, hi) } else { (hi, lo) };
        let next = if slope != 0.0 && newton > left && newton < right {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
            || right - left <= 2.0 * f64::EPSILON * right
        {
            x = next;
            break;
        }
        x = next;
    }
    // final polish
    let slope = photon_balance_slope(params, x);
    if slope != 0.0 {
        let polished = x - h(x) / slope;
        if polished.is_finite() && h(polished).abs() < h(x).abs() {
            return polished;
        }
    }
    x
}

/// Pick one steady state from a root list.
pub fn select_branch(roots: &[SteadyState], policy: BranchPolicy) -> Result<SteadyState> {
    let first = roots
        .first()
        .ok_or_else(|| Error::InvalidArgument("no steady states to select from".into()))?;
    let pick = match policy {
        BranchPolicy::Lowest => roots.iter().min_by(|a, b| a.w0.total_cmp(&b.w0)),
        BranchPolicy::Highest => roots.iter().max_by(|a, b| a.w0.total_cmp(&b.w0)),
        BranchPolicy::Continuation(prev) => roots
            .iter()
            .min_by(|a, b| (a.w0 - prev).abs().total_cmp(&(b.w0 - prev).abs())),
    };
    Ok(*pick.unwrap_or(first))
}
