//! Time-domain integration of the semiclassical equations of motion
//!
//! ```text
//! db/dt  = −(iΔ_p + κ)·b + iG₀·b·Q + E_p + E_s·e^{−iδt}
//! dQ/dt  = V
//! dV/dt  = −γₘV − ωₘ²Q + ωₘG₀|b|²
//! ```
//!
//! with an embedded Dormand–Prince 5(4) pair. Steps are clipped so that the
//! solution is sampled on a uniform output grid without interpolation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{DriveConfig, OptomechParams};

type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialState {
    pub b: Complex64,
    pub q: f64,
    pub v: f64,
}

impl InitialState {
    pub fn empty() -> Self {
        Self {
            b: Complex64::new(0.0, 0.0),
            q: 0.0,
            v: 0.0,
        }
    }
}

/// When to abandon an integration as escaped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EscapeCriterion {
    /// |b| above this value.
    Magnitude(f64),
    /// |b(t) − b(0)| above this radius.
    DeviationFromInitial(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsOptions {
    /// Bound on the local error per unit time, relative to 1 + |yᵢ|.
    pub tolerance: f64,
    /// Spacing of the output grid, µs.
    pub sample_dt: f64,
    pub escape: EscapeCriterion,
    pub max_steps: usize,
}

impl DynamicsOptions {
    pub fn new(tolerance: f64, sample_dt: f64) -> Self {
        Self {
            tolerance,
            sample_dt,
            escape: EscapeCriterion::Magnitude(1e12),
            max_steps: 50_000_000,
        }
    }
}

/// Step-control record of a finished integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub tolerance: f64,
    pub sample_dt: f64,
    pub order: u32,
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub b: Vec<Complex64>,
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub control: StepControl,
}

impl Trajectory {
    /// Wrap externally produced field samples (for demodulating data that did
    /// not come from [`integrate_dynamics`]).
    pub fn from_field_samples(times: Vec<f64>, b: Vec<Complex64>) -> Result<Self> {
        if times.len() != b.len() {
            return Err(Error::InvalidArgument(
                "times and samples differ in length".into(),
            ));
        }
        if times
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidArgument(
                "times must be strictly increasing".into(),
            ));
        }
        let n = times.len();
        let dt = if n > 1 { times[1] - times[0] } else { 0.0 };
        Ok(Self {
            times,
            b,
            q: vec![0.0; n],
            v: vec![0.0; n],
            control: StepControl {
                tolerance: 0.0,
                sample_dt: dt,
                order: 0,
                accepted: 0,
                rejected: 0,
                min_step: dt,
                max_step: dt,
            },
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

struct Rhs {
    params: OptomechParams,
    drive: DriveConfig,
}

impl Rhs {
    #[inline]
    fn eval(&self, t: f64, y: &State) -> State {
        let p = &self.params;
        let b = Complex64::new(y[0], y[1]);
        let q = y[2];
        let signal = Complex64::from_polar(self.drive.e_signal, -self.drive.delta * t);
        let db = -Complex64::new(p.kappa, p.delta_p) * b
            + Complex64::new(0.0, p.g0 * q) * b
            + self.drive.e_pump
            + signal;
        let dv = -p.gamma_m * y[3] - p.omega_m * p.omega_m * q + p.omega_m * p.g0 * b.norm_sqr();
        [db.re, db.im, y[3], dv]
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One DP5(4) step; returns the fifth-order solution, its derivative at the
/// end point (FSAL) and the error estimate.
fn dp_step(rhs: &Rhs, t: f64, y: &State, k1: &State, h: f64) -> (State, State, State) {
    let mut k = [[0.0; 4]; 7];
    k[0] = *k1;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..4 {
                    ys[i] += h * a * kj[i];
                }
            }
        }
        k[s] = rhs.eval(t + C[s] * h, &ys);
    }
    // row 6 of A is the fifth-order weight vector, so stage 7 was evaluated at y_new
    let mut y_new = *y;
    for (j, kj) in k.iter().enumerate().take(6) {
        for i in 0..4 {
            y_new[i] += h * A[6][j] * kj[i];
        }
    }
    let mut err = [0.0; 4];
    for (j, kj) in k.iter().enumerate() {
        for i in 0..4 {
            err[i] += h * E[j] * kj[i];
        }
    }
    (y_new, k[6], err)
}

/// Integrate from t = 0 to `t_end`, sampling every `options.sample_dt`
/// (plus a final sample at `t_end`).
pub fn integrate_dynamics(
    params: &OptomechParams,
    drive: &DriveConfig,
    initial: InitialState,
    t_end: f64,
    options: &DynamicsOptions,
) -> Result<Trajectory> {
    params.validate()?;
    drive.validate()?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_end must be > 0, got {t_end}"
        )));
    }
    if !(options.tolerance.is_finite() && options.tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be > 0".into()));
    }
    if !(options.sample_dt.is_finite() && options.sample_dt > 0.0) {
        return Err(Error::InvalidArgument("sample_dt must be > 0".into()));
    }
    let rhs = Rhs {
        params: *params,
        drive: *drive,
    };
    let tol = options.tolerance;
    let dt = options.sample_dt;
    let n_grid = (t_end / dt * (1.0 + 1e-12)).floor() as usize;
    let mut sample_times: Vec<f64> = (0..=n_grid).map(|k| k as f64 * dt).collect();
    if t_end - sample_times[n_grid] > 1e-9 * dt {
        sample_times.push(t_end);
    }
    let capacity = sample_times.len();

    let mut y: State = [initial.b.re, initial.b.im, initial.q, initial.v];
    let b_start = initial.b;
    let mut traj = Trajectory {
        times: Vec::with_capacity(capacity),
        b: Vec::with_capacity(capacity),
        q: Vec::with_capacity(capacity),
        v: Vec::with_capacity(capacity),
        control: StepControl {
            tolerance: tol,
            sample_dt: dt,
            order: 5,
            accepted: 0,
            rejected: 0,
            min_step: f64::INFINITY,
            max_step: 0.0,
        },
    };
    let push = |traj: &mut Trajectory, t: f64, y: &State| {
        traj.times.push(t);
        traj.b.push(Complex64::new(y[0], y[1]));
        traj.q.push(y[2]);
        traj.v.push(y[3]);
    };
    push(&mut traj, 0.0, &y);

    let rate_scale = params.kappa
        + params.delta_p.abs()
        + params.omega_m
        + params.gamma_m
        + drive.delta.abs()
        + params.g0 * initial.q.abs();
    let mut h = (0.01 / rate_scale).min(dt);
    let mut t = 0.0;
    let mut k1 = rhs.eval(t, &y);
    let mut next = 1;
    let mut steps = 0usize;

    while next < sample_times.len() {
        let target = sample_times[next];
        let remaining = target - t;
        let landing = h >= remaining;
        let step = if landing { remaining } else { h };
        if step <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow(t));
        }
        steps += 1;
        if steps > options.max_steps {
            return Err(Error::StepLimit(options.max_steps));
        }

        let (y_new, k_end, err) = dp_step(&rhs, t, &y, &k1, step);
        let mut norm = 0.0f64;
        for i in 0..4 {
            let scale = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            norm = norm.max((err[i] / step).abs() / scale);
        }
        if !norm.is_finite() {
            norm = 1e10;
        }
        if norm <= 1.0 {
            t = if landing { target } else { t + step };
            y = y_new;
            k1 = k_end;
            traj.control.accepted += 1;
            traj.control.min_step = traj.control.min_step.min(step);
            traj.control.max_step = traj.control.max_step.max(step);

            let b = Complex64::new(y[0], y[1]);
            let escaped = match options.escape {
                EscapeCriterion::Magnitude(limit) => b.norm() > limit,
                EscapeCriterion::DeviationFromInitial(radius) => (b - b_start).norm() > radius,
            };
            if escaped || !y.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence {
                    time: t,
                    magnitude: b.norm(),
                });
            }
            if landing {
                push(&mut traj, t, &y);
                next += 1;
            }
            // only grow from a full step, so clipped landings do not shrink h
            if !landing || step >= h {
                let factor = if norm == 0.0 {
                    5.0
                } else {
                    0.9 * norm.powf(-0.25)
                };
                h = step * factor.clamp(0.2, 5.0);
            }
        } else {
            traj.control.rejected += 1;
            let factor = 0.9 * norm.powf(-0.25);
            h = step * factor.clamp(0.1, 0.9);
        }
    }
    Ok(traj)
}
