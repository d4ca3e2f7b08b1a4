//! Grid engines: signal spectra, the transistor characteristic curve,
//! instability thresholds and bistability maps.
//!
//! Grid points are evaluated independently (in parallel when more than one
//! worker is requested) and gathered in input order, so results do not depend
//! on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    drive_amplitude, f_denominator, response_eps, select_branch, singular_scale,
    steady_state_roots, Branch, BranchPolicy, DriveConfig, Method, OptomechParams, ResponsePoint,
    ResponseSettings, SteadyState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// Signal-cavity detuning Δ_s, rad/µs.
    DeltaS,
    /// Pump drive amplitude E_p, model units.
    PumpAmplitude,
    /// Pump power in W, converted with the given carrier (rad/s).
    PumpPower { carrier_angular_freq: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Logarithmic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: Scale,
    pub method: Method,
    pub branch_policy: BranchPolicy,
}

impl SweepSpec {
    pub fn linear(axis: Axis, start: f64, stop: f64, count: usize) -> Self {
        Self {
            axis,
            start,
            stop,
            count,
            scale: Scale::Linear,
            method: Method::Linearized,
            branch_policy: BranchPolicy::Lowest,
        }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    pub fn with_branch_policy(self, branch_policy: BranchPolicy) -> Self {
        Self {
            branch_policy,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::InvalidArgument(format!(
                "sweep needs start < stop, got {}..{}",
                self.start, self.stop
            )));
        }
        if self.count < 2 {
            return Err(Error::InvalidArgument(
                "sweep needs at least 2 points".into(),
            ));
        }
        if self.scale == Scale::Logarithmic && self.start <= 0.0 {
            return Err(Error::InvalidArgument(
                "logarithmic sweep needs start > 0".into(),
            ));
        }
        Ok(())
    }

    /// Grid values, strictly increasing, ending exactly at `stop`.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let last = (self.count - 1) as f64;
        let mut v: Vec<f64> = (0..self.count)
            .map(|i| {
                let frac = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * frac,
                    Scale::Logarithmic => {
                        (self.start.ln() + (self.stop.ln() - self.start.ln()) * frac).exp()
                    }
                }
            })
            .collect();
        v[0] = self.start;
        v[self.count - 1] = self.stop;
        if v.windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidArgument(
                "sweep grid is not strictly increasing".into(),
            ));
        }
        Ok(v)
    }

    /// Pump amplitudes for a pump-axis grid.
    pub fn pump_amplitudes(&self, params: &OptomechParams) -> Result<Vec<f64>> {
        let values = self.values()?;
        match self.axis {
            Axis::PumpAmplitude => {
                if values[0] < 0.0 {
                    return Err(Error::InvalidArgument("pump amplitude must be >= 0".into()));
                }
                Ok(values)
            }
            Axis::PumpPower {
                carrier_angular_freq,
            } => values
                .iter()
                .map(|&p| drive_amplitude(p, params.kappa, carrier_angular_freq))
                .collect(),
            Axis::DeltaS => Err(Error::InvalidArgument("expected a pump axis".into())),
        }
    }
}

/// Map `f` over `items` on `workers` threads, preserving order.
pub fn par_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

fn is_point_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularResponse { .. }
            | Error::Domain { .. }
            | Error::NotConverged { .. }
            | Error::Divergence { .. }
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub delta_s: f64,
    pub delta: f64,
    /// `None` when the point was flagged (singular or failed to converge).
    pub response: Option<ResponsePoint>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub params: OptomechParams,
    /// Drive template; `delta` is unused (it varies along the grid).
    pub drive: DriveConfig,
    pub method: Method,
    pub branch: Branch,
    pub steady: SteadyState,
    pub points: Vec<SpectrumPoint>,
}

/// Signal response over a grid of signal-cavity detunings Δ_s.
pub fn spectrum(
    params: &OptomechParams,
    pump: f64,
    e_signal: f64,
    grid: &SweepSpec,
    settings: &ResponseSettings,
    workers: usize,
) -> Result<Spectrum> {
    if grid.axis != Axis::DeltaS {
        return Err(Error::InvalidArgument(
            "spectrum grid must be over delta_s".into(),
        ));
    }
    let drive = DriveConfig::new(pump, e_signal, 0.0)?;
    let detunings = grid.values()?;
    let roots = steady_state_roots(params, pump)?;
    let steady = select_branch(&roots, grid.branch_policy)?;
    let points = spectrum_points(
        params,
        &steady,
        e_signal,
        &detunings,
        grid.method,
        settings,
        workers,
    )?;
    if points.iter().all(|p| p.response.is_none()) {
        return Err(Error::AllSingular);
    }
    Ok(Spectrum {
        params: *params,
        drive,
        method: grid.method,
        branch: steady.branch,
        steady,
        points,
    })
}

fn spectrum_points(
    params: &OptomechParams,
    steady: &SteadyState,
    e_signal: f64,
    detunings: &[f64],
    method: Method,
    settings: &ResponseSettings,
    workers: usize,
) -> Result<Vec<SpectrumPoint>> {
    par_map(workers, detunings, |&delta_s| {
        let delta = delta_s + params.delta_p;
        match response_eps(delta, params, steady, e_signal, method, settings) {
            Ok(mut r) => {
                r.delta_s = delta_s;
                Ok(SpectrumPoint {
                    delta_s,
                    delta,
                    response: Some(r),
                    failure: None,
                })
            }
            Err(e) if is_point_failure(&e) => Ok(SpectrumPoint {
                delta_s,
                delta,
                response: None,
                failure: Some(e.to_string()),
            }),
            Err(e) => Err(e),
        }
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Grid value on the pump axis (amplitude or power).
    pub pump: f64,
    pub amplitude: f64,
    pub w0: f64,
    /// |ε_T(probe; P)|² / |ε_T(probe; 0)|², NaN when singular.
    pub gain: f64,
    pub stable: bool,
    pub leading_eig_re: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicCurve {
    pub params: OptomechParams,
    pub method: Method,
    pub probe_delta_s: f64,
    /// |ε_T|² at the probe with the pump off.
    pub reference_response: f64,
    pub points: Vec<CurvePoint>,
    /// Interpolated axis value where the leading eigenvalue crosses zero.
    pub threshold_estimate: Option<f64>,
}

impl CharacteristicCurve {
    pub fn pump_axis(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.pump).collect()
    }

    pub fn gain(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gain).collect()
    }

    /// Points before the first unstable one.
    pub fn stable_prefix(&self) -> &[CurvePoint] {
        let n = self.points.iter().take_while(|p| p.stable).count();
        &self.points[..n]
    }
}

fn resolve_along(
    params: &OptomechParams,
    amplitudes: &[f64],
    policy: BranchPolicy,
) -> Result<Vec<SteadyState>> {
    let mut out = Vec::with_capacity(amplitudes.len());
    let mut policy = policy;
    for &e in amplitudes {
        let roots = steady_state_roots(params, e)?;
        let s = select_branch(&roots, policy)?;
        if let BranchPolicy::Continuation(_) = policy {
            policy = BranchPolicy::Continuation(s.w0);
        }
        out.push(s);
    }
    Ok(out)
}

/// Normalised signal gain at a fixed probe detuning as a function of pump.
pub fn transistor_curve(
    params: &OptomechParams,
    pump_grid: &SweepSpec,
    e_signal: f64,
    probe_delta_s: f64,
    settings: &ResponseSettings,
    workers: usize,
) -> Result<CharacteristicCurve> {
    let axis_values = pump_grid.values()?;
    let amplitudes = pump_grid.pump_amplitudes(params)?;
    let method = pump_grid.method;
    let delta = probe_delta_s + params.delta_p;

    let off = steady_state_roots(params, 0.0)?[0];
    let reference = response_eps(delta, params, &off, e_signal, method, settings)?.power_response;

    let states = resolve_along(params, &amplitudes, pump_grid.branch_policy)?;
    let indices: Vec<usize> = (0..states.len()).collect();
    let points: Vec<CurvePoint> = par_map(workers, &indices, |&i| {
        let s = &states[i];
        let response = response_eps(delta, params, s, e_signal, method, settings);
        let (gain, singular) = match response {
            Ok(r) => (r.power_response / reference, false),
            Err(e) if is_point_failure(&e) => (f64::NAN, true),
            Err(e) => return Err(e),
        };
        Ok(CurvePoint {
            pump: axis_values[i],
            amplitude: amplitudes[i],
            w0: s.w0,
            gain,
            stable: s.stable,
            leading_eig_re: s.leading_real_part(),
            singular,
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let threshold_estimate = points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (a.leading_eig_re < 0.0 && b.leading_eig_re >= 0.0).then(|| {
            let frac = -a.leading_eig_re / (b.leading_eig_re - a.leading_eig_re);
            a.pump + (b.pump - a.pump) * frac
        })
    });

    Ok(CharacteristicCurve {
        params: *params,
        method,
        probe_delta_s,
        reference_response: reference,
        points,
        threshold_estimate,
    })
}

/// Pump amplitude at which the selected branch loses stability, by bisection
/// to a relative bracket width of 1e-6.
pub fn instability_threshold(
    params: &OptomechParams,
    pump_bracket: (f64, f64),
    policy: BranchPolicy,
) -> Result<f64> {
    let lead = |e: f64| -> Result<f64> {
        let roots = steady_state_roots(params, e)?;
        Ok(select_branch(&roots, policy)?.leading_real_part())
    };
    let (mut lo, mut hi) = pump_bracket;
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "bracket must satisfy 0 <= low < high, got ({lo}, {hi})"
        )));
    }
    let (l_lo, l_hi) = (lead(lo)?, lead(hi)?);
    if !(l_lo < 0.0 && l_hi >= 0.0) {
        return Err(Error::BracketInvalid {
            low: l_lo,
            high: l_hi,
        });
    }
    while hi - lo >= 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if lead(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Where the smallest |f(δ)| over real δ sits for one pump level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceSample {
    pub amplitude: f64,
    pub delta_at_min: f64,
    /// min over δ of |f(δ)|/(ωₘ²κ²).
    pub min_f: f64,
}

/// Track the minimum of |f(δ)| over real δ for each pump amplitude (lower
/// branch). It dips to zero where the linear response diverges.
pub fn divergence_track(
    params: &OptomechParams,
    amplitudes: &[f64],
    workers: usize,
) -> Result<Vec<DivergenceSample>> {
    let span = 2.0 * params.omega_m.max(params.delta_p.abs()) + 10.0 * params.kappa;
    let scale = singular_scale(params);
    par_map(workers, amplitudes, |&e| {
        let w0 = steady_state_roots(params, e)?[0].w0;
        let objective = |d: f64| {
            f_denominator(d, params, w0)
                .map(|f| f.norm() / scale)
                .unwrap_or(0.0)
        };
        let n = 8000;
        let step = 2.0 * span / n as f64;
        let (mut best, mut best_val) = (-span, f64::INFINITY);
        for i in 0..=n {
            let d = -span + i as f64 * step;
            let v = objective(d);
            if v < best_val {
                best = d;
                best_val = v;
            }
        }
        let (d, v) = golden_min(&objective, best - step, best + step);
        let (delta_at_min, min_f) = if v < best_val {
            (d, v)
        } else {
            (best, best_val)
        };
        Ok(DivergenceSample {
            amplitude: e,
            delta_at_min,
            min_f,
        })
    })
    .into_iter()
    .collect()
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistabilityCell {
    pub delta_p: f64,
    pub e_pump: f64,
    pub root_count: usize,
    pub stable: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistabilityMap {
    pub delta_p: Vec<f64>,
    pub pump: Vec<f64>,
    /// Row-major: one row per Δ_p value.
    pub cells: Vec<BistabilityCell>,
}

impl BistabilityMap {
    pub fn cell(&self, i_delta_p: usize, i_pump: usize) -> &BistabilityCell {
        &self.cells[i_delta_p * self.pump.len() + i_pump]
    }
}

/// Root count and per-root stability over a (Δ_p, E_p) grid.
pub fn bistability_map(
    params: &OptomechParams,
    pump_grid: &[f64],
    delta_p_grid: &[f64],
    workers: usize,
) -> Result<BistabilityMap> {
    let cells: Vec<(f64, f64)> = delta_p_grid
        .iter()
        .flat_map(|&d| pump_grid.iter().map(move |&e| (d, e)))
        .collect();
    let cells = par_map(workers, &cells, |&(d, e)| {
        let roots = steady_state_roots(&params.with_delta_p(d), e)?;
        Ok(BistabilityCell {
            delta_p: d,
            e_pump: e,
            root_count: roots.len(),
            stable: roots.iter().map(|r| r.stable).collect(),
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(BistabilityMap {
        delta_p: delta_p_grid.to_vec(),
        pump: pump_grid.to_vec(),
        cells,
    })
}
