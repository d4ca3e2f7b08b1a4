//! `key = value` run configuration.
//!
//! Rates must carry a unit: `MHz` (multiplied by 2π to give rad/µs) or
//! `rad/us` (taken as is). Drive amplitudes are bare numbers in model units;
//! alternatively `pump_power`/`signal_power` (W, mW, uW) together with
//! `carrier_wavelength` (nm, m) are converted on load. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::model::{
    drive_amplitude, mhz_to_rad_per_us, wavelength_to_angular_freq, BranchPolicy, Method,
    OptomechParams,
};
use crate::oracles::TimeDomainSettings;
use crate::sweep::{Axis, Scale, SweepSpec};
use crate::ResponseSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchChoice {
    Lowest,
    Highest,
    Continuation,
}

impl BranchChoice {
    fn as_str(&self) -> &'static str {
        match self {
            BranchChoice::Lowest => "lowest",
            BranchChoice::Highest => "highest",
            BranchChoice::Continuation => "continuation",
        }
    }

    /// Policy for the first point of a sweep; continuation starts from the
    /// lower branch.
    pub fn policy(&self) -> BranchPolicy {
        match self {
            BranchChoice::Lowest => BranchPolicy::Lowest,
            BranchChoice::Highest => BranchPolicy::Highest,
            BranchChoice::Continuation => BranchPolicy::Continuation(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: OptomechParams,
    pub e_pump: f64,
    pub e_signal: f64,
    /// Spectrum grid over Δ_s, rad/µs.
    pub ds_start: f64,
    pub ds_stop: f64,
    pub ds_count: usize,
    /// Pump amplitude grid for `transistor` and `stability`.
    pub pump_start: f64,
    pub pump_stop: f64,
    pub pump_count: usize,
    pub pump_scale: Scale,
    pub probe_delta_s: f64,
    pub method: Method,
    pub branch: BranchChoice,
    pub out_dir: Option<PathBuf>,
    /// Integrator tolerance for the time-domain method.
    pub tolerance: f64,
    pub window_periods: u32,
    pub workers: usize,
    /// Warn when E_s/E_p exceeds this.
    pub signal_ratio_warn: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: OptomechParams::transistor_reference(),
            e_pump: 6.0,
            e_signal: 6e-3,
            ds_start: -5.0,
            ds_stop: 5.0,
            ds_count: 401,
            pump_start: 0.0,
            pump_stop: 15.0,
            pump_count: 31,
            pump_scale: Scale::Linear,
            probe_delta_s: 0.0,
            method: Method::Linearized,
            branch: BranchChoice::Lowest,
            out_dir: None,
            tolerance: 1e-10,
            window_periods: 20,
            workers: 1,
            signal_ratio_warn: 0.01,
        }
    }
}

impl RunConfig {
    pub fn spectrum_grid(&self) -> SweepSpec {
        SweepSpec {
            axis: Axis::DeltaS,
            start: self.ds_start,
            stop: self.ds_stop,
            count: self.ds_count,
            scale: Scale::Linear,
            method: self.method,
            branch_policy: self.branch.policy(),
        }
    }

    pub fn pump_grid(&self) -> SweepSpec {
        SweepSpec {
            axis: Axis::PumpAmplitude,
            start: self.pump_start,
            stop: self.pump_stop,
            count: self.pump_count,
            scale: self.pump_scale,
            method: self.method,
            branch_policy: self.branch.policy(),
        }
    }

    pub fn response_settings(&self) -> ResponseSettings {
        ResponseSettings {
            time_domain: TimeDomainSettings {
                tolerance: self.tolerance,
                window_periods: self.window_periods,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let rate = |s: &mut String, k: &str, v: f64| {
            let _ = writeln!(s, "{k} = {v:?} rad/us");
        };
        rate(&mut s, "g0", p.g0);
        rate(&mut s, "omega_m", p.omega_m);
        rate(&mut s, "kappa", p.kappa);
        rate(&mut s, "gamma_m", p.gamma_m);
        rate(&mut s, "delta_p", p.delta_p);
        let _ = writeln!(s, "e_pump = {:?}", self.e_pump);
        let _ = writeln!(s, "e_signal = {:?}", self.e_signal);
        rate(&mut s, "ds_start", self.ds_start);
        rate(&mut s, "ds_stop", self.ds_stop);
        let _ = writeln!(s, "ds_count = {}", self.ds_count);
        let _ = writeln!(s, "pump_start = {:?}", self.pump_start);
        let _ = writeln!(s, "pump_stop = {:?}", self.pump_stop);
        let _ = writeln!(s, "pump_count = {}", self.pump_count);
        let scale = match self.pump_scale {
            Scale::Linear => "linear",
            Scale::Logarithmic => "log",
        };
        let _ = writeln!(s, "pump_scale = {scale}");
        rate(&mut s, "probe_delta_s", self.probe_delta_s);
        let _ = writeln!(s, "method = {}", self.method);
        let _ = writeln!(s, "branch = {}", self.branch.as_str());
        if let Some(dir) = &self.out_dir {
            let _ = writeln!(s, "out_dir = {}", dir.display());
        }
        let _ = writeln!(s, "tolerance = {:?}", self.tolerance);
        let _ = writeln!(s, "window_periods = {}", self.window_periods);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "signal_ratio_warn = {:?}", self.signal_ratio_warn);
        s
    }
}

const KEYS: &[&str] = &[
    "g0",
    "omega_m",
    "kappa",
    "gamma_m",
    "delta_p",
    "e_pump",
    "e_signal",
    "pump_power",
    "signal_power",
    "carrier_wavelength",
    "ds_start",
    "ds_stop",
    "ds_count",
    "pump_start",
    "pump_stop",
    "pump_count",
    "pump_scale",
    "probe_delta_s",
    "method",
    "branch",
    "out_dir",
    "tolerance",
    "window_periods",
    "workers",
    "signal_ratio_warn",
];

/// Line number 0 marks a command-line override.
type Entries = BTreeMap<String, (usize, String)>;

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with_overrides(text, &[])
}

/// Parse `text`, then apply `key=value` overrides (which win over the file).
pub fn parse_config_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if entries.contains_key(key) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.insert(key.to_string(), (line, value.trim().to_string()));
    }
    for ov in overrides {
        let (key, value) = ov.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("override `{ov}` is not key=value"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey {
                line: 0,
                key: key.to_string(),
            });
        }
        entries.insert(key.to_string(), (0, value.trim().to_string()));
    }
    resolve(&entries)
}

fn number(line: usize, key: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{key}`: `{s}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{key}` must be finite"),
        });
    }
    Ok(v)
}

fn split_unit(line: usize, key: &str, s: &str) -> Result<(f64, String)> {
    let mut parts = s.split_whitespace();
    let (Some(num), unit) = (parts.next(), parts.next()) else {
        return Err(Error::Parse {
            line,
            message: format!("`{key}` has no value"),
        });
    };
    if parts.next().is_some() {
        return Err(Error::Parse {
            line,
            message: format!("`{key}`: unexpected trailing text in `{s}`"),
        });
    }
    let Some(unit) = unit else {
        return Err(Error::MissingUnit {
            line,
            key: key.to_string(),
        });
    };
    Ok((number(line, key, num)?, unit.to_string()))
}

fn rate(line: usize, key: &str, s: &str) -> Result<f64> {
    let (v, unit) = split_unit(line, key, s)?;
    match unit.as_str() {
        "MHz" => Ok(mhz_to_rad_per_us(v)),
        "rad/us" => Ok(v),
        other => Err(Error::Parse {
            line,
            message: format!("`{key}`: unknown rate unit `{other}` (use MHz or rad/us)"),
        }),
    }
}

fn power(line: usize, key: &str, s: &str) -> Result<f64> {
    let (v, unit) = split_unit(line, key, s)?;
    let scale = match unit.as_str() {
        "W" => 1.0,
        "mW" => 1e-3,
        "uW" => 1e-6,
        other => {
            return Err(Error::Parse {
                line,
                message: format!("`{key}`: unknown power unit `{other}`"),
            })
        }
    };
    Ok(v * scale)
}

fn length(line: usize, key: &str, s: &str) -> Result<f64> {
    let (v, unit) = split_unit(line, key, s)?;
    match unit.as_str() {
        "m" => Ok(v),
        "nm" => Ok(v * 1e-9),
        other => Err(Error::Parse {
            line,
            message: format!("`{key}`: unknown length unit `{other}`"),
        }),
    }
}

fn count(line: usize, key: &str, s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{key}`: `{s}` is not a non-negative integer"),
    })
}

fn resolve(entries: &Entries) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let get = |k: &str| entries.get(k).map(|(l, v)| (*l, v.as_str()));

    let p = &mut cfg.params;
    for (key, slot) in [
        ("g0", &mut p.g0),
        ("omega_m", &mut p.omega_m),
        ("kappa", &mut p.kappa),
        ("gamma_m", &mut p.gamma_m),
        ("delta_p", &mut p.delta_p),
    ] {
        if let Some((l, v)) = get(key) {
            *slot = rate(l, key, v)?;
        }
    }
    cfg.params.validate()?;

    let carrier = get("carrier_wavelength")
        .map(|(l, v)| length(l, "carrier_wavelength", v).and_then(wavelength_to_angular_freq))
        .transpose()?;
    for (amp_key, power_key, slot) in [
        ("e_pump", "pump_power", &mut cfg.e_pump),
        ("e_signal", "signal_power", &mut cfg.e_signal),
    ] {
        match (get(amp_key), get(power_key)) {
            (Some(_), Some((l, _))) => {
                return Err(Error::Parse {
                    line: l,
                    message: format!("give either `{amp_key}` or `{power_key}`, not both"),
                })
            }
            (Some((l, v)), None) => {
                let a = number(l, amp_key, v)?;
                if a < 0.0 {
                    return Err(Error::Parse {
                        line: l,
                        message: format!("`{amp_key}` must be >= 0"),
                    });
                }
                *slot = a;
            }
            (None, Some((l, v))) => {
                let watts = power(l, power_key, v)?;
                let carrier = carrier.ok_or_else(|| Error::Parse {
                    line: l,
                    message: format!("`{power_key}` needs `carrier_wavelength`"),
                })?;
                *slot = drive_amplitude(watts, cfg.params.kappa, carrier).map_err(|e| {
                    Error::Parse {
                        line: l,
                        message: e.to_string(),
                    }
                })?;
            }
            (None, None) => {}
        }
    }

    for (key, slot) in [
        ("ds_start", &mut cfg.ds_start),
        ("ds_stop", &mut cfg.ds_stop),
        ("probe_delta_s", &mut cfg.probe_delta_s),
    ] {
        if let Some((l, v)) = get(key) {
            *slot = rate(l, key, v)?;
        }
    }
    for (key, slot) in [
        ("pump_start", &mut cfg.pump_start),
        ("pump_stop", &mut cfg.pump_stop),
        ("tolerance", &mut cfg.tolerance),
        ("signal_ratio_warn", &mut cfg.signal_ratio_warn),
    ] {
        if let Some((l, v)) = get(key) {
            *slot = number(l, key, v)?;
        }
    }
    for (key, slot) in [
        ("ds_count", &mut cfg.ds_count),
        ("pump_count", &mut cfg.pump_count),
        ("workers", &mut cfg.workers),
    ] {
        if let Some((l, v)) = get(key) {
            *slot = count(l, key, v)?;
        }
    }
    if let Some((l, v)) = get("window_periods") {
        cfg.window_periods =
            count(l, "window_periods", v)?
                .try_into()
                .map_err(|_| Error::Parse {
                    line: l,
                    message: "`window_periods` too large".into(),
                })?;
    }
    if let Some((l, v)) = get("pump_scale") {
        cfg.pump_scale = match v {
            "linear" => Scale::Linear,
            "log" | "logarithmic" => Scale::Logarithmic,
            other => {
                return Err(Error::Parse {
                    line: l,
                    message: format!("`pump_scale`: unknown scale `{other}`"),
                })
            }
        };
    }
    if let Some((l, v)) = get("method") {
        cfg.method = v.parse().map_err(|e: Error| Error::Parse {
            line: l,
            message: e.to_string(),
        })?;
    }
    if let Some((l, v)) = get("branch") {
        cfg.branch = match v {
            "lowest" => BranchChoice::Lowest,
            "highest" => BranchChoice::Highest,
            "continuation" => BranchChoice::Continuation,
            other => {
                return Err(Error::Parse {
                    line: l,
                    message: format!("`branch`: unknown policy `{other}`"),
                })
            }
        };
    }
    if let Some((_, v)) = get("out_dir") {
        cfg.out_dir = Some(PathBuf::from(v));
    }
    if cfg.tolerance <= 0.0 {
        return Err(Error::Parse {
            line: get("tolerance").map_or(0, |(l, _)| l),
            message: "`tolerance` must be > 0".into(),
        });
    }
    if cfg.workers == 0 {
        cfg.workers = 1;
    }
    Ok(cfg)
}
