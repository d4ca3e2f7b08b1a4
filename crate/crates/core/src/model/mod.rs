//! Domain types and the closed-form steady-state and response formulas.

mod response;
mod steady;
mod units;

pub use response::{
    b_plus_closed_form, b_plus_closed_form_with_floor, eta, f_denominator, output_field,
    response_eps, singular_scale, ResponsePoint, ResponseSettings, DEFAULT_SINGULAR_FLOOR,
};
pub use steady::{select_branch, steady_state_roots, Branch, BranchPolicy, SteadyState};
pub use units::{
    coupling_rate, drive_amplitude, mhz_to_rad_per_us, wavelength_to_angular_freq, HBAR,
    SPEED_OF_LIGHT,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five model rates, all angular frequencies in rad/µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptomechParams {
    /// Optomechanical coupling rate G₀.
    pub g0: f64,
    /// Mechanical angular frequency ωₘ.
    pub omega_m: f64,
    /// Cavity amplitude decay rate κ.
    pub kappa: f64,
    /// Mechanical damping rate γₘ.
    pub gamma_m: f64,
    /// Pump-cavity detuning Δ_p = ω_c − ω_p (signed).
    pub delta_p: f64,
}

impl OptomechParams {
    pub fn new(g0: f64, omega_m: f64, kappa: f64, gamma_m: f64, delta_p: f64) -> Result<Self> {
        let p = Self {
            g0,
            omega_m,
            kappa,
            gamma_m,
            delta_p,
        };
        p.validate()?;
        Ok(p)
    }

    /// The toroidal-resonator operating point: (G₀, ωₘ, κ, γₘ) = (0.9, 10,
    /// 2π×0.215, 2π×0.14) rad/µs with the pump on the blue sideband,
    /// Δ_p = −ωₘ.
    pub fn transistor_reference() -> Self {
        Self {
            g0: 0.9,
            omega_m: 10.0,
            kappa: mhz_to_rad_per_us(0.215),
            gamma_m: mhz_to_rad_per_us(0.14),
            delta_p: -10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g0,
            self.omega_m,
            self.kappa,
            self.gamma_m,
            self.delta_p,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite rate in {self:?}")));
        }
        if self.omega_m <= 0.0 {
            return Err(Error::InvalidParams("omega_m must be > 0".into()));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParams("kappa must be > 0".into()));
        }
        if self.gamma_m < 0.0 {
            return Err(Error::InvalidParams("gamma_m must be >= 0".into()));
        }
        if self.g0 < 0.0 {
            return Err(Error::InvalidParams("g0 must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_delta_p(self, delta_p: f64) -> Self {
        Self { delta_p, ..self }
    }

    pub fn with_g0(self, g0: f64) -> Self {
        Self { g0, ..self }
    }

    /// ωₘ > κ.
    pub fn resolved_sideband(&self) -> bool {
        self.omega_m > self.kappa
    }

    /// Detuning shift per intracavity photon, G₀²/ωₘ.
    pub fn shift_per_photon(&self) -> f64 {
        self.g0 * self.g0 / self.omega_m
    }

    /// Effective detuning Δ_p − G₀²w₀/ωₘ at photon number `w0`.
    pub fn effective_detuning(&self, w0: f64) -> f64 {
        self.delta_p - self.shift_per_photon() * w0
    }
}

/// Pump and signal drive amplitudes plus the signal-pump detuning δ = ω_s − ω_p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub e_pump: f64,
    pub e_signal: f64,
    pub delta: f64,
}

impl DriveConfig {
    pub fn new(e_pump: f64, e_signal: f64, delta: f64) -> Result<Self> {
        let d = Self {
            e_pump,
            e_signal,
            delta,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_pump.is_finite() && self.e_pump >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pump amplitude must be finite and >= 0, got {}",
                self.e_pump
            )));
        }
        if !(self.e_signal.is_finite() && self.e_signal >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "signal amplitude must be finite and >= 0, got {}",
                self.e_signal
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidArgument("delta must be finite".into()));
        }
        Ok(())
    }

    /// Returns the signal/pump ratio when both drives are on and the ratio is
    /// above `max_ratio`, i.e. when first-order response may be inaccurate.
    pub fn linear_response_warning(&self, max_ratio: f64) -> Option<f64> {
        if self.e_pump > 0.0 && self.e_signal > 0.0 {
            let ratio = self.e_signal / self.e_pump;
            (ratio > max_ratio).then_some(ratio)
        } else {
            None
        }
    }
}

/// How the signal response b₊ is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The printed closed-form expression.
    ClosedForm,
    /// Direct solve of the first-order sideband equations.
    Linearized,
    /// Integrate the equations of motion and demodulate the field.
    TimeDomain,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed",
            Method::Linearized => "linearized",
            Method::TimeDomain => "timedomain",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" | "closed_form" => Ok(Method::ClosedForm),
            "linearized" => Ok(Method::Linearized),
            "timedomain" | "time_domain" => Ok(Method::TimeDomain),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}
