use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const PER_US_PER_S: f64 = 1e-6;

/// ν in MHz to angular frequency 2πν in rad/µs.
pub fn mhz_to_rad_per_us(mhz: f64) -> f64 {
    2.0 * PI * mhz
}

/// Vacuum wavelength (m) to carrier angular frequency (rad/s).
pub fn wavelength_to_angular_freq(wavelength: f64) -> Result<f64> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wavelength must be > 0, got {wavelength}"
        )));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / wavelength)
}

/// Drive amplitude |E| = √(2𝒫κ/ħω) for an optical power in watts.
///
/// `kappa` is in rad/µs and the carrier in rad/s; the result is in the
/// model-native unit photon^½·rad/µs.
pub fn drive_amplitude(power: f64, kappa: f64, carrier_angular_freq: f64) -> Result<f64> {
    if !(power.is_finite() && power >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "optical power must be >= 0, got {power}"
        )));
    }
    if !(carrier_angular_freq.is_finite() && carrier_angular_freq > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "carrier angular frequency must be > 0, got {carrier_angular_freq}"
        )));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be > 0, got {kappa}"
        )));
    }
    // photons per second times kappa in s^-1, then back to the µs scale
    let photon_flux = power / (HBAR * carrier_angular_freq);
    let kappa_per_s = kappa / PER_US_PER_S;
    Ok((2.0 * photon_flux * kappa_per_s).sqrt() * PER_US_PER_S)
}

/// Single-photon coupling rate G₀ = (ω_c/L)·√(ħ/(m·ωₘ)) in rad/s.
pub fn coupling_rate(
    cavity_angular_freq: f64,
    cavity_length: f64,
    effective_mass: f64,
    omega_m: f64,
) -> Result<f64> {
    for (name, v) in [
        ("cavity angular frequency", cavity_angular_freq),
        ("cavity length", cavity_length),
        ("effective mass", effective_mass),
        ("mechanical frequency", omega_m),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be > 0, got {v}"
            )));
        }
    }
    Ok(cavity_angular_freq / cavity_length * (HBAR / (effective_mass * omega_m)).sqrt())
}
