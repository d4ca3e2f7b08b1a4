//! Conformance report written as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::atomic_write;
use crate::error::{Error, Result};

/// Relative deviation of one quantity from its oracle over a 2-D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationMap {
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major, `values[iy][ix]`; `None` where the response is singular.
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub grid_summary: String,
    #[serde(with = "nullable")]
    pub max_rel_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation_map: Option<DeviationMap>,
}

impl Check {
    /// A check that passes when the deviation is within tolerance.
    pub fn within(
        name: impl Into<String>,
        grid_summary: impl Into<String>,
        max_rel_deviation: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            grid_summary: grid_summary.into(),
            max_rel_deviation,
            tolerance,
            passed: max_rel_deviation.is_finite() && max_rel_deviation <= tolerance,
            note: String::new(),
            deviation_map: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub environment: Environment,
    /// sha256 of the canonical configuration text.
    pub config_sha256: String,
    /// Response method used for figures.
    pub figures_method: String,
    pub checks: Vec<Check>,
}

impl ConformanceReport {
    pub fn new(config_text: &str, figures_method: impl Into<String>) -> Self {
        Self {
            environment: Environment::current(),
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            figures_method: figures_method.into(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Non-finite numbers as `null`, read back as NaN.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub fn write_report(report: &ConformanceReport, path: &Path) -> Result<()> {
    atomic_write(path, report.to_json().as_bytes())
}

pub fn read_report(path: &Path) -> Result<ConformanceReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_sha256_of_config() {
        let r = ConformanceReport::new("abc", "linearized");
        assert_eq!(
            r.config_sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut r = ConformanceReport::new("x = 1", "linearized");
        r.checks.push(Check::within("a", "3 points", 1e-13, 1e-12));
        let mut c = Check::within("b", "2x2", 0.06, 1e-6).with_note("documented");
        c.deviation_map = Some(DeviationMap {
            x_label: "delta_s".into(),
            y_label: "pump".into(),
            x: vec![0.0, 1.0],
            y: vec![2.0, 3.0],
            values: vec![vec![Some(0.1), None], vec![Some(0.3), Some(0.4)]],
        });
        r.checks.push(c);
        assert!(!r.passed());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_report(&r, &path).unwrap();
        assert_eq!(read_report(&path).unwrap(), r);
    }

    #[test]
    fn non_finite_deviation_fails_and_survives_json() {
        let mut r = ConformanceReport::new("", "linearized");
        r.checks
            .push(Check::within("nan", "1 point", f64::NAN, 1.0));
        assert!(!r.passed());
        let back: ConformanceReport = serde_json::from_str(&r.to_json()).unwrap();
        assert!(back.checks[0].max_rel_deviation.is_nan());
        assert!(!back.checks[0].passed);
    }
}
