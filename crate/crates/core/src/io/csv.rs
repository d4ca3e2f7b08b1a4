//! CSV output. Floats use Rust's shortest round-trip formatting, so reading
//! a file back reproduces every value bit for bit. Flagged (singular) points
//! keep their row with `NaN` in the response columns.

use std::fmt::Write as _;
use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::sweep::{CharacteristicCurve, Spectrum};

pub const SPECTRUM_HEADER: &str =
    "delta_s,delta,re_b_plus,im_b_plus,re_eps_t,im_eps_t,abs_eps_t_sq,stable";
pub const CURVE_HEADER: &str = "pump,w0,gain,stable,leading_eig_re";

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:?}");
}

pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut s = String::with_capacity(64 * (spectrum.points.len() + 1));
    s.push_str(SPECTRUM_HEADER);
    s.push('\n');
    for p in &spectrum.points {
        let (bp, eps, pr) = match &p.response {
            Some(r) => (r.b_plus, r.eps_t, r.power_response),
            None => {
                let nan = num_complex::Complex64::new(f64::NAN, f64::NAN);
                (nan, nan, f64::NAN)
            }
        };
        for v in [p.delta_s, p.delta, bp.re, bp.im, eps.re, eps.im, pr] {
            num(&mut s, v);
            s.push(',');
        }
        s.push_str(if spectrum.steady.stable {
            "true"
        } else {
            "false"
        });
        s.push('\n');
    }
    s
}

pub fn curve_csv(curve: &CharacteristicCurve) -> String {
    let mut s = String::with_capacity(48 * (curve.points.len() + 1));
    s.push_str(CURVE_HEADER);
    s.push('\n');
    for p in &curve.points {
        for v in [p.pump, p.w0, p.gain] {
            num(&mut s, v);
            s.push(',');
        }
        s.push_str(if p.stable { "true," } else { "false," });
        num(&mut s, p.leading_eig_re);
        s.push('\n');
    }
    s
}

pub fn write_spectrum_csv(spectrum: &Spectrum, path: &Path) -> Result<()> {
    atomic_write(path, spectrum_csv(spectrum).as_bytes())
}

pub fn write_curve_csv(curve: &CharacteristicCurve, path: &Path) -> Result<()> {
    atomic_write(path, curve_csv(curve).as_bytes())
}

/// A parsed CSV cell: a number or a boolean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Bool(bool),
}

impl Cell {
    pub fn num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Bool(_) => None,
        }
    }
}

/// Read back a file written by this module: header plus typed rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<Cell>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("{}: empty file", path.display()),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| match c {
                "true" => Ok(Cell::Bool(true)),
                "false" => Ok(Cell::Bool(false)),
                other => other
                    .parse::<f64>()
                    .map(Cell::Num)
                    .map_err(|_| Error::Parse {
                        line: i + 2,
                        message: format!("{}: bad cell `{other}`", path.display()),
                    }),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse {
                line: i + 2,
                message: format!("{}: expected {} cells", path.display(), header.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{steady_state_roots, Method, OptomechParams};
    use crate::sweep::{spectrum, Axis, SpectrumPoint, SweepSpec};
    use crate::ResponseSettings;

    fn sample() -> Spectrum {
        let p = OptomechParams::transistor_reference();
        let grid = SweepSpec::linear(Axis::DeltaS, -3.0, 3.0, 61);
        spectrum(&p, 5.0, 5e-3, &grid, &ResponseSettings::default(), 1).unwrap()
    }

    #[test]
    fn spectrum_round_trips_bit_exactly() {
        let s = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_spectrum_csv(&s, &path).unwrap();
        let (header, rows) = read_csv(&path).unwrap();
        assert_eq!(header.join(","), SPECTRUM_HEADER);
        assert_eq!(rows.len(), s.points.len());
        for (row, pt) in rows.iter().zip(&s.points) {
            let r = pt.response.unwrap();
            assert_eq!(row[0].num().unwrap().to_bits(), pt.delta_s.to_bits());
            assert_eq!(row[2].num().unwrap().to_bits(), r.b_plus.re.to_bits());
            assert_eq!(row[5].num().unwrap().to_bits(), r.eps_t.im.to_bits());
            assert_eq!(row[6].num().unwrap().to_bits(), r.power_response.to_bits());
            assert_eq!(row[7], Cell::Bool(true));
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
    }

    #[test]
    fn flagged_points_keep_their_rows() {
        let p = OptomechParams::transistor_reference();
        let steady = steady_state_roots(&p, 0.0).unwrap()[0];
        let s = Spectrum {
            params: p,
            drive: crate::DriveConfig::new(0.0, 1e-3, 0.0).unwrap(),
            method: Method::ClosedForm,
            branch: steady.branch,
            steady,
            points: (0..3)
                .map(|i| SpectrumPoint {
                    delta_s: i as f64,
                    delta: i as f64 + p.delta_p,
                    response: None,
                    failure: Some("singular".into()),
                })
                .collect(),
        };
        let text = spectrum_csv(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], SPECTRUM_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0.0,-10.0,NaN"));
    }
}
