//! Configuration, CSV, SVG and report files.

pub mod config;
pub mod csv;
pub mod plot;
pub mod report;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use config::{parse_config, parse_config_with_overrides, BranchChoice, RunConfig};
pub use csv::{read_csv, write_curve_csv, write_spectrum_csv, Cell};
pub use plot::{emit_plot, render_svg, Plot, Series};
pub use report::{write_report, Check, ConformanceReport, DeviationMap};

/// Write through a sibling temporary file and rename into place, so readers
/// never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
