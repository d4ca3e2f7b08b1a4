//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical or I/O
//! failure, 3 a validation check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::{
    atomic_write, emit_plot, parse_config_with_overrides, write_curve_csv, write_report,
    write_spectrum_csv, Plot, RunConfig, Series,
};
use crate::model::{steady_state_roots, DriveConfig, Method};
use crate::sweep::{par_map, spectrum, transistor_curve};
use crate::validate::run_validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "OMTX_OUT";

#[derive(Debug, Parser)]
#[command(name = "omtx", version, about = "Optomechanical transistor simulator")]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Response method: closed, linearized or timedomain.
    #[arg(long, global = true)]
    method: Option<Method>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override a configuration key, e.g. `--set kappa="0.215 MHz"`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print steady-state roots and their stability.
    Steady {
        #[arg(long)]
        pump: Option<f64>,
    },
    /// Signal response against signal-cavity detuning, pump on and off.
    Spectrum {
        #[arg(long)]
        ds_start: Option<f64>,
        #[arg(long)]
        ds_stop: Option<f64>,
        #[arg(long)]
        ds_count: Option<usize>,
        #[arg(long)]
        pump: Option<f64>,
    },
    /// Normalised gain against pump amplitude.
    Transistor {
        #[command(flatten)]
        grid: PumpGrid,
        #[arg(long)]
        probe: Option<f64>,
    },
    /// Jacobian eigenvalues against pump amplitude.
    Stability {
        #[command(flatten)]
        grid: PumpGrid,
    },
    /// Oracle cross-checks; writes conformance_report.json.
    Validate,
}

#[derive(Debug, Args)]
struct PumpGrid {
    #[arg(long)]
    pump_start: Option<f64>,
    #[arg(long)]
    pump_stop: Option<f64>,
    #[arg(long)]
    pump_count: Option<usize>,
}

impl PumpGrid {
    fn overrides(&self, out: &mut Vec<String>) {
        push(out, "pump_start", self.pump_start);
        push(out, "pump_stop", self.pump_stop);
        push(out, "pump_count", self.pump_count);
    }
}

fn push<T: std::fmt::Debug>(out: &mut Vec<String>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        out.push(format!("{key}={v:?}"));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::UnknownKey { .. }
        | Error::MissingUnit { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidParams(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Run the tool with `argv` (including the program name) and return the exit
/// code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if argv.len() <= 1 {
        let mut cmd = <Cli as clap::CommandFactory>::command();
        eprintln!("{}", cmd.render_usage());
        eprintln!("run `omtx --help` for the list of commands");
        return EXIT_USAGE;
    }
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli, &config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        None => String::new(),
    };
    let mut overrides = cli.set.clone();
    if let Some(m) = cli.method {
        overrides.push(format!("method={m}"));
    }
    push(&mut overrides, "workers", cli.workers);
    match &cli.command {
        Command::Steady { pump } => push(&mut overrides, "e_pump", *pump),
        Command::Spectrum {
            ds_start,
            ds_stop,
            ds_count,
            pump,
        } => {
            push(&mut overrides, "ds_start", *ds_start);
            push(&mut overrides, "ds_stop", *ds_stop);
            push(&mut overrides, "ds_count", *ds_count);
            push(&mut overrides, "e_pump", *pump);
        }
        Command::Transistor { grid, probe } => {
            grid.overrides(&mut overrides);
            push(&mut overrides, "probe_delta_s", *probe);
        }
        Command::Stability { grid } => grid.overrides(&mut overrides),
        Command::Validate => {}
    }
    parse_config_with_overrides(&text, &overrides)
}

/// `--out`, then `out_dir` from the configuration, then `$OMTX_OUT`, then `out`.
fn output_dir(cli: &Cli, config: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn warn_signal_ratio(config: &RunConfig) {
    let drive = DriveConfig {
        e_pump: config.e_pump,
        e_signal: config.e_signal,
        delta: 0.0,
    };
    if let Some(r) = drive.linear_response_warning(config.signal_ratio_warn) {
        eprintln!(
            "warning: signal/pump amplitude ratio {r:.3e} exceeds {:.3e}; first-order response may be inaccurate",
            config.signal_ratio_warn
        );
    }
}

fn execute(cli: &Cli, config: &RunConfig) -> Result<i32> {
    let out = output_dir(cli, config);
    match &cli.command {
        Command::Steady { .. } => steady(config),
        Command::Spectrum { .. } => spectrum_cmd(config, &out),
        Command::Transistor { .. } => transistor_cmd(config, &out),
        Command::Stability { .. } => stability_cmd(config, &out),
        Command::Validate => validate_cmd(config, &out),
    }
}

fn steady(config: &RunConfig) -> Result<i32> {
    let roots = steady_state_roots(&config.params, config.e_pump)?;
    println!("E_p = {:?}: {} root(s)", config.e_pump, roots.len());
    for r in &roots {
        println!(
            "{:<6} w0 = {:<24} Q0 = {:<24} {} leading eigenvalue re = {:.6e}",
            r.branch.as_str(),
            format!("{:?}", r.w0),
            format!("{:?}", r.q0),
            if r.stable { "stable  " } else { "unstable" },
            r.leading_real_part()
        );
    }
    Ok(EXIT_OK)
}

fn spectrum_cmd(config: &RunConfig, out: &Path) -> Result<i32> {
    warn_signal_ratio(config);
    let settings = config.response_settings();
    let grid = config.spectrum_grid();
    let on = spectrum(
        &config.params,
        config.e_pump,
        config.e_signal,
        &grid,
        &settings,
        config.workers,
    )?;
    let off = spectrum(
        &config.params,
        0.0,
        config.e_signal,
        &grid,
        &settings,
        config.workers,
    )?;
    let flagged = on.points.iter().filter(|p| p.response.is_none()).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} singular point(s) flagged in the pump-on spectrum");
    }
    if !on.steady.stable {
        eprintln!("warning: the pump-on steady state is unstable; the response is formal only");
    }
    write_spectrum_csv(&on, &out.join("spectrum.csv"))?;
    write_spectrum_csv(&off, &out.join("spectrum_pump_off.csv"))?;
    emit_plot(
        &Plot {
            title: "Signal response".into(),
            x_label: "delta_s (rad/us)".into(),
            y_label: "|eps_T|^2".into(),
            series: vec![
                Series::from_spectrum("pump off", &off),
                Series::from_spectrum(format!("E_p = {}", config.e_pump), &on),
            ],
        },
        &out.join("spectrum.svg"),
    )?;
    println!("wrote {}", out.join("spectrum.csv").display());
    Ok(EXIT_OK)
}

fn transistor_cmd(config: &RunConfig, out: &Path) -> Result<i32> {
    warn_signal_ratio(config);
    let curve = transistor_curve(
        &config.params,
        &config.pump_grid(),
        config.e_signal,
        config.probe_delta_s,
        &config.response_settings(),
        config.workers,
    )?;
    write_curve_csv(&curve, &out.join("transistor.csv"))?;
    emit_plot(
        &Plot {
            title: "Signal gain".into(),
            x_label: "E_p".into(),
            y_label: "gain".into(),
            series: vec![Series::from_curve(
                format!("delta_s = {}", config.probe_delta_s),
                &curve,
            )],
        },
        &out.join("transistor.svg"),
    )?;
    if let Some(t) = curve.threshold_estimate {
        println!("instability near E_p = {t:?}");
    }
    println!("wrote {}", out.join("transistor.csv").display());
    Ok(EXIT_OK)
}

pub const STABILITY_HEADER: &str =
    "pump,branch,w0,stable,re_l1,im_l1,re_l2,im_l2,re_l3,im_l3,re_l4,im_l4";

fn stability_cmd(config: &RunConfig, out: &Path) -> Result<i32> {
    let params = config.params;
    let pumps = config.pump_grid().pump_amplitudes(&params)?;
    let rows = par_map(config.workers, &pumps, |&e| steady_state_roots(&params, e));
    let mut csv = String::from(STABILITY_HEADER);
    csv.push('\n');
    let mut lead = Vec::new();
    for (&e, roots) in pumps.iter().zip(rows) {
        let roots = roots?;
        lead.push((e, roots[0].leading_real_part()));
        for r in roots {
            let _ = write!(csv, "{e:?},{},{:?},{}", r.branch.as_str(), r.w0, r.stable);
            for l in r.eigenvalues {
                let _ = write!(csv, ",{:?},{:?}", l.re, l.im);
            }
            csv.push('\n');
        }
    }
    atomic_write(&out.join("stability.csv"), csv.as_bytes())?;
    emit_plot(
        &Plot {
            title: "Leading eigenvalue".into(),
            x_label: "E_p".into(),
            y_label: "max Re(lambda) (1/us)".into(),
            series: vec![Series {
                label: "lower branch".into(),
                points: lead,
            }],
        },
        &out.join("stability.svg"),
    )?;
    println!("wrote {}", out.join("stability.csv").display());
    Ok(EXIT_OK)
}

fn validate_cmd(config: &RunConfig, out: &Path) -> Result<i32> {
    let report = run_validation(config)?;
    let path = out.join("conformance_report.json");
    write_report(&report, &path)?;
    for c in &report.checks {
        println!(
            "{} {:<24} max deviation {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.max_rel_deviation,
            c.tolerance
        );
    }
    println!("wrote {}", path.display());
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}
