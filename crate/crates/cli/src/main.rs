//! `aptsense`: sweeps, figure presets and oracle cross-checks.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or config error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use aptsense_core::config::{preset_names, ExperimentConfig};
use aptsense_core::dynamics::{integrate_with, IntegrateOptions};
use aptsense_core::fluctuations::linewidth_sweep;
use aptsense_core::linear::{eigen_sweep, find_exceptional_points};
use aptsense_core::nonlinear::{response_sweep, sensitivity_to_u};
use aptsense_core::output::{self, metadata};
use aptsense_core::params::rad_to_hz;
use aptsense_core::verify::{self, VerifyOptions};
use aptsense_core::{Error, GridScale, SweepField};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

#[derive(Parser)]
#[command(name = "aptsense", version, about = "Dissipatively coupled two-mode Kerr systems: spectra, response and sensitivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue sweep of the 2x2 mode matrix, with exceptional points.
    Eig,
    /// Kerr response x = |b|^2 against the split delta.
    Response,
    /// dx/dU and its log-log slope over a list of U values.
    Sensitivity,
    /// Fluctuation linewidths and frequencies of the selected branch.
    Fluct,
    /// Oracle cross-check suite.
    Verify,
    /// Time trace of the mean-field dynamics from the origin.
    Trajectory {
        /// Duration in units of 1/gamma.
        #[arg(long, default_value_t = 200.0)]
        t_max: f64,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Drive power in W; overrides Omega.
    #[arg(long, global = true)]
    power: Option<f64>,
    /// RNG seed for verify
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of sweep points
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Sweep field: Delta, delta, g, Gamma, gamma_ab, gamma_0, U, Omega.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Sweep start (Hz).
    #[arg(long, global = true, allow_hyphen_values = true)]
    min: Option<f64>,
    /// Sweep end (Hz).
    #[arg(long, global = true, allow_hyphen_values = true)]
    max: Option<f64>,
    /// Logarithmic sweep spacing.
    #[arg(long, global = true)]
    log: bool,
    /// Comma-separated U values (Hz).
    #[arg(long, global = true, value_delimiter = ',')]
    u_values: Option<Vec<f64>>,
    /// Tolerance override for verify.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl Failure {
    fn usage(err: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, err: err.into() }
    }

    fn runtime(err: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, err: err.into() }
    }
}

/// Errors caused by what the user passed in map to exit code 2.
fn classify(err: Error) -> Failure {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::InvalidParams(_) | Error::NotAntiPt(_) => Failure::usage(err),
        other => Failure::runtime(other),
    }
}

fn default_preset(cmd: &Command) -> &'static str {
    match cmd {
        Command::Eig => "fig2-antiPT",
        Command::Fluct => "fig4-like",
        _ => "fig3a",
    }
}

fn load_config(cmd: &Command, o: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match (&o.config, &o.preset) {
        (Some(path), _) => ExperimentConfig::load(path),
        (None, Some(name)) => ExperimentConfig::preset(name),
        (None, None) => ExperimentConfig::preset(default_preset(cmd)),
    }
    .map_err(Failure::usage)?;
    if let Some(p) = o.power {
        cfg.power = Some(p);
    }
    if let Some(n) = o.points {
        cfg.sweep_points = n;
    }
    if let Some(f) = &o.field {
        cfg.sweep_field = f.clone();
    }
    if let Some(v) = o.min {
        cfg.sweep_min = v;
    }
    if let Some(v) = o.max {
        cfg.sweep_max = v;
    }
    if o.log {
        cfg.sweep_scale = GridScale::Log;
    }
    if let Some(us) = &o.u_values {
        cfg.u_values = Some(us.clone());
    }
    if let Some(t) = o.tolerance {
        cfg.tolerance = Some(t);
    }
    if let Some(out) = &o.out {
        cfg.out = Some(out.display().to_string());
    }
    cfg.validate().map_err(Failure::usage)?;
    Ok(cfg)
}

fn open_out(cfg: &ExperimentConfig) -> Result<Box<dyn Write>, Failure> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {path}")).map_err(Failure::usage)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: io::Error) -> Failure {
    Failure::runtime(e)
}

fn cmd_eig(cfg: &ExperimentConfig) -> Result<u8, Failure> {
    let p = cfg.params().map_err(classify)?;
    let field = cfg.field().map_err(classify)?;
    let grid = cfg.grid();
    let values = grid.values().map_err(classify)?;
    let rows = eigen_sweep(&p, field, &values, false);
    let eps = if grid.min < grid.max {
        match find_exceptional_points(&p, field, grid.min, grid.max) {
            Ok(v) => v,
            Err(Error::Domain(msg)) => {
                eprintln!("note: {msg}");
                Vec::new()
            }
            Err(e) => return Err(classify(e)),
        }
    } else {
        Vec::new()
    };
    let eps_hz: Vec<f64> = eps.iter().map(|v| rad_to_hz(*v)).collect();
    for v in &eps_hz {
        eprintln!("EP at {field} = {v} Hz");
    }
    if eps_hz.is_empty() {
        eprintln!("no exceptional points in range");
    }
    let meta = metadata("eig", cfg, json!({ "exceptional_points_hz": eps_hz }));
    let mut w = open_out(cfg)?;
    output::write_eig(&mut w, &meta, &rows).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(0)
}

fn cmd_response(cfg: &ExperimentConfig) -> Result<u8, Failure> {
    if cfg.field().map_err(classify)? != SweepField::Split {
        return Err(Failure::usage(anyhow::anyhow!("response sweeps the split; use --field delta")));
    }
    let base = cfg.params().map_err(classify)?;
    let grid = cfg.grid();
    let n = grid.n.max(2);
    let kerrs = cfg.kerr_values().unwrap_or_else(|| vec![base.kerr]);
    let mut w = open_out(cfg)?;
    // (maximum over the grid, value at the grid point nearest delta = 0)
    let mut peaks = Vec::new();
    for kerr in kerrs {
        let p = aptsense_core::SystemParams { kerr, ..base };
        let rows = response_sweep(&p, grid.min, grid.max, n).map_err(classify)?;
        let peak = rows.iter().max_by(|a, b| a.x_selected.total_cmp(&b.x_selected)).expect("n >= 2");
        let center = rows.iter().min_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs())).expect("n >= 2");
        eprintln!(
            "U = {} Hz: peak x = {} at delta = {} Hz; x = {} at delta = {} Hz",
            rad_to_hz(kerr),
            peak.x_selected,
            rad_to_hz(peak.delta),
            center.x_selected,
            rad_to_hz(center.delta)
        );
        peaks.push((peak.x_selected, center.x_selected));
        let meta = metadata(
            "response",
            cfg,
            json!({
                "U_hz": rad_to_hz(kerr),
                "Omega_hz": rad_to_hz(p.rabi),
                "peak_x": peak.x_selected,
                "peak_delta_hz": rad_to_hz(peak.delta),
                "center_x": center.x_selected,
                "center_delta_hz": rad_to_hz(center.delta),
            }),
        );
        output::write_response(&mut w, &meta, &rows).map_err(io_err)?;
    }
    for pair in peaks.windows(2) {
        if pair[1].0 > 0.0 && pair[1].1 > 0.0 {
            eprintln!("ratio at delta = 0: {}  ratio of maxima: {}", pair[0].1 / pair[1].1, pair[0].0 / pair[1].0);
        }
    }
    w.flush().map_err(io_err)?;
    Ok(0)
}

fn cmd_sensitivity(cfg: &ExperimentConfig, explicit: bool) -> Result<u8, Failure> {
    let p = cfg.params().map_err(classify)?;
    // preset U lists hold side-by-side comparisons, not sensitivity grids
    let kerrs = match cfg.kerr_values() {
        Some(us) if explicit => us,
        _ => (0..20).map(|k| p.kerr * 10f64.powf(2.0 * k as f64 / 19.0)).collect(),
    };
    let report = sensitivity_to_u(&p, &kerrs).map_err(classify)?;
    eprintln!(
        "slope d|dx/dU|: {:.6}  slope x: {:.6}  (EP reference exponent {})",
        report.slope_derivative, report.slope_response, report.ep_reference_exponent
    );
    let meta = metadata(
        "sensitivity",
        cfg,
        json!({
            "slope_derivative": report.slope_derivative,
            "slope_response": report.slope_response,
            "fit_residual": report.fit_residual,
            "richardson": report.richardson,
        }),
    );
    let mut w = open_out(cfg)?;
    output::write_sensitivity(&mut w, &meta, &report.rows).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(0)
}

fn cmd_fluct(cfg: &ExperimentConfig) -> Result<u8, Failure> {
    if cfg.field().map_err(classify)? != SweepField::Split {
        return Err(Failure::usage(anyhow::anyhow!("fluct sweeps the split; use --field delta")));
    }
    let p = cfg.params().map_err(classify)?;
    let grid = cfg.grid();
    let rows = linewidth_sweep(&p, grid.min, grid.max, grid.n).map_err(classify)?;
    let unstable_at: Vec<f64> = rows.iter().filter(|r| !r.stable).map(|r| rad_to_hz(r.delta)).collect();
    let unstable = unstable_at.len();
    let dip = rows
        .iter()
        .map(|r| (r.delta, r.linewidths.iter().copied().fold(f64::INFINITY, f64::min)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let mut extra = json!({ "unstable_rows": unstable, "unstable_delta_hz": unstable_at });
    if let Some((delta, lw)) = dip {
        let gamma = p.reference_rate();
        eprintln!(
            "min linewidth {} Hz ({} gamma) at delta = {} Hz ({} gamma)",
            rad_to_hz(lw),
            lw / gamma,
            rad_to_hz(delta),
            delta / gamma
        );
        extra["min_linewidth_hz"] = json!(rad_to_hz(lw));
        extra["min_linewidth_delta_hz"] = json!(rad_to_hz(delta));
    }
    if unstable > 0 {
        eprintln!("warning: {unstable} unstable rows");
    }
    let meta = metadata("fluct", cfg, extra);
    let mut w = open_out(cfg)?;
    output::write_fluct(&mut w, &meta, &rows).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(0)
}

fn cmd_verify(cfg: &ExperimentConfig, seed: u64) -> Result<u8, Failure> {
    let report = verify::run(&VerifyOptions { seed, tolerance: cfg.tolerance, ..VerifyOptions::default() });
    let mut w = open_out(cfg)?;
    writeln!(w, "{report}").map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_trajectory(cfg: &ExperimentConfig, t_max: f64) -> Result<u8, Failure> {
    let p = cfg.params().map_err(classify)?;
    let gamma = p.reference_rate();
    let zero = Complex64::new(0.0, 0.0);
    let opts = IntegrateOptions { tol: cfg.tolerance.unwrap_or(1e-10), steady_tol: None, ramp: None };
    let traj = integrate_with(&p, (zero, zero), t_max / gamma, &opts).map_err(classify)?;
    if traj.runaway {
        eprintln!("warning: runaway amplitude");
    }
    let meta = metadata("trajectory", cfg, json!({ "t_max_over_gamma": t_max, "runaway": traj.runaway }));
    let mut w = open_out(cfg)?;
    output::write_trajectory(&mut w, &meta, &traj).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(0)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("APTSENSE_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::usage(anyhow::anyhow!("APTSENSE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::runtime)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    if let Command::Presets = cli.command {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(0);
    }
    let cfg = load_config(&cli.command, &cli.opts)?;
    match cli.command {
        Command::Eig => cmd_eig(&cfg),
        Command::Response => cmd_response(&cfg),
        Command::Sensitivity => cmd_sensitivity(&cfg, cli.opts.u_values.is_some() || cli.opts.config.is_some()),
        Command::Fluct => cmd_fluct(&cfg),
        Command::Verify => cmd_verify(&cfg, cli.opts.seed),
        Command::Trajectory { t_max } => {
            if !(t_max > 0.0) {
                return Err(Failure::usage(anyhow::anyhow!("--t-max must be positive")));
            }
            cmd_trajectory(&cfg, t_max)
        }
        Command::Presets => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
