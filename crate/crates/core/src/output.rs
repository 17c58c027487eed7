//! CSV writers. Each table starts with one `#`-prefixed JSON line echoing
//! the parameters and conventions, so files are self-describing.
//!
//! Frequencies and rates are written in Hz (ν = ω/2π); intensities are the
//! dimensionless x = |b|². Floats use the shortest round-trip representation,
//! which keeps output byte-identical across runs.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::dynamics::Trajectory;
use crate::fluctuations::LinewidthRow;
use crate::linear::EigenRow;
use crate::nonlinear::{ResponseRow, SensitivityRow, EP_SENSITIVITY_EXPONENT};
use crate::params::rad_to_hz;

pub const CONVENTIONS: &str = "rotating frame at omega_d; H - omega_d; Kerr term +2iU|b|^2 b in db/dt; \
     linewidth = -Im(lambda) for 2x2 eigenvalues and -Re(mu) for the 4x4 fluctuation spectrum; \
     I/O frequencies in Hz (omega = 2 pi nu); x = |b|^2 dimensionless";

/// Metadata object for a table of the given kind. `extra` entries are merged
/// in at top level.
pub fn metadata(kind: &str, cfg: &ExperimentConfig, extra: Value) -> Value {
    let mut meta = json!({
        "tool": "aptsense",
        "version": env!("CARGO_PKG_VERSION"),
        "kind": kind,
        "conventions": CONVENTIONS,
        "kappa_drive_hz_per_sqrt_w": cfg.kappa_drive,
        "ep_sensitivity_exponent": EP_SENSITIVITY_EXPONENT,
        "config": cfg,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut meta, extra) {
        m.extend(e);
    }
    meta
}

fn header(w: &mut impl Write, meta: &Value, columns: &[&str]) -> io::Result<()> {
    writeln!(w, "# {meta}")?;
    writeln!(w, "{}", columns.join(","))
}

fn hz(v: f64) -> f64 {
    rad_to_hz(v)
}

pub fn write_eig(w: &mut impl Write, meta: &Value, rows: &[EigenRow]) -> io::Result<()> {
    header(
        w,
        meta,
        &["sweep_value", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus", "phase", "at_EP"],
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            hz(r.value),
            hz(r.lambda_plus.re),
            hz(r.lambda_plus.im),
            hz(r.lambda_minus.re),
            hz(r.lambda_minus.im),
            r.phase.label(),
            r.at_ep
        )?;
    }
    Ok(())
}

pub fn write_response(w: &mut impl Write, meta: &Value, rows: &[ResponseRow]) -> io::Result<()> {
    header(w, meta, &["delta_hz", "x_selected", "x_upper", "stable_count", "total_count"])?;
    for r in rows {
        let upper = r.x_upper.map(|x| x.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", hz(r.delta), r.x_selected, upper, r.stable_count, r.total_count)?;
    }
    Ok(())
}

pub fn write_fluct(w: &mut impl Write, meta: &Value, rows: &[LinewidthRow]) -> io::Result<()> {
    header(
        w,
        meta,
        &["delta_hz", "lw1", "lw2", "lw3", "lw4", "fr1", "fr2", "fr3", "fr4", "x_selected"],
    )?;
    for r in rows {
        let lw = r.linewidths.map(hz);
        let fr = r.frequencies.map(hz);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            hz(r.delta),
            lw[0],
            lw[1],
            lw[2],
            lw[3],
            fr[0],
            fr[1],
            fr[2],
            fr[3],
            r.x_selected
        )?;
    }
    Ok(())
}

/// U in Hz; dx/dU per Hz.
pub fn write_sensitivity(w: &mut impl Write, meta: &Value, rows: &[SensitivityRow]) -> io::Result<()> {
    header(w, meta, &["U_hz", "x", "dx_dU"])?;
    for r in rows {
        writeln!(w, "{},{},{}", hz(r.kerr), r.x, r.dx_dkerr * std::f64::consts::TAU)?;
    }
    Ok(())
}

/// Time in seconds, amplitudes as integrated.
pub fn write_trajectory(w: &mut impl Write, meta: &Value, traj: &Trajectory) -> io::Result<()> {
    header(w, meta, &["t", "re_a", "im_a", "re_b", "im_b"])?;
    for ((t, a), b) in traj.times.iter().zip(&traj.a).zip(&traj.b) {
        writeln!(w, "{t},{},{},{},{}", a.re, a.im, b.re, b.im)?;
    }
    Ok(())
}
