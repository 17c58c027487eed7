//! Oracle cross-checks: every closed form is compared against an
//! independent numerical route on seeded random parameter sets.
//!
//! All checks work in units where Γ = 1, so the default tolerances are the
//! same for every configuration.

use std::fmt;

use nalgebra::Schur;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::settle;
use crate::fluctuations::spectrum_at;
use crate::linear::{eigenvalues, find_exceptional_points, ModeMatrix};
use crate::nonlinear::{bistability_condition, root_count, sensitivity_to_u, solve_cubic};
use crate::params::SystemParams;
use crate::sweep::SweepField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Replaces every check's tolerance when set.
    pub tolerance: Option<f64>,
    /// Random sets for the cheap checks; the ODE check uses a tenth.
    pub samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, tolerance: None, samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    /// Worst observed deviation.
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {:<22} error {:.3e} tol {:.1e}  {}", c.name, c.error, c.tolerance, c.detail)?;
        }
        write!(f, "{} of {} checks passed", self.checks.len() - self.failures(), self.checks.len())
    }
}

struct Check {
    name: &'static str,
    tolerance: f64,
}

impl Check {
    fn finish(&self, error: f64, detail: String, opts: &VerifyOptions) -> CheckResult {
        let tolerance = opts.tolerance.unwrap_or(self.tolerance);
        CheckResult { name: self.name, error, tolerance, passed: error <= tolerance, detail }
    }

    fn failed(&self, why: String, opts: &VerifyOptions) -> CheckResult {
        CheckResult {
            name: self.name,
            error: f64::INFINITY,
            tolerance: opts.tolerance.unwrap_or(self.tolerance),
            passed: false,
            detail: why,
        }
    }
}

fn sym(rng: &mut ChaCha8Rng, mag: f64) -> f64 {
    rng.gen_range(-mag..mag)
}

fn eigen_check(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "eigen_closed_form", tolerance: 1e-12 };
    let mut worst = 0.0f64;
    for _ in 0..opts.samples {
        let p = SystemParams {
            omega_a: sym(rng, 3.0),
            omega_b: sym(rng, 3.0),
            omega_d: 0.0,
            g: rng.gen_range(0.0..2.0),
            gamma_shared: rng.gen_range(0.0..2.0),
            gamma_a: rng.gen_range(0.0..2.0),
            gamma_b: rng.gen_range(0.0..2.0),
            kerr: 0.0,
            rabi: 0.0,
        };
        let e = eigenvalues(&p);
        let Some(ev) = Schur::new(ModeMatrix::new(&p).to_matrix()).eigenvalues() else {
            return check.failed("Schur decomposition failed".into(), opts);
        };
        let scale = p.scale().max(1.0);
        let (a, b) = (ev[0], ev[1]);
        let d = ((e.lambda_plus - a).norm() + (e.lambda_minus - b).norm())
            .min((e.lambda_plus - b).norm() + (e.lambda_minus - a).norm());
        worst = worst.max(d / scale);
    }
    check.finish(worst, format!("{} random 2x2 sets vs Schur", opts.samples), opts)
}

fn ep_check(opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "exceptional_points", tolerance: 1e-9 };
    let anti = SystemParams::anti_pt(0.0, 0.0, 1.0, 1.0, 0.0, 0.0);
    let pt = SystemParams::pt(0.0, 0.0, 0.0, 1.0);
    let found = (
        find_exceptional_points(&anti, SweepField::Delta, -3.0, 3.0),
        find_exceptional_points(&pt, SweepField::G, 0.0, 3.0),
    );
    match found {
        (Ok(a), Ok(b)) if a.len() == 2 && b.len() == 1 => {
            let err = (a[0] + 1.0).abs().max((a[1] - 1.0).abs()).max((b[0] - 1.0).abs());
            check.finish(err, format!("anti-PT {a:?}, PT {b:?}"), opts)
        }
        (a, b) => check.failed(format!("unexpected EP sets: {a:?}, {b:?}"), opts),
    }
}

fn scaling_check(opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "kerr_scaling_law", tolerance: 1e-12 };
    let rabi = 0.3;
    let mut worst = 0.0f64;
    for k in 0..=12 {
        let u = 10f64.powf(-9.0 + 0.5 * k as f64);
        let p = SystemParams::anti_pt(0.0, 0.0, 0.0, 1.0, u, rabi);
        match solve_cubic(&p) {
            Ok(c) => worst = worst.max((c.selected * (4.0 * u * u / (rabi * rabi)).cbrt() - 1.0).abs()),
            Err(e) => return check.failed(e.to_string(), opts),
        }
    }
    check.finish(worst, "x (4U^2/I)^(1/3) over U in [1e-9, 1e-3]".into(), opts)
}

fn slope_check(opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "sensitivity_exponent", tolerance: 1e-2 };
    let p = SystemParams::anti_pt(0.0, 0.0, 0.0, 1.0, 1e-6, 0.3);
    let us: Vec<f64> = (0..20).map(|k| 1e-6 * 10f64.powf(2.0 * k as f64 / 19.0)).collect();
    match sensitivity_to_u(&p, &us) {
        Ok(r) => check.finish((r.slope_derivative + 5.0 / 3.0).abs(), format!("slope {:.6}", r.slope_derivative), opts),
        Err(e) => check.failed(e.to_string(), opts),
    }
}

/// Random anti-PT set with Γ = 1 and Kerr scale K = 2U·x* of order one.
fn random_kerr_set(rng: &mut ChaCha8Rng) -> SystemParams {
    let gamma_0 = rng.gen_range(0.2..1.0);
    let split = sym(rng, 3.0);
    let u: f64 = rng.gen_range(1e-3..1e-1) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let k: f64 = rng.gen_range(0.1..1.0);
    let x_star = k / (2.0 * u.abs());
    let rabi = (4.0 * u * u * x_star.powi(3)).sqrt();
    SystemParams::anti_pt(0.0, split, gamma_0, 1.0, u, rabi)
}

fn ode_check(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "cubic_vs_ode", tolerance: 1e-8 };
    let wanted = (opts.samples / 10).max(1);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < wanted {
        let p = random_kerr_set(rng);
        let Ok(c) = solve_cubic(&p) else { continue };
        if c.real_positive_roots.len() != 1 || !c.selected_stable() {
            continue;
        }
        match settle(&p, None) {
            Ok(ss) => worst = worst.max((ss.x - c.selected).abs() / c.selected),
            Err(e) => return check.failed(format!("settle failed: {e}"), opts),
        }
        done += 1;
    }
    check.finish(worst, format!("{wanted} monostable sets, settle() vs selected root"), opts)
}

fn linear_limit_check(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "linear_limit", tolerance: 1e-6 };
    let mut worst = 0.0f64;
    for _ in 0..opts.samples.min(50) {
        let base = random_kerr_set(rng);
        let p = SystemParams { rabi: base.rabi * 1e-4, ..base };
        let x = match solve_cubic(&p) {
            Ok(c) => c.selected,
            Err(e) => return check.failed(e.to_string(), opts),
        };
        let s = match spectrum_at(&p, x) {
            Ok(s) => s,
            Err(e) => return check.failed(e.to_string(), opts),
        };
        let e = eigenvalues(&p);
        let mut expected: Vec<Complex64> = [e.lambda_plus, e.lambda_minus]
            .iter()
            .flat_map(|l| [-Complex64::i() * l, (-Complex64::i() * l).conj()])
            .collect();
        // greedy nearest match
        let mut err = 0.0f64;
        for mu in s.eigenvalues {
            let (j, d) = expected
                .iter()
                .enumerate()
                .map(|(j, z)| (j, (z - mu).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            expected.swap_remove(j);
            err = err.max(d);
        }
        worst = worst.max(err / p.reference_rate());
    }
    check.finish(worst, "4x4 spectrum at 1e-4 drive vs linear eigenvalues".into(), opts)
}

fn bistability_check(rng: &mut ChaCha8Rng, opts: &VerifyOptions) -> CheckResult {
    let check = Check { name: "bistability_condition", tolerance: 0.0 };
    let n = opts.samples * 10;
    let (mut violations, mut bistable) = (0usize, 0usize);
    for _ in 0..n {
        let mut p = random_kerr_set(rng);
        p = p.with_split(sym(rng, 12.0));
        p.rabi *= rng.gen_range(0.5..20.0);
        match root_count(&p) {
            Ok(3) => {
                bistable += 1;
                if !bistability_condition(&p) {
                    violations += 1;
                }
            }
            Ok(_) => {}
            Err(e) => return check.failed(e.to_string(), opts),
        }
    }
    check.finish(violations as f64, format!("{n} sets, {bistable} bistable, {violations} outside Ud<0, d^2>12g^2"), opts)
}

/// Runs the full suite. The report depends only on `opts`.
pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let checks = vec![
        eigen_check(&mut rng, opts),
        ep_check(opts),
        scaling_check(opts),
        slope_check(opts),
        ode_check(&mut rng, opts),
        linear_limit_check(&mut rng, opts),
        bistability_check(&mut rng, opts),
    ];
    VerifyReport { seed: opts.seed, checks }
}
