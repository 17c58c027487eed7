//! Eigenstructure of the non-Hermitian 2×2 mode matrix and the linear
//! (U = 0) steady state.
//!
//! Everything here lives in the frame rotating at the drive frequency, so the
//! matrix is 𝓗 − ωd·𝟙 and its eigenvalues are measured from ωd.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{SystemParams, ANTI_PT_REL_TOL};
use crate::state::SteadyState;
use crate::sweep::{continuity_sort, SweepField};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Principal square root: Re ≥ 0, and Im ≥ 0 when Re = 0.
///
/// A signed zero imaginary part is treated as +0 so that a negative real
/// radicand always maps to the upper imaginary axis.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, if z.im == 0.0 { 0.0 } else { z.im });
    if x == 0.0 && y == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let t = ((x.abs() + x.hypot(y)) * 0.5).sqrt();
    if x >= 0.0 {
        Complex64::new(t, y / (2.0 * t))
    } else {
        Complex64::new(y.abs() / (2.0 * t), t.copysign(y))
    }
}

/// The symmetric (not Hermitian) matrix 𝓗 − ωd·𝟙.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m22: Complex64,
}

impl ModeMatrix {
    pub fn new(p: &SystemParams) -> Self {
        let d = p.derive();
        let coupling = Complex64::new(p.g, -p.gamma_shared);
        Self {
            m11: Complex64::new(d.detuning_a, -(p.gamma_a + p.gamma_shared)),
            m12: coupling,
            m22: Complex64::new(d.detuning_b, -(p.gamma_b + p.gamma_shared)),
        }
    }

    pub fn m21(&self) -> Complex64 {
        self.m12
    }

    pub fn trace(&self) -> Complex64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    pub fn to_matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(self.m11, self.m12, self.m12, self.m22)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    PtUnbroken,
    PtBroken,
    AntiPtUnbroken,
    AntiPtBroken,
    General,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::PtUnbroken => "PT-unbroken",
            Phase::PtBroken => "PT-broken",
            Phase::AntiPtUnbroken => "antiPT-unbroken",
            Phase::AntiPtBroken => "antiPT-broken",
            Phase::General => "general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseInfo {
    pub phase: Phase,
    pub at_ep: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenPair {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub phase: Phase,
    pub at_ep: bool,
    pub stable: bool,
}

/// (Δ − iγab)² + (g − iΓ)²; the eigenvalues coalesce where it vanishes.
pub fn discriminant(p: &SystemParams) -> Complex64 {
    let d = p.derive();
    let detune = Complex64::new(d.detuning_half_split, -d.gamma_diff);
    let coupling = Complex64::new(p.g, -p.gamma_shared);
    detune * detune + coupling * coupling
}

/// λ± = Δ0 − i(γ0 + Γ) ± √((Δ − iγab)² + (g − iΓ)²), rotating frame.
pub fn eigenvalues(p: &SystemParams) -> EigenPair {
    let d = p.derive();
    let centre = Complex64::new(d.detuning_mean, -(d.gamma_mean + p.gamma_shared));
    let root = principal_sqrt(discriminant(p));
    let lambda_plus = centre + root;
    let lambda_minus = centre - root;
    let info = classify_phase(p);
    EigenPair {
        lambda_plus,
        lambda_minus,
        phase: info.phase,
        at_ep: info.at_ep,
        stable: lambda_plus.im < 0.0 && lambda_minus.im < 0.0,
    }
}

pub fn classify_phase(p: &SystemParams) -> PhaseInfo {
    let d = p.derive();
    let zero_tol = ANTI_PT_REL_TOL * p.scale();
    let is_zero = |v: f64| v.abs() <= zero_tol;
    let rates = [p.gamma_shared, p.g, d.gamma_diff, d.gamma_mean, d.detuning_half_split, d.detuning_mean]
        .iter()
        .fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
    let ep_tol = ANTI_PT_REL_TOL * rates;

    if is_zero(p.g) && is_zero(d.gamma_diff) && is_zero(d.detuning_mean) && p.gamma_shared > zero_tol {
        let gap = d.detuning_half_split.abs() - p.gamma_shared;
        let at_ep = gap.abs() <= ep_tol;
        let phase = if gap > ep_tol { Phase::AntiPtUnbroken } else { Phase::AntiPtBroken };
        return PhaseInfo { phase, at_ep };
    }
    if is_zero(p.gamma_shared) && is_zero(d.gamma_mean) && is_zero(d.detuning_half_split) {
        let gap = p.g - d.gamma_diff.abs();
        let at_ep = gap.abs() <= ep_tol;
        let phase = if gap > ep_tol { Phase::PtUnbroken } else { Phase::PtBroken };
        return PhaseInfo { phase, at_ep };
    }
    PhaseInfo { phase: Phase::General, at_ep: false }
}

/// Condition number of the eigenvector matrix; diverges at an EP, where the
/// matrix is defective.
pub fn eigenvector_condition(p: &SystemParams) -> f64 {
    let m = ModeMatrix::new(p);
    let e = eigenvalues(p);
    let column = |lambda: Complex64| -> (Complex64, Complex64) {
        let (u, v) = if m.m12.norm() > 0.0 {
            (m.m12, lambda - m.m11)
        } else if (lambda - m.m11).norm() <= (lambda - m.m22).norm() {
            (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
        };
        let n = (u.norm_sqr() + v.norm_sqr()).sqrt();
        (u / n, v / n)
    };
    let (u1, v1) = column(e.lambda_plus);
    let (u2, v2) = column(e.lambda_minus);
    let vecs = Matrix2::new(u1, u2, v1, v2);
    let sv = vecs.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Steady state of the linear equations, M·(A, B) = −iΩ·(0, 1).
pub fn linear_steady_state(p: &SystemParams) -> Result<SteadyState> {
    p.validate()?;
    let e = eigenvalues(p);
    if !e.stable {
        return Err(Error::UnstableLinear { max_im: e.lambda_plus.im.max(e.lambda_minus.im) });
    }
    let m = ModeMatrix::new(p);
    // (ωd − λ+)(ωd − λ−) in the rotating frame is λ+λ− = det M
    let denom = e.lambda_plus * e.lambda_minus;
    if denom.norm() == 0.0 {
        return Err(Error::Singular);
    }
    let drive = Complex64::new(p.rabi, 0.0);
    let a = I * m.m12 * drive / denom;
    let b = -I * m.m11 * drive / denom;
    Ok(SteadyState { a, b, x: b.norm_sqr(), stable: true })
}

/// One row of an eigenvalue sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRow {
    pub value: f64,
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub phase: Phase,
    pub at_ep: bool,
}

/// Eigenvalues along a sweep. With `continuity` the two branches are
/// relabeled by nearest-neighbor matching instead of the ± sign convention.
pub fn eigen_sweep(template: &SystemParams, field: SweepField, values: &[f64], continuity: bool) -> Vec<EigenRow> {
    use rayon::prelude::*;
    let mut rows: Vec<EigenRow> = values
        .par_iter()
        .map(|&v| {
            let e = eigenvalues(&field.apply(template, v));
            EigenRow { value: v, lambda_plus: e.lambda_plus, lambda_minus: e.lambda_minus, phase: e.phase, at_ep: e.at_ep }
        })
        .collect();
    if continuity {
        let mut pairs: Vec<[Complex64; 2]> = rows.iter().map(|r| [r.lambda_plus, r.lambda_minus]).collect();
        continuity_sort(&mut pairs);
        for (r, [lp, lm]) in rows.iter_mut().zip(pairs) {
            r.lambda_plus = lp;
            r.lambda_minus = lm;
        }
    }
    rows
}

const EP_SCAN_POINTS: usize = 2001;

/// Sweep values in `[lo, hi]` at which the two eigenvalues coalesce.
///
/// A dense scan brackets candidates: sign changes of Re or Im of the
/// discriminant, and interior local minima of its modulus. Candidates are
/// refined by bisection (or golden-section search for touching minima) and
/// kept only if |discriminant| < 1e-10·scale², scale = max(Γ, |lo|, |hi|).
pub fn find_exceptional_points(template: &SystemParams, field: SweepField, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Domain(format!("bad EP search range [{lo}, {hi}]")));
    }
    if !matches!(field, SweepField::Delta | SweepField::Split | SweepField::G | SweepField::Gamma | SweepField::GammaAb) {
        return Err(Error::Domain(format!("EP search over '{field}' is not supported")));
    }
    if lo == hi {
        return Ok(Vec::new());
    }
    let disc = |s: f64| discriminant(&field.apply(template, s));
    let scale = template.gamma_shared.max(lo.abs()).max(hi.abs());
    let tol = 1e-10 * scale * scale;

    let grid: Vec<f64> = (0..EP_SCAN_POINTS)
        .map(|i| if i + 1 == EP_SCAN_POINTS { hi } else { lo + (hi - lo) * i as f64 / (EP_SCAN_POINTS - 1) as f64 })
        .collect();
    let vals: Vec<Complex64> = grid.iter().map(|&s| disc(s)).collect();

    let mut candidates = Vec::new();
    for i in 0..grid.len() - 1 {
        let (d0, d1) = (vals[i], vals[i + 1]);
        if d0.re * d1.re < 0.0 {
            candidates.push(bisect(|s| disc(s).re, grid[i], grid[i + 1]));
        }
        if d0.im * d1.im < 0.0 {
            candidates.push(bisect(|s| disc(s).im, grid[i], grid[i + 1]));
        }
    }
    for i in 0..grid.len() {
        let here = vals[i].norm();
        let left = if i > 0 { vals[i - 1].norm() } else { f64::INFINITY };
        let right = if i + 1 < grid.len() { vals[i + 1].norm() } else { f64::INFINITY };
        if here <= left && here <= right {
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(grid.len() - 1)];
            candidates.push(golden_min(|s| disc(s).norm(), a, b));
        }
    }

    let mut found: Vec<f64> = candidates.into_iter().filter(|&s| disc(s).norm() < tol).collect();
    found.sort_by(f64::total_cmp);
    let merge = 1e-6 * (hi - lo);
    let mut out: Vec<f64> = Vec::new();
    for s in found {
        match out.last() {
            Some(&prev) if (s - prev).abs() <= merge => {
                if disc(s).norm() < disc(prev).norm() {
                    *out.last_mut().unwrap() = s;
                }
            }
            _ => out.push(s),
        }
    }
    Ok(out)
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs().max(b.abs())).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}
