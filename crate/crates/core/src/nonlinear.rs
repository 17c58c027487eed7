//! Kerr steady states of the anti-PT configuration.
//!
//! With g = 0, Δa = −Δb = δ/2 and γa = γb = γ0, eliminating mode a from the
//! steady-state equations leaves a cubic for the intensity x = |b|²:
//!
//! ```text
//! 4U²·x³ − 2Uβδ/(γ² + δ²/4)·x² + β²/(γ² + δ²/4)·x − I = 0
//! ```
//!
//! with γ = γ0 + Γ, β = Γ² − γ² − (δ/2)² and I = Ω². The mean-field Kerr term
//! entering the dynamics is +2iU|b|²b, the sign for which this cubic is the
//! exact steady-state condition.
//!
//! The coefficients span many orders of magnitude (U is nHz against MHz
//! rates), so roots are found for the rescaled intensity y = x/x* with
//! x* = (I/4U²)^{1/3}, which turns the cubic into
//! y³ + p·y² + q·y − 1 = 0 with O(1) coefficients.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cubic;
use crate::error::{Error, Result};
use crate::fluctuations::{root_stability, RootStability};
use crate::linear::{self, ModeMatrix};
use crate::params::SystemParams;
use crate::state::SteadyState;
use crate::sweep::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Residual bound for a certified root, relative to max(|c0|, c1·x).
pub const ROOT_RESIDUAL_TOL: f64 = 1e-10;
/// Relative tolerance for |B|² reproducing x.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Exponent of the EP splitting sensitivity |dω/dε| ∝ |ε|^(-1/2), reported
/// for comparison.
pub const EP_SENSITIVITY_EXPONENT: f64 = -0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicResponse {
    /// (c3, c2, c1, c0) of c3·x³ + c2·x² + c1·x + c0.
    pub coefficients: [f64; 4],
    /// Ascending.
    pub real_positive_roots: Vec<f64>,
    pub root_stability: Vec<RootStability>,
    pub stable_roots: Vec<f64>,
    /// Branch reached by ramping the drive up from zero: the smallest root.
    pub selected: f64,
    /// Largest root when three coexist.
    pub upper: Option<f64>,
}

impl CubicResponse {
    pub fn residual(&self, x: f64) -> f64 {
        let [c3, c2, c1, c0] = self.coefficients;
        ((c3 * x + c2) * x + c1) * x + c0
    }

    pub fn selected_stable(&self) -> bool {
        self.root_stability.first().map_or(true, |s| *s == RootStability::Stable)
    }
}

/// Coefficients (c3, c2, c1, c0) for an anti-PT parameter set.
pub fn cubic_coefficients(p: &SystemParams) -> [f64; 4] {
    let d = p.derive();
    let u = p.kerr;
    let half = d.detuning_half_split;
    let denom = d.gamma_total * d.gamma_total + half * half;
    [4.0 * u * u, -2.0 * u * d.beta * d.detuning_split / denom, d.beta * d.beta / denom, -d.intensity]
}

/// Roots of the cubic in units of x* = (I/4U²)^{1/3}, with the reduced
/// coefficients (p, q). Requires U ≠ 0 and I > 0.
fn scaled_roots(p: &SystemParams) -> (f64, Vec<f64>, f64, f64) {
    let d = p.derive();
    let u = p.kerr;
    let half = d.detuning_half_split;
    let denom = d.gamma_total * d.gamma_total + half * half;
    let x_star = (d.intensity / (4.0 * u * u)).cbrt();
    let kerr_rate = 2.0 * u * x_star;
    let pp = -d.beta * d.detuning_split / (denom * kerr_rate);
    let qq = (d.beta / kerr_rate) * (d.beta / kerr_rate) / denom;
    (x_star, cubic::real_roots(pp, qq, -1.0), pp, qq)
}

/// All real positive steady-state intensities, their stability, and the
/// selected branch.
pub fn solve_cubic(p: &SystemParams) -> Result<CubicResponse> {
    p.check_anti_pt()?;
    let coefficients = cubic_coefficients(p);
    let d = p.derive();

    if d.intensity == 0.0 {
        return Ok(CubicResponse {
            coefficients,
            real_positive_roots: Vec::new(),
            root_stability: Vec::new(),
            stable_roots: Vec::new(),
            selected: 0.0,
            upper: None,
        });
    }

    let roots = if p.kerr == 0.0 {
        if coefficients[2] == 0.0 {
            return Err(Error::UndampedResonance);
        }
        vec![linear::linear_steady_state(p)?.x]
    } else {
        let (x_star, ys, pp, qq) = scaled_roots(p);
        let mut xs = Vec::new();
        for y in ys.into_iter().filter(|y| *y > 0.0) {
            let residual = cubic::eval(pp, qq, -1.0, y);
            if residual.abs() >= ROOT_RESIDUAL_TOL * (1.0f64).max(qq * y) {
                return Err(Error::Domain(format!("uncertified cubic root y = {y:e} (residual {residual:e})")));
            }
            xs.push(x_star * y);
        }
        xs.dedup();
        xs
    };

    let root_stability = roots.iter().map(|&x| root_stability(p, x)).collect::<Result<Vec<_>>>()?;
    let stable_roots = roots
        .iter()
        .zip(&root_stability)
        .filter(|(_, s)| **s == RootStability::Stable)
        .map(|(x, _)| *x)
        .collect();
    let selected = roots.first().copied().unwrap_or(0.0);
    let upper = if roots.len() == 3 { Some(roots[2]) } else { None };
    Ok(CubicResponse { coefficients, real_positive_roots: roots, root_stability, stable_roots, selected, upper })
}

/// Number of real positive roots, without stability analysis.
pub fn root_count(p: &SystemParams) -> Result<usize> {
    p.check_anti_pt()?;
    let d = p.derive();
    if d.intensity == 0.0 {
        return Ok(0);
    }
    if p.kerr == 0.0 {
        return Ok(1);
    }
    let (_, ys, _, _) = scaled_roots(p);
    Ok(ys.iter().filter(|y| **y > 0.0).count())
}

/// Amplitudes for a given intensity, without the stability analysis.
pub(crate) fn amplitudes_for(p: &SystemParams, x: f64) -> Result<(Complex64, Complex64)> {
    let m = ModeMatrix::new(p);
    // Kerr pulls mode b by −2U·x
    let m22 = m.m22 - Complex64::new(2.0 * p.kerr * x, 0.0);
    let det = m.m11 * m22 - m.m12 * m.m12;
    if det.norm() == 0.0 {
        return Err(Error::Singular);
    }
    let drive = Complex64::new(p.rabi, 0.0);
    let a = I * m.m12 * drive / det;
    let b = -I * m.m11 * drive / det;
    let got = b.norm_sqr();
    let ok = if x == 0.0 { got == 0.0 } else { (got - x).abs() <= RECONSTRUCTION_TOL * x };
    if !ok {
        return Err(Error::RootReconstruction { x, got });
    }
    Ok((a, b))
}

/// Complex steady-state amplitudes for a verified root x.
///
/// With |b|² fixed to x the steady-state equations are linear in (a, b):
/// mode b acquires the frequency pull −2U·x and the 2×2 system is solved
/// directly.
pub fn reconstruct_amplitudes(p: &SystemParams, x: f64) -> Result<SteadyState> {
    p.validate()?;
    let (a, b) = amplitudes_for(p, x)?;
    let stable = root_stability(p, x)? == RootStability::Stable;
    Ok(SteadyState { a, b, x, stable })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseRow {
    pub delta: f64,
    pub x_selected: f64,
    pub x_upper: Option<f64>,
    pub stable_count: usize,
    pub total_count: usize,
    pub selected_stable: bool,
}

/// Intensity against the split δ over `[lo, hi]`.
pub fn response_sweep(template: &SystemParams, lo: f64, hi: f64, n_points: usize) -> Result<Vec<ResponseRow>> {
    if n_points < 2 {
        return Err(Error::Domain("response sweep needs at least 2 points".into()));
    }
    template.check_anti_pt()?;
    let deltas = Grid::linear(lo, hi, n_points).values()?;
    deltas
        .par_iter()
        .map(|&delta| {
            let c = solve_cubic(&template.with_split(delta))?;
            Ok(ResponseRow {
                delta,
                x_selected: c.selected,
                x_upper: c.upper,
                stable_count: c.stable_roots.len(),
                total_count: c.real_positive_roots.len(),
                selected_stable: c.selected_stable(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BistabilityRow {
    pub delta: f64,
    pub root_count: usize,
    /// Uδ < 0 and δ² > 12γ².
    pub condition_met: bool,
}

pub fn bistability_condition(p: &SystemParams) -> bool {
    let d = p.derive();
    p.kerr * d.detuning_split < 0.0 && d.detuning_split * d.detuning_split > 12.0 * d.gamma_total * d.gamma_total
}

/// Root count over a δ grid at Kerr coefficient `kerr`.
pub fn bistability_region(template: &SystemParams, lo: f64, hi: f64, n_points: usize, kerr: f64) -> Result<Vec<BistabilityRow>> {
    template.check_anti_pt()?;
    let base = SystemParams { kerr, ..*template };
    let deltas = Grid::linear(lo, hi, n_points).values()?;
    deltas
        .par_iter()
        .map(|&delta| {
            let p = base.with_split(delta);
            Ok(BistabilityRow { delta, root_count: root_count(&p)?, condition_met: bistability_condition(&p) })
        })
        .collect()
}

/// Drive intensities bounding the bistable window at fixed δ, as
/// (I_lower_fold, I_upper_fold), with the fold intensities x at each.
///
/// The window is where I(x) = c3x³ + c2x² + c1x turns back, i.e. where
/// dI/dx has two positive zeros.
pub fn fold_points(p: &SystemParams) -> Result<Option<[(f64, f64); 2]>> {
    p.check_anti_pt()?;
    let [c3, c2, c1, _] = cubic_coefficients(p);
    if c3 == 0.0 {
        return Ok(None);
    }
    // 3c3·x² + 2c2·x + c1 = 0
    let (a, b, c) = (3.0 * c3, 2.0 * c2, c1);
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 {
        return Ok(None);
    }
    let qv = -0.5 * (b + disc.sqrt().copysign(b));
    let (mut x1, mut x2) = (qv / a, c / qv);
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
    }
    if x1 <= 0.0 {
        return Ok(None);
    }
    let intensity = |x: f64| ((c3 * x + c2) * x + c1) * x;
    // I(x1) is the local maximum (upper fold), I(x2) the local minimum
    Ok(Some([(intensity(x2), x2), (intensity(x1), x1)]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub kerr: f64,
    pub x: f64,
    pub dx_dkerr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub rows: Vec<SensitivityRow>,
    /// Log–log slope of |dx/dU| against U.
    pub slope_derivative: f64,
    /// Log–log slope of x against U.
    pub slope_response: f64,
    /// RMS residual of the derivative fit.
    pub fit_residual: f64,
    pub richardson: bool,
    pub ep_reference_exponent: f64,
}

fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    (slope, rms)
}

/// Relative finite-difference step for dx/dU.
pub const SENSITIVITY_STEP: f64 = 1e-3;

/// Response and its U-derivative for each U, with log–log slope fits.
pub fn sensitivity_to_u(template: &SystemParams, kerr_values: &[f64]) -> Result<SensitivityReport> {
    if kerr_values.len() < 3 {
        return Err(Error::Domain("need >= 3 U values spanning >= 2 decades".into()));
    }
    if kerr_values.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
        return Err(Error::Domain("U values must be positive".into()));
    }
    if kerr_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("U values must be strictly increasing".into()));
    }
    let span = (kerr_values[kerr_values.len() - 1] / kerr_values[0]).log10();
    if span < 2.0 - 1e-9 {
        return Err(Error::Domain(format!("U values span {span:.3} decades; need >= 2 decades")));
    }
    template.check_anti_pt()?;

    let response = |u: f64| -> Result<f64> { Ok(solve_cubic(&SystemParams { kerr: u, ..*template })?.selected) };
    let central = |u: f64, rel: f64| -> Result<f64> {
        let h = rel * u;
        Ok((response(u + h)? - response(u - h)?) / (2.0 * h))
    };

    let xs = kerr_values.iter().map(|&u| response(u)).collect::<Result<Vec<_>>>()?;
    let mut derivs = kerr_values.iter().map(|&u| central(u, SENSITIVITY_STEP)).collect::<Result<Vec<_>>>()?;
    let (mut slope, mut residual) = loglog_fit(kerr_values, &derivs);
    let mut richardson = false;
    if !(residual <= 1e-3) {
        derivs = kerr_values
            .iter()
            .map(|&u| Ok((4.0 * central(u, 0.5 * SENSITIVITY_STEP)? - central(u, SENSITIVITY_STEP)?) / 3.0))
            .collect::<Result<Vec<_>>>()?;
        (slope, residual) = loglog_fit(kerr_values, &derivs);
        richardson = true;
    }
    let (slope_response, _) = loglog_fit(kerr_values, &xs);
    let rows = kerr_values
        .iter()
        .zip(xs.iter().zip(&derivs))
        .map(|(&kerr, (&x, &dx_dkerr))| SensitivityRow { kerr, x, dx_dkerr })
        .collect();
    Ok(SensitivityReport {
        rows,
        slope_derivative: slope,
        slope_response,
        fit_residual: residual,
        richardson,
        ep_reference_exponent: EP_SENSITIVITY_EXPONENT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless(split: f64, kerr: f64, rabi: f64) -> SystemParams {
        SystemParams::anti_pt(0.0, split, 0.0, 1.0, kerr, rabi)
    }

    #[test]
    fn resonant_root_is_cube_root_law() {
        let p = lossless(0.0, 1e-3, 0.5);
        let c = solve_cubic(&p).unwrap();
        assert_eq!(c.real_positive_roots.len(), 1);
        let expect = (0.25 / (4.0 * 1e-6f64)).cbrt();
        assert!((c.selected / expect - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tenfold_kerr_reduction() {
        let x1 = solve_cubic(&lossless(0.0, 1e-3, 0.5)).unwrap().selected;
        let x2 = solve_cubic(&lossless(0.0, 1e-4, 0.5)).unwrap().selected;
        assert!((x2 / x1 - 10f64.powf(2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn same_sign_kerr_and_split_is_monostable() {
        for split in [0.5, 4.0, 10.0, 30.0] {
            for rabi in [0.1, 1.0, 10.0, 100.0] {
                let p = SystemParams::anti_pt(0.0, split, 0.2, 1.0, 0.01, rabi);
                assert_eq!(solve_cubic(&p).unwrap().real_positive_roots.len(), 1);
            }
        }
    }

    #[test]
    fn undamped_linear_resonance_is_an_error() {
        assert_eq!(solve_cubic(&lossless(0.0, 0.0, 1.0)), Err(Error::UndampedResonance));
    }

    #[test]
    fn linear_delegation() {
        let p = SystemParams::anti_pt(0.0, 0.8, 0.3, 1.0, 0.0, 2.0);
        let c = solve_cubic(&p).unwrap();
        let d = p.derive();
        let half = d.detuning_half_split;
        let expect = d.intensity * (d.gamma_total.powi(2) + half * half) / (d.beta * d.beta);
        assert!((c.selected / expect - 1.0).abs() < 1e-13);
    }

    #[test]
    fn non_anti_pt_rejected() {
        let p = SystemParams { g: 0.5, ..lossless(0.0, 1e-3, 1.0) };
        assert!(matches!(solve_cubic(&p), Err(Error::NotAntiPt(_))));
    }

    #[test]
    fn undriven_has_no_response() {
        let p = lossless(0.3, 1e-3, 0.0);
        let c = solve_cubic(&p).unwrap();
        assert!(c.real_positive_roots.is_empty());
        assert_eq!(c.selected, 0.0);
        let ss = reconstruct_amplitudes(&p, 0.0).unwrap();
        assert_eq!((ss.a.norm(), ss.b.norm(), ss.x), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reconstruction_ratio_and_intensity() {
        let p = SystemParams::anti_pt(0.0, -3.0, 0.4, 1.0, 0.02, 3.0);
        let c = solve_cubic(&p).unwrap();
        let d = p.derive();
        for &x in &c.real_positive_roots {
            let ss = reconstruct_amplitudes(&p, x).unwrap();
            assert!((ss.b.norm_sqr() / x - 1.0).abs() < 1e-12);
            let ratio = -Complex64::new(1.0, 0.0) / Complex64::new(d.gamma_total, 0.5 * d.detuning_split);
            assert!((ss.a / ss.b - ratio).norm() < 1e-12);
        }
    }

    #[test]
    fn spurious_root_rejected() {
        let p = lossless(0.5, 1e-3, 1.0);
        let x = solve_cubic(&p).unwrap().selected;
        assert!(matches!(reconstruct_amplitudes(&p, 1.5 * x), Err(Error::RootReconstruction { .. })));
    }

    #[test]
    fn fold_window_brackets_three_roots() {
        // U < 0, δ = 4γ
        let gamma = 1.2;
        let base = SystemParams::anti_pt(0.0, 4.0 * gamma, 0.2, 1.0, -0.01, 0.0);
        let [(i_lo, _), (i_hi, _)] = fold_points(&base).unwrap().unwrap();
        assert!(i_lo < i_hi);
        let count = |i: f64| root_count(&SystemParams { rabi: i.sqrt(), ..base }).unwrap();
        assert_eq!(count(0.5 * i_lo), 1);
        assert_eq!(count(0.5 * (i_lo + i_hi)), 3);
        assert_eq!(count(2.0 * i_hi), 1);
    }

    #[test]
    fn sensitivity_validation() {
        let p = lossless(0.0, 1e-3, 1.0);
        assert!(sensitivity_to_u(&p, &[1e-5, 1e-3]).is_err());
        assert!(sensitivity_to_u(&p, &[1e-5, 1e-4, 5e-4]).is_err());
        assert!(sensitivity_to_u(&p, &[1e-3, 1e-4, 1e-5]).is_err());
        assert!(sensitivity_to_u(&p, &[-1e-5, 1e-4, 1e-3]).is_err());
        let r = sensitivity_to_u(&p, &[1e-5, 1e-4, 1e-3]).unwrap();
        assert!((r.slope_derivative + 5.0 / 3.0).abs() < 1e-4);
        assert!((r.slope_response + 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(r.ep_reference_exponent, -0.5);
    }
}
