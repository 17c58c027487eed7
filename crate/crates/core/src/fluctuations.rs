//! Linear stability of Kerr steady states.
//!
//! Small deviations (δa, δb, δa*, δb*) about a steady state B evolve with a
//! 4×4 matrix. Expanding the Kerr term 2iU|b|²b to first order gives
//! 4iU|B|²·δb + 2iU·B²·δb*, so
//!
//! ```text
//! d(δa)/dt = −i·m11·δa − i·m12·δb
//! d(δb)/dt = −i·m12·δa − i·(m22 − 4U|B|²)·δb + 2iU·B²·δb*
//! ```
//!
//! and the last two rows are the complex conjugates with the blocks swapped.
//! Eigenvalues therefore come in pairs (μ, μ*). Linewidths are −Re(μ) and
//! frequencies Im(μ).

use nalgebra::{Matrix4, Schur};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::ModeMatrix;
use crate::nonlinear::{amplitudes_for, solve_cubic, RECONSTRUCTION_TOL};
use crate::params::SystemParams;
use crate::state::SteadyState;
use crate::sweep::{continuity_sort, Grid};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A root is stable when every Re(μ) < −STABILITY_MARGIN·γ.
pub const STABILITY_MARGIN: f64 = 1e-12;
/// Roots with |max Re(μ)| ≤ MARGINAL_BAND·γ are reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluctuationMatrix(pub Matrix4<Complex64>);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluctuationSpectrum {
    pub eigenvalues: [Complex64; 4],
    pub linewidths: [f64; 4],
    pub frequencies: [f64; 4],
    pub min_linewidth: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RootStability {
    Stable,
    Marginal,
    Unstable,
}

fn matrix_from_amplitude(p: &SystemParams, b: Complex64) -> FluctuationMatrix {
    let m = ModeMatrix::new(p);
    let x = b.norm_sqr();
    let zero = Complex64::new(0.0, 0.0);
    let r11 = -I * m.m11;
    let r12 = -I * m.m12;
    let r22 = -I * (m.m22 - Complex64::new(4.0 * p.kerr * x, 0.0));
    let pump = 2.0 * I * p.kerr * b * b;
    FluctuationMatrix(Matrix4::new(
        r11, r12, zero, zero,
        r12, r22, zero, pump,
        zero, zero, r11.conj(), r12.conj(),
        zero, pump.conj(), r12.conj(), r22.conj(),
    ))
}

pub fn build_fluctuation_matrix(p: &SystemParams, ss: &SteadyState) -> Result<FluctuationMatrix> {
    p.validate()?;
    let got = ss.b.norm_sqr();
    let consistent = if ss.x == 0.0 { got == 0.0 } else { (got - ss.x).abs() <= RECONSTRUCTION_TOL * ss.x };
    if !consistent {
        return Err(Error::RootReconstruction { x: ss.x, got });
    }
    Ok(matrix_from_amplitude(p, ss.b))
}

/// Sorts by (linewidth, frequency) and makes the spectrum exactly closed
/// under conjugation by averaging each matched pair.
fn pair_conjugates(raw: [Complex64; 4]) -> [Complex64; 4] {
    let mut used = [false; 4];
    let mut out: Vec<Complex64> = Vec::with_capacity(4);
    for i in 0..4 {
        if used[i] {
            continue;
        }
        used[i] = true;
        let target = raw[i].conj();
        let partner = (0..4)
            .filter(|&j| !used[j])
            .min_by(|&j, &k| (raw[j] - target).norm().total_cmp(&(raw[k] - target).norm()));
        // a real eigenvalue is its own partner
        let self_dist = (raw[i] - target).norm();
        match partner {
            Some(j) if (raw[j] - target).norm() < self_dist => {
                used[j] = true;
                let mu = 0.5 * (raw[i] + raw[j].conj());
                out.push(mu);
                out.push(mu.conj());
            }
            _ => out.push(Complex64::new(raw[i].re, 0.0)),
        }
    }
    out.sort_by(|a, b| (-a.re).total_cmp(&(-b.re)).then(a.im.total_cmp(&b.im)));
    [out[0], out[1], out[2], out[3]]
}

pub fn spectrum(m: &FluctuationMatrix) -> Result<FluctuationSpectrum> {
    let scale = m.0.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    let eig: [Complex64; 4] = if scale == 0.0 {
        [Complex64::new(0.0, 0.0); 4]
    } else {
        let scaled = m.0 / Complex64::new(scale, 0.0);
        let schur = Schur::try_new(scaled, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::EigenNonConvergence { matrix: format!("{:?}", m.0) })?;
        let ev = schur.eigenvalues().ok_or_else(|| Error::EigenNonConvergence { matrix: format!("{:?}", m.0) })?;
        std::array::from_fn(|i| ev[i] * scale)
    };
    if eig.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::EigenNonConvergence { matrix: format!("{:?}", m.0) });
    }
    Ok(from_eigenvalues(pair_conjugates(eig)))
}

fn from_eigenvalues(eigenvalues: [Complex64; 4]) -> FluctuationSpectrum {
    let linewidths = eigenvalues.map(|z| -z.re);
    let frequencies = eigenvalues.map(|z| z.im);
    let min_linewidth = linewidths.iter().copied().fold(f64::INFINITY, f64::min);
    FluctuationSpectrum { eigenvalues, linewidths, frequencies, min_linewidth, stable: eigenvalues.iter().all(|z| z.re < 0.0) }
}

/// Spectrum of the steady state with intensity x (x must be a root).
pub fn spectrum_at(p: &SystemParams, x: f64) -> Result<FluctuationSpectrum> {
    let (_, b) = amplitudes_for(p, x)?;
    spectrum(&matrix_from_amplitude(p, b))
}

pub fn root_stability(p: &SystemParams, x: f64) -> Result<RootStability> {
    let s = spectrum_at(p, x)?;
    let gamma = p.reference_rate();
    let max_re = -s.min_linewidth;
    Ok(if max_re.abs() <= MARGINAL_BAND * gamma {
        RootStability::Marginal
    } else if max_re < -STABILITY_MARGIN * gamma {
        RootStability::Stable
    } else {
        RootStability::Unstable
    })
}

/// True iff every Re(μ) < −1e-12·γ.
pub fn is_root_stable(p: &SystemParams, x: f64) -> Result<bool> {
    let s = spectrum_at(p, x)?;
    Ok(-s.min_linewidth < -STABILITY_MARGIN * p.reference_rate())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinewidthRow {
    pub delta: f64,
    pub linewidths: [f64; 4],
    pub frequencies: [f64; 4],
    pub x_selected: f64,
    pub stable: bool,
}

/// Fluctuation spectrum of the selected branch along δ. Eigenvalue labels
/// follow the branches continuously across the grid.
pub fn linewidth_sweep(template: &SystemParams, lo: f64, hi: f64, n_points: usize) -> Result<Vec<LinewidthRow>> {
    template.check_anti_pt()?;
    let deltas = Grid::linear(lo, hi, n_points).values()?;
    let points = deltas
        .par_iter()
        .map(|&delta| {
            let p = template.with_split(delta);
            let c = solve_cubic(&p)?;
            let s = spectrum_at(&p, c.selected)?;
            Ok((delta, c.selected, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut eig: Vec<[Complex64; 4]> = points.iter().map(|(_, _, s)| s.eigenvalues).collect();
    continuity_sort(&mut eig);
    Ok(points
        .iter()
        .zip(eig)
        .map(|((delta, x, s), e)| LinewidthRow {
            delta: *delta,
            linewidths: e.map(|z| -z.re),
            frequencies: e.map(|z| z.im),
            x_selected: *x,
            stable: s.stable,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::eigenvalues;

    #[test]
    fn linear_limit_spectrum() {
        let p = SystemParams::anti_pt(0.0, 1.4, 0.3, 1.0, 0.0, 1.0);
        let ss = crate::linear::linear_steady_state(&p).unwrap();
        let s = spectrum(&build_fluctuation_matrix(&p, &ss).unwrap()).unwrap();
        let e = eigenvalues(&p);
        for lam in [e.lambda_plus, e.lambda_minus] {
            for target in [-I * lam, (-I * lam).conj()] {
                assert!(s.eigenvalues.iter().any(|z| (z - target).norm() < 1e-12), "{target} missing");
            }
        }
    }

    #[test]
    fn undriven_kerr_reduces_to_linear() {
        let p = SystemParams::anti_pt(0.0, 0.6, 0.2, 1.0, 0.5, 0.0);
        let s = spectrum(&build_fluctuation_matrix(&p, &SteadyState::origin(true)).unwrap()).unwrap();
        let e = eigenvalues(&p);
        assert!(s.eigenvalues.iter().any(|z| (z - (-I * e.lambda_plus)).norm() < 1e-12));
    }

    #[test]
    fn point_x_linewidths() {
        let p = SystemParams::anti_pt(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let s = spectrum(&build_fluctuation_matrix(&p, &SteadyState::origin(false)).unwrap()).unwrap();
        let mut lw = s.linewidths;
        lw.sort_by(f64::total_cmp);
        for (got, want) in lw.iter().zip([0.0, 0.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_identity_and_pairing() {
        let p = SystemParams::anti_pt(0.0, -2.5, 0.7, 1.0, 0.03, 4.0);
        let x = solve_cubic(&p).unwrap().selected;
        let (_, b) = amplitudes_for(&p, x).unwrap();
        let m = matrix_from_amplitude(&p, b);
        let s = spectrum(&m).unwrap();
        let sum: Complex64 = s.eigenvalues.iter().sum();
        let expect = -2.0 * (p.gamma_a + p.gamma_b + 2.0 * p.gamma_shared);
        assert!((m.0.trace() - Complex64::new(expect, 0.0)).norm() < 1e-12);
        assert!((sum - Complex64::new(expect, 0.0)).norm() < 1e-10);
        for z in s.eigenvalues {
            assert!(s.eigenvalues.iter().any(|w| (w - z.conj()).norm() < 1e-10));
        }
    }

    #[test]
    fn inconsistent_state_rejected() {
        let p = SystemParams::anti_pt(0.0, 0.5, 0.2, 1.0, 0.1, 1.0);
        let bad = SteadyState { a: Complex64::new(0.0, 0.0), b: Complex64::new(1.0, 0.0), x: 2.0, stable: true };
        assert!(build_fluctuation_matrix(&p, &bad).is_err());
    }

    #[test]
    fn middle_root_unstable() {
        let base = SystemParams::anti_pt(0.0, 4.0 * 1.2, 0.2, 1.0, -0.01, 0.0);
        let [(i_lo, _), (i_hi, _)] = crate::nonlinear::fold_points(&base).unwrap().unwrap();
        let p = SystemParams { rabi: (0.5 * (i_lo + i_hi)).sqrt(), ..base };
        let c = solve_cubic(&p).unwrap();
        assert_eq!(c.real_positive_roots.len(), 3);
        assert!(is_root_stable(&p, c.real_positive_roots[0]).unwrap());
        assert!(!is_root_stable(&p, c.real_positive_roots[1]).unwrap());
        assert!(is_root_stable(&p, c.real_positive_roots[2]).unwrap());
        assert_eq!(c.stable_roots.len(), 2);
    }
}
