//! Dormand–Prince 5(4) embedded Runge–Kutta integrator with adaptive step
//! control, for small fixed-size real state vectors.

use std::ops::ControlFlow;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// error coefficients: 5th-order weights minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_init: None, h_max: f64::INFINITY, h_min: 1e-14, max_steps: 10_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub accepted: usize,
    pub rejected: usize,
    /// True when the observer asked to stop before `t_end`.
    pub stopped: bool,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

/// One Dormand–Prince step from `(t, y)` with derivative `k1 = f(t, y)`.
/// Returns the 5th-order solution, its derivative (FSAL) and the local error
/// estimate.
pub fn step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> ([f64; N], [f64; N], [f64; N])
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = f(t + h, &y_new);
    let err: [f64; N] = std::array::from_fn(|i| {
        h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
    });
    (y_new, k7, err)
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    fn error_norm<const N: usize>(&self, y: &[f64; N], y_new: &[f64; N], err: &[f64; N]) -> f64 {
        let sum: f64 = (0..N)
            .map(|i| {
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                (err[i] / sc).powi(2)
            })
            .sum();
        (sum / N as f64).sqrt()
    }

    fn initial_step<const N: usize, F>(&self, f: &mut F, t0: f64, y0: &[f64; N], k1: &[f64; N], span: f64) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let scaled = |v: &[f64; N]| -> f64 {
            let s: f64 = (0..N).map(|i| (v[i] / (self.atol + self.rtol * y0[i].abs())).powi(2)).sum();
            (s / N as f64).sqrt()
        };
        let d0 = scaled(y0);
        let d1 = scaled(k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1 = axpy(y0, h0, &[(1.0, k1)]);
        let k2 = f(t0 + h0, &y1);
        let diff: [f64; N] = std::array::from_fn(|i| k2[i] - k1[i]);
        let d2 = scaled(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
        (100.0 * h0).min(h1).min(span).min(self.h_max)
    }

    /// Integrates from `t0` to `t_end`. The observer sees every accepted
    /// point (including the initial one) and may stop the run early.
    pub fn solve<const N: usize, F, O>(&self, mut f: F, t0: f64, y0: [f64; N], t_end: f64, mut observe: O) -> Result<Outcome<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N], &[f64; N]) -> ControlFlow<()>,
    {
        let span = t_end - t0;
        if !(span > 0.0) {
            return Err(Error::Domain(format!("integration span must be positive, got {span}")));
        }
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        if observe(t, &y, &k1).is_break() {
            return Ok(Outcome { t, y, accepted: 0, rejected: 0, stopped: true });
        }
        let mut h = self.h_init.unwrap_or_else(|| self.initial_step(&mut f, t0, &y0, &k1, span));
        let h_floor = self.h_min * span.max(1.0).min(span.abs().max(1e-300));
        let (mut accepted, mut rejected) = (0usize, 0usize);
        let mut last_rejected = false;

        while t < t_end {
            if accepted + rejected >= self.max_steps {
                return Err(Error::Timeout { t });
            }
            let h_try = h.min(t_end - t).min(self.h_max);
            let (y_new, k_new, err) = step(&mut f, t, &y, &k1, h_try);
            let en = self.error_norm(&y, &y_new, &err);
            if !en.is_finite() {
                rejected += 1;
                h = 0.25 * h_try;
                if h < h_floor {
                    return Err(Error::StepUnderflow { t });
                }
                continue;
            }
            if en <= 1.0 {
                t = if h_try == t_end - t { t_end } else { t + h_try };
                y = y_new;
                k1 = k_new;
                accepted += 1;
                let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                h = if last_rejected { h_try * factor.min(1.0) } else { h_try * factor };
                last_rejected = false;
                if observe(t, &y, &k1).is_break() {
                    return Ok(Outcome { t, y, accepted, rejected, stopped: true });
                }
            } else {
                rejected += 1;
                last_rejected = true;
                h = h_try * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
                if h < h_floor {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        Ok(Outcome { t, y, accepted, rejected, stopped: false })
    }
}

/// Fixed-step Dormand–Prince (5th-order solution, no error control).
pub fn solve_fixed<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t_end: f64, n_steps: usize) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let h = (t_end - t0) / n_steps as f64;
    let mut y = y0;
    let mut k1 = f(t0, &y);
    for i in 0..n_steps {
        let t = t0 + i as f64 * h;
        let (y_new, k_new, _) = step(&mut f, t, &y, &k1, h);
        y = y_new;
        k1 = k_new;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let solver = Dopri5::new(1e-10, 1e-12);
        let out = solver.solve(|_, y: &[f64; 1]| [-2.0 * y[0]], 0.0, [1.0], 3.0, |_, _, _| ControlFlow::Continue(())).unwrap();
        assert_eq!(out.t, 3.0);
        assert!((out.y[0] - (-6.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator() {
        let solver = Dopri5::new(1e-11, 1e-13);
        let out = solver
            .solve(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [1.0, 0.0], 10.0, |_, _, _| ControlFlow::Continue(()))
            .unwrap();
        assert!((out.y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((out.y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn observer_stops_early() {
        let solver = Dopri5::default();
        let out = solver
            .solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 100.0, |_, y, _| {
                if y[0] < 0.5 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            })
            .unwrap();
        assert!(out.stopped && out.t < 100.0);
    }

    #[test]
    fn fixed_step_order_is_five() {
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let exact = 2f64.cos();
        let errs: Vec<f64> = [10usize, 20, 40].iter().map(|&n| (solve_fixed(f, 0.0, [1.0, 0.0], 2.0, n)[0] - exact).abs()).collect();
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 5.0).abs() < 0.5, "order {order}");
    }
}
