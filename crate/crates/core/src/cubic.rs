//! Real roots of a monic cubic y³ + p·y² + q·y + r.
//!
//! Closed form (Cardano / trigonometric) followed by Newton polishing on the
//! original polynomial.

use std::f64::consts::TAU;

pub fn eval(p: f64, q: f64, r: f64, y: f64) -> f64 {
    ((y + p) * y + q) * y + r
}

fn eval_deriv(p: f64, q: f64, y: f64) -> f64 {
    (3.0 * y + 2.0 * p) * y + q
}

pub fn polish(p: f64, q: f64, r: f64, mut y: f64) -> f64 {
    let mut fy = eval(p, q, r, y);
    for _ in 0..100 {
        if fy == 0.0 {
            break;
        }
        let d = eval_deriv(p, q, y);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = y - fy / d;
        let fnext = eval(p, q, r, next);
        if !(fnext.abs() < fy.abs()) {
            break;
        }
        let done = (next - y).abs() <= 4.0 * f64::EPSILON * next.abs();
        y = next;
        fy = fnext;
        if done {
            break;
        }
    }
    y
}

/// All real roots, ascending. Multiple roots appear once per multiplicity
/// only when the closed form separates them.
pub fn real_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    let shift = p / 3.0;
    let dp = q - p * p / 3.0;
    let dq = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let disc = 0.25 * dq * dq + dp * dp * dp / 27.0;

    let mut roots: Vec<f64> = if dp == 0.0 && dq == 0.0 {
        vec![0.0]
    } else if disc > 0.0 {
        let s = disc.sqrt();
        // pick the sign that avoids cancellation
        let u = -(0.5 * dq + s.copysign(dq)).cbrt();
        let v = if u != 0.0 { -dp / (3.0 * u) } else { 0.0 };
        vec![u + v]
    } else {
        let m = 2.0 * (-dp / 3.0).sqrt();
        let arg = ((3.0 * dq) / (2.0 * dp) * (-3.0 / dp).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3).map(|k| m * (theta - TAU * k as f64 / 3.0).cos()).collect()
    };
    for t in roots.iter_mut() {
        *t = polish(p, q, r, *t - shift);
    }
    roots.sort_by(f64::total_cmp);
    roots
}
