use aptsense_core::dynamics::{integrate_with, rhs, settle_with, IntegrateOptions, SettleOptions};
use aptsense_core::SystemParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Lab-frame equations with an explicitly oscillating drive, classic RK4.
fn lab_frame(p: &SystemParams, a0: Complex64, b0: Complex64, t_end: f64, steps: usize) -> (Complex64, Complex64) {
    let f = |t: f64, a: Complex64, b: Complex64| {
        let ea = Complex64::new(p.omega_a, -(p.gamma_a + p.gamma_shared));
        let eb = Complex64::new(p.omega_b, -(p.gamma_b + p.gamma_shared));
        let k = Complex64::new(p.g, -p.gamma_shared);
        let drive = p.rabi * (-I * p.omega_d * t).exp();
        let da = -I * (ea * a + k * b);
        let db = -I * (k * a + eb * b) + 2.0 * I * p.kerr * b.norm_sqr() * b + drive;
        (da, db)
    };
    let h = t_end / steps as f64;
    let (mut a, mut b) = (a0, b0);
    for n in 0..steps {
        let t = n as f64 * h;
        let (ka1, kb1) = f(t, a, b);
        let (ka2, kb2) = f(t + h / 2.0, a + ka1 * (h / 2.0), b + kb1 * (h / 2.0));
        let (ka3, kb3) = f(t + h / 2.0, a + ka2 * (h / 2.0), b + kb2 * (h / 2.0));
        let (ka4, kb4) = f(t + h, a + ka3 * h, b + kb3 * h);
        a += (ka1 + ka2 * 2.0 + ka3 * 2.0 + ka4) * (h / 6.0);
        b += (kb1 + kb2 * 2.0 + kb3 * 2.0 + kb4) * (h / 6.0);
    }
    (a, b)
}

#[test]
fn rotating_frame_matches_lab_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let carrier = rng.gen_range(2.0..6.0);
        let p = SystemParams::anti_pt(
            carrier,
            rng.gen_range(-4.0..4.0),
            rng.gen_range(0.1..1.0),
            rng.gen_range(0.2..1.0),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(0.1..2.0),
        );
        let gamma = p.derive().gamma_total;
        let t_end = 20.0 / gamma;
        let (a0, b0) = (Complex64::new(0.3, -0.1), Complex64::new(-0.2, 0.4));
        let (la, lb) = lab_frame(&p, a0, b0, t_end, 40_000);
        let opts = IntegrateOptions { tol: 1e-12, steady_tol: None, ramp: None };
        let traj = integrate_with(&p, (a0, b0), t_end, &opts).unwrap();
        assert_eq!(*traj.times.last().unwrap(), t_end);
        let phase = (I * carrier * t_end).exp();
        let (ra, rb) = (la * phase, lb * phase);
        let fs = traj.final_state;
        let scale = 1.0 + rb.norm();
        assert!((fs.a - ra).norm() < 1e-8 * scale, "{} vs {}", fs.a, ra);
        assert!((fs.b - rb).norm() < 1e-8 * scale, "{} vs {}", fs.b, rb);
    }
}

#[test]
fn undriven_linear_energy_never_grows() {
    let p = SystemParams { g: 0.7, ..SystemParams::anti_pt(0.0, 2.5, 0.2, 1.0, 0.0, 0.0) };
    let opts = IntegrateOptions { tol: 1e-12, steady_tol: None, ramp: None };
    let traj = integrate_with(&p, (Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)), 30.0, &opts).unwrap();
    let energy: Vec<f64> = traj.a.iter().zip(&traj.b).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
    assert!(energy.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10)));
    assert!(*energy.last().unwrap() < 1e-3 * energy[0]);
}

#[test]
fn converged_settle_meets_the_residual_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = SettleOptions { tol: 1e-9, ..SettleOptions::default() };
    for _ in 0..20 {
        let p = SystemParams::anti_pt(
            0.0,
            rng.gen_range(-6.0..6.0),
            rng.gen_range(0.2..1.0),
            1.0,
            rng.gen_range(-0.05..0.05),
            rng.gen_range(0.1..3.0),
        );
        let ss = settle_with(&p, None, &opts).unwrap();
        let (da, db) = rhs(&p, ss.a, ss.b, p.rabi);
        let residual = (da.norm_sqr() + db.norm_sqr()).sqrt();
        let bound = opts.tol * p.rabi.max(p.derive().gamma_total * ss.b.norm());
        assert!(residual < bound * (1.0 + 1e-6), "{residual} >= {bound}");
    }
}
