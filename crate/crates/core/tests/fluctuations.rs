use aptsense_core::config::ExperimentConfig;
use aptsense_core::dynamics::{integrate_with, settle_with, IntegrateOptions, SettleOptions};
use aptsense_core::fluctuations::{build_fluctuation_matrix, is_root_stable, linewidth_sweep, spectrum, spectrum_at};
use aptsense_core::nonlinear::{fold_points, reconstruct_amplitudes, response_sweep, solve_cubic};
use aptsense_core::SystemParams;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut ChaCha8Rng) -> SystemParams {
    SystemParams::anti_pt(
        0.0,
        rng.gen_range(-8.0..8.0),
        rng.gen_range(0.05..1.0),
        1.0,
        rng.gen_range(-0.1..0.1),
        rng.gen_range(0.1..5.0),
    )
}

/// A set inside its hysteresis window, so the middle root is present.
fn random_bistable_set(rng: &mut ChaCha8Rng) -> SystemParams {
    let gamma_0: f64 = rng.gen_range(0.05..1.0);
    let gamma = gamma_0 + 1.0;
    let u: f64 = rng.gen_range(0.001..0.1);
    let split = -u.signum() * rng.gen_range(3.6..6.0) * gamma;
    let base = SystemParams::anti_pt(0.0, split, gamma_0, 1.0, u, 1.0);
    let folds = fold_points(&base).unwrap().unwrap();
    let t: f64 = rng.gen_range(0.2..0.8);
    let intensity = folds[0].0.powf(1.0 - t) * folds[1].0.powf(t);
    SystemParams { rabi: intensity.sqrt(), ..base }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn spectrum_is_conjugation_closed_with_fixed_trace(
        split in -8.0..8.0f64, gamma_0 in 0.0..1.0f64, u in -0.2..0.2f64, rabi in 0.01..5.0f64,
    ) {
        let p = SystemParams::anti_pt(0.0, split, gamma_0, 1.0, u, rabi);
        let c = solve_cubic(&p).unwrap();
        for &x in &c.real_positive_roots {
            let ss = reconstruct_amplitudes(&p, x).unwrap();
            let m = build_fluctuation_matrix(&p, &ss).unwrap();
            let s = spectrum(&m).unwrap();
            let sum: Complex64 = s.eigenvalues.iter().sum();
            let gamma = gamma_0 + 1.0;
            prop_assert!((sum - Complex64::new(-4.0 * gamma, 0.0)).norm() < 1e-9 * (1.0 + 4.0 * u.abs() * x));
            prop_assert!((m.0.trace() - sum).norm() < 1e-9 * (1.0 + 4.0 * u.abs() * x));
            for z in &s.eigenvalues {
                let nearest = s.eigenvalues.iter().map(|w| (w - z.conj()).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(nearest < 1e-6 * (1.0 + z.norm()), "{z} has no conjugate in {:?}", s.eigenvalues);
            }
        }
    }
}

/// Distance of the trajectory end from the root after a small kick.
fn kicked_distance(p: &SystemParams, x: f64, t_max: f64) -> (f64, bool) {
    let ss = reconstruct_amplitudes(p, x).unwrap();
    let kick = 1e-6 * ss.b.norm().max(1e-3);
    let seed = (ss.a + Complex64::new(kick, 0.0), ss.b + Complex64::new(0.0, kick));
    let opts = IntegrateOptions { tol: 1e-11, steady_tol: None, ramp: None };
    let traj = integrate_with(p, seed, t_max, &opts).unwrap();
    let end = traj.final_state;
    (((end.a - ss.a).norm_sqr() + (end.b - ss.b).norm_sqr()).sqrt() / kick, traj.runaway)
}

#[test]
fn linear_stability_agrees_with_kicked_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut checked, mut skipped, mut unstable) = (0, 0, 0);
    for k in 0.. {
        if checked >= 100 {
            break;
        }
        let p = if k % 2 == 0 { random_set(&mut rng) } else { random_bistable_set(&mut rng) };
        let c = solve_cubic(&p).unwrap();
        for &x in &c.real_positive_roots {
            let s = spectrum_at(&p, x).unwrap();
            let max_re = -s.min_linewidth;
            // near-marginal roots relax or grow too slowly to classify
            if max_re.abs() < 1e-3 {
                skipped += 1;
                continue;
            }
            let t_max = 30.0 / max_re.abs();
            let (ratio, runaway) = kicked_distance(&p, x, t_max);
            let stable = is_root_stable(&p, x).unwrap();
            if stable {
                assert!(!runaway && ratio < 1e-3, "stable root {x} of {p:?} drifted by {ratio}");
            } else {
                unstable += 1;
                assert!(runaway || ratio > 1e3, "unstable root {x} of {p:?} held at {ratio}");
            }
            checked += 1;
        }
    }
    assert!(skipped < checked && unstable > 0, "{skipped} skipped, {unstable} unstable");
}

#[test]
fn middle_root_is_left_for_an_outer_branch() {
    let base = SystemParams::anti_pt(0.0, 4.0, 0.25, 0.75, -0.01, 0.0);
    let folds = fold_points(&SystemParams { rabi: 1.0, ..base }).unwrap().unwrap();
    let p = SystemParams { rabi: (folds[0].0 * folds[1].0).sqrt().sqrt(), ..base };
    let c = solve_cubic(&p).unwrap();
    assert_eq!(c.real_positive_roots.len(), 3);
    let middle = c.real_positive_roots[1];
    assert!(!is_root_stable(&p, middle).unwrap());
    let ss = reconstruct_amplitudes(&p, middle).unwrap();
    let seed = (ss.a, ss.b * (1.0 + 1e-4));
    let end = settle_with(&p, Some(seed), &SettleOptions::default()).unwrap();
    let (lo, hi) = (c.real_positive_roots[0], c.real_positive_roots[2]);
    assert!((end.x / lo - 1.0).abs() < 1e-8 || (end.x / hi - 1.0).abs() < 1e-8, "{} not in {lo}, {hi}", end.x);
}

#[test]
fn strong_drive_shifts_the_spectrum_measurably() {
    let cfg = ExperimentConfig::preset("fig4-like").unwrap();
    let p = cfg.params().unwrap();
    let gamma = p.derive().gamma_total;
    let g = cfg.grid();
    let rows = response_sweep(&p, g.min, g.max, 281).unwrap();
    let peak = rows.iter().map(|r| r.x_selected).fold(0.0, f64::max);
    assert!(4.0 * p.kerr.abs() * peak / gamma > 0.01);
}

#[test]
fn far_detuned_linewidths_return_to_the_total_loss() {
    let p = SystemParams::anti_pt(0.0, 0.0, 0.3, 1.0, 0.05, 1.0);
    let rows = linewidth_sweep(&p, 1e4, 2e4, 3).unwrap();
    for r in rows {
        let mut lw = r.linewidths;
        lw.sort_by(f64::total_cmp);
        for w in lw {
            assert!((w - 1.3).abs() < 1e-3, "{lw:?}");
        }
        assert!((lw[0] - lw[1]).abs() < 1e-9 && (lw[2] - lw[3]).abs() < 1e-9);
    }
}
