use cnwave::approx::solve;
use cnwave::evolve::{run, EvolveConfig};
use cnwave::modulation::{
    decay_report, decompose, envelope, fill_gamma_dot, lyapunov_time_derivative_check, optimal_gamma,
    perturbed_initial, seeded_perturbation, Tracker,
};
use cnwave::profiles::{build_profile, mass};
use cnwave::{Sector, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn short_run(m0: f64, eps: f64, t_end: f64) -> Vec<cnwave::modulation::DiagnosticsRecord> {
    let p = build_profile(m0, 128).unwrap();
    let psi0 = perturbed_initial(&p, eps, 1).unwrap();
    let cfg = EvolveConfig { eps, dt: 1e-3, t_end, n_grid: 128, sample_every: 10, sector_projection: false };
    let mut tr = Tracker::new(m0, eps, 128);
    run(&psi0, &cfg, |t, psi| tr.observe(t, psi).map(|_| ())).unwrap();
    tr.finish()
}

#[test]
fn decomposition_satisfies_orthogonality_and_mass_identities() {
    let a = solve(1.0, 0.02, 128).unwrap();
    let p = build_profile(1.0, 128).unwrap();
    let psi = &perturbed_initial(&p, 0.05, 4).unwrap() * Complex64::from_polar(1.0, 2.0);
    let d = decompose(&psi, &a, 2.0).unwrap();
    let q = &a.profile.field;
    assert!(d.xi.l2_inner(&q.times_i()).unwrap().abs() < 1e-12);
    assert!((d.xi.l2_inner(q).unwrap() + mass(&d.xi)).abs() < 1e-12);
    assert!((d.eta.l2_inner(&a.field).unwrap() + mass(&d.eta)).abs() < 1e-10);
    assert!((&(&d.xi - &d.eta) - &a.zeta()).l2_norm() < 1e-13);
}

#[test]
fn short_trajectory_diagnostics() {
    let eps = 0.01;
    let recs = short_run(1.0, eps, 2.0);
    assert_eq!(recs.len(), 201);
    assert!(recs[0].gamma_dot.is_none() && recs[200].gamma_dot.is_none());
    assert!(lyapunov_time_derivative_check(&recs).unwrap() < 1e-6);
    for r in &recs {
        assert!(r.xi_orthogonality() < 1e-10);
        assert!(r.xi_q_defect.abs() < 1e-10);
        assert!(r.in_window);
        assert!((r.m - (-2.0 * eps * r.t).exp()).abs() < 1e-14);
        let gd = r.gamma_dot.unwrap_or(r.omega);
        assert!((gd - r.omega).abs() < 0.05);
    }
    let rep = decay_report(&recs, eps, 1.0).unwrap();
    assert!(rep.envelope_k >= 1.0 && rep.envelope_k < 2.0);
    assert!((envelope(&recs[0], eps) - rep.envelope_n0).abs() < 1e-15);
}

#[test]
fn gamma_dot_of_a_quadratic_phase_is_exact() {
    let mut recs = short_run(0.5, 0.02, 0.05);
    let ts: Vec<f64> = [0.0, 0.01, 0.025, 0.03, 0.05].to_vec();
    recs.truncate(ts.len());
    for (r, &t) in recs.iter_mut().zip(&ts) {
        r.t = t;
        r.gamma = 1.0 + 2.0 * t + 3.0 * t * t;
    }
    fill_gamma_dot(&mut recs);
    for r in &recs[1..recs.len() - 1] {
        assert!((r.gamma_dot.unwrap() - (2.0 + 6.0 * r.t)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn phase_is_equivariant(theta in -PI..PI, seed in 0u64..500, amp in 0.0f64..0.3) {
        let p = build_profile(1.0, 64).unwrap();
        let psi = perturbed_initial(&p, amp, seed).unwrap();
        let g0 = optimal_gamma(&psi, &p.field, 0.0).unwrap();
        let rotated = &psi * Complex64::from_polar(1.0, theta);
        let g1 = optimal_gamma(&rotated, &p.field, g0 + theta).unwrap();
        prop_assert!((g1 - g0 - theta).abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(seed in 0u64..500, shift in 0usize..64) {
        let v = seeded_perturbation(64, seed).unwrap();
        let raw: Vec<Complex64> = (0..64).map(|j| v.samples()[(j + shift) % 64] * Complex64::new(1.0, 0.3)).collect();
        let f = SpectralField::from_samples(raw, Sector::Full).unwrap();
        for s in [Sector::S, Sector::A, Sector::Aplus, Sector::Aminus] {
            let once = f.project(s);
            prop_assert!((&once.project(s) - &once).l2_norm() <= 1e-14 * f.l2_norm().max(1.0));
            prop_assert!(once.l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
        }
    }
}
