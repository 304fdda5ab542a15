use cnwave::elliptic::complete_k;
use cnwave::linop::{
    apply_on_grid, assemble, assemble_second_variation, closed_form_in_sector, coercivity_constant,
    quadratic_form, sector_weight, spectrum, Norm, OperatorKind, LMINUS_SECTORS, LPLUS_SECTORS,
};
use cnwave::modulation::seeded_perturbation;
use cnwave::profiles::{action_with_omega, build_profile, build_profile_k};
use cnwave::{Modulus, Sector, SpectralField};
use num_complex::Complex64;

#[test]
fn kernel_vectors() {
    for &m in &[0.3, 1.5, 4.0] {
        let p = build_profile(m, 256).unwrap();
        let d = p.derivatives().unwrap();
        let qx = p.field.derivative(1).unwrap();
        assert!(apply_on_grid(OperatorKind::Lminus, &p, &p.field).unwrap().l2_norm() < 1e-9);
        assert!(apply_on_grid(OperatorKind::Lplus, &p, &qx).unwrap().l2_norm() < 1e-8);
        let r = &apply_on_grid(OperatorKind::Lplus, &p, &d.dq_dm).unwrap() + &(&p.field * d.domega_dm);
        assert!(r.l2_norm() < 1e-7, "m = {m}: {}", r.l2_norm());
    }
}

#[test]
fn sector_spectra_reproduce_closed_forms() {
    for &k in &[0.35, 0.65, 0.9] {
        let km = Modulus::new(k).unwrap();
        let p = build_profile_k(km, 256).unwrap();
        let big_k = complete_k(km);
        for kind in [OperatorKind::Lminus, OperatorKind::Lplus] {
            for sector in [Sector::S, Sector::Aplus, Sector::Aminus] {
                let expect = closed_form_in_sector(kind, k, big_k, sector).unwrap();
                let op = assemble(kind, &p, sector).unwrap();
                let sp = spectrum(&op, expect.len()).unwrap();
                for (got, want) in sp.eigenvalues.iter().zip(&expect) {
                    assert!((got - want).abs() < 1e-9, "{kind:?} {sector} k={k}: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn full_space_eigenfunctions_sit_in_their_sectors() {
    let km = Modulus::new(0.6).unwrap();
    let p = build_profile_k(km, 128).unwrap();
    let cases: [(OperatorKind, &[Sector]); 2] =
        [(OperatorKind::Lminus, &LMINUS_SECTORS), (OperatorKind::Lplus, &LPLUS_SECTORS)];
    for (kind, sectors) in cases {
        let op = assemble(kind, &p, Sector::Full).unwrap();
        let sp = spectrum(&op, sectors.len()).unwrap();
        for (v, &s) in sp.eigenvectors.iter().zip(sectors) {
            assert!(sector_weight(v, s) > 1.0 - 1e-10, "{kind:?} {s}");
        }
    }
}

#[test]
fn second_variation_is_the_hessian_of_the_action() {
    let p = build_profile(1.0, 128).unwrap();
    let op = assemble_second_variation(&p, Sector::Aplus).unwrap();
    let v = seeded_perturbation(128, 5).unwrap();
    let u = &v * Complex64::new(0.6, -0.8);
    let s = |t: f64| action_with_omega(&p.field.axpy(1.0, &(&u * t)).with_sector(Sector::Aplus), p.omega);
    let h = 1e-3;
    let fd = (s(h) - 2.0 * s(0.0) + s(-h)) / (h * h);
    let form = quadratic_form(&op, &u).unwrap();
    assert!((fd - form).abs() < 1e-5 * form.abs().max(1.0), "{fd} {form}");
}

#[test]
fn coercivity_is_positive_on_the_constrained_space() {
    for &m in &[0.1, 1.0, 3.0] {
        let p = build_profile(m, 128).unwrap();
        let op = assemble_second_variation(&p, Sector::Aplus).unwrap();
        let c = coercivity_constant(&op, &[p.field.clone(), p.field.times_i()], Norm::H1).unwrap();
        assert!(c > 0.3 && c < 1.0, "m = {m}: {c}");
        let bare = coercivity_constant(&op, &[], Norm::H1).unwrap();
        assert!(bare < 0.0);
    }
}

#[test]
fn constrained_lminus_on_a_equals_lambda_two() {
    for &k in &[0.1, 0.4] {
        let km = Modulus::new(k).unwrap();
        let p = build_profile_k(km, 128).unwrap();
        let op = assemble(OperatorKind::Lminus, &p, Sector::A).unwrap();
        let c = coercivity_constant(&op, &[p.field.clone()], Norm::L2).unwrap();
        let lam2 = closed_form_in_sector(OperatorKind::Lminus, k, complete_k(km), Sector::Aminus).unwrap()[0];
        assert!((c - lam2).abs() < 1e-9, "{c} {lam2}");
    }
}

#[test]
fn operator_round_trips_fields() {
    let p = build_profile(0.7, 64).unwrap();
    let op = assemble(OperatorKind::Lplus, &p, Sector::Aplus).unwrap();
    let f = SpectralField::from_real_fn(64, Sector::Aplus, |x| x.cos() - 0.2 * (5.0 * x).cos()).unwrap();
    let back = op.vec_to_field(&op.field_to_vec(&f).unwrap()).unwrap();
    assert!((&back - &f).l2_norm() < 1e-13);
    let direct = apply_on_grid(OperatorKind::Lplus, &p, &f).unwrap();
    assert!((&op.apply(&f).unwrap() - &direct).l2_norm() < 1e-10);
}
