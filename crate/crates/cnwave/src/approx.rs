//! The ε-corrected profile Q_{m,ε} and frequency λ_{m,ε}.
//!
//! Q_{m,ε} solves, inside A⁺,
//!
//! ```text
//! -f'' - |f|²f + λf - iε(Q_m - 2m ∂_mQ_m) + ν iQ_m = 0,
//! M[f] = m,   (f, iQ_m) = 0,
//! ```
//!
//! by Newton's method on (f, λ, ν). The multiplier ν on the gauge
//! direction iQ_m is what makes the system square: pairing the profile
//! equation with if shows that the equation alone forces
//! ε(Q_m - 2m∂_mQ_m, f) = 0, which the gauge condition does not provide.
//! Equivalently, the profile equation is solved on the complement of iQ_m.
//! The transverse defect |ν|‖Q_m‖ is reported and is O(ε³).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::{complex_second_variation_matrix, RealBasis};
use crate::profiles::{self, build_profile_with, CnoidalProfile, M_MAX_DEFAULT};
use crate::torus::{Sector, SpectralField};

/// Default bound on ε.
pub const EPS_MAX_DEFAULT: f64 = 0.05;

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxConfig {
    pub n_grid: usize,
    pub max_iter: usize,
    /// Required final residual.
    pub tol: f64,
    pub eps_max: f64,
    pub m_max: f64,
    /// ε increment for the continuation fallback.
    pub continuation_step: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self {
            n_grid: 256,
            max_iter: 50,
            tol: 1e-10,
            eps_max: EPS_MAX_DEFAULT,
            m_max: M_MAX_DEFAULT,
            continuation_step: 0.01,
        }
    }
}

impl ApproxConfig {
    pub fn with_grid(n_grid: usize) -> Self {
        Self { n_grid, ..Self::default() }
    }
}

/// The corrected profile with solver metadata.
#[derive(Debug, Clone)]
pub struct ApproxProfile {
    pub m: f64,
    pub eps: f64,
    pub lambda: f64,
    /// Multiplier of the gauge direction iQ_m.
    pub nu: f64,
    /// Q_{m,ε}, complex, in A⁺.
    pub field: SpectralField,
    /// The underlying cnoidal profile Q_m.
    pub profile: CnoidalProfile,
    /// g = Q_m - 2m ∂_mQ_m.
    pub forcing: SpectralField,
    pub newton_residual: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

struct Problem {
    m: f64,
    eps: f64,
    basis: RealBasis,
    lap: DVector<f64>,
    q: DVector<f64>,
    g: DVector<f64>,
}

struct State {
    a: DVector<f64>,
    b: DVector<f64>,
    lambda: f64,
    nu: f64,
}

impl Problem {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn samples(&self, s: &State) -> Vec<Complex64> {
        let re = self.basis.synthesize(&s.a);
        let im = self.basis.synthesize(&s.b);
        re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect()
    }

    fn residual(&self, s: &State) -> DVector<f64> {
        let d = self.dim();
        let f = self.samples(s);
        let cubic: Vec<Complex64> = f.iter().map(|c| c * c.norm_sqr()).collect();
        let c_re = self.basis.coefficients(&cubic.iter().map(|c| c.re).collect::<Vec<_>>());
        let c_im = self.basis.coefficients(&cubic.iter().map(|c| c.im).collect::<Vec<_>>());
        let mut r = DVector::zeros(2 * d + 2);
        for j in 0..d {
            r[j] = self.lap[j] * s.a[j] - c_re[j] + s.lambda * s.a[j];
            r[d + j] = self.lap[j] * s.b[j] - c_im[j] + s.lambda * s.b[j] - self.eps * self.g[j] + s.nu * self.q[j];
        }
        r[2 * d] = 0.5 * (s.a.norm_squared() + s.b.norm_squared()) - self.m;
        r[2 * d + 1] = s.b.dot(&self.q);
        r
    }

    fn jacobian(&self, s: &State) -> DMatrix<f64> {
        let d = self.dim();
        let n = 2 * d + 2;
        let f = self.samples(s);
        let block = complex_second_variation_matrix(&self.basis, s.lambda, &f);
        let mut j = DMatrix::zeros(n, n);
        j.view_mut((0, 0), (2 * d, 2 * d)).copy_from(&block);
        for i in 0..d {
            j[(i, 2 * d)] = s.a[i];
            j[(d + i, 2 * d)] = s.b[i];
            j[(2 * d, i)] = s.a[i];
            j[(2 * d, d + i)] = s.b[i];
            j[(d + i, 2 * d + 1)] = self.q[i];
            j[(2 * d + 1, d + i)] = self.q[i];
        }
        j
    }

    fn update(&self, s: &State, delta: &DVector<f64>, t: f64) -> State {
        let d = self.dim();
        State {
            a: &s.a - delta.rows(0, d) * t,
            b: &s.b - delta.rows(d, d) * t,
            lambda: s.lambda - t * delta[2 * d],
            nu: s.nu - t * delta[2 * d + 1],
        }
    }
}

fn newton(p: &Problem, mut s: State, cfg: &ApproxConfig) -> Result<(State, f64, usize, Vec<f64>)> {
    let floor = 1e-13 * (1.0 + p.m);
    let mut res = p.residual(&s).norm();
    let mut history = vec![res];
    let mut iterations = 0;
    while iterations < cfg.max_iter && res > floor {
        let r = p.residual(&s);
        let delta = p
            .jacobian(&s)
            .lu()
            .solve(&r)
            .ok_or(Error::NonConvergence { iterations, residual: res })?;
        let mut t = 1.0;
        let mut trial = p.update(&s, &delta, t);
        let mut trial_res = p.residual(&trial).norm();
        while !(trial_res < (1.0 - 1e-4 * t) * res) && t > 1e-3 {
            t *= 0.5;
            trial = p.update(&s, &delta, t);
            trial_res = p.residual(&trial).norm();
        }
        iterations += 1;
        if !trial_res.is_finite() {
            return Err(Error::NonConvergence { iterations, residual: res });
        }
        let stalled = trial_res >= res;
        if !stalled {
            s = trial;
            res = trial_res;
            history.push(res);
        }
        if stalled || (res <= cfg.tol && history.len() >= 2 && res > 0.1 * history[history.len() - 2]) {
            break;
        }
    }
    if res <= cfg.tol {
        Ok((s, res, iterations, history))
    } else {
        Err(Error::NonConvergence { iterations, residual: res })
    }
}

fn setup(m: f64, eps: f64, cfg: &ApproxConfig) -> Result<(Problem, CnoidalProfile, SpectralField)> {
    if !(eps >= 0.0) || eps > cfg.eps_max {
        return Err(Error::Domain(format!("eps = {eps} outside [0, {}]", cfg.eps_max)));
    }
    let profile = build_profile_with(m, cfg.n_grid, cfg.m_max)?;
    let dq = profiles::dq_dm(&profile);
    let forcing = profile.field.axpy(1.0, &(&dq * (-2.0 * m))).with_sector(Sector::Aplus);
    let basis = RealBasis::new(Sector::Aplus, cfg.n_grid)?;
    let q = basis.coefficients(&profile.field.real_samples());
    let g = basis.coefficients(&forcing.real_samples());
    let lap = basis.laplacian_diag();
    Ok((Problem { m, eps, basis, lap, q, g }, profile, forcing))
}

fn finish(
    p: &Problem,
    s: State,
    res: f64,
    iterations: usize,
    history: Vec<f64>,
    profile: CnoidalProfile,
    forcing: SpectralField,
) -> Result<ApproxProfile> {
    let field = SpectralField::from_samples(p.samples(&s), Sector::Aplus)?;
    Ok(ApproxProfile {
        m: p.m,
        eps: p.eps,
        lambda: s.lambda,
        nu: s.nu,
        field,
        profile,
        forcing,
        newton_residual: res,
        iterations,
        residual_history: history,
    })
}

/// Solves for (Q_{m,ε}, λ_{m,ε}) with default settings.
pub fn solve(m: f64, eps: f64, n_grid: usize) -> Result<ApproxProfile> {
    solve_with(m, eps, &ApproxConfig::with_grid(n_grid), None)
}

/// Solves for (Q_{m,ε}, λ_{m,ε}), optionally warm-started.
///
/// Without a warm start Newton begins at (Q_m, ω(m)); if that fails, ε is
/// raised from 0 in steps of `continuation_step`.
pub fn solve_with(m: f64, eps: f64, cfg: &ApproxConfig, warm: Option<&ApproxProfile>) -> Result<ApproxProfile> {
    let (p, profile, forcing) = setup(m, eps, cfg)?;
    let start = |from: Option<&ApproxProfile>| match from {
        Some(w) if w.field.n_grid() == cfg.n_grid => State {
            a: p.basis.coefficients(&w.field.real_samples()),
            b: p.basis.coefficients(&w.field.imag_samples()),
            lambda: w.lambda,
            nu: w.nu,
        },
        _ => State { a: p.q.clone(), b: DVector::zeros(p.dim()), lambda: profile.omega, nu: 0.0 },
    };
    let first = match newton(&p, start(warm), cfg) {
        Ok((s, res, it, hist)) => return finish(&p, s, res, it, hist, profile, forcing),
        Err(e) => e,
    };
    if eps == 0.0 {
        return Err(first);
    }
    if warm.is_some() {
        if let Ok((s, res, it, hist)) = newton(&p, start(None), cfg) {
            return finish(&p, s, res, it, hist, profile, forcing);
        }
    }
    let steps = (eps / cfg.continuation_step).ceil().max(1.0) as usize;
    let mut prev: Option<ApproxProfile> = None;
    for i in 1..=steps {
        let e = eps * i as f64 / steps as f64;
        let (pi, prof_i, forc_i) = setup(m, e, cfg)?;
        let init = match &prev {
            Some(w) => State {
                a: pi.basis.coefficients(&w.field.real_samples()),
                b: pi.basis.coefficients(&w.field.imag_samples()),
                lambda: w.lambda,
                nu: w.nu,
            },
            None => State { a: pi.q.clone(), b: DVector::zeros(pi.dim()), lambda: prof_i.omega, nu: 0.0 },
        };
        let (s, res, it, hist) = newton(&pi, init, cfg)?;
        prev = Some(finish(&pi, s, res, it, hist, prof_i, forc_i)?);
    }
    prev.ok_or(first)
}

impl ApproxProfile {
    /// ζ = Q_{m,ε} - Q_m.
    pub fn zeta(&self) -> SpectralField {
        &self.field - &self.profile.field
    }

    /// |ν|‖Q_m‖, the size of the gauge-direction component removed from the
    /// profile equation.
    pub fn transverse_defect(&self) -> f64 {
        self.nu.abs() * self.profile.field.l2_norm()
    }

    /// ‖-f'' - |f|²f + λf - iεg + ν iQ_m‖ recomputed on the grid.
    pub fn equation_residual(&self) -> f64 {
        let f = &self.field;
        let fxx = f.derivative(2).expect("order 2");
        let samples: Vec<Complex64> = f
            .samples()
            .iter()
            .zip(fxx.samples())
            .zip(self.forcing.samples())
            .zip(self.profile.field.samples())
            .map(|(((&u, &uxx), &g), &q)| {
                -uxx - u * u.norm_sqr() + u * self.lambda - Complex64::new(0.0, self.eps) * g
                    + Complex64::new(0.0, self.nu) * q
            })
            .collect();
        SpectralField::from_samples(samples, Sector::Aplus).map(|r| r.l2_norm()).unwrap_or(f64::NAN)
    }
}

/// (‖Q_{m,ε} - Q_m‖_{H¹}/(ε√m), |ω - λ_{m,ε}|/(ε√m)).
pub fn closeness_report(a: &ApproxProfile) -> Result<(f64, f64)> {
    if !(a.eps > 0.0) {
        return Err(Error::Domain("closeness ratios need eps > 0".into()));
    }
    let scale = a.eps * a.m.sqrt();
    Ok((a.zeta().h1_norm() / scale, (a.profile.omega - a.lambda).abs() / scale))
}

/// ‖ε(Q_m - 2m∂_mQ_m - Q_{m,ε} + 2m∂_mQ_{m,ε})‖_{H¹}, with ∂_mQ_{m,ε} by a
/// central difference in m.
pub fn forcing_residual(m: f64, eps: f64, n_grid: usize) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain("forcing residual needs eps > 0".into()));
    }
    let cfg = ApproxConfig::with_grid(n_grid);
    let h = (1e-2 * m).max(1e-4);
    let mid = solve_with(m, eps, &cfg, None)?;
    let plus = solve_with(m + h, eps, &cfg, Some(&mid))?;
    let minus = solve_with(m - h, eps, &cfg, Some(&mid))?;
    let dqe = (&plus.field - &minus.field) * (1.0 / (2.0 * h));
    let corrected = &mid.field - &(&dqe * (2.0 * m));
    Ok(((&mid.forcing - &corrected) * eps).h1_norm())
}

/// ‖ε(Q_m - 2m∂_mQ_m)‖_{H¹}, the forcing before correction.
pub fn uncorrected_forcing(m: f64, eps: f64, n_grid: usize) -> Result<f64> {
    let (_, _, forcing) = setup(m, 0.0, &ApproxConfig::with_grid(n_grid))?;
    Ok((&forcing * eps).h1_norm())
}

/// S_{m,ε}[f] = E[f] + λ M[f] - ε(ig, f).
pub fn modified_action(a: &ApproxProfile, f: &SpectralField) -> f64 {
    let ig_f: f64 = a
        .forcing
        .samples()
        .iter()
        .zip(f.samples())
        .map(|(g, u)| g.re * u.im - g.im * u.re)
        .sum::<f64>()
        * 2.0
        * PI
        / f.n_grid() as f64;
    profiles::energy(f) + a.lambda * profiles::mass(f) - a.eps * ig_f
}

/// ℒ_{m,ε}[η] = S_{m,ε}[Q_{m,ε} + η] - S_{m,ε}[Q_{m,ε}].
pub fn lyapunov_eps(a: &ApproxProfile, eta: &SpectralField) -> f64 {
    modified_action(a, &(&a.field + eta)) - modified_action(a, &a.field)
}

/// (S″_{m,ε}[Q_{m,ε}]η, η) evaluated on the grid.
pub fn second_variation_eps_form(a: &ApproxProfile, eta: &SpectralField) -> f64 {
    let d = eta.derivative(1).expect("order 1");
    let w = 2.0 * PI / eta.n_grid() as f64;
    let pot: f64 = a
        .field
        .samples()
        .iter()
        .zip(eta.samples())
        .map(|(q, e)| {
            let re_qe = q.re * e.re + q.im * e.im;
            (a.lambda - q.norm_sqr()) * e.norm_sqr() - 2.0 * re_qe * re_qe
        })
        .sum::<f64>()
        * w;
    d.l2_norm_sq() + pot
}

/// ℒ_{m,ε}[η] from its expansion around Q_{m,ε}:
/// -ν(iQ_m, η) + ½(S″η, η) - ∫ ¼|η|⁴ + |η|² Re(Q̄_{m,ε}η).
pub fn lyapunov_eps_expanded(a: &ApproxProfile, eta: &SpectralField) -> f64 {
    let w = 2.0 * PI / eta.n_grid() as f64;
    let iq_eta: f64 = a.profile.field.samples().iter().zip(eta.samples()).map(|(q, e)| q.re * e.im).sum::<f64>() * w;
    let higher: f64 = a
        .field
        .samples()
        .iter()
        .zip(eta.samples())
        .map(|(q, e)| {
            let n2 = e.norm_sqr();
            0.25 * n2 * n2 + n2 * (q.re * e.re + q.im * e.im)
        })
        .sum::<f64>()
        * w;
    -a.nu * iq_eta + 0.5 * second_variation_eps_form(a, eta) - higher
}
