//! Phase modulation and Lyapunov diagnostics along damped trajectories.
//!
//! A solution is written as ψ = e^{iγ}(Q_m + ξ) = e^{iγ}(Q_{m,ε} + η) with
//! m = m(t) = e^{-2εt} m₀ and γ the phase that minimizes the L² distance
//! of ψ to the orbit of Q_m. The same γ is used for both decompositions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx::{self, ApproxConfig, ApproxProfile};
use crate::error::{Error, Result};
use crate::profiles::{self, CnoidalProfile};
use crate::torus::{Sector, SpectralField};

/// Relative tolerance of the mass check in [`decompose`].
pub const MASS_TOL: f64 = 1e-8;
/// Half-width δ of the working window ‖ξ‖_{H¹} ≤ δ√m.
pub const WINDOW_DELTA: f64 = 0.5;
/// Number of odd cosine modes in [`seeded_perturbation`].
pub const PERTURBATION_MODES: usize = 6;

/// γ = arg ∫ψQ̄, moved to the 2π-branch nearest `prev_gamma`.
pub fn optimal_gamma(psi: &SpectralField, q: &SpectralField, prev_gamma: f64) -> Result<f64> {
    if psi.n_grid() != q.n_grid() {
        return Err(Error::DimensionMismatch { left: psi.n_grid(), right: q.n_grid() });
    }
    let w = 2.0 * PI / psi.n_grid() as f64;
    let corr: Complex64 = psi.samples().iter().zip(q.samples()).map(|(p, q)| p * q.conj()).sum::<Complex64>() * w;
    let scale = psi.l2_norm() * q.l2_norm();
    if !(corr.norm() > 1e-14 * scale) {
        return Err(Error::DegeneratePhase(corr.norm()));
    }
    let g = corr.arg();
    Ok(g + 2.0 * PI * ((prev_gamma - g) / (2.0 * PI)).round())
}

/// γ together with ξ = e^{-iγ}ψ - Q_m and η = ξ - ζ.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub gamma: f64,
    pub xi: SpectralField,
    pub eta: SpectralField,
}

fn check_mass(psi: &SpectralField, m: f64) -> Result<()> {
    let actual = profiles::mass(psi);
    if (actual - m).abs() > MASS_TOL * m {
        return Err(Error::MassMismatch { actual, expected: m });
    }
    Ok(())
}

/// Splits ψ around Q_m and Q_{m,ε}, with m = `a.m`.
pub fn decompose(psi: &SpectralField, a: &ApproxProfile, prev_gamma: f64) -> Result<Decomposition> {
    check_mass(psi, a.m)?;
    let q = &a.profile.field;
    let gamma = optimal_gamma(psi, q, prev_gamma)?;
    let aligned = psi * Complex64::from_polar(1.0, -gamma);
    let xi = &aligned - q;
    let eta = &aligned - &a.field;
    Ok(Decomposition { gamma, xi, eta })
}

/// ℒ[ψ] = S_m[ψ] - S_m[Q_m] with ω = ω(m).
pub fn lyapunov(psi: &SpectralField, p: &CnoidalProfile) -> Result<f64> {
    check_mass(psi, p.m)?;
    Ok(profiles::action_with_omega(psi, p.omega) - profiles::action_with_omega(&p.field, p.omega))
}

fn quad(n: usize) -> f64 {
    2.0 * PI / n as f64
}

/// ½[(L₊ξ_R, ξ_R) + (L₋ξ_I, ξ_I)] - ∫ Qξ_R³ + Qξ_I²ξ_R + ¼|ξ|⁴.
pub fn lyapunov_expanded(p: &CnoidalProfile, xi: &SpectralField) -> f64 {
    let dx = xi.derivative(1).expect("order 1");
    let w = quad(xi.n_grid());
    let rest: f64 = p
        .field
        .samples()
        .iter()
        .zip(xi.samples())
        .map(|(q, e)| {
            let q = q.re;
            let (r, i) = (e.re, e.im);
            let n2 = r * r + i * i;
            let quadratic = (p.omega - 3.0 * q * q) * r * r + (p.omega - q * q) * i * i;
            0.5 * quadratic - q * r * r * r - q * i * i * r - 0.25 * n2 * n2
        })
        .sum::<f64>()
        * w;
    0.5 * dx.l2_norm_sq() + rest
}

/// Right side of the Lyapunov law,
/// -2εℒ + 2ε∫Q³ξ_R + ε∫(3ξ_R²Q² + ξ_I²Q² + 2ξ_R|ξ|²Q + ½|ξ|⁴).
pub fn lyapunov_rate(p: &CnoidalProfile, xi: &SpectralField, eps: f64, lyap: f64) -> f64 {
    let w = quad(xi.n_grid());
    let s: f64 = p
        .field
        .samples()
        .iter()
        .zip(xi.samples())
        .map(|(q, e)| {
            let q = q.re;
            let (r, i) = (e.re, e.im);
            let n2 = r * r + i * i;
            2.0 * q * q * q * r + 3.0 * r * r * q * q + i * i * q * q + 2.0 * r * n2 * q + 0.5 * n2 * n2
        })
        .sum::<f64>()
        * w;
    -2.0 * eps * lyap + eps * s
}

/// Per-sample modulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub m: f64,
    pub gamma: f64,
    pub xi_l2: f64,
    pub xi_h1: f64,
    pub eta_l2: f64,
    pub eta_h1: f64,
    pub lyap: f64,
    pub lyap_expanded: f64,
    /// Closed-form dℒ/dt.
    pub lyap_rate: f64,
    pub lyap_eps: f64,
    pub lyap_eps_expanded: f64,
    /// Centered difference of γ; `None` at the ends of a series.
    pub gamma_dot: Option<f64>,
    pub omega: f64,
    pub lambda_eps: f64,
    /// (ξ, iQ_m).
    pub xi_iq: f64,
    /// (ξ, Q_m) + M[ξ].
    pub xi_q_defect: f64,
    /// (η, iQ_{m,ε}).
    pub eta_iq: f64,
    /// (η, Q_{m,ε}) + M[η].
    pub eta_q_defect: f64,
    pub q_l2: f64,
    pub qe_l2: f64,
    /// ‖ξ‖_{H¹} ≤ δ√m.
    pub in_window: bool,
}

impl DiagnosticsRecord {
    /// |(ξ, iQ_m)| / (‖ξ‖‖Q_m‖), or 0 when ξ = 0.
    pub fn xi_orthogonality(&self) -> f64 {
        let s = self.xi_l2 * self.q_l2;
        if s == 0.0 {
            0.0
        } else {
            self.xi_iq.abs() / s
        }
    }

    /// |(η, iQ_{m,ε})| / (ε√m‖η‖), or 0 when ε = 0 or η = 0.
    pub fn eta_orthogonality_constant(&self, eps: f64) -> f64 {
        let s = eps * self.m.sqrt() * self.eta_l2;
        if s == 0.0 {
            0.0
        } else {
            self.eta_iq.abs() / s
        }
    }
}

/// Builds a record at time `t` from ψ and the profiles at m(t).
pub fn diagnose(t: f64, psi: &SpectralField, a: &ApproxProfile, prev_gamma: f64) -> Result<DiagnosticsRecord> {
    let d = decompose(psi, a, prev_gamma)?;
    let p = &a.profile;
    let aligned = &p.field + &d.xi;
    let lyap = lyapunov(&aligned, p)?;
    let iq = p.field.times_i();
    let iqe = a.field.times_i();
    Ok(DiagnosticsRecord {
        t,
        m: a.m,
        gamma: d.gamma,
        xi_l2: d.xi.l2_norm(),
        xi_h1: d.xi.h1_norm(),
        eta_l2: d.eta.l2_norm(),
        eta_h1: d.eta.h1_norm(),
        lyap,
        lyap_expanded: lyapunov_expanded(p, &d.xi),
        lyap_rate: lyapunov_rate(p, &d.xi, a.eps, lyap),
        lyap_eps: approx::lyapunov_eps(a, &d.eta),
        lyap_eps_expanded: approx::lyapunov_eps_expanded(a, &d.eta),
        gamma_dot: None,
        omega: p.omega,
        lambda_eps: a.lambda,
        xi_iq: d.xi.l2_inner(&iq)?,
        xi_q_defect: d.xi.l2_inner(&p.field)? + profiles::mass(&d.xi),
        eta_iq: d.eta.l2_inner(&iqe)?,
        eta_q_defect: d.eta.l2_inner(&a.field)? + profiles::mass(&d.eta),
        q_l2: p.field.l2_norm(),
        qe_l2: a.field.l2_norm(),
        in_window: d.xi.h1_norm() <= WINDOW_DELTA * a.m.sqrt(),
    })
}

/// Follows a trajectory with initial mass `m0`, re-solving Q_{m(t),ε} at
/// each sample from the previous solution.
pub struct Tracker {
    m0: f64,
    eps: f64,
    cfg: ApproxConfig,
    last: Option<ApproxProfile>,
    prev_gamma: f64,
    records: Vec<DiagnosticsRecord>,
}

impl Tracker {
    pub fn new(m0: f64, eps: f64, n_grid: usize) -> Self {
        Self::with_config(m0, eps, ApproxConfig::with_grid(n_grid))
    }

    pub fn with_config(m0: f64, eps: f64, cfg: ApproxConfig) -> Self {
        Self { m0, eps, cfg, last: None, prev_gamma: 0.0, records: Vec::new() }
    }

    /// m(t) = e^{-2εt} m₀.
    pub fn mass_at(&self, t: f64) -> f64 {
        (-2.0 * self.eps * t).exp() * self.m0
    }

    /// Records ψ at time `t`.
    pub fn observe(&mut self, t: f64, psi: &SpectralField) -> Result<&DiagnosticsRecord> {
        let m = self.mass_at(t);
        let a = approx::solve_with(m, self.eps, &self.cfg, self.last.as_ref())?;
        let rec = diagnose(t, psi, &a, self.prev_gamma)?;
        self.prev_gamma = rec.gamma;
        self.last = Some(a);
        self.records.push(rec);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Most recent corrected profile.
    pub fn current_profile(&self) -> Option<&ApproxProfile> {
        self.last.as_ref()
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    /// The records with γ̇ filled in.
    pub fn finish(mut self) -> Vec<DiagnosticsRecord> {
        fill_gamma_dot(&mut self.records);
        self.records
    }
}

/// Second-order derivative at the middle of three possibly unequal steps.
fn centered(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    (h0 * h0 * f[2] - h1 * h1 * f[0] + (h1 * h1 - h0 * h0) * f[1]) / (h0 * h1 * (h0 + h1))
}

/// Sets γ̇ at interior samples by centered differences.
pub fn fill_gamma_dot(records: &mut [DiagnosticsRecord]) {
    let n = records.len();
    for i in 0..n {
        records[i].gamma_dot = if i == 0 || i + 1 == n {
            None
        } else {
            Some(centered(
                [records[i - 1].t, records[i].t, records[i + 1].t],
                [records[i - 1].gamma, records[i].gamma, records[i + 1].gamma],
            ))
        };
    }
}

fn need(records: &[DiagnosticsRecord], n: usize) -> Result<()> {
    if records.len() < n {
        return Err(Error::InsufficientSamples { needed: n, got: records.len() });
    }
    Ok(())
}

/// max over interior samples of |Δℒ/Δt - dℒ/dt|, with Δℒ/Δt the centered
/// difference of the sampled ℒ and dℒ/dt the closed form.
pub fn lyapunov_time_derivative_check(records: &[DiagnosticsRecord]) -> Result<f64> {
    need(records, 3)?;
    Ok(records
        .windows(3)
        .map(|w| {
            let fd = centered([w[0].t, w[1].t, w[2].t], [w[0].lyap, w[1].lyap, w[2].lyap]);
            (fd - w[1].lyap_rate).abs()
        })
        .fold(0.0, f64::max))
}

/// (max |ω - γ̇|/(ε + ‖ξ‖_{H¹}), max |λ_{m,ε} - γ̇|/(ε + ‖η‖_{H¹})) over
/// interior samples.
pub fn rate_estimates(records: &[DiagnosticsRecord], eps: f64) -> Result<(f64, f64)> {
    need(records, 3)?;
    let mut r = records.to_vec();
    fill_gamma_dot(&mut r);
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let mut out = (0.0f64, 0.0f64);
    for rec in &r {
        if let Some(gd) = rec.gamma_dot {
            out.0 = out.0.max(ratio((rec.omega - gd).abs(), eps + rec.xi_h1));
            out.1 = out.1.max(ratio((rec.lambda_eps - gd).abs(), eps + rec.eta_h1));
        }
    }
    Ok(out)
}

/// Summary of one damped trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub m0: f64,
    pub eps: f64,
    pub t_end: f64,
    pub samples: usize,
    /// sup_t e^{εt}‖ξ‖_{H¹}.
    pub sup_xi: f64,
    /// sup_t e^{εt}‖ξ‖_{H¹} / √ε.
    pub sup_xi_scaled: f64,
    /// sup_t e^{εt}‖η‖_{H¹}.
    pub sup_eta: f64,
    pub eta0_h1: f64,
    /// N(0) with N(t) = e^{εt}√ℒ_{m,ε}.
    pub envelope_n0: f64,
    /// Smallest K with N(t) ≤ K(N(0) + ε²t) at every sample.
    pub envelope_k: f64,
    /// min ℒ/‖ξ‖²_{H¹} over in-window samples with ξ ≠ 0.
    pub min_coercivity_ratio: f64,
    pub out_of_window: usize,
    pub max_xi_orthogonality: f64,
    pub max_xi_mass_defect: f64,
    pub max_eta_mass_defect: f64,
    /// max |(η, iQ_{m,ε})|/(ε√m‖η‖).
    pub max_eta_orthogonality_constant: f64,
    pub max_l2_ratio: f64,
    pub omega_rate: f64,
    pub lambda_rate: f64,
}

/// Envelope N(t) = e^{εt}√max(ℒ_{m,ε}, 0).
pub fn envelope(rec: &DiagnosticsRecord, eps: f64) -> f64 {
    (eps * rec.t).exp() * rec.lyap_eps.max(0.0).sqrt()
}

pub fn decay_report(records: &[DiagnosticsRecord], eps: f64, m0: f64) -> Result<StabilityReport> {
    need(records, 3)?;
    let first = &records[0];
    let n0 = envelope(first, eps);
    let mut r = StabilityReport {
        m0,
        eps,
        t_end: records.last().map(|r| r.t).unwrap_or(0.0),
        samples: records.len(),
        sup_xi: 0.0,
        sup_xi_scaled: 0.0,
        sup_eta: 0.0,
        eta0_h1: first.eta_h1,
        envelope_n0: n0,
        envelope_k: 0.0,
        min_coercivity_ratio: f64::INFINITY,
        out_of_window: 0,
        max_xi_orthogonality: 0.0,
        max_xi_mass_defect: 0.0,
        max_eta_mass_defect: 0.0,
        max_eta_orthogonality_constant: 0.0,
        max_l2_ratio: 0.0,
        omega_rate: 0.0,
        lambda_rate: 0.0,
    };
    for rec in records {
        let grow = (eps * rec.t).exp();
        r.sup_xi = r.sup_xi.max(grow * rec.xi_h1);
        r.sup_eta = r.sup_eta.max(grow * rec.eta_h1);
        let bound = n0 + eps * eps * rec.t;
        if bound > 0.0 {
            r.envelope_k = r.envelope_k.max(envelope(rec, eps) / bound);
        }
        if rec.in_window {
            if rec.xi_h1 > 0.0 {
                r.min_coercivity_ratio = r.min_coercivity_ratio.min(rec.lyap / (rec.xi_h1 * rec.xi_h1));
            }
        } else {
            r.out_of_window += 1;
        }
        r.max_xi_orthogonality = r.max_xi_orthogonality.max(rec.xi_orthogonality());
        r.max_xi_mass_defect = r.max_xi_mass_defect.max(rec.xi_q_defect.abs());
        r.max_eta_mass_defect = r.max_eta_mass_defect.max(rec.eta_q_defect.abs());
        r.max_eta_orthogonality_constant =
            r.max_eta_orthogonality_constant.max(rec.eta_orthogonality_constant(eps));
        r.max_l2_ratio = r.max_l2_ratio.max(rec.xi_l2 / rec.q_l2);
    }
    r.sup_xi_scaled = if eps > 0.0 { r.sup_xi / eps.sqrt() } else { f64::INFINITY };
    let (a, b) = rate_estimates(records, eps)?;
    r.omega_rate = a;
    r.lambda_rate = b;
    Ok(r)
}

/// Unit-H¹ field Σ c_j cos((2j+1)x), j < 6, with complex c_j drawn
/// uniformly from [-1, 1]² by a ChaCha generator seeded with `seed`.
pub fn seeded_perturbation(n_grid: usize, seed: u64) -> Result<SpectralField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, Complex64)> = (0..PERTURBATION_MODES)
        .map(|j| ((2 * j + 1) as f64, Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))))
        .collect();
    let v = SpectralField::from_fn(n_grid, Sector::Aplus, |x| {
        coeffs.iter().map(|&(n, c)| c * (n * x).cos()).sum()
    })?;
    let norm = v.h1_norm();
    Ok(&v * (1.0 / norm))
}

/// Q_{m₀} + amp·v rescaled to mass m₀, with v from [`seeded_perturbation`].
pub fn perturbed_initial(p: &CnoidalProfile, amp: f64, seed: u64) -> Result<SpectralField> {
    if amp == 0.0 {
        return Ok(p.field.clone());
    }
    let v = seeded_perturbation(p.n_grid(), seed)?;
    let psi = p.field.axpy(1.0, &(&v * amp));
    let s = (p.m / profiles::mass(&psi)).sqrt();
    Ok(&psi * s)
}
