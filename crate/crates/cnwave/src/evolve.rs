//! Strang-split Fourier integrator for the damped cubic NLS.
//!
//! The linear substep applies exp((-i n² - ε)τ) mode by mode, the nonlinear
//! substep ψ ← exp(i|ψ|²τ)ψ pointwise. Both act on |ψ| exactly, so the mass
//! obeys M(t) = e^{-2εt} M(0) to rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::torus::{check_grid, fft_plans, mode_of_index, Sector, SpectralField};

pub const DT_MAX: f64 = 0.1;
/// Cap on εT, beyond which the solution has decayed below any useful level.
pub const DECAY_HORIZON: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_grid: usize,
    /// Observer cadence in steps.
    pub sample_every: usize,
    /// Re-project onto the initial sector after every step.
    pub sector_projection: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { eps: 0.0, dt: 1e-3, t_end: 1.0, n_grid: 256, sample_every: 10, sector_projection: false }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        check_grid(self.n_grid)?;
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!("eps = {} must be finite and non-negative", self.eps)));
        }
        if !(self.dt > 0.0 && self.dt <= DT_MAX) {
            return Err(Error::Config(format!("dt = {} must lie in (0, {DT_MAX}]", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be finite and non-negative", self.t_end)));
        }
        if self.t_end * self.eps > DECAY_HORIZON {
            return Err(Error::Config(format!("t_end*eps = {} exceeds {DECAY_HORIZON}", self.t_end * self.eps)));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps, t_end/dt rounded to the nearest integer.
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Stepper with precomputed half-step phases.
///
/// The state is held as the Fourier coefficients of φ = e^{εt}ψ, which
/// solves iφ_t + φ_xx + e^{-2εt}|φ|²φ = 0; the Strang step for ψ maps to
/// the same step for φ with the nonlinear phase evaluated at the
/// midpoint mass factor. Applying e^{-εt} only on output keeps rounding
/// in the damping factor from accumulating.
///
/// Every substep preserves ‖φ‖ exactly; the FFT round trip does not, by a
/// systematic ~1e-16 per step. The coefficient norm is therefore restored
/// after each round trip (Parseval), and the largest relative correction
/// is kept in [`Stepper::max_norm_correction`].
pub struct Stepper {
    dt: f64,
    eps: f64,
    half: Vec<Complex64>,
    sector: Option<Sector>,
    coeffs: Vec<Complex64>,
    samples: Vec<Complex64>,
    out_sector: Sector,
    steps: usize,
    max_correction: f64,
}

impl Stepper {
    pub fn new(psi0: &SpectralField, cfg: &EvolveConfig) -> Result<Self> {
        cfg.validate()?;
        let n = psi0.n_grid();
        if n != cfg.n_grid {
            return Err(Error::DimensionMismatch { left: n, right: cfg.n_grid });
        }
        let half = (0..n)
            .map(|j| {
                let m = mode_of_index(j, n) as f64;
                Complex64::cis(-0.5 * m * m * cfg.dt)
            })
            .collect();
        let sector = cfg.sector_projection.then(|| psi0.sector());
        let out_sector = sector.unwrap_or(Sector::Full);
        Ok(Self {
            dt: cfg.dt,
            eps: cfg.eps,
            half,
            sector,
            coeffs: psi0.coeffs().to_vec(),
            samples: vec![Complex64::new(0.0, 0.0); n],
            out_sector,
            steps: 0,
            max_correction: 0.0,
        })
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.coeffs.len();
        let (fwd, inv) = fft_plans(n);
        for (c, h) in self.coeffs.iter_mut().zip(&self.half) {
            *c *= h;
        }
        let norm_before = norm_sq(&self.coeffs);
        self.samples.copy_from_slice(&self.coeffs);
        inv.process(&mut self.samples);
        let t_mid = (self.steps as f64 + 0.5) * self.dt;
        let strength = (-2.0 * self.eps * t_mid).exp() * self.dt;
        let mut finite = true;
        for u in self.samples.iter_mut() {
            let phase = u.norm_sqr() * strength;
            finite &= phase.is_finite();
            *u *= Complex64::cis(phase);
        }
        self.steps += 1;
        if !finite {
            return Err(Error::NonFinite { step: self.steps });
        }
        self.coeffs.copy_from_slice(&self.samples);
        fwd.process(&mut self.coeffs);
        let scale = 1.0 / n as f64;
        for (c, h) in self.coeffs.iter_mut().zip(&self.half) {
            *c *= h * scale;
        }
        if let Some(s) = self.sector {
            let projected = SpectralField::from_coeffs(std::mem::take(&mut self.coeffs), s)?;
            self.coeffs = projected.coeffs().to_vec();
        }
        let norm_after = norm_sq(&self.coeffs);
        if norm_after > 0.0 {
            let r = (norm_before / norm_after).sqrt();
            self.max_correction = self.max_correction.max((r - 1.0).abs());
            self.coeffs.iter_mut().for_each(|c| *c *= r);
        }
        Ok(())
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Largest relative norm restoration applied so far.
    pub fn max_norm_correction(&self) -> f64 {
        self.max_correction
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Current state ψ. Tagged with the initial sector when re-projecting,
    /// `Full` otherwise.
    pub fn state(&self) -> Result<SpectralField> {
        let damp = (-self.eps * self.time()).exp();
        SpectralField::from_coeffs(self.coeffs.iter().map(|c| c * damp).collect(), self.out_sector)
    }
}

fn norm_sq(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum()
}

/// One Strang step of size `cfg.dt`.
pub fn step(psi: &SpectralField, cfg: &EvolveConfig) -> Result<SpectralField> {
    let mut s = Stepper::new(psi, cfg)?;
    s.step()?;
    s.state()
}

/// Integrates to `cfg.t_end`, calling `observer(t, ψ)` at t = 0, every
/// `sample_every` steps and at the final time.
pub fn run<F>(psi0: &SpectralField, cfg: &EvolveConfig, mut observer: F) -> Result<SpectralField>
where
    F: FnMut(f64, &SpectralField) -> Result<()>,
{
    let mut s = Stepper::new(psi0, cfg)?;
    let n_steps = cfg.n_steps();
    observer(0.0, &s.state()?)?;
    for i in 1..=n_steps {
        s.step()?;
        if i % cfg.sample_every == 0 || i == n_steps {
            observer(s.time(), &s.state()?)?;
        }
    }
    s.state()
}

/// Integrates without observation.
pub fn run_silent(psi0: &SpectralField, cfg: &EvolveConfig) -> Result<SpectralField> {
    run(psi0, cfg, |_, _| Ok(()))
}

/// Observed order of accuracy from runs at dt, dt/2 and dt/4:
/// log₂(‖u_dt - u_{dt/2}‖_{H¹} / ‖u_{dt/2} - u_{dt/4}‖_{H¹}).
pub fn self_convergence_order(psi0: &SpectralField, cfg: &EvolveConfig) -> Result<f64> {
    let mut runs = Vec::with_capacity(3);
    for level in 0..3 {
        let c = EvolveConfig { dt: cfg.dt / f64::powi(2.0, level), ..cfg.clone() };
        runs.push(run_silent(psi0, &c)?);
    }
    let e1 = (&runs[0] - &runs[1]).h1_norm();
    let e2 = (&runs[1] - &runs[2]).h1_norm();
    Ok((e1 / e2).log2())
}

/// Relative deviation |M(ψ) - e^{-2εt} M(ψ₀)| / M(ψ₀).
pub fn mass_decay_defect(psi0: &SpectralField, psi: &SpectralField, eps: f64, t: f64) -> f64 {
    let m0 = 0.5 * psi0.l2_norm_sq();
    let m = 0.5 * psi.l2_norm_sq();
    (m - (-2.0 * eps * t).exp() * m0).abs() / m0
}
