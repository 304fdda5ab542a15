//! The cnoidal family Q_m = √2 k β cn(βx, k), β = 2K(k)/π, parameterized by
//! its mass m = ½‖Q‖², together with m- and k-derivatives and the
//! conserved functionals.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::{
    self, finite_or_domain, jacobi_with_k, modulus_step, richardson_d1, EllipticValues, Modulus,
    RICHARDSON_STEP,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::torus::{grid, Sector, SpectralField};

/// Default upper bound on admissible masses.
pub const M_MAX_DEFAULT: f64 = 20.0;

/// β = 2K/π.
pub fn beta<T: Scalar>(v: &EllipticValues<T>) -> T {
    T::lit(2.0) * v.k / T::PI()
}

/// m(k) = (8/π) k² K Θ.
pub fn mass_of_k<T: Scalar>(k: Modulus<T>) -> T {
    let v = elliptic::elliptic_values(k);
    let kv = k.value();
    T::lit(8.0) / T::PI() * kv * kv * v.k * v.theta
}

/// ω(k) = β²(2k² - 1).
pub fn omega_of_k<T: Scalar>(k: Modulus<T>) -> T {
    let v = elliptic::elliptic_values(k);
    let b = beta(&v);
    let kv = k.value();
    b * b * (T::lit(2.0) * kv * kv - T::one())
}

/// dm/dk = (8/π)[k⁴Θ² + k²(1-k²)K²]/(k(1-k²)).
pub fn dm_dk<T: Scalar>(k: Modulus<T>) -> T {
    let v = elliptic::elliptic_values(k);
    let kv = k.value();
    let kp2 = (T::one() - kv) * (T::one() + kv);
    T::lit(8.0) / T::PI() * kv * (kv * kv * v.theta * v.theta + kp2 * v.k * v.k) / kp2
}

/// dω/dk from ω = β²(2k² - 1) and dβ/dk = (2/π)kΘ/(1-k²).
pub fn domega_dk<T: Scalar>(k: Modulus<T>) -> T {
    let v = elliptic::elliptic_values(k);
    let kv = k.value();
    let kp2 = (T::one() - kv) * (T::one() + kv);
    let b = beta(&v);
    let db = T::lit(2.0) / T::PI() * kv * v.theta / kp2;
    let two = T::lit(2.0);
    two * b * db * (two * kv * kv - T::one()) + T::lit(4.0) * kv * b * b
}

/// dω/dm = (dω/dk)/(dm/dk).
pub fn domega_dm<T: Scalar>(k: Modulus<T>) -> T {
    domega_dk(k) / dm_dk(k)
}

/// d²m/dk² by Richardson differences of the closed-form dm/dk.
pub fn d2m_dk2<T: Scalar>(k: Modulus<T>) -> Result<T> {
    let h = modulus_step(k, T::lit(RICHARDSON_STEP));
    let f = |kk: T| Modulus::new(kk).map(dm_dk).unwrap_or_else(|_| T::nan());
    finite_or_domain(richardson_d1(f, k.value(), h), "d2m/dk2")
}

/// Inverts m(k) = m by safeguarded Newton on a bisection bracket.
pub fn k_of_m<T: Scalar>(m: T, m_max: T) -> Result<Modulus<T>> {
    if !(m > T::zero()) || m > m_max {
        return Err(Error::Domain(format!("mass {m} outside (0, {m_max}]")));
    }
    let mut lo = elliptic::k_min::<T>();
    let mut hi = elliptic::k_max::<T>();
    let hi_mass = mass_of_k(Modulus::new(hi)?);
    if m > hi_mass {
        return Err(Error::Domain(format!("mass {m} exceeds m(k_max) = {hi_mass}")));
    }
    if m <= mass_of_k(Modulus::new(lo)?) {
        return Modulus::new(lo);
    }
    let tol = T::lit(1e-12).max(T::lit(8.0) * T::epsilon()) * m.max(T::one());
    let mut k = (m / T::PI()).sqrt().max(lo).min(hi);
    for _ in 0..200 {
        let km = Modulus::new(k)?;
        let f = mass_of_k(km) - m;
        if f.abs() <= tol {
            return Ok(km);
        }
        if f > T::zero() {
            hi = k;
        } else {
            lo = k;
        }
        let newton = k - f / dm_dk(km);
        k = if newton > lo && newton < hi { newton } else { (lo + hi) * T::lit(0.5) };
        if hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    let km = Modulus::new(k)?;
    if (mass_of_k(km) - m).abs() <= tol * T::lit(16.0) {
        Ok(km)
    } else {
        Err(Error::Domain(format!("could not invert mass {m}")))
    }
}

/// ω(m) through k(m).
pub fn omega_of_m<T: Scalar>(m: T, m_max: T) -> Result<T> {
    Ok(omega_of_k(k_of_m(m, m_max)?))
}

/// A sampled cnoidal profile with its parameters.
#[derive(Debug, Clone)]
pub struct CnoidalProfile {
    pub m: f64,
    pub k: Modulus<f64>,
    pub omega: f64,
    pub values: EllipticValues<f64>,
    pub field: SpectralField,
}

/// Derivatives of the profile with respect to the mass.
#[derive(Debug, Clone)]
pub struct ProfileDerivatives {
    pub dq_dm: SpectralField,
    pub d2q_dm2: SpectralField,
    pub domega_dm: f64,
    pub dm_dk: f64,
}

fn profile_samples(k: Modulus<f64>, v: &EllipticValues<f64>, n: usize) -> Vec<f64> {
    let b = beta(v);
    let amp = 2f64.sqrt() * k.value() * b;
    grid(n).into_iter().map(|x| amp * jacobi_with_k(b * x, k, v.k).cn).collect()
}

/// Q_m sampled on an `n_grid`-point grid.
pub fn build_profile(m: f64, n_grid: usize) -> Result<CnoidalProfile> {
    build_profile_with(m, n_grid, M_MAX_DEFAULT)
}

/// As [`build_profile`] with an explicit mass bound.
pub fn build_profile_with(m: f64, n_grid: usize, m_max: f64) -> Result<CnoidalProfile> {
    let k = k_of_m(m, m_max)?;
    build_profile_k(k, n_grid).map(|mut p| {
        p.m = m;
        p
    })
}

/// Q_k sampled on an `n_grid`-point grid, with m = m(k).
pub fn build_profile_k(k: Modulus<f64>, n_grid: usize) -> Result<CnoidalProfile> {
    if n_grid < 64 {
        return Err(Error::Domain(format!("grid size {n_grid} below 64")));
    }
    let values = elliptic::elliptic_values(k);
    let field = SpectralField::from_real_samples(&profile_samples(k, &values, n_grid), Sector::Aplus)?;
    Ok(CnoidalProfile { m: mass_of_k(k), k, omega: omega_of_k(k), values, field })
}

impl CnoidalProfile {
    pub fn n_grid(&self) -> usize {
        self.field.n_grid()
    }

    pub fn beta(&self) -> f64 {
        beta(&self.values)
    }

    /// Q(0) = √2 k β.
    pub fn amplitude(&self) -> f64 {
        2f64.sqrt() * self.k.value() * self.beta()
    }

    /// ‖-Q'' + ωQ - Q³‖.
    pub fn stationary_residual(&self) -> f64 {
        let q = &self.field;
        let q2 = q.derivative(2).expect("order 2");
        let q3 = q.map(Sector::Aplus, |c| c * c * c);
        (&(&(q * self.omega) - &q2) - &q3).l2_norm()
    }

    pub fn derivatives(&self) -> Result<ProfileDerivatives> {
        Ok(ProfileDerivatives {
            dq_dm: dq_dm(self),
            d2q_dm2: d2q_dm2(self)?,
            domega_dm: domega_dm(self.k),
            dm_dk: dm_dk(self.k),
        })
    }
}

fn dq_dk_samples(k: Modulus<f64>, v: &EllipticValues<f64>, n: usize) -> Vec<f64> {
    let kv = k.value();
    let kp2 = (1.0 - kv) * (1.0 + kv);
    let b = beta(v);
    // k·dβ/dk
    let kdb = 2.0 / PI * kv * kv * v.theta / kp2;
    let s2 = 2f64.sqrt();
    grid(n)
        .into_iter()
        .map(|x| {
            let y = b * x;
            let j = jacobi_with_k(y, k, v.k);
            let dcn_dy = -j.sn * j.dn;
            let dcn_dk = elliptic::dcn_dk_with(y, k, v, &j);
            s2 * (b * j.cn + kdb * j.cn + kdb * y * dcn_dy + kv * b * dcn_dk)
        })
        .collect()
}

/// ∂Q_k/∂k in closed form.
///
/// (1/√2)∂ₖQ = β cn + kβ' cn + kβ' y ∂_y cn + kβ ∂ₖcn, with y = βx and
/// kβ' = (2/π)k²Θ/(1-k²).
pub fn dq_dk(p: &CnoidalProfile) -> SpectralField {
    dq_dk_at(p.k, p.n_grid()).expect("grid already validated")
}

/// ∂Q_k/∂k at modulus `k`.
pub fn dq_dk_at(k: Modulus<f64>, n_grid: usize) -> Result<SpectralField> {
    let v = elliptic::elliptic_values(k);
    SpectralField::from_real_samples(&dq_dk_samples(k, &v, n_grid), Sector::Aplus)
}

/// ∂²Q_k/∂k² by Richardson differences of the closed-form ∂ₖQ.
pub fn d2q_dk2(p: &CnoidalProfile) -> Result<SpectralField> {
    let n = p.n_grid();
    let kv = p.k.value();
    let h = modulus_step(p.k, RICHARDSON_STEP);
    let at = |kk: f64| -> Result<Vec<f64>> {
        let km = Modulus::new(kk)?;
        Ok(dq_dk_samples(km, &elliptic::elliptic_values(km), n))
    };
    let (p1, m1) = (at(kv + h)?, at(kv - h)?);
    let (p2, m2) = (at(kv + 0.5 * h)?, at(kv - 0.5 * h)?);
    let samples: Vec<f64> = (0..n)
        .map(|j| {
            let coarse = (p1[j] - m1[j]) / (2.0 * h);
            let fine = (p2[j] - m2[j]) / h;
            (4.0 * fine - coarse) / 3.0
        })
        .collect();
    SpectralField::from_real_samples(&samples, Sector::Aplus)
}

/// ∂Q_m/∂m = ∂ₖQ / (dm/dk).
pub fn dq_dm(p: &CnoidalProfile) -> SpectralField {
    dq_dk(p) * (1.0 / dm_dk(p.k))
}

/// ∂²Q_m/∂m² = [∂ₖₖQ - ∂ₖQ m''/m'] / m'².
pub fn d2q_dm2(p: &CnoidalProfile) -> Result<SpectralField> {
    let m1 = dm_dk(p.k);
    let m2 = d2m_dk2(p.k)?;
    let qk = dq_dk(p);
    let qkk = d2q_dk2(p)?;
    Ok(qk.axpy(-m2 / m1, &qkk) * (1.0 / (m1 * m1)))
}

/// M[f] = ½∫|f|².
pub fn mass(f: &SpectralField) -> f64 {
    0.5 * f.l2_norm_sq()
}

/// E[f] = ∫ ½|f'|² - ¼|f|⁴.
pub fn energy(f: &SpectralField) -> f64 {
    let d = f.derivative(1).expect("order 1");
    0.5 * d.l2_norm_sq() - 0.25 * f.l4_norm_pow4()
}

/// S_m[f] = E[f] + ω(m) M[f].
pub fn action(f: &SpectralField, m: f64) -> Result<f64> {
    let omega = omega_of_m(m, M_MAX_DEFAULT)?;
    Ok(action_with_omega(f, omega))
}

/// E[f] + ω M[f] for a given frequency.
pub fn action_with_omega(f: &SpectralField, omega: f64) -> f64 {
    energy(f) + omega * mass(f)
}

/// |f|² f as a field in the sector of `f` (valid for A-type and S sectors).
pub fn cubic(f: &SpectralField) -> SpectralField {
    f.map(f.sector(), |c| c * c.norm_sqr())
}

/// Real field with samples `v`, tagged `sector` after projection.
pub fn real_field(v: &[f64], sector: Sector) -> Result<SpectralField> {
    SpectralField::from_samples(v.iter().map(|&x| Complex64::new(x, 0.0)).collect(), sector)
}
