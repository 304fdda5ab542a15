//! Jacobi elliptic functions and complete elliptic integrals.
//!
//! Complete integrals come from the arithmetic-geometric mean, the functions
//! sn, cn, dn from the descending Landen transformation, and the incomplete
//! second-kind integral from Carlson's symmetric forms.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest admissible modulus after clamping.
pub const K_MIN: f64 = 1e-8;
/// Largest admissible modulus after clamping.
pub const K_MAX: f64 = 1.0 - 1e-8;

const MAX_ITER: usize = 40;
const ITER_TOL: f64 = 1e-15;

/// Default step for Richardson-extrapolated derivatives.
pub const RICHARDSON_STEP: f64 = 1e-4;

/// Elliptic modulus k, restricted to `[K_MIN, K_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Modulus<T>(T);

impl<T: Scalar> Modulus<T> {
    /// Accepts any k in (0,1) and clamps it into the working range.
    pub fn new(k: T) -> Result<Self> {
        if !(k > T::zero() && k < T::one()) {
            return Err(Error::Domain(format!("modulus {k} outside (0,1)")));
        }
        Ok(Self(k.max(k_min()).min(k_max())))
    }

    pub fn value(self) -> T {
        self.0
    }

    /// k' = sqrt(1 - k^2), computed without cancellation.
    pub fn complementary(self) -> T {
        ((T::one() - self.0) * (T::one() + self.0)).sqrt()
    }
}

/// Complete integrals K, E and the auxiliary Θ = (E - (1-k²)K)/k².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticValues<T> {
    pub k: T,
    pub e: T,
    pub theta: T,
}

/// sn, cn, dn and the (continuous) amplitude am.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiValues<T> {
    pub sn: T,
    pub cn: T,
    pub dn: T,
    pub am: T,
}

/// Lower clamp bound in the precision of `T`.
pub fn k_min<T: Scalar>() -> T {
    T::lit(K_MIN)
}

/// Upper clamp bound in the precision of `T`, kept strictly below one.
pub fn k_max<T: Scalar>() -> T {
    T::lit(K_MAX).min(T::one() - T::epsilon())
}

fn iter_tol<T: Scalar>() -> T {
    T::lit(ITER_TOL).max(T::epsilon())
}

/// K, E and Θ from one AGM sweep.
///
/// Θ is accumulated directly from the AGM defects so that it keeps full
/// relative accuracy as k tends to zero.
pub fn elliptic_values<T: Scalar>(k: Modulus<T>) -> EllipticValues<T> {
    let kv = k.value();
    let kp = k.complementary();
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let half = T::lit(0.5);

    // d_n = c_n / k with c_1 = (1 - k')/2.
    let mut d = kv / (two * (T::one() + kp));
    let mut a = (T::one() + kp) * half;
    let mut b = kp.sqrt();
    let mut weight = T::one();
    let mut sum = d * d;
    let tol = iter_tol::<T>();
    for _ in 0..MAX_ITER {
        if (a - b).abs() <= tol * a {
            break;
        }
        let a_next = (a + b) * half;
        b = (a * b).sqrt();
        a = a_next;
        d = kv * d * d / (four * a);
        weight = weight * two;
        sum = sum + weight * d * d;
    }
    let k_int = T::FRAC_PI_2() / a;
    let theta = k_int * (half - sum);
    let e = kv * kv * theta + kp * kp * k_int;
    EllipticValues { k: k_int, e, theta }
}

/// Complete integral of the first kind.
pub fn complete_k<T: Scalar>(k: Modulus<T>) -> T {
    elliptic_values(k).k
}

/// Complete integral of the second kind.
pub fn complete_e<T: Scalar>(k: Modulus<T>) -> T {
    elliptic_values(k).e
}

/// Θ(k) = (E + (k² - 1)K)/k².
pub fn theta<T: Scalar>(k: Modulus<T>) -> T {
    elliptic_values(k).theta
}

fn landen<T: Scalar>(u: T, k: Modulus<T>) -> JacobiValues<T> {
    let kv = k.value();
    let tol = iter_tol::<T>();
    let half = T::lit(0.5);
    let mut a = [T::one(); MAX_ITER + 1];
    let mut c = [T::zero(); MAX_ITER + 1];
    c[0] = kv;
    let mut b = k.complementary();
    let mut n = 0;
    while n < MAX_ITER && c[n] > tol * a[n] {
        let a_next = (a[n] + b) * half;
        b = (a[n] * b).sqrt();
        c[n + 1] = c[n] * c[n] / (T::lit(4.0) * a_next);
        a[n + 1] = a_next;
        n += 1;
    }
    let kp = k.complementary();
    // dn² = k'² + k²cn² has no cancellation, unlike the Landen quotient
    // which degenerates to 0/0 at u = ±K.
    let dn_of = |cn: T| (kp * kp + kv * kv * cn * cn).sqrt();
    if n == 0 {
        let (s, co) = u.sin_cos();
        return JacobiValues { sn: s, cn: co, dn: dn_of(co), am: u };
    }
    let step = |j: usize, phi: T| (phi + (c[j] / a[j] * phi.sin()).asin()) * half;
    let mut prev = T::lit(2f64.powi(n as i32)) * a[n] * u;
    for j in (2..=n).rev() {
        prev = step(j, prev);
    }
    let phi = step(1, prev);
    let (sn, cn) = phi.sin_cos();
    JacobiValues { sn, cn, dn: dn_of(cn), am: phi }
}

/// Simultaneous sn, cn, dn, am at real argument `u`.
///
/// The argument is reduced to [-K, K] using the half period 2K, and the
/// amplitude is continued by am(u + 2K) = am(u) + π.
pub fn jacobi<T: Scalar>(u: T, k: Modulus<T>) -> JacobiValues<T> {
    let big_k = complete_k(k);
    jacobi_with_k(u, k, big_k)
}

/// As [`jacobi`] with a precomputed K(k).
pub fn jacobi_with_k<T: Scalar>(u: T, k: Modulus<T>, big_k: T) -> JacobiValues<T> {
    let half_period = T::lit(2.0) * big_k;
    let j = (u / half_period).round();
    let r = u - j * half_period;
    let v = landen(r, k);
    let odd = (j.to_i64().unwrap_or(0) & 1) == 1;
    let sign = if odd { -T::one() } else { T::one() };
    JacobiValues {
        sn: sign * v.sn,
        cn: sign * v.cn,
        dn: v.dn,
        am: v.am + j * T::PI(),
    }
}

/// Returns (cn, sn, dn).
pub fn jacobi_cn_sn_dn<T: Scalar>(u: T, k: Modulus<T>) -> (T, T, T) {
    let v = jacobi(u, k);
    (v.cn, v.sn, v.dn)
}

/// Carlson's symmetric integral R_F(x, y, z).
pub fn carlson_rf<T: Scalar>(x: T, y: T, z: T) -> T {
    let errtol = T::lit(0.3) * T::epsilon().powf(T::lit(1.0 / 6.0));
    let quarter = T::lit(0.25);
    let third = T::lit(1.0 / 3.0);
    let (mut x, mut y, mut z) = (x, y, z);
    let (mut ave, mut dx, mut dy, mut dz);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = quarter * (x + lambda);
        y = quarter * (y + lambda);
        z = quarter * (z + lambda);
        ave = third * (x + y + z);
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < errtol {
            break;
        }
    }
    let e2 = dx * dy - dz * dz;
    let e3 = dx * dy * dz;
    (T::one() + (T::lit(1.0 / 24.0) * e2 - T::lit(0.1) - T::lit(3.0 / 44.0) * e3) * e2
        + T::lit(1.0 / 14.0) * e3)
        / ave.sqrt()
}

/// Carlson's degenerate integral R_D(x, y, z).
pub fn carlson_rd<T: Scalar>(x: T, y: T, z: T) -> T {
    let errtol = T::lit(0.2) * T::epsilon().powf(T::lit(1.0 / 6.0));
    let c1 = T::lit(3.0 / 14.0);
    let c2 = T::lit(1.0 / 6.0);
    let c3 = T::lit(9.0 / 22.0);
    let c4 = T::lit(3.0 / 26.0);
    let c5 = T::lit(0.25) * c3;
    let c6 = T::lit(1.5) * c4;
    let quarter = T::lit(0.25);
    let (mut x, mut y, mut z) = (x, y, z);
    let mut sum = T::zero();
    let mut fac = T::one();
    let (mut ave, mut dx, mut dy, mut dz);
    loop {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        sum = sum + fac / (sz * (z + lambda));
        fac = quarter * fac;
        x = quarter * (x + lambda);
        y = quarter * (y + lambda);
        z = quarter * (z + lambda);
        ave = T::lit(0.2) * (x + y + T::lit(3.0) * z);
        dx = (ave - x) / ave;
        dy = (ave - y) / ave;
        dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) < errtol {
            break;
        }
    }
    let ea = dx * dy;
    let eb = dz * dz;
    let ec = ea - eb;
    let ed = ea - T::lit(6.0) * eb;
    let ee = ed + ec + ec;
    T::lit(3.0) * sum
        + fac
            * (T::one()
                + ed * (-c1 + c5 * ed - c6 * dz * ee)
                + dz * (c2 * ee + dz * (-c3 * ec + dz * c4 * ea)))
            / (ave * ave.sqrt())
}

fn reduce_amplitude<T: Scalar>(phi: T) -> (T, T) {
    let n = (phi / T::PI()).round();
    (n, phi - n * T::PI())
}

/// Incomplete integral of the first kind F(φ, k), any real φ.
pub fn incomplete_f<T: Scalar>(phi: T, k: Modulus<T>) -> T {
    let (n, r) = reduce_amplitude(phi);
    let kv = k.value();
    let (s, c) = r.sin_cos();
    let q = T::one() - kv * kv * s * s;
    let base = s * carlson_rf(c * c, q, T::one());
    base + T::lit(2.0) * n * complete_k(k)
}

/// Incomplete integral of the second kind E(φ, k), any real φ.
pub fn incomplete_e<T: Scalar>(phi: T, k: Modulus<T>) -> T {
    incomplete_e_with(phi, k, complete_e(k))
}

/// As [`incomplete_e`] with a precomputed complete E(k).
pub fn incomplete_e_with<T: Scalar>(phi: T, k: Modulus<T>, big_e: T) -> T {
    let (n, r) = reduce_amplitude(phi);
    let kv = k.value();
    let k2 = kv * kv;
    let (s, c) = r.sin_cos();
    let q = T::one() - k2 * s * s;
    let one = T::one();
    let base = s * carlson_rf(c * c, q, one) - k2 / T::lit(3.0) * s * s * s * carlson_rd(c * c, q, one);
    base + T::lit(2.0) * n * big_e
}

/// dK/dk = (E - (1-k²)K)/(k(1-k²)) = kΘ/(1-k²).
pub fn dk_dk<T: Scalar>(k: Modulus<T>) -> T {
    let v = elliptic_values(k);
    let kv = k.value();
    kv * v.theta / ((T::one() - kv) * (T::one() + kv))
}

/// dE/dk = (E - K)/k = k(Θ - K).
pub fn de_dk<T: Scalar>(k: Modulus<T>) -> T {
    let v = elliptic_values(k);
    k.value() * (v.theta - v.k)
}

/// d/dk [E + (k² - 1)K] = kK.
pub fn d_mass_combination_dk<T: Scalar>(k: Modulus<T>) -> T {
    k.value() * complete_k(k)
}

/// ∂cn/∂k at fixed argument x.
///
/// The second-kind integral in this formula is the incomplete one,
/// E(am(x, k), k); with the complete integral the expression is not a
/// derivative of cn.
pub fn dcn_dk<T: Scalar>(x: T, k: Modulus<T>) -> T {
    let v = elliptic_values(k);
    let j = jacobi_with_k(x, k, v.k);
    dcn_dk_with(x, k, &v, &j)
}

/// As [`dcn_dk`] reusing already evaluated elliptic data at (x, k).
pub fn dcn_dk_with<T: Scalar>(x: T, k: Modulus<T>, v: &EllipticValues<T>, j: &JacobiValues<T>) -> T {
    let kv = k.value();
    let k2 = kv * kv;
    let kp2 = (T::one() - kv) * (T::one() + kv);
    let inc_e = incomplete_e_with(j.am, k, v.e);
    let bracket = -kp2 * x + inc_e - k2 * j.sn * j.cn / j.dn;
    j.sn * j.dn / (kv * kp2) * bracket
}

/// ∂sn/∂x and friends: returns (∂ₓcn, ∂ₓsn, ∂ₓdn).
pub fn jacobi_dx<T: Scalar>(j: &JacobiValues<T>, k: Modulus<T>) -> (T, T, T) {
    let k2 = k.value() * k.value();
    (-j.sn * j.dn, j.cn * j.dn, -k2 * j.sn * j.cn)
}

/// Richardson-extrapolated central first derivative with one level.
pub fn richardson_d1<T: Scalar, F: Fn(T) -> T>(f: F, x: T, h: T) -> T {
    let central = |h: T| (f(x + h) - f(x - h)) / (T::lit(2.0) * h);
    (T::lit(4.0) * central(h * T::lit(0.5)) - central(h)) / T::lit(3.0)
}

/// Richardson-extrapolated central second derivative with one level.
pub fn richardson_d2<T: Scalar, F: Fn(T) -> T>(f: F, x: T, h: T) -> T {
    let fx = f(x);
    let central = |h: T| (f(x + h) - T::lit(2.0) * fx + f(x - h)) / (h * h);
    (T::lit(4.0) * central(h * T::lit(0.5)) - central(h)) / T::lit(3.0)
}

/// Step used for modulus differences at k, kept inside the clamp range.
pub fn modulus_step<T: Scalar>(k: Modulus<T>, h: T) -> T {
    let kv = k.value();
    let room = (kv - k_min::<T>()).min(k_max::<T>() - kv) * T::lit(0.5);
    h.min(room)
}

/// d²K/dk² by Richardson differences of the closed-form dK/dk.
pub fn d2k_dk2<T: Scalar>(k: Modulus<T>) -> Result<T> {
    let h = modulus_step(k, T::lit(RICHARDSON_STEP));
    let f = |kk: T| Modulus::new(kk).map(dk_dk).unwrap_or_else(|_| T::nan());
    let d = richardson_d1(f, k.value(), h);
    finite_or_domain(d, "d2K/dk2")
}

/// d²E/dk² by Richardson differences of the closed-form dE/dk.
pub fn d2e_dk2<T: Scalar>(k: Modulus<T>) -> Result<T> {
    let h = modulus_step(k, T::lit(RICHARDSON_STEP));
    let f = |kk: T| Modulus::new(kk).map(de_dk).unwrap_or_else(|_| T::nan());
    let d = richardson_d1(f, k.value(), h);
    finite_or_domain(d, "d2E/dk2")
}

pub(crate) fn finite_or_domain<T: Scalar>(v: T, what: &str) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{what} not finite")))
    }
}
