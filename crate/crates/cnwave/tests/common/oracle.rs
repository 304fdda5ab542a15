//! Reference values computed by direct quadrature, independent of the
//! library's AGM and Carlson code paths.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn incomplete_f(phi: f64, k: f64) -> f64 {
    adaptive_simpson(|t| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, phi, 1e-14)
}

pub fn incomplete_e(phi: f64, k: f64) -> f64 {
    adaptive_simpson(|t| (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, phi, 1e-14)
}

pub fn complete_k(k: f64) -> f64 {
    incomplete_f(FRAC_PI_2, k)
}

pub fn complete_e(k: f64) -> f64 {
    incomplete_e(FRAC_PI_2, k)
}

/// Jacobi amplitude by bisection on F(φ) = u, using F(φ) ∈ [φ, φ/k'].
pub fn amplitude(u: f64, k: f64) -> f64 {
    if u < 0.0 {
        return -amplitude(-u, k);
    }
    let kp = (1.0 - k * k).sqrt();
    let (mut lo, mut hi) = (u * kp, u);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if incomplete_f(mid, k) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// (sn, cn, dn) from the bisected amplitude.
pub fn jacobi(u: f64, k: f64) -> (f64, f64, f64) {
    let phi = amplitude(u, k);
    let s = phi.sin();
    (s, phi.cos(), (1.0 - k * k * s * s).sqrt())
}

/// Central difference of `f` at `x`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// ∫₀^{2π} of a periodic integrand by the trapezoid rule on `n` points.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|j| f(j as f64 * h)).sum::<f64>() * h
}
