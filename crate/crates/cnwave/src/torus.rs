//! Complex fields on the 2π-torus, sampled on an equispaced grid together
//! with their discrete Fourier coefficients.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Symmetry sector of a field.
///
/// `S` holds π-periodic functions, `A` half-anti-periodic ones
/// (u(x + π) = -u(x)), and `Aplus`/`Aminus` the even/odd parts of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Full,
    S,
    A,
    Aplus,
    Aminus,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Period {
    Any,
    Pi,
    AntiPi,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Parity {
    Any,
    Even,
    Odd,
}

impl Sector {
    fn classes(self) -> (Period, Parity) {
        match self {
            Sector::Full => (Period::Any, Parity::Any),
            Sector::S => (Period::Pi, Parity::Any),
            Sector::A => (Period::AntiPi, Parity::Any),
            Sector::Aplus => (Period::AntiPi, Parity::Even),
            Sector::Aminus => (Period::AntiPi, Parity::Odd),
        }
    }

    fn from_classes(period: Period, parity: Parity) -> Sector {
        match (period, parity) {
            (Period::Any, _) => Sector::Full,
            (Period::Pi, _) => Sector::S,
            (Period::AntiPi, Parity::Any) => Sector::A,
            (Period::AntiPi, Parity::Even) => Sector::Aplus,
            (Period::AntiPi, Parity::Odd) => Sector::Aminus,
        }
    }

    /// Smallest tagged sector containing every pointwise product.
    ///
    /// S carries no parity, so for instance S·A⁺ is only known to lie in A;
    /// even elements of S do map A⁺ into itself.
    pub fn product(self, other: Sector) -> Sector {
        let (p1, q1) = self.classes();
        let (p2, q2) = other.classes();
        let period = match (p1, p2) {
            (Period::Any, _) | (_, Period::Any) => Period::Any,
            (a, b) if a == b => Period::Pi,
            _ => Period::AntiPi,
        };
        let parity = match (q1, q2) {
            (Parity::Any, _) | (_, Parity::Any) => Parity::Any,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        };
        Sector::from_classes(period, parity)
    }

    /// Smallest tagged sector containing both sectors.
    pub fn join(self, other: Sector) -> Sector {
        if self == other {
            return self;
        }
        let (p1, q1) = self.classes();
        let (p2, q2) = other.classes();
        let period = if p1 == p2 { p1 } else { Period::Any };
        let parity = if q1 == q2 { q1 } else { Parity::Any };
        Sector::from_classes(period, parity)
    }

    /// Sector of the `order`-th derivative.
    pub fn derivative(self, order: u32) -> Sector {
        if order % 2 == 0 {
            return self;
        }
        match self {
            Sector::Aplus => Sector::Aminus,
            Sector::Aminus => Sector::Aplus,
            s => s,
        }
    }

    /// Whether Fourier mode `n` can carry weight in this sector.
    pub fn admits_mode(self, n: i64) -> bool {
        match self {
            Sector::Full => true,
            Sector::S => n.rem_euclid(2) == 0,
            Sector::A | Sector::Aplus | Sector::Aminus => n.rem_euclid(2) == 1,
        }
    }

    pub fn parse(s: &str) -> Option<Sector> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Some(Sector::Full),
            "s" => Some(Sector::S),
            "a" => Some(Sector::A),
            "a+" | "aplus" => Some(Sector::Aplus),
            "a-" | "aminus" => Some(Sector::Aminus),
            _ => None,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sector::Full => "full",
            Sector::S => "S",
            Sector::A => "A",
            Sector::Aplus => "A+",
            Sector::Aminus => "A-",
        };
        f.write_str(s)
    }
}

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Forward and inverse FFT plans for `n` points, shared process-wide.
pub fn fft_plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Unnormalized forward transform scaled by 1/n, so that
/// u(x_j) = Σ_n c_n e^{i n x_j}.
pub fn forward(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft_plans(n).0.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Synthesis from coefficients in FFT order.
pub fn inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    fft_plans(buf.len()).1.process(&mut buf);
    buf
}

/// Signed mode number stored at FFT index `j` of an `n`-point transform.
pub fn mode_of_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// FFT index holding mode `mode`.
pub fn index_of_mode(mode: i64, n: usize) -> usize {
    mode.rem_euclid(n as i64) as usize
}

/// Grid points x_j = 2πj/n.
pub fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

/// Checks that a grid size is usable: positive and a multiple of 4.
pub fn check_grid(n: usize) -> Result<()> {
    if n < 4 || n % 4 != 0 {
        return Err(Error::Domain(format!("grid size {n} must be a positive multiple of 4")));
    }
    Ok(())
}

fn project_coeffs(coeffs: &mut [Complex64], sector: Sector) {
    let n = coeffs.len();
    match sector {
        Sector::Full => {}
        Sector::S | Sector::A => {
            for (j, c) in coeffs.iter_mut().enumerate() {
                if !sector.admits_mode(mode_of_index(j, n)) {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
        }
        Sector::Aplus | Sector::Aminus => {
            let sign = if sector == Sector::Aplus { 1.0 } else { -1.0 };
            let orig = coeffs.to_vec();
            for j in 0..n {
                let mode = mode_of_index(j, n);
                coeffs[j] = if sector.admits_mode(mode) {
                    let mirror = orig[index_of_mode(-mode, n)];
                    0.5 * (orig[j] + sign * mirror)
                } else {
                    Complex64::new(0.0, 0.0)
                };
            }
        }
    }
}

/// A complex field on the torus held as grid samples and Fourier
/// coefficients, tagged with its symmetry sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    samples: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    sector: Sector,
}

impl SpectralField {
    /// Builds a field from samples, projecting onto `sector`.
    pub fn from_samples(samples: Vec<Complex64>, sector: Sector) -> Result<Self> {
        check_grid(samples.len())?;
        let coeffs = forward(&samples);
        Ok(Self::from_coeffs_unchecked(coeffs, sector, Some(samples)))
    }

    /// Builds a field from real samples, projecting onto `sector`.
    pub fn from_real_samples(samples: &[f64], sector: Sector) -> Result<Self> {
        Self::from_samples(samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(), sector)
    }

    /// Builds a field from coefficients in FFT order, projecting onto `sector`.
    pub fn from_coeffs(coeffs: Vec<Complex64>, sector: Sector) -> Result<Self> {
        check_grid(coeffs.len())?;
        Ok(Self::from_coeffs_unchecked(coeffs, sector, None))
    }

    fn from_coeffs_unchecked(mut coeffs: Vec<Complex64>, sector: Sector, samples: Option<Vec<Complex64>>) -> Self {
        let samples = match (sector, samples) {
            (Sector::Full, Some(s)) => s,
            _ => {
                project_coeffs(&mut coeffs, sector);
                inverse(&coeffs)
            }
        };
        Self { samples, coeffs, sector }
    }

    /// Samples `f` on the `n`-point grid.
    pub fn from_fn<F: Fn(f64) -> Complex64>(n: usize, sector: Sector, f: F) -> Result<Self> {
        Self::from_samples(grid(n).into_iter().map(f).collect(), sector)
    }

    /// Samples a real function on the `n`-point grid.
    pub fn from_real_fn<F: Fn(f64) -> f64>(n: usize, sector: Sector, f: F) -> Result<Self> {
        Self::from_fn(n, sector, |x| Complex64::new(f(x), 0.0))
    }

    pub fn zeros(n: usize, sector: Sector) -> Result<Self> {
        check_grid(n)?;
        let z = vec![Complex64::new(0.0, 0.0); n];
        Ok(Self { samples: z.clone(), coeffs: z, sector })
    }

    pub fn n_grid(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Coefficients in FFT order; see [`mode_of_index`].
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `n` (taken modulo the grid size).
    pub fn coeff(&self, mode: i64) -> Complex64 {
        self.coeffs[index_of_mode(mode, self.n_grid())]
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    /// Real parts of the samples.
    pub fn real_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.re).collect()
    }

    /// Imaginary parts of the samples.
    pub fn imag_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|c| c.im).collect()
    }

    /// Orthogonal projection onto `sector`, tagged with it.
    pub fn project(&self, sector: Sector) -> Self {
        Self::from_coeffs_unchecked(self.coeffs.clone(), sector, None)
    }

    /// Retags without projecting. Callers guarantee membership.
    pub fn with_sector(mut self, sector: Sector) -> Self {
        self.sector = sector;
        self
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.n_grid() != other.n_grid() {
            return Err(Error::DimensionMismatch { left: self.n_grid(), right: other.n_grid() });
        }
        Ok(())
    }

    /// (f, g) = Re ∫ f ḡ dx.
    pub fn l2_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        Ok(s * 2.0 * PI / self.n_grid() as f64)
    }

    /// (f, g) computed from Fourier coefficients.
    pub fn l2_inner_spectral(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        Ok(s * 2.0 * PI)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * 2.0 * PI / self.n_grid() as f64
    }

    /// (f, g)_{H¹} = (f, g) + (f', g').
    pub fn h1_inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let n = self.n_grid();
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(j, (a, b))| {
                let m = mode_of_index(j, n) as f64;
                (1.0 + m * m) * (a.re * b.re + a.im * b.im)
            })
            .sum();
        Ok(s * 2.0 * PI)
    }

    pub fn h1_norm(&self) -> f64 {
        self.h1_inner(self).unwrap_or(f64::NAN).max(0.0).sqrt()
    }

    /// Spectral derivative of order 1 or 2.
    ///
    /// The first derivative drops the Nyquist mode.
    pub fn derivative(&self, order: u32) -> Result<Self> {
        if order == 0 || order > 2 {
            return Err(Error::Domain(format!("derivative order {order} not supported")));
        }
        let n = self.n_grid();
        let coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let m = mode_of_index(j, n);
                if order == 1 {
                    if m == -(n as i64) / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * Complex64::new(0.0, m as f64)
                    }
                } else {
                    -c * (m * m) as f64
                }
            })
            .collect();
        let samples = inverse(&coeffs);
        Ok(Self { samples, coeffs, sector: self.sector.derivative(order) })
    }

    /// Zeroes every mode with |n| > n_grid/3.
    pub fn dealias_two_thirds(&self) -> Self {
        let n = self.n_grid();
        let cut = (n / 3) as i64;
        let mut coeffs = self.coeffs.clone();
        for (j, c) in coeffs.iter_mut().enumerate() {
            if mode_of_index(j, n).abs() > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        let samples = inverse(&coeffs);
        Self { samples, coeffs, sector: self.sector }
    }

    /// Pointwise product.
    pub fn mul_field(&self, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        let samples: Vec<Complex64> = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect();
        let coeffs = forward(&samples);
        Ok(Self { samples, coeffs, sector: self.sector.product(other.sector) })
    }

    /// Pointwise map of samples; the result is tagged `sector`.
    pub fn map(&self, sector: Sector, f: impl Fn(Complex64) -> Complex64) -> Self {
        let samples: Vec<Complex64> = self.samples.iter().map(|&c| f(c)).collect();
        let coeffs = forward(&samples);
        Self { samples, coeffs, sector }
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> Self {
        let n = self.n_grid();
        let coeffs = (0..n)
            .map(|j| self.coeffs[index_of_mode(-mode_of_index(j, n), n)].conj())
            .collect();
        let samples = self.samples.iter().map(|c| c.conj()).collect();
        Self { samples, coeffs, sector: self.sector }
    }

    /// Real part as a field.
    pub fn re(&self) -> Self {
        (self + &self.conj()) * 0.5
    }

    /// Imaginary part as a (real-valued) field.
    pub fn im(&self) -> Self {
        (self - &self.conj()) * Complex64::new(0.0, -0.5)
    }

    /// Multiplication by i.
    pub fn times_i(&self) -> Self {
        self * Complex64::new(0.0, 1.0)
    }

    /// Largest imaginary part over the grid.
    pub fn max_imag(&self) -> f64 {
        self.samples.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// max_j |u_j - v_j|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.samples.iter().zip(&other.samples).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// ∫ |u|⁴ dx.
    pub fn l4_norm_pow4(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>() * 2.0 * PI / self.n_grid() as f64
    }

    /// ∫ u dx, by the trapezoidal rule (exact for trigonometric polynomials).
    pub fn integral(&self) -> Complex64 {
        self.coeffs[0] * (2.0 * PI)
    }

    /// Whether all samples are finite.
    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn zip_linear(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        assert_eq!(self.n_grid(), other.n_grid(), "grid size mismatch");
        Self {
            samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect(),
            sector: self.sector.join(other.sector),
        }
    }

    fn scale(&self, s: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&a| a * s).collect(),
            coeffs: self.coeffs.iter().map(|&a| a * s).collect(),
            sector: self.sector,
        }
    }

    /// a·self + other without an FFT.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        self.zip_linear(other, |x, y| x * a + y)
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.zip_linear(rhs, |a, b| a + b)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.zip_linear(rhs, |a, b| a - b)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        self.scale(rhs)
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        (&self) * rhs
    }
}

impl Mul<Complex64> for SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: Complex64) -> SpectralField {
        (&self) * rhs
    }
}

/// Orthogonal projection of `u` onto `s`.
pub fn project_sector(u: &SpectralField, s: Sector) -> SpectralField {
    u.project(s)
}

/// Re ∫ f ḡ dx.
pub fn l2_inner(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    f.l2_inner(g)
}

/// (‖f‖² + ‖f'‖²)^{1/2}.
pub fn h1_norm(f: &SpectralField) -> f64 {
    f.h1_norm()
}

/// Spectral derivative of order 1 or 2.
pub fn derivative(f: &SpectralField, order: u32) -> Result<SpectralField> {
    f.derivative(order)
}
