//! Linearized operators around cnoidal and corrected profiles, assembled as
//! dense symmetric matrices on real trigonometric bases of a sector.
//!
//! Real operators act on real functions expanded in the L²-orthonormal
//! basis {1/√(2π), cos(nx)/√π, sin(nx)/√π}. Real-linear operators on
//! complex fields act on the pair (Re u, Im u) with the same basis in each
//! block.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::approx::ApproxProfile;
use crate::error::{Error, Result};
use crate::profiles::CnoidalProfile;
use crate::torus::{grid, Sector, SpectralField};

/// A real basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFn {
    Const,
    Cos(usize),
    Sin(usize),
}

impl BasisFn {
    pub fn frequency(self) -> usize {
        match self {
            BasisFn::Const => 0,
            BasisFn::Cos(n) | BasisFn::Sin(n) => n,
        }
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            BasisFn::Const => 1.0 / (2.0 * PI).sqrt(),
            BasisFn::Cos(n) => (n as f64 * x).cos() / PI.sqrt(),
            BasisFn::Sin(n) => (n as f64 * x).sin() / PI.sqrt(),
        }
    }
}

/// Orthonormal real basis of a sector, truncated below the Nyquist mode.
#[derive(Debug, Clone)]
pub struct RealBasis {
    sector: Sector,
    n_grid: usize,
    funcs: Vec<BasisFn>,
    samples: DMatrix<f64>,
}

impl RealBasis {
    pub fn new(sector: Sector, n_grid: usize) -> Result<Self> {
        crate::torus::check_grid(n_grid)?;
        let top = n_grid / 2 - 1;
        let mut funcs = Vec::new();
        if sector.admits_mode(0) {
            funcs.push(BasisFn::Const);
        }
        for n in 1..=top {
            if !sector.admits_mode(n as i64) {
                continue;
            }
            if sector != Sector::Aminus {
                funcs.push(BasisFn::Cos(n));
            }
            if sector != Sector::Aplus {
                funcs.push(BasisFn::Sin(n));
            }
        }
        let xs = grid(n_grid);
        let samples = DMatrix::from_fn(n_grid, funcs.len(), |r, c| funcs[c].eval(xs[r]));
        Ok(Self { sector, n_grid, funcs, samples })
    }

    pub fn dim(&self) -> usize {
        self.funcs.len()
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    pub fn funcs(&self) -> &[BasisFn] {
        &self.funcs
    }

    /// Basis functions sampled on the grid, one column per function.
    pub fn sample_matrix(&self) -> &DMatrix<f64> {
        &self.samples
    }

    /// Discrete L² coefficients of real grid data.
    pub fn coefficients(&self, values: &[f64]) -> DVector<f64> {
        let w = 2.0 * PI / self.n_grid as f64;
        self.samples.tr_mul(&DVector::from_column_slice(values)) * w
    }

    /// Grid values of a coefficient vector.
    pub fn synthesize(&self, v: &DVector<f64>) -> Vec<f64> {
        (&self.samples * v).as_slice().to_vec()
    }

    /// Diagonal of -∂ₓₓ.
    pub fn laplacian_diag(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.funcs.iter().map(|f| (f.frequency() as f64).powi(2)))
    }

    /// Diagonal of the H¹ Gram matrix, 1 + n².
    pub fn h1_diag(&self) -> DVector<f64> {
        self.laplacian_diag().map(|v| 1.0 + v)
    }

    /// Quadrature Galerkin matrix of multiplication by `v`.
    ///
    /// Built from the discrete Fourier coefficients of `v` through the
    /// product-to-sum identities, which reproduces the trapezoidal rule
    /// exactly (aliasing included) in O(dim²).
    pub fn potential_matrix(&self, v: &[f64]) -> DMatrix<f64> {
        let n = self.n_grid;
        let vhat = crate::torus::forward(&v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>());
        // ∫ v cos(px) and ∫ v sin(px) by the trapezoidal rule
        let c = |p: i64| 2.0 * PI * vhat[crate::torus::index_of_mode(p, n)].re;
        let s = |p: i64| -2.0 * PI * vhat[crate::torus::index_of_mode(p, n)].im;
        let parts: Vec<(bool, i64, f64)> = self
            .funcs
            .iter()
            .map(|f| match *f {
                BasisFn::Const => (true, 0, 1.0 / (2.0 * PI).sqrt()),
                BasisFn::Cos(k) => (true, k as i64, 1.0 / PI.sqrt()),
                BasisFn::Sin(k) => (false, k as i64, 1.0 / PI.sqrt()),
            })
            .collect();
        let d = parts.len();
        let mut a = DMatrix::zeros(d, d);
        for (i, &(ci, ni, ai)) in parts.iter().enumerate() {
            for (j, &(cj, nj, aj)) in parts.iter().enumerate().skip(i) {
                let val = match (ci, cj) {
                    (true, true) => 0.5 * (c(ni - nj) + c(ni + nj)),
                    (false, false) => 0.5 * (c(ni - nj) - c(ni + nj)),
                    (true, false) => 0.5 * (s(ni + nj) - s(ni - nj)),
                    (false, true) => 0.5 * (s(ni + nj) + s(ni - nj)),
                } * ai
                    * aj;
                a[(i, j)] = val;
                a[(j, i)] = val;
            }
        }
        a
    }

    /// Galerkin matrix of multiplication by `v` formed as Φᵀ diag(w v) Φ.
    pub fn potential_matrix_dense(&self, v: &[f64]) -> DMatrix<f64> {
        let w = 2.0 * PI / self.n_grid as f64;
        let mut weighted = self.samples.clone();
        for (r, &vr) in v.iter().enumerate() {
            weighted.row_mut(r).scale_mut(w * vr);
        }
        symmetrize(self.samples.tr_mul(&weighted))
    }
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// Which operator a matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Lplus,
    Lminus,
    SecondVariation,
    SecondVariationEps,
}

/// Parameters of the profile the operator was linearized around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorMeta {
    pub kind: OperatorKind,
    pub m: f64,
    pub k: f64,
    /// ω for L± and S″_m, λ_{m,ε} for S″_{m,ε}.
    pub frequency: f64,
    pub eps: f64,
}

/// Dense symmetric matrix of a real-linear operator restricted to a sector.
#[derive(Debug, Clone)]
pub struct SymmetricOperator {
    pub matrix: DMatrix<f64>,
    pub basis: RealBasis,
    /// Whether the matrix acts on (Re, Im) pairs.
    pub complex: bool,
    pub meta: OperatorMeta,
}

/// Lowest eigenpairs of a symmetric operator.
#[derive(Debug, Clone)]
pub struct OperatorSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<SpectralField>,
    pub residuals: Vec<f64>,
    pub sector: Sector,
}

/// L² or H¹ normalization for coercivity constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L2,
    H1,
}

fn real_potential(kind: OperatorKind, profile: &CnoidalProfile) -> Vec<f64> {
    let factor = if kind == OperatorKind::Lplus { 3.0 } else { 1.0 };
    profile.field.samples().iter().map(|q| profile.omega - factor * q.re * q.re).collect()
}

fn meta_for(kind: OperatorKind, profile: &CnoidalProfile) -> OperatorMeta {
    OperatorMeta { kind, m: profile.m, k: profile.k.value(), frequency: profile.omega, eps: 0.0 }
}

/// L₊ = -∂ₓₓ + ω - 3Q² or L₋ = -∂ₓₓ + ω - Q² on `sector`.
pub fn assemble(kind: OperatorKind, profile: &CnoidalProfile, sector: Sector) -> Result<SymmetricOperator> {
    if !matches!(kind, OperatorKind::Lplus | OperatorKind::Lminus) {
        return Err(Error::Domain("assemble builds L+ or L- only".into()));
    }
    let basis = RealBasis::new(sector, profile.n_grid())?;
    let mut matrix = basis.potential_matrix(&real_potential(kind, profile));
    matrix.set_diagonal(&(matrix.diagonal() + basis.laplacian_diag()));
    Ok(SymmetricOperator { matrix, basis, complex: false, meta: meta_for(kind, profile) })
}

/// Block matrix of η ↦ -η'' + λη - |q|²η - 2Re(q̄η)q on (Re η, Im η).
pub fn complex_second_variation_matrix(basis: &RealBasis, lambda: f64, q: &[Complex64]) -> DMatrix<f64> {
    let v_rr: Vec<f64> = q.iter().map(|c| lambda - c.norm_sqr() - 2.0 * c.re * c.re).collect();
    let v_ii: Vec<f64> = q.iter().map(|c| lambda - c.norm_sqr() - 2.0 * c.im * c.im).collect();
    let v_ri: Vec<f64> = q.iter().map(|c| -2.0 * c.re * c.im).collect();
    let d = basis.dim();
    let lap = basis.laplacian_diag();
    let mut a = DMatrix::zeros(2 * d, 2 * d);
    let mut rr = basis.potential_matrix(&v_rr);
    rr.set_diagonal(&(rr.diagonal() + &lap));
    let mut ii = basis.potential_matrix(&v_ii);
    ii.set_diagonal(&(ii.diagonal() + &lap));
    a.view_mut((0, 0), (d, d)).copy_from(&rr);
    a.view_mut((d, d), (d, d)).copy_from(&ii);
    if q.iter().any(|c| c.im != 0.0) {
        let ri = basis.potential_matrix(&v_ri);
        a.view_mut((0, d), (d, d)).copy_from(&ri);
        a.view_mut((d, 0), (d, d)).copy_from(&ri);
    }
    a
}

/// S″_m[Q_m] acting on complex fields: L₊ on the real part, L₋ on the
/// imaginary part.
pub fn assemble_second_variation(profile: &CnoidalProfile, sector: Sector) -> Result<SymmetricOperator> {
    let basis = RealBasis::new(sector, profile.n_grid())?;
    let matrix = complex_second_variation_matrix(&basis, profile.omega, profile.field.samples());
    Ok(SymmetricOperator {
        matrix,
        basis,
        complex: true,
        meta: meta_for(OperatorKind::SecondVariation, profile),
    })
}

/// S″_{m,ε}[Q_{m,ε}] on complex fields; real-linear, with the blocks
/// coupled through Im Q_{m,ε}.
pub fn assemble_second_variation_eps(approx: &ApproxProfile, sector: Sector) -> Result<SymmetricOperator> {
    let basis = RealBasis::new(sector, approx.field.n_grid())?;
    let matrix = complex_second_variation_matrix(&basis, approx.lambda, approx.field.samples());
    Ok(SymmetricOperator {
        matrix,
        basis,
        complex: true,
        meta: OperatorMeta {
            kind: OperatorKind::SecondVariationEps,
            m: approx.m,
            k: approx.profile.k.value(),
            frequency: approx.lambda,
            eps: approx.eps,
        },
    })
}

impl SymmetricOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sector(&self) -> Sector {
        self.basis.sector()
    }

    /// max |A - Aᵀ|.
    pub fn asymmetry(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }

    /// Coefficient vector of a field; components outside the basis are dropped.
    pub fn field_to_vec(&self, f: &SpectralField) -> Result<DVector<f64>> {
        if f.n_grid() != self.basis.n_grid() {
            return Err(Error::DimensionMismatch { left: f.n_grid(), right: self.basis.n_grid() });
        }
        let re = self.basis.coefficients(&f.real_samples());
        if !self.complex {
            return Ok(re);
        }
        let im = self.basis.coefficients(&f.imag_samples());
        let d = self.basis.dim();
        Ok(DVector::from_fn(2 * d, |i, _| if i < d { re[i] } else { im[i - d] }))
    }

    /// Field represented by a coefficient vector.
    pub fn vec_to_field(&self, v: &DVector<f64>) -> Result<SpectralField> {
        let d = self.basis.dim();
        let re = self.basis.synthesize(&v.rows(0, d).into_owned());
        let samples: Vec<Complex64> = if self.complex {
            let im = self.basis.synthesize(&v.rows(d, d).into_owned());
            re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect()
        } else {
            re.iter().map(|&a| Complex64::new(a, 0.0)).collect()
        };
        SpectralField::from_samples(samples, self.basis.sector())
    }

    /// Matrix action on a field.
    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        let v = self.field_to_vec(f)?;
        self.vec_to_field(&(&self.matrix * v))
    }

    /// Diagonal of the H¹ Gram matrix in this operator's coordinates.
    pub fn h1_diag(&self) -> DVector<f64> {
        let h = self.basis.h1_diag();
        if !self.complex {
            return h;
        }
        let d = h.len();
        DVector::from_fn(2 * d, |i, _| h[i % d])
    }
}

/// -f'' + V f evaluated pointwise on the grid for L₊ or L₋.
pub fn apply_on_grid(kind: OperatorKind, profile: &CnoidalProfile, f: &SpectralField) -> Result<SpectralField> {
    let v = match kind {
        OperatorKind::Lplus | OperatorKind::Lminus => real_potential(kind, profile),
        _ => return Err(Error::Domain("grid action defined for L+ and L- only".into())),
    };
    let fxx = f.derivative(2)?;
    let samples: Vec<Complex64> =
        f.samples().iter().zip(fxx.samples()).zip(&v).map(|((&u, &uxx), &vv)| vv * u - uxx).collect();
    SpectralField::from_samples(samples, Sector::Full)
}

/// Lowest `n_eigs` eigenpairs by a dense symmetric eigensolve.
pub fn spectrum(op: &SymmetricOperator, n_eigs: usize) -> Result<OperatorSpectrum> {
    if n_eigs == 0 || n_eigs > op.dim() {
        return Err(Error::Domain(format!("requested {n_eigs} eigenpairs of a {}-dimensional operator", op.dim())));
    }
    let eig = SymmetricEigen::new(op.matrix.clone());
    let mut order: Vec<usize> = (0..op.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut eigenvalues = Vec::with_capacity(n_eigs);
    let mut eigenvectors = Vec::with_capacity(n_eigs);
    let mut residuals = Vec::with_capacity(n_eigs);
    for &i in order.iter().take(n_eigs) {
        let lam = eig.eigenvalues[i];
        let v = eig.eigenvectors.column(i).into_owned();
        residuals.push((&op.matrix * &v - &v * lam).norm());
        eigenvalues.push(lam);
        eigenvectors.push(op.vec_to_field(&v)?);
    }
    Ok(OperatorSpectrum { eigenvalues, eigenvectors, residuals, sector: op.sector() })
}

/// (A f, f).
pub fn quadratic_form(op: &SymmetricOperator, f: &SpectralField) -> Result<f64> {
    let v = op.field_to_vec(f)?;
    Ok(v.dot(&(&op.matrix * &v)))
}

/// Orthonormal basis (columns) of the complement of span(constraints).
fn complement_basis(dim: usize, constraints: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for c in constraints {
        let scale = c.norm();
        if scale == 0.0 {
            return Err(Error::DegenerateConstraints);
        }
        let mut v = c.clone();
        for _ in 0..2 {
            for q in &ortho {
                let proj = q.dot(&v);
                v -= q * proj;
            }
        }
        let n = v.norm();
        if n <= 1e-10 * scale {
            return Err(Error::DegenerateConstraints);
        }
        ortho.push(v / n);
    }
    if ortho.is_empty() {
        return Ok(DMatrix::identity(dim, dim));
    }
    let mut proj = DMatrix::<f64>::identity(dim, dim);
    for q in &ortho {
        proj -= q * q.transpose();
    }
    let eig = SymmetricEigen::new(proj);
    let cols: Vec<DVector<f64>> = (0..dim)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.len() != dim - ortho.len() {
        return Err(Error::DegenerateConstraints);
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Smallest Rayleigh quotient (A u, u)/‖u‖² over the sector, restricted to
/// the orthogonal complement of `constraints`, with ‖·‖ the L² or H¹ norm.
pub fn coercivity_constant(op: &SymmetricOperator, constraints: &[SpectralField], relative_to: Norm) -> Result<f64> {
    let cons: Vec<DVector<f64>> = constraints.iter().map(|c| op.field_to_vec(c)).collect::<Result<_>>()?;
    let z = complement_basis(op.dim(), &cons)?;
    let a_r = symmetrize(z.tr_mul(&(&op.matrix * &z)));
    let reduced = match relative_to {
        Norm::L2 => a_r,
        Norm::H1 => {
            let g = op.h1_diag();
            let mut gz = z.clone();
            for (r, &gr) in g.iter().enumerate() {
                gz.row_mut(r).scale_mut(gr);
            }
            let g_r = symmetrize(z.tr_mul(&gz));
            let chol = Cholesky::new(g_r).ok_or(Error::DegenerateConstraints)?;
            let l = chol.l();
            let linv = l.clone().try_inverse().ok_or(Error::DegenerateConstraints)?;
            symmetrize(&linv * a_r * linv.transpose())
        }
    };
    let eig = SymmetricEigen::new(reduced);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Closed-form lowest three eigenvalues of L₋ on the full space.
pub fn lminus_closed_form(k: f64, big_k: f64) -> [f64; 3] {
    let b2 = 4.0 * big_k * big_k / (PI * PI);
    [(k * k - 1.0) * b2, 0.0, k * k * b2]
}

/// Closed-form lowest five eigenvalues of L₊ on the full space.
pub fn lplus_closed_form(k: f64, big_k: f64) -> [f64; 5] {
    let b2 = 4.0 * big_k * big_k / (PI * PI);
    let k2 = k * k;
    let root = (k2 * k2 - k2 + 1.0).sqrt();
    let c_minus = k2 + 1.0 - 2.0 * root;
    let c_plus = k2 + 1.0 + 2.0 * root;
    [(c_minus - 3.0 * k2) * b2, -3.0 * k2 * b2, 0.0, (3.0 - 3.0 * k2) * b2, (c_plus - 3.0 * k2) * b2]
}

/// Sectors holding the eigenfunctions behind [`lminus_closed_form`]
/// (dn, cn, sn) and [`lplus_closed_form`].
pub const LMINUS_SECTORS: [Sector; 3] = [Sector::S, Sector::Aplus, Sector::Aminus];
pub const LPLUS_SECTORS: [Sector; 5] = [Sector::S, Sector::Aplus, Sector::Aminus, Sector::S, Sector::S];

fn contains(outer: Sector, inner: Sector) -> bool {
    outer == inner || outer == Sector::Full || (outer == Sector::A && matches!(inner, Sector::Aplus | Sector::Aminus))
}

/// The closed-form eigenvalues of L₋ or L₊ whose eigenfunctions lie in
/// `sector`, in ascending order. These are the lowest eigenvalues of the
/// restricted operator.
pub fn closed_form_in_sector(kind: OperatorKind, k: f64, big_k: f64, sector: Sector) -> Result<Vec<f64>> {
    let (vals, secs): (Vec<f64>, Vec<Sector>) = match kind {
        OperatorKind::Lminus => (lminus_closed_form(k, big_k).to_vec(), LMINUS_SECTORS.to_vec()),
        OperatorKind::Lplus => (lplus_closed_form(k, big_k).to_vec(), LPLUS_SECTORS.to_vec()),
        _ => return Err(Error::Domain("closed forms exist for L+ and L- only".into())),
    };
    let mut out: Vec<f64> =
        vals.into_iter().zip(secs).filter(|&(_, s)| contains(sector, s)).map(|(v, _)| v).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Fraction of the L² norm of `f` inside `sector`.
pub fn sector_weight(f: &SpectralField, sector: Sector) -> f64 {
    let total = f.l2_norm();
    if total == 0.0 {
        return 0.0;
    }
    f.project(sector).l2_norm() / total
}
