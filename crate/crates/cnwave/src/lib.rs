//! Cnoidal waves of the damped cubic NLS on the 2π-torus.
//!
//! `i ψ_t + ψ_xx + |ψ|²ψ + i ε ψ = 0`
//!
//! The crate builds the cnoidal family Q_m, the linearized operators around
//! it, the ε-corrected profile Q_{m,ε}, a split-step integrator, and the
//! modulation diagnostics used to measure orbital stability of damped
//! trajectories.
//!
//! The special-function layer ([`elliptic`] and the scalar maps in
//! [`profiles`]) is generic over [`Scalar`]; field-level code works in `f64`.

pub mod elliptic;
pub mod approx;
pub mod error;
pub mod evolve;
pub mod linop;
pub mod modulation;
pub mod profiles;
pub mod scalar;
pub mod torus;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use torus::{Sector, SpectralField};

/// Elliptic modulus in double precision.
pub type Modulus = elliptic::Modulus<f64>;
/// Complete elliptic integrals in double precision.
pub type EllipticValues = elliptic::EllipticValues<f64>;
/// Jacobi function values in double precision.
pub type JacobiValues = elliptic::JacobiValues<f64>;
