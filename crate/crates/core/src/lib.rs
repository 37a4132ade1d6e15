//! Quasi-Monte Carlo estimation of Bures/SD volumes, separability (PPT)
//! probabilities and boundary areas for `m × m` density matrices.
//!
//! The pipeline maps points of a scrambled Halton sequence in `[0,1)^{m²-1}`
//! to density matrices `ρ = U diag(λ) U†` through Euler angles of `SU(m)` and
//! hyperspherical angles on the eigenvalue simplex ([`param`]), weights each
//! point by the SD volume element, and tests the partial transposes of `ρ`
//! ([`quantum`]). [`estimator`] accumulates the running estimates and
//! [`boundary`] estimates the area of the separable/entangled boundary.
//! [`exactform`] carries the closed-form constants the estimates converge to.

pub mod analysis;
pub mod boundary;
pub mod error;
pub mod estimator;
pub mod exactform;
mod exec;
pub mod param;
pub mod primes;
pub mod qmc;
pub mod quantum;
pub mod summation;

pub use error::{Error, Result};

/// Complex `m × m` matrix type used throughout.
pub type CMatrix = nalgebra::DMatrix<num_complex::Complex64>;
