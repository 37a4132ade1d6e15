//! Decoding unit-cube points into SD-weighted density matrices.
//!
//! A point of `[0,1)^{m²-1}` is split into `m - 1` simplex angles followed by
//! `m(m-1)` Euler angles, each mapped affinely onto its native range.
//!
//! **Eigenvalues.** Nested squared-cosine coordinates on the simplex,
//! `θ_i ∈ [0, π/2]`:
//!
//! ```text
//! λ_1 = cos²θ_1,  λ_j = cos²θ_j Π_{i<j} sin²θ_i,  λ_m = Π_i sin²θ_i
//! ```
//!
//! with Jacobian `Π_j 2 cosθ_j sin^{2(m-1-j)+1} θ_j` (j counted from 1).
//!
//! **Unitary.** Nested Euler construction of `SU(m)` modulo its maximal torus.
//! For each level `ℓ = m, m-1, ..., 2` and `k = 2..=ℓ` the factor
//!
//! ```text
//! exp(i λ_3 a) · exp(i σ_y^{(1,k)} b),   a ∈ [0, π],  b ∈ [0, π/2]
//! ```
//!
//! is appended on the right, where `λ_3 = diag(1, -1, 0, ...)` and
//! `σ_y^{(1,k)}` is the Pauli-y generator between levels 1 and k. The `m - 1`
//! diagonal angles that would follow are dropped: they commute with
//! `diag(λ)` and do not change `ρ`.
//!
//! The truncated Haar density is the volume element of the metric
//! `ds² = Σ_{p<q} |(U†dU)_{pq}|²` on the flag manifold. In these angles it is
//!
//! ```text
//! 2^{m-1} Π_ℓ [ Π_{k<ℓ} cos^{2k-3} b sin b ] · cos b_ℓ sin^{2ℓ-3} b_ℓ
//! ```
//!
//! and its integral over the angle box is the truncated Haar volume `H_m`.
//!
//! The first simplex eigenvalue occupies the last diagonal slot:
//! `ρ = U diag(λ_m, ..., λ_1) U†`.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::DensityMatrix;
use crate::CMatrix;

/// Eigenvalues below this make a sample degenerate (weight zero).
pub const DEGENERATE_EIGENVALUE: f64 = 1e-14;

/// Angle range tolerance when validating native angles.
const RANGE_SLACK: f64 = 1e-12;

/// Number of unit-cube coordinates for dimension `m`.
pub fn cube_dim(m: usize) -> usize {
    m * m - 1
}

/// `m - 1` simplex angles, each in `[0, π/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexAngles(Vec<f64>);

impl SimplexAngles {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::domain("need at least one simplex angle"));
        }
        check_range(&angles, |_| FRAC_PI_2, "simplex angle")?;
        Ok(SimplexAngles(angles))
    }

    /// Affine image of unit-cube coordinates.
    pub fn from_unit(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|x| x * FRAC_PI_2).collect())
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    /// Matrix dimension `m` these angles parameterise.
    pub fn dim(&self) -> usize {
        self.0.len() + 1
    }
}

/// Role of one Euler angle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EulerKind {
    /// `exp(i λ_3 a)`, `a ∈ [0, π]`.
    Phase,
    /// `exp(i σ_y^{(1,k)} b)`, `b ∈ [0, π/2]`.
    Rotation,
}

/// Position of one Euler angle in the nested product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EulerSlot {
    pub kind: EulerKind,
    /// Level `ℓ`: the factor lives in `SU(ℓ)` embedded in the top-left block.
    pub level: usize,
    /// Rotation partner: levels 1 and `k` are mixed.
    pub k: usize,
}

impl EulerSlot {
    /// Length of the native range.
    pub fn range(&self) -> f64 {
        match self.kind {
            EulerKind::Phase => PI,
            EulerKind::Rotation => FRAC_PI_2,
        }
    }
}

/// Order of the `m(m-1)` Euler angles.
pub fn euler_layout(m: usize) -> Vec<EulerSlot> {
    let mut out = Vec::with_capacity(m * (m - 1));
    for level in (2..=m).rev() {
        for k in 2..=level {
            out.push(EulerSlot {
                kind: EulerKind::Phase,
                level,
                k,
            });
            out.push(EulerSlot {
                kind: EulerKind::Rotation,
                level,
                k,
            });
        }
    }
    out
}

/// `m(m-1)` Euler angles in the order given by [`euler_layout`].
#[derive(Clone, Debug, PartialEq)]
pub struct EulerAngles {
    m: usize,
    angles: Vec<f64>,
}

impl EulerAngles {
    pub fn new(m: usize, angles: Vec<f64>) -> Result<Self> {
        if m < 2 || angles.len() != m * (m - 1) {
            return Err(Error::domain(format!(
                "SU({m}) needs {} Euler angles, got {}",
                m.saturating_mul(m.saturating_sub(1)),
                angles.len()
            )));
        }
        let layout = euler_layout(m);
        check_range(&angles, |i| layout[i].range(), "Euler angle")?;
        Ok(EulerAngles { m, angles })
    }

    pub fn from_unit(m: usize, coords: &[f64]) -> Result<Self> {
        let layout = euler_layout(m);
        if coords.len() != layout.len() {
            return Err(Error::domain("wrong number of Euler coordinates"));
        }
        let angles = coords.iter().zip(&layout).map(|(x, s)| x * s.range()).collect();
        Self::new(m, angles)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn dim(&self) -> usize {
        self.m
    }
}

fn check_range(angles: &[f64], upper: impl Fn(usize) -> f64, what: &str) -> Result<()> {
    for (i, &a) in angles.iter().enumerate() {
        let hi = upper(i);
        if !(a >= -RANGE_SLACK && a <= hi + RANGE_SLACK) {
            return Err(Error::domain(format!("{what} {i} = {a} outside [0, {hi}]")));
        }
    }
    Ok(())
}

/// Eigenvalues and the Jacobian `|∂(λ_1..λ_{m-1}) / ∂θ|`.
pub fn eigenvalues_from_angles(a: &SimplexAngles) -> (Vec<f64>, f64) {
    let n = a.0.len();
    let mut lambdas = Vec::with_capacity(n + 1);
    let mut tail = 1.0;
    let mut jac = 1.0;
    for (j, &t) in a.0.iter().enumerate() {
        let (s, c) = t.sin_cos();
        lambdas.push(c * c * tail);
        tail *= s * s;
        jac *= 2.0 * c * s.powi((2 * (n - 1 - j) + 1) as i32);
    }
    lambdas.push(tail);
    (lambdas, jac.abs())
}

/// `ln` of the diagonal SD density
/// `Π_{i<j} 4(λ_i-λ_j)²/(λ_i+λ_j) / √(Π λ_i)`; `-∞` when two eigenvalues coincide.
fn ln_simplex_density(lambdas: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, &li) in lambdas.iter().enumerate() {
        acc -= 0.5 * li.ln();
        for &lj in &lambdas[i + 1..] {
            let d = li - lj;
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            acc += 2.0 * LN_2 + 2.0 * d.abs().ln() - (li + lj).ln();
        }
    }
    acc
}

/// Diagonal SD density at a strictly positive probability vector.
pub fn simplex_density(lambdas: &[f64]) -> Result<f64> {
    let min = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::Degenerate(min));
    }
    Ok(ln_simplex_density(lambdas).exp())
}

/// Special unitary for the given Euler angles and the truncated Haar density
/// at that point.
pub fn unitary_from_angles(e: &EulerAngles) -> (CMatrix, f64) {
    let m = e.m;
    let mut u = CMatrix::identity(m, m);
    let mut ln_density = (m - 1) as f64 * LN_2;
    for (pair, slot) in e.angles.chunks_exact(2).zip(euler_layout(m).chunks_exact(2)) {
        let (a, b) = (pair[0], pair[1]);
        let (level, k) = (slot[1].level, slot[1].k);
        // U ← U · exp(i λ_3 a): scale columns 0 and 1.
        let phase = Complex64::from_polar(1.0, a);
        for r in 0..m {
            u[(r, 0)] *= phase;
            u[(r, 1)] *= phase.conj();
        }
        // U ← U · R_{1k}(b) with R = [[c, s], [-s, c]] on (0, k-1).
        let (s, c) = b.sin_cos();
        for r in 0..m {
            let x = u[(r, 0)];
            let y = u[(r, k - 1)];
            u[(r, 0)] = x * c - y * s;
            u[(r, k - 1)] = x * s + y * c;
        }
        let p = (2 * k - 3) as f64;
        ln_density += if k == level {
            c.ln() + p * s.ln()
        } else {
            p * c.ln() + s.ln()
        };
    }
    (u, ln_density.exp())
}

/// A decoded point with its SD volume-element weights.
///
/// `w_d` and `w_h` include the affine Jacobians of the unit-cube maps, so
/// their sample means estimate `D_m` and `H_m` directly.
#[derive(Clone, Debug)]
pub struct WeightedSample {
    pub rho: DensityMatrix,
    pub lambdas: Vec<f64>,
    pub w_d: f64,
    pub w_h: f64,
    pub w: f64,
    /// Some eigenvalue fell below [`DEGENERATE_EIGENVALUE`]; `w_d` and `w`
    /// are zero.
    pub degenerate: bool,
}

/// `ρ = U diag(d) U†`, Hermitian by construction.
fn conjugate_diagonal(u: &CMatrix, d: &[f64]) -> CMatrix {
    let m = d.len();
    let mut rho = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let mut z = Complex64::new(0.0, 0.0);
            for (k, &dk) in d.iter().enumerate() {
                z += u[(i, k)] * u[(j, k)].conj() * dk;
            }
            if i == j {
                z.im = 0.0;
            }
            rho[(i, j)] = z;
            rho[(j, i)] = z.conj();
        }
    }
    rho
}

/// Decode a unit-cube point of dimension `m² - 1`.
pub fn decode(coords: &[f64], m: usize) -> Result<WeightedSample> {
    if m < 2 || coords.len() != cube_dim(m) {
        return Err(Error::domain(format!(
            "m = {m} needs {} coordinates, got {}",
            cube_dim(m.max(2)),
            coords.len()
        )));
    }
    let simplex = SimplexAngles::from_unit(&coords[..m - 1])?;
    let euler = EulerAngles::from_unit(m, &coords[m - 1..])?;
    let (lambdas, jac) = eigenvalues_from_angles(&simplex);
    let (u, haar) = unitary_from_angles(&euler);

    let simplex_box = FRAC_PI_2.powi((m - 1) as i32);
    let euler_box = (PI * FRAC_PI_2).powi((m * (m - 1) / 2) as i32);
    let min_lambda = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let degenerate = min_lambda < DEGENERATE_EIGENVALUE;
    let w_d = if degenerate {
        0.0
    } else {
        (ln_simplex_density(&lambdas) + jac.ln()).exp() * simplex_box
    };
    let w_h = haar * euler_box;

    let diag: Vec<f64> = lambdas.iter().rev().copied().collect();
    let rho = DensityMatrix::from_trusted(conjugate_diagonal(&u, &diag));
    Ok(WeightedSample {
        rho,
        lambdas,
        w_d,
        w_h,
        w: w_d * w_h,
        degenerate,
    })
}
