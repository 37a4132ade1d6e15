//! Density matrices, partial transposes and the PPT test.
//!
//! Two ways to pick a partial transpose are supported. A *block* form views
//! the raw `m × m` matrix as a grid of `b × b` tiles and transposes each tile
//! in place. A *factor* form writes row and column indices as row-major
//! multi-indices over `dims` and swaps the row and column digits of the
//! selected factors. Block `b` is factor form `(m/b, b)` with the second
//! factor transposed.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Tolerance on Hermiticity, trace and positivity when validating input.
pub const VALIDATION_TOLERANCE: f64 = 1e-10;

/// PT eigenvalues at or above `-EPS_PPT` count as nonnegative.
pub const EPS_PPT: f64 = 1e-12;

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    /// Validate and wrap `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::domain("density matrix must be square and nonempty"));
        }
        let herm = hermitian_defect(&m);
        if herm > VALIDATION_TOLERANCE {
            return Err(Error::domain(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > VALIDATION_TOLERANCE || tr.im.abs() > VALIDATION_TOLERANCE {
            return Err(Error::domain(format!("trace {tr} is not 1")));
        }
        let min = min_eigenvalue(&m)?;
        if min < -VALIDATION_TOLERANCE {
            return Err(Error::domain(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix(m))
    }

    /// Wrap a matrix already known to be a density matrix.
    pub fn from_trusted(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        DensityMatrix(m)
    }

    pub fn maximally_mixed(m: usize) -> Self {
        DensityMatrix(CMatrix::identity(m, m) / Complex64::new(m as f64, 0.0))
    }

    /// `|ψ⟩⟨ψ|` for the normalized `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || !(norm > 0.0) {
            return Err(Error::domain("state vector must be nonzero"));
        }
        let n = psi.len();
        let m = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm));
        Ok(DensityMatrix(m))
    }

    /// Convex combination `p·self + (1-p)·other`.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> Result<Self> {
        if self.dim() != other.dim() || !(0.0..=1.0).contains(&p) {
            return Err(Error::domain("mixture needs equal dimensions and p in [0, 1]"));
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        Ok(DensityMatrix(&self.0 * c(p) + &other.0 * c(1.0 - p)))
    }

    /// Tensor product `self ⊗ other` (row index `a·dim(other) + b`).
    pub fn kron(&self, other: &DensityMatrix) -> Self {
        DensityMatrix(self.0.kronecker(&other.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Tensor-factor dimensions plus the factors to transpose.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FactorSplit {
    dims: Vec<usize>,
    transposed: Vec<usize>,
}

impl FactorSplit {
    /// `transposed` holds zero-based factor indices. Transposing every factor
    /// is allowed and gives the full transpose.
    pub fn new(dims: Vec<usize>, mut transposed: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d < 2) {
            return Err(Error::domain("need at least two factors of dimension >= 2"));
        }
        transposed.sort_unstable();
        transposed.dedup();
        if transposed.is_empty() {
            return Err(Error::domain("no factor selected for transposition"));
        }
        if let Some(&bad) = transposed.iter().find(|&&f| f >= dims.len()) {
            return Err(Error::domain(format!("factor index {bad} out of range")));
        }
        Ok(FactorSplit { dims, transposed })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn transposed(&self) -> &[usize] {
        &self.transposed
    }

    /// Product of the factor dimensions.
    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// The complementary selection (same spectrum after partial transpose).
    /// `None` when every factor is selected.
    pub fn complement(&self) -> Option<Self> {
        let rest: Vec<usize> = (0..self.dims.len()).filter(|f| !self.transposed.contains(f)).collect();
        (!rest.is_empty()).then(|| FactorSplit {
            dims: self.dims.clone(),
            transposed: rest,
        })
    }
}

/// A partial-transpose convention.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PtForm {
    /// Transpose each `b × b` tile in place.
    Block(usize),
    Factor(FactorSplit),
}

impl PtForm {
    /// Whether the form applies to `m × m` matrices.
    pub fn check(&self, m: usize) -> Result<()> {
        match self {
            PtForm::Block(b) if *b >= 1 && m % b == 0 => Ok(()),
            PtForm::Block(b) => Err(Error::domain(format!("block {b} does not divide {m}"))),
            PtForm::Factor(s) if s.total_dim() == m => Ok(()),
            PtForm::Factor(s) => Err(Error::domain(format!(
                "factor dims {:?} multiply to {}, not {m}",
                s.dims,
                s.total_dim()
            ))),
        }
    }

    /// Short identifier used in column names and config hashes.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PtForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PtForm::Block(b) => write!(f, "block{b}"),
            PtForm::Factor(s) => {
                let dims: Vec<String> = s.dims.iter().map(usize::to_string).collect();
                let t: Vec<String> = s.transposed.iter().map(|i| (i + 1).to_string()).collect();
                write!(f, "pt{}of{}", t.join("+"), dims.join("x"))
            }
        }
    }
}

/// Parses `block3` or `pt2of2x3` (one-based factor indices joined by `+`).
impl FromStr for PtForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("unrecognised PT form '{s}' (expected e.g. block3 or pt2of2x3)"));
        if let Some(b) = s.strip_prefix("block") {
            return b.parse().map(PtForm::Block).map_err(|_| bad());
        }
        let rest = s.strip_prefix("pt").ok_or_else(bad)?;
        let (sel, dims) = rest.split_once("of").ok_or_else(bad)?;
        let dims = dims
            .split('x')
            .map(|d| d.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let sel = sel
            .split('+')
            .map(|i| match i.parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>>>()?;
        FactorSplit::new(dims, sel).map(PtForm::Factor)
    }
}

/// The forms tested by default for each supported dimension.
///
/// `m = 6` uses the raw `3 × 3` and `2 × 2` block transposes, `m = 8` the
/// three single-qubit transposes and `m = 9` one qutrit transpose.
pub fn default_forms(m: usize) -> Result<Vec<PtForm>> {
    let factor = |dims: Vec<usize>, f: usize| PtForm::Factor(FactorSplit::new(dims, vec![f]).expect("static split"));
    match m {
        4 => Ok(vec![PtForm::Block(2)]),
        6 => Ok(vec![PtForm::Block(3), PtForm::Block(2)]),
        8 => Ok((0..3).map(|f| factor(vec![2, 2, 2], f)).collect()),
        9 => Ok(vec![factor(vec![3, 3], 1)]),
        _ => Err(Error::UnsupportedDimension(m)),
    }
}

/// Apply a partial transpose to a raw square matrix.
pub fn partial_transpose(m: &CMatrix, form: &PtForm) -> Result<CMatrix> {
    let n = m.nrows();
    form.check(n)?;
    match form {
        PtForm::Block(b) => Ok(block_pt(m, *b)),
        PtForm::Factor(s) => Ok(factor_pt(m, s)),
    }
}

fn block_pt(m: &CMatrix, b: usize) -> CMatrix {
    let n = m.nrows();
    CMatrix::from_fn(n, n, |r, c| {
        let (ti, i) = (r / b, r % b);
        let (tj, j) = (c / b, c % b);
        m[(ti * b + j, tj * b + i)]
    })
}

fn factor_pt(m: &CMatrix, s: &FactorSplit) -> CMatrix {
    let n = m.nrows();
    let mut strides = vec![1; s.dims.len()];
    for f in (0..s.dims.len() - 1).rev() {
        strides[f] = strides[f + 1] * s.dims[f + 1];
    }
    let mut out = CMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let (mut r2, mut c2) = (r, c);
            for &f in &s.transposed {
                let dr = (r / strides[f]) % s.dims[f];
                let dc = (c / strides[f]) % s.dims[f];
                r2 = r2 - dr * strides[f] + dc * strides[f];
                c2 = c2 - dc * strides[f] + dr * strides[f];
            }
            out[(r2, c2)] = m[(r, c)];
        }
    }
    out
}

/// Tile transpose of a density matrix.
pub fn block_partial_transpose(rho: &DensityMatrix, block: usize) -> Result<CMatrix> {
    partial_transpose(rho.matrix(), &PtForm::Block(block))
}

/// Multi-index transpose of a density matrix.
pub fn factor_partial_transpose(rho: &DensityMatrix, split: &FactorSplit) -> Result<CMatrix> {
    partial_transpose(rho.matrix(), &PtForm::Factor(split.clone()))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::domain("eigenvalues need a square matrix"));
    }
    let scale = m.camax().max(1.0);
    let defect = hermitian_defect(m);
    if defect > VALIDATION_TOLERANCE * scale {
        return Err(Error::domain(format!("matrix is not Hermitian (defect {defect:e})")));
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eigensolver returned a non-finite value".into()));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?[0])
}

/// Ascending spectrum of the partial transpose.
pub fn pt_spectrum(rho: &DensityMatrix, form: &PtForm) -> Result<Vec<f64>> {
    hermitian_eigenvalues(&partial_transpose(rho.matrix(), form)?)
}

/// PPT summary of one partial transpose, computed from a single
/// eigendecomposition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PtStats {
    pub min_eigenvalue: f64,
    pub negativity: f64,
}

impl PtStats {
    pub fn from_spectrum(ev: &[f64]) -> Self {
        let negativity = ev.iter().filter(|&&x| x < -EPS_PPT).sum::<f64>().abs();
        PtStats {
            min_eigenvalue: ev.iter().copied().fold(f64::INFINITY, f64::min),
            negativity,
        }
    }

    pub fn is_ppt(&self) -> bool {
        self.min_eigenvalue >= -EPS_PPT
    }

    pub fn log_negativity(&self) -> f64 {
        log_negativity_of(self.negativity)
    }
}

pub fn pt_stats(rho: &DensityMatrix, form: &PtForm) -> Result<PtStats> {
    Ok(PtStats::from_spectrum(&pt_spectrum(rho, form)?))
}

/// Whether the partial transpose has no eigenvalue below `-EPS_PPT`.
pub fn is_ppt(rho: &DensityMatrix, form: &PtForm) -> Result<bool> {
    Ok(pt_stats(rho, form)?.is_ppt())
}

/// Absolute sum of the partial-transpose eigenvalues below `-EPS_PPT`.
pub fn negativity(rho: &DensityMatrix, form: &PtForm) -> Result<f64> {
    Ok(pt_stats(rho, form)?.negativity)
}

/// `ln(2N + 1)` with `N` the negativity.
pub fn log_negativity(rho: &DensityMatrix, form: &PtForm) -> Result<f64> {
    Ok(pt_stats(rho, form)?.log_negativity())
}

pub fn log_negativity_of(negativity: f64) -> f64 {
    (2.0 * negativity).ln_1p()
}
