//! Scrambled Halton sequences.
//!
//! Coordinate `j` uses the `(j+1)`-th prime as its base. Scrambling applies an
//! independent digit permutation per base that fixes digit 0, so trailing zero
//! digits stay zero and coordinates never drift towards 1. Each permutation is
//! drawn from a ChaCha stream keyed by `(seed, base)`, which makes every point
//! a pure function of `(seed, skip, index)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::primes::first_primes;

/// Leading points discarded by default.
pub const DEFAULT_SKIP: u64 = 409;

/// Default scrambling seed.
pub const DEFAULT_SEED: u64 = 1;

const ONE_MINUS_EPSILON: f64 = 1.0 - f64::EPSILON / 2.0;

/// Point `index` of a `d`-dimensional sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitCubePoint {
    pub coords: Vec<f64>,
    pub index: u64,
}

/// Per-base digit permutations plus the number of skipped leading points.
#[derive(Clone, Debug)]
pub struct ScrambleSpec {
    seed: u64,
    skip: u64,
    bases: Vec<u64>,
    perms: Vec<Vec<u32>>,
}

impl ScrambleSpec {
    /// Random digit permutations for the first `dim` prime bases.
    pub fn new(seed: u64, skip: u64, dim: usize) -> Self {
        let bases = first_primes(dim);
        let perms = bases.iter().map(|&b| digit_permutation(seed, b)).collect();
        ScrambleSpec {
            seed,
            skip,
            bases,
            perms,
        }
    }

    /// Unscrambled Halton sequence (identity permutations).
    pub fn identity(skip: u64, dim: usize) -> Self {
        let bases = first_primes(dim);
        let perms = bases.iter().map(|&b| (0..b as u32).collect()).collect();
        ScrambleSpec {
            seed: 0,
            skip,
            bases,
            perms,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn skip(&self) -> u64 {
        self.skip
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn permutation(&self, coord: usize) -> &[u32] {
        &self.perms[coord]
    }

    /// Write point `index` into `out` (`out.len() <= self.dim()`).
    pub fn fill(&self, index: u64, out: &mut [f64]) {
        assert!(out.len() <= self.dim(), "point dimension exceeds scramble spec");
        let i = index + self.skip;
        for (j, x) in out.iter_mut().enumerate() {
            *x = radical_inverse(i, self.bases[j], &self.perms[j]);
        }
    }

    pub fn point(&self, dim: usize, index: u64) -> UnitCubePoint {
        let mut coords = vec![0.0; dim];
        self.fill(index, &mut coords);
        UnitCubePoint { coords, index }
    }
}

/// Random permutation of `0..base` with `perm[0] == 0`.
fn digit_permutation(seed: u64, base: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(base);
    let mut perm: Vec<u32> = (0..base as u32).collect();
    // Fisher-Yates over the nonzero digits.
    for i in (2..base as usize).rev() {
        let j = 1 + (rng.next_u64() % i as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

/// Permuted radical inverse `Σ perm(d_j) b^{-j-1}` of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64, perm: &[u32]) -> f64 {
    debug_assert_eq!(perm.len() as u64, base);
    let inv_base = 1.0 / base as f64;
    let mut reversed: u128 = 0;
    let mut inv_base_n = 1.0;
    while index > 0 {
        let next = index / base;
        let digit = (index - next * base) as usize;
        reversed = reversed * base as u128 + perm[digit] as u128;
        inv_base_n *= inv_base;
        index = next;
    }
    (reversed as f64 * inv_base_n).min(ONE_MINUS_EPSILON)
}

/// Point `index` of the sequence described by `spec`.
pub fn point(spec: &ScrambleSpec, dim: usize, index: u64) -> UnitCubePoint {
    spec.point(dim, index)
}

/// Split `0..total` into `workers` contiguous ranges `(start, len)`, earlier
/// ranges taking the remainder.
pub fn partition(total: u64, workers: usize) -> Vec<(u64, u64)> {
    assert!(workers >= 1, "need at least one worker");
    let w = workers as u64;
    let base = total / w;
    let extra = total % w;
    let mut start = 0;
    (0..w)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = (start, len);
            start += len;
            r
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and the
/// uniform distribution on `[0, 1)`. Sorts `samples` in place.
pub fn marginal_sup_deviation(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (x - lo).abs().max((hi - x).abs())
        })
        .fold(0.0, f64::max)
}
