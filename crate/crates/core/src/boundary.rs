//! Area of the PPT boundary by root-finding along one free coordinate.
//!
//! For each base point of the remaining coordinates, `f(t)` is sampled on a
//! uniform grid in the free coordinate, every sign change is refined by
//! bisection, and each root contributes the co-area weight
//! `w(x) ‖∇f(x)‖ / |∂f/∂t(x)|`. Averaging the per-base sums over base points
//! drawn from the unit cube estimates `∫_{f=0} w dA`.

use crate::error::{Error, Result};
use crate::exec::ordered_blocks;
use crate::param::{cube_dim, decode};
use crate::qmc::{ScrambleSpec, DEFAULT_SEED, DEFAULT_SKIP};
use crate::quantum::{pt_stats, PtForm};
use crate::summation::CompensatedSum;

/// Roots are refined until `|f| <= EPS_ROOT`.
pub const EPS_ROOT: f64 = 1e-10;

/// Finite-difference step for gradients, in unit-cube coordinates.
pub const GRADIENT_STEP: f64 = 1e-5;

/// Roots with `|∂f/∂t|` below this are skipped as grazing.
pub const GRAZING_SLOPE: f64 = 1e-8;

pub const DEFAULT_GRID: usize = 64;

const MAX_BISECTIONS: usize = 200;
const BASE_BLOCK: u64 = 256;

/// A scalar function on the unit cube whose zero set is the surface, plus
/// the density integrated over that surface.
pub trait LevelSet: Sync {
    /// Dimension of the full cube, free coordinate included.
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    fn weight(&self, x: &[f64]) -> Result<f64>;
}

/// Minimum PT eigenvalue of the decoded state, weighted by the SD volume
/// element.
#[derive(Clone, Debug)]
pub struct PptLevelSet {
    pub m: usize,
    pub form: PtForm,
}

impl PptLevelSet {
    pub fn new(m: usize, form: PtForm) -> Result<Self> {
        form.check(m)?;
        Ok(PptLevelSet { m, form })
    }
}

impl LevelSet for PptLevelSet {
    fn dim(&self) -> usize {
        cube_dim(self.m)
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        let s = decode(x, self.m)?;
        Ok(pt_stats(&s.rho, &self.form)?.min_eigenvalue)
    }

    fn weight(&self, x: &[f64]) -> Result<f64> {
        Ok(decode(x, self.m)?.w)
    }
}

/// One refined zero of `f` along the free coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Root {
    pub t: f64,
    /// Residual `f` at `t`.
    pub residual: f64,
    /// Sign of `∂f/∂t`: `+1` when `f` increases through the root.
    pub crossing: i8,
    pub area_weight: f64,
}

/// Scan result for one base point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRecord {
    pub base: Vec<f64>,
    pub roots: Vec<Root>,
    pub feasible: bool,
    /// Grid nodes where `f` could not be evaluated.
    pub skipped_nodes: usize,
    /// Roots dropped because `|∂f/∂t| < GRAZING_SLOPE`.
    pub grazing: usize,
    /// Brackets where bisection did not reach `EPS_ROOT`.
    pub unresolved: usize,
}

fn with_free(base: &[f64], free_index: usize, t: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(base.len() + 1);
    x.extend_from_slice(&base[..free_index]);
    x.push(t);
    x.extend_from_slice(&base[free_index..]);
    x
}

/// Central-difference gradient, one-sided where a step would leave `[0, 1]`.
fn gradient<L: LevelSet + ?Sized>(ls: &L, x: &[f64], f0: f64) -> Result<Vec<f64>> {
    let h = GRADIENT_STEP;
    let mut y = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let xi = x[i];
        let d = if xi - h < 0.0 {
            y[i] = xi + h;
            let fp = ls.eval(&y)?;
            (fp - f0) / h
        } else if xi + h > 1.0 {
            y[i] = xi - h;
            let fm = ls.eval(&y)?;
            (f0 - fm) / h
        } else {
            y[i] = xi + h;
            let fp = ls.eval(&y)?;
            y[i] = xi - h;
            let fm = ls.eval(&y)?;
            (fp - fm) / (2.0 * h)
        };
        y[i] = xi;
        g.push(d);
    }
    Ok(g)
}

/// Bisect a bracket `[a, b]` with `fa`, `fb` of opposite sign.
fn bisect(eval: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut fa: f64) -> Result<Option<(f64, f64)>> {
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        let fm = eval(mid)?;
        if fm.abs() <= EPS_ROOT {
            return Ok(Some((mid, fm)));
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if b - a <= f64::EPSILON {
            break;
        }
    }
    Ok(None)
}

/// Find every root of `f` along coordinate `free_index` for one base point.
pub fn scan_roots<L: LevelSet + ?Sized>(
    ls: &L,
    base: &[f64],
    free_index: usize,
    grid: usize,
) -> Result<BoundaryRecord> {
    if grid < 2 {
        return Err(Error::domain("grid needs at least two nodes"));
    }
    if base.len() + 1 != ls.dim() || free_index >= ls.dim() {
        return Err(Error::domain(format!(
            "base of length {} with free index {free_index} does not fit dimension {}",
            base.len(),
            ls.dim()
        )));
    }
    let f_at = |t: f64| ls.eval(&with_free(base, free_index, t));
    let nodes: Vec<(f64, Option<f64>)> = (0..grid)
        .map(|i| {
            let t = i as f64 / (grid - 1) as f64;
            (t, f_at(t).ok().filter(|v| v.is_finite()))
        })
        .collect();
    let mut rec = BoundaryRecord {
        base: base.to_vec(),
        roots: Vec::new(),
        feasible: false,
        skipped_nodes: nodes.iter().filter(|n| n.1.is_none()).count(),
        grazing: 0,
        unresolved: 0,
    };
    let valid: Vec<(f64, f64)> = nodes.iter().filter_map(|&(t, v)| v.map(|v| (t, v))).collect();
    for pair in valid.windows(2) {
        let ((ta, fa), (tb, fb)) = (pair[0], pair[1]);
        let root = if fa == 0.0 {
            // Counted by the bracket that ends here, or at t = 0.
            if ta == valid[0].0 {
                Some((ta, fa))
            } else {
                None
            }
        } else if fb == 0.0 {
            Some((tb, fb))
        } else if (fa < 0.0) != (fb < 0.0) {
            let r = bisect(f_at, ta, tb, fa)?;
            if r.is_none() {
                rec.unresolved += 1;
            }
            r
        } else {
            None
        };
        let Some((t, residual)) = root else { continue };
        let x = with_free(base, free_index, t);
        let g = gradient(ls, &x, residual)?;
        let slope = g[free_index];
        if slope.abs() < GRAZING_SLOPE {
            rec.grazing += 1;
            continue;
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        rec.roots.push(Root {
            t,
            residual,
            crossing: if slope > 0.0 { 1 } else { -1 },
            area_weight: ls.weight(&x)? * norm / slope.abs(),
        });
    }
    rec.feasible = !rec.roots.is_empty();
    Ok(rec)
}

/// Settings for [`estimate_area`].
#[derive(Clone, Debug, PartialEq)]
pub struct AreaConfig {
    pub base_points: u64,
    pub grid: usize,
    pub seed: u64,
    pub skip: u64,
    pub free_index: usize,
    pub workers: usize,
}

impl AreaConfig {
    /// Defaults for a level set on `dim` coordinates: the last coordinate is
    /// free.
    pub fn new(dim: usize, base_points: u64) -> Self {
        AreaConfig {
            base_points,
            grid: DEFAULT_GRID,
            seed: DEFAULT_SEED,
            skip: DEFAULT_SKIP,
            free_index: dim - 1,
            workers: 1,
        }
    }
}

/// Cumulative boundary statistics after `base_points` base points.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRow {
    pub base_points: u64,
    pub feasible: u64,
    pub roots: u64,
    pub area: f64,
}

/// Running totals over base points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AreaTotals {
    pub base_points: u64,
    pub feasible: u64,
    pub roots: u64,
    pub skipped_nodes: u64,
    pub grazing: u64,
    pub unresolved: u64,
    pub area_sum: CompensatedSum,
}

impl AreaTotals {
    fn add(&mut self, rec: &BoundaryRecord) {
        self.base_points += 1;
        self.feasible += u64::from(rec.feasible);
        self.roots += rec.roots.len() as u64;
        self.skipped_nodes += rec.skipped_nodes as u64;
        self.grazing += rec.grazing as u64;
        self.unresolved += rec.unresolved as u64;
        let mut s = CompensatedSum::new();
        for r in &rec.roots {
            s.add(r.area_weight);
        }
        self.area_sum.add(s.value());
    }

    fn merge(&mut self, o: &AreaTotals) {
        self.base_points += o.base_points;
        self.feasible += o.feasible;
        self.roots += o.roots;
        self.skipped_nodes += o.skipped_nodes;
        self.grazing += o.grazing;
        self.unresolved += o.unresolved;
        self.area_sum.merge(&o.area_sum);
    }

    fn row(&self) -> BoundaryRow {
        BoundaryRow {
            base_points: self.base_points,
            feasible: self.feasible,
            roots: self.roots,
            area: self.area_sum.value() / self.base_points as f64,
        }
    }
}

/// Result of [`estimate_area`].
#[derive(Clone, Debug)]
pub struct AreaOutput {
    pub rows: Vec<BoundaryRow>,
    pub totals: AreaTotals,
}

/// `1, 2, 5, 10, 20, 50, ...` up to `total`, always ending at `total`.
pub fn log_checkpoints(total: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for k in [1, 2, 5] {
            let c = decade.saturating_mul(k);
            if c >= total {
                break 'outer;
            }
            out.push(c);
        }
        decade = decade.saturating_mul(10);
    }
    out.push(total);
    out
}

/// Co-area estimate of `∫_{f=0} w dA` with rows at [`log_checkpoints`].
///
/// Base point `i` is point `i` of the scrambled Halton sequence in the
/// `dim - 1` non-free coordinates. The base box is the unit cube, so the
/// mean per-base sum is the estimate itself.
pub fn estimate_area<L: LevelSet + ?Sized>(ls: &L, cfg: &AreaConfig) -> Result<AreaOutput> {
    estimate_area_with(ls, cfg, |_| Ok(()))
}

pub fn estimate_area_with<L: LevelSet + ?Sized>(
    ls: &L,
    cfg: &AreaConfig,
    mut on_row: impl FnMut(&BoundaryRow) -> Result<()>,
) -> Result<AreaOutput> {
    if cfg.base_points == 0 {
        return Err(Error::domain("need at least one base point"));
    }
    if cfg.workers == 0 {
        return Err(Error::domain("need at least one worker"));
    }
    if cfg.free_index >= ls.dim() {
        return Err(Error::domain(format!(
            "free index {} outside 0..{}",
            cfg.free_index,
            ls.dim()
        )));
    }
    let spec = ScrambleSpec::new(cfg.seed, cfg.skip, ls.dim() - 1);
    let mut totals = AreaTotals::default();
    let mut rows = Vec::new();
    for stop in log_checkpoints(cfg.base_points) {
        let start = totals.base_points;
        let len = stop - start;
        let blocks = ordered_blocks(len.div_ceil(BASE_BLOCK), cfg.workers, |b| {
            let lo = start + b * BASE_BLOCK;
            let hi = (lo + BASE_BLOCK).min(stop);
            let mut t = AreaTotals::default();
            let mut base = vec![0.0; ls.dim() - 1];
            for i in lo..hi {
                spec.fill(i, &mut base);
                t.add(&scan_roots(ls, &base, cfg.free_index, cfg.grid)?);
            }
            Ok(t)
        })?;
        for b in &blocks {
            totals.merge(b);
        }
        let row = totals.row();
        on_row(&row)?;
        rows.push(row);
    }
    Ok(AreaOutput { rows, totals })
}

/// Sphere `|x - c|² = r²` in the unit cube with surface density `1 + x_0`.
///
/// Its weighted area is `(1 + c) · 4πr²` in three dimensions, since `x_0`
/// averages to `c` over the sphere.
#[derive(Clone, Debug)]
pub struct SphereLevelSet {
    pub dim: usize,
    pub center: f64,
    pub radius: f64,
}

impl SphereLevelSet {
    /// Exact weighted area for `dim = 3`.
    pub fn exact_area_3d(&self) -> f64 {
        (1.0 + self.center) * 4.0 * std::f64::consts::PI * self.radius * self.radius
    }
}

impl LevelSet for SphereLevelSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(x.iter().map(|v| (v - self.center).powi(2)).sum::<f64>() - self.radius * self.radius)
    }

    fn weight(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 + x[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{min_eigenvalue, partial_transpose, DensityMatrix};
    use num_complex::Complex64;

    /// `t·|Φ⁺⟩⟨Φ⁺| + (1-t)·I/4`, with the PT minimum `(1 - 3t)/4`.
    struct Werner;

    impl LevelSet for Werner {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64]) -> Result<f64> {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let z = Complex64::new(0.0, 0.0);
            let bell = DensityMatrix::pure(&[Complex64::new(s, 0.0), z, z, Complex64::new(s, 0.0)])?;
            let rho = bell.mix(&DensityMatrix::maximally_mixed(4), x[1])?;
            min_eigenvalue(&partial_transpose(rho.matrix(), &PtForm::Block(2))?)
        }
        fn weight(&self, _: &[f64]) -> Result<f64> {
            Ok(1.0)
        }
    }

    #[test]
    fn werner_family_crosses_once_at_one_third() {
        let rec = scan_roots(&Werner, &[0.3], 1, 64).unwrap();
        assert!(rec.feasible);
        assert_eq!(rec.roots.len(), 1);
        let r = &rec.roots[0];
        assert!((r.t - 1.0 / 3.0).abs() < 1e-9);
        assert!(r.residual.abs() <= EPS_ROOT);
        assert_eq!(r.crossing, -1);
        // ∂f/∂t = -3/4 and f is flat in the base coordinate.
        assert!((r.area_weight - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_chord() {
        let s = SphereLevelSet {
            dim: 3,
            center: 0.5,
            radius: 0.3,
        };
        let rec = scan_roots(&s, &[0.5, 0.5], 2, 64).unwrap();
        assert_eq!(rec.roots.len(), 2);
        assert!((rec.roots[0].t - 0.2).abs() < 1e-9);
        assert!((rec.roots[1].t - 0.8).abs() < 1e-9);
        assert_eq!((rec.roots[0].crossing, rec.roots[1].crossing), (-1, 1));
        let miss = scan_roots(&s, &[0.0, 0.0], 2, 64).unwrap();
        assert!(!miss.feasible && miss.roots.is_empty());
    }

    #[test]
    fn checkpoints() {
        assert_eq!(log_checkpoints(1), vec![1]);
        assert_eq!(log_checkpoints(30), vec![1, 2, 5, 10, 20, 30]);
        assert_eq!(log_checkpoints(50), vec![1, 2, 5, 10, 20, 50]);
    }

    #[test]
    fn bad_arguments() {
        let s = SphereLevelSet {
            dim: 3,
            center: 0.5,
            radius: 0.3,
        };
        assert!(scan_roots(&s, &[0.5, 0.5], 2, 1).is_err());
        assert!(scan_roots(&s, &[0.5], 2, 8).is_err());
        let mut cfg = AreaConfig::new(3, 0);
        assert!(estimate_area(&s, &cfg).is_err());
        cfg.base_points = 10;
        cfg.free_index = 3;
        assert!(estimate_area(&s, &cfg).is_err());
    }

    #[test]
    fn ppt_level_set_roots_have_small_residual() {
        let ls = PptLevelSet::new(4, PtForm::Block(2)).unwrap();
        let cfg = AreaConfig {
            grid: 32,
            ..AreaConfig::new(ls.dim(), 200)
        };
        let spec = ScrambleSpec::new(cfg.seed, cfg.skip, ls.dim() - 1);
        let mut found = 0;
        for i in 0..200 {
            let rec = scan_roots(&ls, &spec.point(ls.dim() - 1, i).coords, cfg.free_index, cfg.grid).unwrap();
            for w in rec.roots.windows(2) {
                assert!(w[0].t < w[1].t);
                assert_ne!(w[0].crossing, w[1].crossing);
            }
            for r in &rec.roots {
                assert!(r.residual.abs() <= EPS_ROOT);
                assert!(r.area_weight >= 0.0);
            }
            found += rec.roots.len();
        }
        assert!(found > 0);
    }
}
