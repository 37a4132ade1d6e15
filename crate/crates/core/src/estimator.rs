//! Streaming QMC estimation with checkpoints and deterministic parallelism.
//!
//! Points are processed in chunks of `checkpoint_every`. Each chunk is cut
//! into fixed blocks of [`BLOCK_SIZE`] points; every block gets its own
//! accumulator, workers take contiguous runs of blocks, and the coordinator
//! merges block accumulators in ascending order. The merge sequence therefore
//! does not depend on the worker count and rows are bit-identical for any
//! number of workers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::ordered_blocks;
use crate::param::{cube_dim, decode, WeightedSample};
use crate::qmc::{ScrambleSpec, DEFAULT_SEED, DEFAULT_SKIP};
use crate::quantum::{default_forms, pt_stats, PtForm};
use crate::summation::CompensatedSum;

/// Points per block, the unit of parallel work and of merging.
pub const BLOCK_SIZE: u64 = 1024;

const CHECKPOINT_MAGIC: &str = "sepvol-checkpoint v1";

/// Parameters of one estimation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub m: usize,
    pub points: u64,
    pub checkpoint_every: u64,
    pub seed: u64,
    pub skip: u64,
    pub workers: usize,
    pub forms: Vec<PtForm>,
}

impl RunConfig {
    /// Defaults for dimension `m`: 10⁶ points, checkpoints every 10⁵, the
    /// default seed, skip and PT forms, one worker.
    pub fn new(m: usize) -> Result<Self> {
        Ok(RunConfig {
            m,
            points: 1_000_000,
            checkpoint_every: 100_000,
            seed: DEFAULT_SEED,
            skip: DEFAULT_SKIP,
            workers: 1,
            forms: default_forms(m)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::UnsupportedDimension(self.m));
        }
        if self.checkpoint_every == 0 || self.points < self.checkpoint_every {
            return Err(Error::domain("need points >= checkpoint_every >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::domain("need at least one worker"));
        }
        if self.forms.is_empty() {
            return Err(Error::domain("need at least one PT form"));
        }
        for f in &self.forms {
            f.check(self.m)?;
        }
        Ok(())
    }

    /// Canonical text of everything that determines the checkpoint rows.
    /// `points` and `workers` are excluded so a resumed run may extend the
    /// target or change parallelism.
    pub fn canonical(&self) -> String {
        let forms: Vec<String> = self.forms.iter().map(PtForm::label).collect();
        format!(
            "m={};seed={};skip={};checkpoint_every={};forms={}",
            self.m,
            self.seed,
            self.skip,
            self.checkpoint_every,
            forms.join(",")
        )
    }

    /// Hex SHA-256 of [`RunConfig::canonical`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// Running sums for one PT form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormSums {
    pub count_sep: u64,
    pub sum_w_sep: CompensatedSum,
    pub sum_w_neg: CompensatedSum,
    pub sum_w_logneg: CompensatedSum,
}

impl FormSums {
    fn merge(&mut self, o: &FormSums) {
        self.count_sep += o.count_sep;
        self.sum_w_sep.merge(&o.sum_w_sep);
        self.sum_w_neg.merge(&o.sum_w_neg);
        self.sum_w_logneg.merge(&o.sum_w_logneg);
    }
}

/// Mergeable running sums behind every checkpoint column.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleAccumulator {
    /// Points consumed, degenerate ones included.
    pub n: u64,
    pub degenerate: u64,
    pub sum_wd: CompensatedSum,
    pub sum_wh: CompensatedSum,
    pub sum_w: CompensatedSum,
    pub forms: Vec<FormSums>,
}

impl SampleAccumulator {
    pub fn new(num_forms: usize) -> Self {
        SampleAccumulator {
            n: 0,
            degenerate: 0,
            sum_wd: CompensatedSum::new(),
            sum_wh: CompensatedSum::new(),
            sum_w: CompensatedSum::new(),
            forms: vec![FormSums::default(); num_forms],
        }
    }

    /// Add one decoded sample, testing it against every form.
    ///
    /// A degenerate sample counts towards `n` and `degenerate` and still
    /// contributes its (finite) `w_H`; its SD weight is zero, so it adds
    /// nothing else and its partial transposes are not evaluated.
    pub fn accumulate(&mut self, s: &WeightedSample, forms: &[PtForm]) -> Result<()> {
        if forms.len() != self.forms.len() {
            return Err(Error::domain("form list does not match accumulator"));
        }
        self.n += 1;
        self.sum_wh.add(s.w_h);
        if s.degenerate {
            self.degenerate += 1;
            return Ok(());
        }
        self.sum_wd.add(s.w_d);
        self.sum_w.add(s.w);
        for (sums, form) in self.forms.iter_mut().zip(forms) {
            let stats = pt_stats(&s.rho, form)?;
            if stats.is_ppt() {
                sums.count_sep += 1;
                sums.sum_w_sep.add(s.w);
            } else {
                sums.sum_w_neg.add(s.w * stats.negativity);
                sums.sum_w_logneg.add(s.w * stats.log_negativity());
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, o: &SampleAccumulator) {
        assert_eq!(
            self.forms.len(),
            o.forms.len(),
            "merging accumulators with different forms"
        );
        self.n += o.n;
        self.degenerate += o.degenerate;
        self.sum_wd.merge(&o.sum_wd);
        self.sum_wh.merge(&o.sum_wh);
        self.sum_w.merge(&o.sum_w);
        for (a, b) in self.forms.iter_mut().zip(&o.forms) {
            a.merge(b);
        }
    }

    /// Ratio estimates at the current state.
    pub fn checkpoint(&self, forms: &[PtForm]) -> Result<CheckpointRow> {
        if self.n == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.n as f64;
        let est_d = self.sum_wd.value() / n;
        let est_h = self.sum_wh.value() / n;
        let sum_w = self.sum_w.value();
        let est_v_total = sum_w / n;
        let per_form = self
            .forms
            .iter()
            .zip(forms)
            .map(|(f, form)| {
                let est_v_sep = f.sum_w_sep.value() / n;
                FormEstimate {
                    label: form.label(),
                    raw_fraction: f.count_sep as f64 / n,
                    est_v_sep,
                    est_p: est_v_sep / est_v_total,
                }
            })
            .collect();
        let denom = self.forms.len() as f64 * sum_w;
        let mean_negativity = self.forms.iter().map(|f| f.sum_w_neg.value()).sum::<f64>() / denom;
        let mean_log_negativity = self.forms.iter().map(|f| f.sum_w_logneg.value()).sum::<f64>() / denom;
        Ok(CheckpointRow {
            n_points: self.n,
            degenerate: self.degenerate,
            est_d,
            est_h,
            est_dh: est_d * est_h,
            est_v_total,
            forms: per_form,
            mean_negativity,
            mean_log_negativity,
        })
    }
}

/// Estimates for one PT form.
#[derive(Clone, Debug, PartialEq)]
pub struct FormEstimate {
    pub label: String,
    /// Unweighted fraction of points with a positive partial transpose.
    pub raw_fraction: f64,
    pub est_v_sep: f64,
    /// `est_v_sep / est_v_total`.
    pub est_p: f64,
}

/// One line of cumulative estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointRow {
    pub n_points: u64,
    pub degenerate: u64,
    pub est_d: f64,
    pub est_h: f64,
    pub est_dh: f64,
    pub est_v_total: f64,
    pub forms: Vec<FormEstimate>,
    pub mean_negativity: f64,
    pub mean_log_negativity: f64,
}

/// Rows produced by a run together with the final accumulator.
#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Rows produced by this invocation (after any resumed prefix).
    pub rows: Vec<CheckpointRow>,
    pub accumulator: SampleAccumulator,
    /// Points already covered by the checkpoint file at start.
    pub resumed_from: u64,
}

/// Run to completion without persistence.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, None, |_| Ok(()))
}

/// Run, resuming from and persisting to `checkpoint_file` when given, and
/// passing each new row to `on_row` as soon as it is available.
pub fn run_with(
    config: &RunConfig,
    checkpoint_file: Option<&Path>,
    mut on_row: impl FnMut(&CheckpointRow) -> Result<()>,
) -> Result<RunOutput> {
    config.validate()?;
    let hash = config.config_hash();
    let mut acc = match checkpoint_file {
        Some(p) if p.exists() => load_checkpoint(p, &hash, config.forms.len())?,
        _ => SampleAccumulator::new(config.forms.len()),
    };
    if acc.n % config.checkpoint_every != 0 {
        return Err(Error::CheckpointFormat {
            path: checkpoint_file.map(Path::to_path_buf).unwrap_or_default(),
            reason: format!("n = {} is not a multiple of checkpoint_every", acc.n),
        });
    }
    let resumed_from = acc.n;
    let spec = ScrambleSpec::new(config.seed, config.skip, cube_dim(config.m));
    let mut rows = Vec::new();
    while acc.n < config.points {
        let len = config.checkpoint_every.min(config.points - acc.n);
        for block in process_chunk(config, &spec, acc.n, len)? {
            acc.merge(&block);
        }
        let row = acc.checkpoint(&config.forms)?;
        if let Some(p) = checkpoint_file {
            save_checkpoint(p, &hash, &acc)?;
        }
        on_row(&row)?;
        rows.push(row);
    }
    Ok(RunOutput {
        rows,
        accumulator: acc,
        resumed_from,
    })
}

/// Block accumulators for points `start..start + len`, in index order.
fn process_chunk(config: &RunConfig, spec: &ScrambleSpec, start: u64, len: u64) -> Result<Vec<SampleAccumulator>> {
    ordered_blocks(len.div_ceil(BLOCK_SIZE), config.workers, |b| {
        let lo = start + b * BLOCK_SIZE;
        let hi = (lo + BLOCK_SIZE).min(start + len);
        process_block(config, spec, lo, hi)
    })
}

fn process_block(config: &RunConfig, spec: &ScrambleSpec, lo: u64, hi: u64) -> Result<SampleAccumulator> {
    let mut acc = SampleAccumulator::new(config.forms.len());
    let mut coords = vec![0.0; cube_dim(config.m)];
    for i in lo..hi {
        spec.fill(i, &mut coords);
        let s = decode(&coords, config.m)?;
        if !(s.w.is_finite() && s.w_h.is_finite()) {
            return Err(Error::Numerical(format!("non-finite weight at point {i}")));
        }
        acc.accumulate(&s, &config.forms)?;
    }
    Ok(acc)
}

fn push_sum(out: &mut String, key: &str, s: &CompensatedSum) {
    let (a, b) = s.parts();
    let _ = writeln!(out, "{key}={a} {b}");
}

/// Text form of an accumulator. `f64` values use `Display`, which prints
/// the shortest string that parses back to the same bits.
pub fn serialize_checkpoint(config_hash: &str, acc: &SampleAccumulator) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(out, "config_hash={config_hash}");
    let _ = writeln!(out, "n={}", acc.n);
    let _ = writeln!(out, "degenerate={}", acc.degenerate);
    push_sum(&mut out, "sum_wd", &acc.sum_wd);
    push_sum(&mut out, "sum_wh", &acc.sum_wh);
    push_sum(&mut out, "sum_w", &acc.sum_w);
    let _ = writeln!(out, "forms={}", acc.forms.len());
    for (i, f) in acc.forms.iter().enumerate() {
        let _ = writeln!(out, "form{i}.count_sep={}", f.count_sep);
        push_sum(&mut out, &format!("form{i}.sum_w_sep"), &f.sum_w_sep);
        push_sum(&mut out, &format!("form{i}.sum_w_neg"), &f.sum_w_neg);
        push_sum(&mut out, &format!("form{i}.sum_w_logneg"), &f.sum_w_logneg);
    }
    out
}

/// Parse [`serialize_checkpoint`] output, returning the stored hash.
pub fn parse_checkpoint(text: &str) -> std::result::Result<(String, SampleAccumulator), String> {
    let mut lines = text.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err("missing header line".into());
    }
    let map: std::collections::HashMap<&str, &str> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_once('=').ok_or_else(|| format!("bad line '{l}'")))
        .collect::<std::result::Result<_, _>>()?;
    let get = |k: &str| map.get(k).copied().ok_or_else(|| format!("missing key {k}"));
    let int = |k: &str| get(k)?.parse::<u64>().map_err(|e| format!("{k}: {e}"));
    let sum = |k: &str| -> std::result::Result<CompensatedSum, String> {
        let v = get(k)?;
        let (a, b) = v.split_once(' ').ok_or_else(|| format!("{k}: expected two numbers"))?;
        let p = |s: &str| s.parse::<f64>().map_err(|e| format!("{k}: {e}"));
        Ok(CompensatedSum::from_parts(p(a)?, p(b)?))
    };
    let num_forms = int("forms")? as usize;
    let forms = (0..num_forms)
        .map(|i| {
            Ok(FormSums {
                count_sep: int(&format!("form{i}.count_sep"))?,
                sum_w_sep: sum(&format!("form{i}.sum_w_sep"))?,
                sum_w_neg: sum(&format!("form{i}.sum_w_neg"))?,
                sum_w_logneg: sum(&format!("form{i}.sum_w_logneg"))?,
            })
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    let acc = SampleAccumulator {
        n: int("n")?,
        degenerate: int("degenerate")?,
        sum_wd: sum("sum_wd")?,
        sum_wh: sum("sum_wh")?,
        sum_w: sum("sum_w")?,
        forms,
    };
    Ok((get("config_hash")?.to_string(), acc))
}

/// Read a checkpoint, rejecting one written for a different configuration.
pub fn load_checkpoint(path: &Path, expected_hash: &str, num_forms: usize) -> Result<SampleAccumulator> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading checkpoint {}", path.display()), e))?;
    let (hash, acc) = parse_checkpoint(&text).map_err(|reason| Error::CheckpointFormat {
        path: path.to_path_buf(),
        reason,
    })?;
    if hash != expected_hash {
        return Err(Error::ConfigMismatch {
            expected: expected_hash.to_string(),
            found: hash,
        });
    }
    if acc.forms.len() != num_forms {
        return Err(Error::CheckpointFormat {
            path: path.to_path_buf(),
            reason: format!("{} forms stored, {num_forms} expected", acc.forms.len()),
        });
    }
    Ok(acc)
}

/// Write a checkpoint atomically (temporary file, then rename).
pub fn save_checkpoint(path: &Path, config_hash: &str, acc: &SampleAccumulator) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    tmp.set_file_name(name);
    fs::write(&tmp, serialize_checkpoint(config_hash, acc))
        .map_err(|e| Error::io(format!("writing checkpoint {}", tmp.display()), e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(format!("replacing checkpoint {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(m: usize) -> RunConfig {
        RunConfig {
            points: 3000,
            checkpoint_every: 1000,
            ..RunConfig::new(m).unwrap()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small(6);
        assert!(c.validate().is_ok());
        c.checkpoint_every = 0;
        assert!(c.validate().is_err());
        let mut c = small(6);
        c.points = 10;
        assert!(c.validate().is_err());
        let mut c = small(6);
        c.forms = vec![PtForm::Block(4)];
        assert!(c.validate().is_err());
        assert!(RunConfig::new(5).is_err());
    }

    #[test]
    fn hash_ignores_points_and_workers() {
        let a = small(6);
        let b = RunConfig {
            points: 9000,
            workers: 4,
            ..a.clone()
        };
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);
        let c = RunConfig { seed: 2, ..a.clone() };
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn empty_accumulator_rejected() {
        let acc = SampleAccumulator::new(2);
        assert!(matches!(
            acc.checkpoint(&default_forms(6).unwrap()),
            Err(Error::EmptyAccumulator)
        ));
    }

    #[test]
    fn merge_of_singletons_matches_sequential() {
        let c = small(6);
        let spec = ScrambleSpec::new(c.seed, c.skip, cube_dim(6));
        let mut seq = SampleAccumulator::new(2);
        let mut merged = SampleAccumulator::new(2);
        for i in 0..50 {
            let s = decode(&spec.point(35, i).coords, 6).unwrap();
            seq.accumulate(&s, &c.forms).unwrap();
            let mut one = SampleAccumulator::new(2);
            one.accumulate(&s, &c.forms).unwrap();
            merged.merge(&one);
        }
        assert_eq!(seq.n, merged.n);
        assert!((seq.sum_w.value() - merged.sum_w.value()).abs() <= 1e-15 * seq.sum_w.value());
        assert_eq!(seq.forms[0].count_sep, merged.forms[0].count_sep);
    }

    #[test]
    fn rows_and_coherence() {
        let c = small(4);
        let out = run(&c).unwrap();
        assert_eq!(out.rows.len(), 3);
        for (k, r) in out.rows.iter().enumerate() {
            assert_eq!(r.n_points, 1000 * (k as u64 + 1));
            assert_eq!(r.est_dh, r.est_d * r.est_h);
            for f in &r.forms {
                assert_eq!(f.est_p, f.est_v_sep / r.est_v_total);
                assert!(f.raw_fraction <= 1.0);
            }
        }
    }

    #[test]
    fn serialization_round_trips() {
        let out = run(&small(6)).unwrap();
        let text = serialize_checkpoint("abc", &out.accumulator);
        let (hash, acc) = parse_checkpoint(&text).unwrap();
        assert_eq!(hash, "abc");
        assert_eq!(acc, out.accumulator);
        assert!(parse_checkpoint("garbage").is_err());
        assert!(parse_checkpoint(&text.replace("n=", "x=")).is_err());
    }
}
