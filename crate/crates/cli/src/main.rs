//! `sepvol`: QMC estimation of SD volumes, separability probabilities and
//! boundary areas from the command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
//! 4 numerical failure.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use sepvol::analysis::{
    divisor_power_sum, labos_check, levy_gromov_check, primorial_limit_term, totient, KAPPA_EXTENSION_34,
    SCALAR_CURVATURE_MINIMUM,
};
use sepvol::boundary::{estimate_area_with, AreaConfig, BoundaryRow, PptLevelSet, DEFAULT_GRID};
use sepvol::estimator::{run_with, CheckpointRow, RunConfig};
use sepvol::exactform::{constants_for, diagonal_volume, primorial, total_volume, truncated_haar_volume};
use sepvol::param::cube_dim;
use sepvol::qmc::{DEFAULT_SEED, DEFAULT_SKIP};
use sepvol::quantum::{default_forms, PtForm};
use serde_json::json;

use output::{Cell, Format, Row, RowWriter};

#[derive(Parser)]
#[command(
    name = "sepvol",
    version,
    about = "Scrambled-Halton estimates of SD volumes and separability probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form constants for dimension m.
    Constants {
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run the volume and probability estimator.
    Estimate(EstimateArgs),
    /// Estimate the area of the PPT boundary.
    Boundary(BoundaryArgs),
    /// Levy-Gromov isoperimetric comparison.
    IsoCheck(IsoArgs),
    /// Number-theoretic helpers.
    Ntheory {
        #[command(subcommand)]
        op: NtheoryOp,
        #[arg(long, value_enum, default_value = "json", global = true)]
        format: Format,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SKIP)]
    skip: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "SEPVOL_WORKERS")]
    workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

impl Common {
    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1_000_000)]
    points: u64,
    #[arg(long, default_value_t = 100_000)]
    checkpoint_every: u64,
    /// Resume from and persist to this file.
    #[arg(long)]
    checkpoint_file: Option<PathBuf>,
    /// PT forms, comma separated (e.g. block3,block2 or pt2of3x3).
    #[arg(long, value_delimiter = ',')]
    forms: Option<Vec<String>>,
    /// Add relative deviations of est_D, est_H and est_V_total from the exact values.
    #[arg(long)]
    deviation: bool,
}

#[derive(Args)]
struct BoundaryArgs {
    #[command(flatten)]
    common: Common,
    /// Number of base points.
    #[arg(long, default_value_t = 10_000)]
    points: u64,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Cube coordinate scanned for roots (default: the last one).
    #[arg(long)]
    free_index: Option<usize>,
    /// PT form whose minimum eigenvalue defines the boundary.
    #[arg(long)]
    form: Option<String>,
}

#[derive(Args)]
struct IsoArgs {
    /// Dimension of the state space.
    #[arg(long, default_value_t = 35)]
    d: u32,
    #[arg(long, required_unless_present = "estimate_csv")]
    v_total: Option<f64>,
    #[arg(long, required_unless_present = "estimate_csv")]
    v_sep: Option<f64>,
    #[arg(long, required_unless_present = "boundary_csv")]
    area: Option<f64>,
    /// Take V_total and V_sep from the last row of an `estimate` CSV.
    #[arg(long)]
    estimate_csv: Option<PathBuf>,
    /// Column prefix picking the PT form in --estimate-csv (default: the first form).
    #[arg(long)]
    form: Option<String>,
    /// Take the area from the last row of a `boundary` CSV.
    #[arg(long)]
    boundary_csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand)]
enum NtheoryOp {
    /// Euler's totient.
    Totient(NumberArg),
    /// Sum of the k-th powers of the divisors.
    Sigma {
        #[command(flatten)]
        n: NumberArg,
        #[arg(long)]
        k: u32,
    },
    /// Whether sigma_k(n) exceeds totient(n)^(k+1).
    Labos {
        #[command(flatten)]
        n: NumberArg,
        #[arg(long)]
        k: u32,
    },
    /// (p_l#)^(1/p_l), which tends to e.
    Limit {
        #[arg(long)]
        l: usize,
    },
    /// Documented literal constants.
    Literals,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct NumberArg {
    /// Decimal integer.
    #[arg(long)]
    n: Option<String>,
    /// Use the l-th primorial as n.
    #[arg(long)]
    primorial: Option<usize>,
}

impl NumberArg {
    fn value(&self) -> Result<BigUint, Failure> {
        match (&self.n, self.primorial) {
            (Some(s), _) => s
                .parse()
                .map_err(|_| Failure::usage(format!("'{s}' is not a nonnegative integer"))),
            (None, Some(l)) if l >= 1 => Ok(primorial(l)),
            _ => Err(Failure::usage("primorial index must be at least 1")),
        }
    }
}

/// An error with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn io(context: &str, e: impl std::fmt::Display) -> Self {
        Failure {
            code: 3,
            message: format!("{context}: {e}"),
        }
    }
}

impl From<sepvol::Error> for Failure {
    fn from(e: sepvol::Error) -> Self {
        use sepvol::Error as E;
        let code = match &e {
            E::UnsupportedDimension(_) | E::Domain(_) | E::ConfigMismatch { .. } => 2,
            E::Io { .. } | E::CheckpointFormat { .. } => 3,
            E::Degenerate(_) | E::EmptyAccumulator | E::Unfactorable(_) | E::Numerical(_) => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Constants { m, format } => cmd_constants(m, format),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Boundary(a) => cmd_boundary(&a),
        Command::IsoCheck(a) => cmd_iso_check(&a),
        Command::Ntheory { op, format } => cmd_ntheory(&op, format),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sepvol: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn print_json(v: &serde_json::Value) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Failure::io("encoding JSON", e))?;
    use std::io::Write;
    writeln!(std::io::stdout().lock(), "{s}").map_err(|e| Failure::io("writing stdout", e))
}

fn print_rows(rows: &[Row], format: Format) -> Result<(), Failure> {
    let mut w = RowWriter::open(None, format, false).map_err(|e| Failure::io("writing stdout", e))?;
    for r in rows {
        w.write(r).map_err(|e| Failure::io("writing stdout", e))?;
    }
    Ok(())
}

fn cmd_constants(m: usize, format: Format) -> Result<(), Failure> {
    let constants = constants_for(m)?;
    match format {
        Format::Json => {
            let arr: Vec<_> = constants
                .iter()
                .map(|c| {
                    json!({
                        "name": c.name,
                        "factored_form": c.value.factored_form(),
                        "expanded_form": c.value.expanded_form(),
                        "decimal": c.value.to_f64(),
                    })
                })
                .collect();
            print_json(&serde_json::Value::Array(arr))
        }
        Format::Csv => {
            let rows: Vec<Row> = constants
                .iter()
                .map(|c| {
                    vec![
                        ("name".into(), Cell::Text(c.name.clone())),
                        ("factored_form".into(), Cell::Text(c.value.factored_form())),
                        ("expanded_form".into(), Cell::Text(c.value.expanded_form())),
                        ("decimal".into(), Cell::Float(c.value.to_f64())),
                    ]
                })
                .collect();
            print_rows(&rows, format)
        }
    }
}

fn parse_forms(m: usize, forms: Option<&[String]>) -> Result<Vec<PtForm>, Failure> {
    match forms {
        None => Ok(default_forms(m)?),
        Some(list) => list
            .iter()
            .map(|s| {
                let f: PtForm = s.parse()?;
                f.check(m)?;
                Ok(f)
            })
            .collect(),
    }
}

/// Column prefix for per-form volume and probability columns. PPT only
/// certifies separability up to `m = 6`, so larger systems say "ppt".
fn kind(m: usize) -> &'static str {
    if m > 6 {
        "ppt"
    } else {
        "sep"
    }
}

/// Exact D, H and V for the deviation columns, where known.
struct Exact {
    d: Option<f64>,
    h: Option<f64>,
    v: Option<f64>,
}

impl Exact {
    fn for_m(m: usize) -> Self {
        Exact {
            d: diagonal_volume(m).ok().map(|v| v.to_f64()),
            h: truncated_haar_volume(m).ok().map(|v| v.to_f64()),
            v: total_volume(m).ok().map(|v| v.to_f64()),
        }
    }
}

fn estimate_row(m: usize, r: &CheckpointRow, exact: Option<&Exact>) -> Row {
    let k = kind(m);
    let mut row: Row = vec![
        ("n".into(), Cell::Int(r.n_points)),
        ("degenerate".into(), Cell::Int(r.degenerate)),
        ("est_D".into(), Cell::Float(r.est_d)),
        ("est_H".into(), Cell::Float(r.est_h)),
        ("est_DH".into(), Cell::Float(r.est_dh)),
        ("est_V_total".into(), Cell::Float(r.est_v_total)),
    ];
    for f in &r.forms {
        row.push((format!("{}_raw_fraction", f.label), Cell::Float(f.raw_fraction)));
        row.push((format!("{}_V_{k}", f.label), Cell::Float(f.est_v_sep)));
        row.push((format!("{}_P_{k}", f.label), Cell::Float(f.est_p)));
    }
    row.push(("mean_negativity".into(), Cell::Float(r.mean_negativity)));
    row.push(("mean_log_negativity".into(), Cell::Float(r.mean_log_negativity)));
    if let Some(e) = exact {
        let dev = |est: f64, exact: Option<f64>| exact.map_or(f64::NAN, |x| est / x - 1.0);
        row.push(("dev_D".into(), Cell::Float(dev(r.est_d, e.d))));
        row.push(("dev_H".into(), Cell::Float(dev(r.est_h, e.h))));
        row.push(("dev_V_total".into(), Cell::Float(dev(r.est_v_total, e.v))));
    }
    row
}

fn cmd_estimate(a: &EstimateArgs) -> Result<(), Failure> {
    let c = &a.common;
    let config = RunConfig {
        m: c.m,
        points: a.points,
        checkpoint_every: a.checkpoint_every,
        seed: c.seed,
        skip: c.skip,
        workers: c.workers(),
        forms: parse_forms(c.m, a.forms.as_deref())?,
    };
    config.validate()?;
    let resuming = a.checkpoint_file.as_deref().is_some_and(Path::exists);
    let out = c.out.as_deref();
    let mut writer = RowWriter::open(out, c.format, resuming).map_err(|e| Failure::io("opening output", e))?;
    let exact = a.deviation.then(|| Exact::for_m(c.m));
    let result = run_with(&config, a.checkpoint_file.as_deref(), |row| {
        writer
            .write(&estimate_row(c.m, row, exact.as_ref()))
            .map_err(|e| sepvol::Error::Io {
                context: "writing output".into(),
                source: e,
            })
    })?;
    if result.accumulator.degenerate > 0 {
        eprintln!(
            "sepvol: {} degenerate samples given zero weight",
            result.accumulator.degenerate
        );
    }
    Ok(())
}

fn boundary_row(r: &BoundaryRow) -> Row {
    vec![
        ("base_points".into(), Cell::Int(r.base_points)),
        ("feasible".into(), Cell::Int(r.feasible)),
        ("roots".into(), Cell::Int(r.roots)),
        ("area".into(), Cell::Float(r.area)),
    ]
}

fn cmd_boundary(a: &BoundaryArgs) -> Result<(), Failure> {
    let c = &a.common;
    let form = match &a.form {
        Some(s) => s.parse()?,
        None => default_forms(c.m)?.remove(0),
    };
    let ls = PptLevelSet::new(c.m, form)?;
    let cfg = AreaConfig {
        base_points: a.points,
        grid: a.grid,
        seed: c.seed,
        skip: c.skip,
        free_index: a.free_index.unwrap_or(cube_dim(c.m) - 1),
        workers: c.workers(),
    };
    let mut writer =
        RowWriter::open(c.out.as_deref(), c.format, false).map_err(|e| Failure::io("opening output", e))?;
    let out = estimate_area_with(&ls, &cfg, |row| {
        writer.write(&boundary_row(row)).map_err(|e| sepvol::Error::Io {
            context: "writing output".into(),
            source: e,
        })
    })?;
    let t = &out.totals;
    if t.grazing + t.unresolved + t.skipped_nodes > 0 {
        eprintln!(
            "sepvol: skipped {} grazing roots, {} unresolved brackets, {} failed grid nodes",
            t.grazing, t.unresolved, t.skipped_nodes
        );
    }
    Ok(())
}

/// Last data row of a CSV as (header, values).
fn last_csv_row(path: &Path) -> Result<(Vec<String>, Vec<String>), Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?;
    let headers: Vec<String> = r
        .headers()
        .map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut last = None;
    for rec in r.records() {
        last = Some(rec.map_err(|e| Failure::io(&format!("reading {}", path.display()), e))?);
    }
    let last = last.ok_or_else(|| Failure::usage(format!("{} has no data rows", path.display())))?;
    Ok((headers, last.iter().map(str::to_string).collect()))
}

fn column(headers: &[String], values: &[String], pick: impl Fn(&str) -> bool, what: &str) -> Result<f64, Failure> {
    let i = headers
        .iter()
        .position(|h| pick(h))
        .ok_or_else(|| Failure::usage(format!("no column for {what}")))?;
    values[i]
        .parse()
        .map_err(|_| Failure::usage(format!("column {} is not a number", headers[i])))
}

fn cmd_iso_check(a: &IsoArgs) -> Result<(), Failure> {
    let (mut v_total, mut v_sep, mut area) = (a.v_total, a.v_sep, a.area);
    if let Some(p) = &a.estimate_csv {
        let (h, v) = last_csv_row(p)?;
        v_total = Some(column(&h, &v, |c| c == "est_V_total", "est_V_total")?);
        let prefix = a.form.clone().unwrap_or_default();
        v_sep = Some(column(
            &h,
            &v,
            |c| c.starts_with(&prefix) && (c.ends_with("_V_sep") || c.ends_with("_V_ppt")),
            "the separable volume",
        )?);
    }
    if let Some(p) = &a.boundary_csv {
        let (h, v) = last_csv_row(p)?;
        area = Some(column(&h, &v, |c| c == "area", "area")?);
    }
    let (Some(vt), Some(vs), Some(ar)) = (v_total, v_sep, area) else {
        return Err(Failure::usage("need V_total, V_sep and the area"));
    };
    let r = levy_gromov_check(a.d, vt, vs, ar)?;
    let row: Row = vec![
        ("d".into(), Cell::Int(u64::from(r.d))),
        ("alpha".into(), Cell::Float(r.alpha)),
        ("boundary_ratio".into(), Cell::Float(r.boundary_ratio)),
        ("ball_volume".into(), Cell::Float(r.ball_volume)),
        ("s_alpha".into(), Cell::Float(r.s_alpha)),
        ("w".into(), Cell::Float(r.w)),
        ("holds".into(), Cell::Bool(r.holds)),
    ];
    print_rows(&[row], a.format)
}

fn cmd_ntheory(op: &NtheoryOp, format: Format) -> Result<(), Failure> {
    let row: Row = match op {
        NtheoryOp::Totient(n) => {
            let n = n.value()?;
            vec![
                ("n".into(), Cell::Text(n.to_string())),
                ("totient".into(), Cell::Text(totient(&n)?.to_string())),
            ]
        }
        NtheoryOp::Sigma { n, k } => {
            let n = n.value()?;
            vec![
                ("n".into(), Cell::Text(n.to_string())),
                ("k".into(), Cell::Int(u64::from(*k))),
                ("sigma".into(), Cell::Text(divisor_power_sum(&n, *k)?.to_string())),
            ]
        }
        NtheoryOp::Labos { n, k } => {
            let n = n.value()?;
            vec![
                ("n".into(), Cell::Text(n.to_string())),
                ("k".into(), Cell::Int(u64::from(*k))),
                ("holds".into(), Cell::Bool(labos_check(&n, *k)?)),
            ]
        }
        NtheoryOp::Limit { l } => vec![
            ("l".into(), Cell::Int(*l as u64)),
            ("term".into(), Cell::Float(primorial_limit_term(*l)?)),
            ("e".into(), Cell::Float(std::f64::consts::E)),
        ],
        NtheoryOp::Literals => vec![
            ("scalar_curvature_minimum".into(), Cell::Float(SCALAR_CURVATURE_MINIMUM)),
            ("kappa_extension_34".into(), Cell::Float(KAPPA_EXTENSION_34)),
        ],
    };
    print_rows(&[row], format)
}
