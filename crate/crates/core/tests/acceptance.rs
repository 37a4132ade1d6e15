//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! values underneath. Exits nonzero when any criterion fails.

use std::time::Instant;

use nalgebra::DMatrix;
use sepvol::analysis::{labos_check, levy_gromov_check, primorial_limit_term};
use sepvol::boundary::{estimate_area, AreaConfig, PptLevelSet, SphereLevelSet};
use sepvol::estimator::{run, CheckpointRow, RunConfig};
use sepvol::exactform::{
    conjectured_probability, conjectured_separable_volume, diagonal_volume, primorial, qubit_pair_boundary_area,
    total_volume, truncated_haar_volume, ExactValue,
};
use sepvol::param::{cube_dim, decode, eigenvalues_from_angles, SimplexAngles};
use sepvol::qmc::{marginal_sup_deviation, ScrambleSpec, DEFAULT_SEED, DEFAULT_SKIP};
use sepvol::quantum::{default_forms, partial_transpose, pt_spectrum, pt_stats, FactorSplit, PtForm};
use sepvol::CMatrix;

struct Criterion {
    ok: bool,
    details: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Criterion {
            ok: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.ok &= ok;
        self.details
            .push(format!("{} {what}", if ok { "ok  " } else { "MISS" }));
    }

    fn report(&self, id: u32, title: &str) -> bool {
        println!("{} criterion {id}: {title}", if self.ok { "PASS" } else { "FAIL" });
        for d in &self.details {
            println!("       {d}");
        }
        self.ok
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, usize::from)
}

fn significant(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new();
    let start = Instant::now();
    let table: Vec<(&str, ExactValue, f64)> = vec![
        ("H_4", truncated_haar_volume(4).unwrap(), 10.0145),
        ("H_6", truncated_haar_volume(6).unwrap(), 0.809794),
        ("H_8", truncated_haar_volume(8).unwrap(), 0.000316395),
        ("H_9", truncated_haar_volume(9).unwrap(), 5.81699e-7),
        ("D_4", diagonal_volume(4).unwrap(), 0.563977),
        ("D_6", diagonal_volume(6).unwrap(), 2.16914e-6),
        ("V_4^(s+n)", total_volume(4).unwrap(), 5.64794),
        ("V_6^(s+n)", total_volume(6).unwrap(), 1.75655e-6),
        ("V_4^s", conjectured_separable_volume(4).unwrap(), 0.416186),
        ("V_6^s", conjectured_separable_volume(6).unwrap(), 2.19053e-9),
        ("P_4", conjectured_probability(4).unwrap(), 0.0736881),
        ("P_6", conjectured_probability(6).unwrap(), 0.00124706),
        // Quoted to five significant digits ("34.911").
        ("A_4^(s+n)", qubit_pair_boundary_area(), 34.911),
    ];
    for (name, value, paper) in table {
        let x = value.to_f64();
        let digits = if name.starts_with("A_4") { 5 } else { 6 };
        c.check(
            rel(significant(x, digits), paper) < 1e-12,
            format!("{name} = {} = {x:.6e} (paper {paper})", value.factored_form()),
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check(elapsed < 1.0, format!("evaluated in {elapsed:.3} s"));
    c
}

fn run_m(m: usize, points: u64) -> CheckpointRow {
    let config = RunConfig {
        points,
        checkpoint_every: points,
        workers: workers(),
        ..RunConfig::new(m).unwrap()
    };
    run(&config).unwrap().rows.pop().unwrap()
}

fn criterion_2() -> (Criterion, CheckpointRow) {
    let mut c = Criterion::new();
    let r = run_m(6, 1_000_000);
    c.check(
        rel(r.est_h, 0.809794) <= 0.01,
        format!(
            "est_H = {:.6} (exact .809794, {:+.2}%)",
            r.est_h,
            100.0 * (r.est_h / 0.809794 - 1.0)
        ),
    );
    c.check(
        rel(r.est_d, 2.16914e-6) <= 0.01,
        format!(
            "est_D = {:.6e} (exact 2.16914e-6, {:+.2}%)",
            r.est_d,
            100.0 * (r.est_d / 2.16914e-6 - 1.0)
        ),
    );
    c.check(
        rel(r.est_v_total, 1.75655e-6) <= 0.05,
        format!(
            "est_V_total = {:.6e} (exact 1.75655e-6, {:+.2}%)",
            r.est_v_total,
            100.0 * (r.est_v_total / 1.75655e-6 - 1.0)
        ),
    );
    for (f, paper) in r.forms.iter().zip([0.0499, 0.0431]) {
        c.check(
            (f.raw_fraction - paper).abs() <= 0.005,
            format!("{} raw PPT fraction = {:.5} (paper {paper})", f.label, f.raw_fraction),
        );
    }
    for f in &r.forms {
        c.check(
            (8e-4..=2e-3).contains(&f.est_p),
            format!("{} est_P = {:.6e} (want [8e-4, 2e-3])", f.label, f.est_p),
        );
    }
    c.check(
        (r.mean_negativity - 0.111).abs() <= 0.005,
        format!("mean negativity = {:.6} (paper .111)", r.mean_negativity),
    );
    c.check(
        (r.mean_log_negativity - 0.197).abs() <= 0.008,
        format!("mean log negativity = {:.6} (paper .197)", r.mean_log_negativity),
    );
    (c, r)
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new();
    let r = run_m(4, 1_000_000);
    c.check(
        rel(r.est_v_total, 5.64794) <= 0.02,
        format!(
            "est_V_total = {:.6} (exact 5.64794, {:+.2}%)",
            r.est_v_total,
            100.0 * (r.est_v_total / 5.64794 - 1.0)
        ),
    );
    let p = r.forms[0].est_p;
    c.check(
        rel(p, 0.0736881) <= 0.10,
        format!(
            "est_P = {p:.6} (exact .0736881, {:+.2}%)",
            100.0 * (p / 0.0736881 - 1.0)
        ),
    );
    c
}

fn criterion_4(m6: &CheckpointRow) -> Criterion {
    let mut c = Criterion::new();
    let m6_min = m6.forms.iter().map(|f| f.est_p).fold(f64::INFINITY, f64::min);
    for m in [8usize, 9] {
        let config = RunConfig {
            points: 100_000,
            checkpoint_every: 100_000,
            workers: workers(),
            ..RunConfig::new(m).unwrap()
        };
        let r = match run(&config) {
            Ok(mut out) => out.rows.pop().unwrap(),
            Err(e) => {
                c.check(false, format!("m = {m}: run failed: {e}"));
                continue;
            }
        };
        c.check(
            true,
            format!(
                "m = {m}: 10^5 points without numerical failure ({} degenerate)",
                r.degenerate
            ),
        );
        let exact = truncated_haar_volume(m).unwrap().to_f64();
        c.check(
            rel(r.est_h, exact) <= 0.25,
            format!(
                "m = {m}: est_H = {:.6e} (exact {exact:.6e}, {:+.2}%)",
                r.est_h,
                100.0 * (r.est_h / exact - 1.0)
            ),
        );
        for f in &r.forms {
            c.check(
                f.est_p < m6_min,
                format!(
                    "m = {m}: {} PPT probability {:.3e} < m = 6 estimate {m6_min:.3e}",
                    f.label, f.est_p
                ),
            );
        }
    }
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new();
    let ls = PptLevelSet::new(6, PtForm::Block(3)).unwrap();
    let cfg = AreaConfig {
        workers: workers(),
        ..AreaConfig::new(ls.m * ls.m - 1, 50_000)
    };
    let out = estimate_area(&ls, &cfg).unwrap();
    let last = out.rows.last().unwrap();
    let ratio = last.area / 1.094257e-6;
    c.check(
        (0.5..=2.0).contains(&ratio),
        format!("m = 6 area = {:.6e} (paper 1.094257e-6, ratio {ratio:.3e})", last.area),
    );
    let feasible = last.feasible as f64 / last.base_points as f64;
    c.check(
        (feasible - 0.84).abs() <= 0.05,
        format!("feasible/base = {feasible:.4} (paper .84)"),
    );
    let per = last.roots as f64 / last.feasible.max(1) as f64;
    c.check(
        (per - 2.08).abs() <= 0.2,
        format!("roots/feasible = {per:.4} (paper 2.08)"),
    );
    let sphere = SphereLevelSet {
        dim: 3,
        center: 0.5,
        radius: 0.3,
    };
    let scfg = AreaConfig::new(3, 100_000);
    let a = estimate_area(&sphere, &scfg).unwrap().rows.pop().unwrap().area;
    let exact = sphere.exact_area_3d();
    c.check(
        rel(a, exact) <= 0.05,
        format!(
            "synthetic sphere area = {a:.6} (exact {exact:.6}, {:+.3}%)",
            100.0 * (a / exact - 1.0)
        ),
    );
    c
}

/// Analytic Jacobian against central differences of the first `m - 1`
/// eigenvalues.
fn jacobian_residual(angles: &[f64]) -> f64 {
    let n = angles.len();
    let h = 1e-6;
    let (_, jac) = eigenvalues_from_angles(&SimplexAngles::new(angles.to_vec()).unwrap());
    let lam = |a: &[f64]| eigenvalues_from_angles(&SimplexAngles::new(a.to_vec()).unwrap()).0;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for col in 0..n {
        let mut ap = angles.to_vec();
        let mut am = angles.to_vec();
        ap[col] += h;
        am[col] -= h;
        let (lp, lm) = (lam(&ap), lam(&am));
        for row in 0..n {
            j[(row, col)] = (lp[row] - lm[row]) / (2.0 * h);
        }
    }
    rel(j.determinant().abs(), jac)
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new();
    let start = Instant::now();

    // Unitarity-derived invariants, involution and PPT ⇔ zero negativity.
    let spec = ScrambleSpec::new(DEFAULT_SEED, DEFAULT_SKIP, cube_dim(6));
    let forms = default_forms(6).unwrap();
    let (mut worst_trace, mut worst_herm, mut worst_inv, mut worst_spec) = (0f64, 0f64, 0f64, 0f64);
    let mut ppt_mismatch = 0;
    let split = FactorSplit::new(vec![2, 3], vec![0]).unwrap();
    let comp = PtForm::Factor(split.complement().unwrap());
    let split = PtForm::Factor(split);
    for i in 0..10_000 {
        let s = decode(&spec.point(35, i).coords, 6).unwrap();
        let rho = s.rho.matrix();
        worst_trace = worst_trace.max((rho.trace().re - 1.0).abs());
        worst_herm = worst_herm.max((rho - rho.adjoint()).camax());
        for f in &forms {
            let pt = partial_transpose(rho, f).unwrap();
            worst_inv = worst_inv.max((partial_transpose(&pt, f).unwrap() - rho).camax());
            worst_herm = worst_herm.max((&pt - pt.adjoint()).camax());
            worst_trace = worst_trace.max((pt.trace().re - 1.0).abs());
            let st = pt_stats(&s.rho, f).unwrap();
            if st.is_ppt() != (st.negativity == 0.0) {
                ppt_mismatch += 1;
            }
        }
        let a = pt_spectrum(&s.rho, &split).unwrap();
        let b = pt_spectrum(&s.rho, &comp).unwrap();
        worst_spec = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst_spec, f64::max);
    }
    c.check(
        worst_trace < 1e-10 && worst_herm < 1e-10,
        format!("10^4 decoded states: trace defect {worst_trace:.1e}, Hermitian defect {worst_herm:.1e}"),
    );
    c.check(worst_inv == 0.0, format!("PT involution defect {worst_inv:.1e}"));
    c.check(
        ppt_mismatch == 0,
        format!("PPT vs zero-negativity mismatches: {ppt_mismatch}"),
    );
    c.check(
        worst_spec < 1e-9,
        format!("PT spectrum identity (factor A vs B): max difference {worst_spec:.1e}"),
    );

    // Unitarity and unit determinant over 10⁴ angle tuples.
    let mut worst_u = 0f64;
    for i in 0..10_000 {
        let x = spec.point(35, i).coords;
        let (u, _) = sepvol::param::unitary_from_angles(&sepvol::param::EulerAngles::from_unit(6, &x[5..]).unwrap());
        let eye = CMatrix::identity(6, 6);
        worst_u = worst_u.max((u.adjoint() * &u - eye).camax());
        worst_u = worst_u.max((u.determinant() - num_complex::Complex64::new(1.0, 0.0)).norm());
    }
    c.check(
        worst_u < 1e-10,
        format!("U†U = I and det U = 1 over 10^4 tuples: max defect {worst_u:.1e}"),
    );

    // Jacobian against finite differences at 100 interior points.
    let jspec = ScrambleSpec::new(7, 0, 5);
    let mut worst_j = 0f64;
    for i in 1..=100 {
        let angles: Vec<f64> = jspec.point(5, i).coords.iter().map(|x| 0.1 + 1.3 * x).collect();
        worst_j = worst_j.max(jacobian_residual(&angles));
    }
    c.check(
        worst_j < 1e-5,
        format!("Jacobian vs central differences: max relative error {worst_j:.1e}"),
    );

    // Worker-count bit identity.
    let base = RunConfig {
        points: 20_000,
        checkpoint_every: 5_000,
        ..RunConfig::new(6).unwrap()
    };
    let rows: Vec<Vec<CheckpointRow>> = [1, 2, 8]
        .iter()
        .map(|&w| {
            run(&RunConfig {
                workers: w,
                ..base.clone()
            })
            .unwrap()
            .rows
        })
        .collect();
    c.check(
        rows[0] == rows[1] && rows[0] == rows[2],
        "rows identical for 1, 2 and 8 workers".into(),
    );

    // Halton marginal uniformity.
    let hspec = ScrambleSpec::new(DEFAULT_SEED, DEFAULT_SKIP, 35);
    let mut worst_ks = 0f64;
    let pts: Vec<Vec<f64>> = (0..100_000).map(|i| hspec.point(35, i).coords).collect();
    for j in 0..35 {
        let mut col: Vec<f64> = pts.iter().map(|p| p[j]).collect();
        worst_ks = worst_ks.max(marginal_sup_deviation(&mut col));
    }
    c.check(
        worst_ks < 0.01,
        format!("Halton marginal sup-norm deviation at 10^5 points: {worst_ks:.2e}"),
    );
    c.check(
        true,
        format!("property suites ran in {:.1} s", start.elapsed().as_secs_f64()),
    );
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new();
    let r = levy_gromov_check(35, 1.77407e-6, 0.0013566 * 1.77407e-6, 1.09426e-6).unwrap();
    c.check(
        rel(r.w, 0.05734) <= 0.02,
        format!(
            "w = {:.6} (paper .05734), ratio A/V = {:.6}, holds = {}",
            r.w, r.boundary_ratio, r.holds
        ),
    );
    let p14 = primorial(14);
    let l4 = labos_check(&2310u32.into(), 4).unwrap();
    c.check(l4, format!("labos_check(2310, 4) = {l4}"));
    let l19 = labos_check(&p14, 19).unwrap();
    c.check(l19, format!("labos_check(14#, 19) = {l19}"));
    let l18 = labos_check(&p14, 18).unwrap();
    c.check(!l18, format!("labos_check(14#, 18) = {l18} (criterion expects false)"));
    let t = primorial_limit_term(1000).unwrap();
    c.check(
        (t - std::f64::consts::E).abs() <= 0.01,
        format!("primorial_limit_term(1000) = {t:.6} (e = {:.6})", std::f64::consts::E),
    );
    c
}

fn main() {
    let mut all = true;
    all &= criterion_1().report(1, "exact constants to 6 significant digits in < 1 s");
    let (c2, m6) = criterion_2();
    all &= c2.report(2, "m = 6 QMC at 10^6 points");
    all &= criterion_3().report(3, "m = 4 QMC at 10^6 points");
    all &= criterion_4(&m6).report(4, "m = 8 and m = 9 pipelines at 10^5 points");
    all &= criterion_5().report(5, "boundary area and root statistics");
    all &= criterion_6().report(6, "property suites");
    all &= criterion_7().report(7, "analysis checks");
    if !all {
        println!("acceptance: some criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
