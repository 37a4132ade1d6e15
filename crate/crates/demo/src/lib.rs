//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export is a thin wrapper over a plain Rust function of the same
//! purpose, so the logic can be tested natively.

use sepvol::boundary::{LevelSet, PptLevelSet};
use sepvol::estimator::{run, RunConfig};
use sepvol::exactform::{conjectured_probability, total_volume};
use sepvol::param::cube_dim;
use sepvol::qmc::ScrambleSpec;
use sepvol::quantum::{default_forms, PtForm};
use sepvol::Result;
use wasm_bindgen::prelude::*;

/// Values per row returned by [`convergence`].
pub const CONVERGENCE_STRIDE: usize = 5;

/// Points `0..n` of the scrambled sequence for `m`, projected onto cube
/// coordinates `i` and `j`, as interleaved `x, y` pairs.
pub fn scatter(m: usize, seed: u64, skip: u64, n: u64, i: usize, j: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(sepvol::Error::UnsupportedDimension(m));
    }
    let dim = cube_dim(m);
    if i >= dim || j >= dim {
        return Err(sepvol::Error::Domain(format!("coordinates must be below {dim}")));
    }
    let spec = ScrambleSpec::new(seed, skip, dim);
    let mut x = vec![0.0; dim];
    let mut out = Vec::with_capacity(2 * n as usize);
    for k in 0..n {
        spec.fill(k, &mut x);
        out.extend([x[i], x[j]]);
    }
    Ok(out)
}

fn parse_form(m: usize, label: &str) -> Result<PtForm> {
    if label.is_empty() {
        return Ok(default_forms(m)?.remove(0));
    }
    label.parse()
}

/// Minimum PT eigenvalue along the free coordinate, holding the other
/// coordinates at sequence point `index`. Returns `samples` values for
/// `t = 0, 1/(samples-1), ..., 1`.
pub fn pt_profile(m: usize, form: &str, seed: u64, index: u64, free_index: usize, samples: usize) -> Result<Vec<f64>> {
    let ls = PptLevelSet::new(m, parse_form(m, form)?)?;
    let dim = ls.dim();
    if free_index >= dim || samples < 2 {
        return Err(sepvol::Error::Domain(
            "need free_index < cube dimension and samples >= 2".into(),
        ));
    }
    let mut x = vec![0.0; dim];
    ScrambleSpec::new(seed, sepvol::qmc::DEFAULT_SKIP, dim).fill(index, &mut x);
    (0..samples)
        .map(|s| {
            x[free_index] = s as f64 / (samples - 1) as f64;
            ls.eval(&x)
        })
        .collect()
}

/// Running estimates for a short run, flattened as rows of
/// `n, est_D, est_H, est_V_total, P` where `P` uses the first default form.
pub fn convergence(m: usize, seed: u64, points: u64, every: u64) -> Result<Vec<f64>> {
    let config = RunConfig {
        points,
        checkpoint_every: every,
        seed,
        workers: 1,
        ..RunConfig::new(m)?
    };
    let out = run(&config)?;
    Ok(out
        .rows
        .iter()
        .flat_map(|r| [r.n_points as f64, r.est_d, r.est_h, r.est_v_total, r.forms[0].est_p])
        .collect())
}

/// `[V_total, P]` in closed form; `P` is `NaN` where no conjecture exists.
pub fn reference_values(m: usize) -> Result<Vec<f64>> {
    let p = conjectured_probability(m).map_or(f64::NAN, |p| p.to_f64());
    Ok(vec![total_volume(m)?.to_f64(), p])
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = scatter)]
pub fn scatter_js(m: usize, seed: u64, n: u32, i: usize, j: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(scatter(m, seed, sepvol::qmc::DEFAULT_SKIP, u64::from(n), i, j))
}

#[wasm_bindgen(js_name = ptProfile)]
pub fn pt_profile_js(
    m: usize,
    form: &str,
    seed: u64,
    index: u32,
    free_index: usize,
    samples: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(pt_profile(m, form, seed, u64::from(index), free_index, samples))
}

#[wasm_bindgen(js_name = convergence)]
pub fn convergence_js(m: usize, seed: u64, points: u32, every: u32) -> std::result::Result<Vec<f64>, JsError> {
    js(convergence(m, seed, u64::from(points), u64::from(every)))
}

#[wasm_bindgen(js_name = referenceValues)]
pub fn reference_values_js(m: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(reference_values(m))
}

#[wasm_bindgen(js_name = cubeDim)]
pub fn cube_dim_js(m: usize) -> usize {
    cube_dim(m)
}
