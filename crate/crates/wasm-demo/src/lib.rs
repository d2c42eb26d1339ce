//! Browser bindings: a kernel heatmap, a maximal-function profile and a
//! major-arc point classifier. Each export has a plain Rust twin returning
//! [`levelset_core::Result`] so the logic is testable off the browser.

use levelset_core::arcs::{best_rational_t, ArcGeometry, DyadicLevel, TorusPoint};
use levelset_core::expsum::{sup_profile, CoefficientVector, GridSpec, Kernel};
use levelset_core::{LabError, Rational};
use serde_json::json;
use wasm_bindgen::prelude::*;

pub const MAX_HEATMAP_N: u64 = 2048;
pub const MAX_HEATMAP_SIZE: u32 = 256;
pub const MAX_PROFILE_N: u64 = 4096;

fn invalid(msg: &str) -> LabError {
    LabError::InvalidInput(msg.into())
}

/// `|K_N(x, t)| / K_N(0, 0)` on a `size × size` grid of `[0, 1)²`, rows
/// indexed by `t`.
pub fn heatmap(n: u64, size: u32) -> levelset_core::Result<Vec<f32>> {
    if n > MAX_HEATMAP_N || size == 0 || size > MAX_HEATMAP_SIZE {
        return Err(invalid("heatmap needs N ≤ 2048 and 1 ≤ size ≤ 256"));
    }
    let kernel = Kernel::new(n)?;
    let mass = kernel.mass();
    let step = 1.0 / size as f64;
    let mut out = Vec::with_capacity((size * size) as usize);
    for i in 0..size {
        for j in 0..size {
            let v = kernel.eval(j as f64 * step, i as f64 * step)?;
            out.push((v.norm() / mass) as f32);
        }
    }
    Ok(out)
}

fn coefficients(scheme: &str, n: u64, param: f64) -> levelset_core::Result<CoefficientVector> {
    match scheme {
        "constant" => Ok(CoefficientVector::constant(n)),
        "random" => Ok(CoefficientVector::unimodular_random(n, param as u64)),
        "prime" => CoefficientVector::prime_support_cubic(n, param),
        _ => Err(invalid("scheme must be constant, random or prime")),
    }
}

/// `sup_t |S(x, t)|` at `x = j/N` with the level-set measure at `λ` and the
/// `L^6` norm, as JSON.
pub fn profile(
    scheme: &str,
    n: u64,
    param: f64,
    c_t: u64,
    lambda: f64,
) -> levelset_core::Result<String> {
    if n > MAX_PROFILE_N {
        return Err(invalid("profile needs N ≤ 4096"));
    }
    let prof = sup_profile(&coefficients(scheme, n, param)?, &GridSpec::new(n, c_t)?)?;
    Ok(json!({
        "n": n,
        "sup": prof.sup,
        "max": prof.max(),
        "lambda": lambda,
        "measure": prof.level_set_measure(lambda),
        "sqrt_n": (n as f64).sqrt(),
        "l6": prof.lp_norm(6.0),
    })
    .to_string())
}

/// Cells of `S_{Q,l}` holding `(x, t)` plus the Dirichlet level of `t`, as JSON.
pub fn classify(
    x: &str,
    t: &str,
    n: u64,
    q_block: u64,
    l: u32,
    dyadic: bool,
) -> levelset_core::Result<String> {
    let x: Rational = x.trim().parse()?;
    let t: Rational = t.trim().parse()?;
    let geo = ArcGeometry::new(n, DyadicLevel::new(q_block, l)?, dyadic)?;
    let z = TorusPoint::new(x, t);
    let all = geo.all_witnesses(&z)?;
    let (frac, level) = best_rational_t(t, n)?;
    Ok(json!({
        "label": all.first(),
        "witnesses": all,
        "dirichlet": { "fraction": frac.to_string(), "q_block": level.q_block, "l": level.l },
    })
    .to_string())
}

fn js(e: LabError) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = kernelHeatmap)]
pub fn kernel_heatmap(n: u32, size: u32) -> Result<Vec<f32>, JsError> {
    heatmap(n as u64, size).map_err(js)
}

#[wasm_bindgen(js_name = supProfile)]
pub fn sup_profile_json(
    scheme: &str,
    n: u32,
    param: f64,
    c_t: u32,
    lambda: f64,
) -> Result<String, JsError> {
    profile(scheme, n as u64, param, c_t as u64, lambda).map_err(js)
}

#[wasm_bindgen(js_name = classifyPoint)]
pub fn classify_point(
    x: &str,
    t: &str,
    n: u32,
    q_block: u32,
    l: u32,
    dyadic: bool,
) -> Result<String, JsError> {
    classify(x, t, n as u64, q_block as u64, l, dyadic).map_err(js)
}
