//! Browser bindings. Each exported function returns a JSON string; the
//! `*_json` functions hold the logic and are usable natively.

use penwalk::exact::{format_ratio, to_f64};
use penwalk::laws;
use penwalk::martingales::q_event_mass;
use penwalk::oracle::penalized_ratio;
use penwalk::qsim::{sample_chain, ChainKernel, FloatMartingale};
use penwalk::{Error, EventSpec, MartingaleFamily, MartingaleValue, PenaltyWeight, Rational, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

pub const MAX_CORRIDOR_N: u32 = 400;
pub const MAX_RATIO_P: u32 = 60;
pub const MAX_SAMPLE_STEPS: usize = 100_000;

fn family(name: &str, weight: &str) -> Result<MartingaleFamily> {
    let w = if weight.trim().is_empty() { None } else { Some(PenaltyWeight::parse(weight)?) };
    let f = MartingaleFamily::parse(name.trim(), w.as_ref())?;
    f.validate()?;
    Ok(f)
}

/// `P(S_n < a, I_n > -b, X_n = c)` for every `c`, exact and by the
/// trigonometric sum.
pub fn corridor_law_json(n: u32, a: u32, b: u32) -> Result<String> {
    if n > MAX_CORRIDOR_N {
        return Err(Error::InvalidParameter(format!("n ≤ {MAX_CORRIDOR_N} in the demo")));
    }
    let mut cells = Vec::new();
    let mut survival = Rational::from_integer(0.into());
    for c in -i64::from(b) + 1..i64::from(a) {
        let exact = laws::corridor_pmf(n, a, b, c)?;
        let trig = laws::corridor_pmf_trig(n, a, b, c)?;
        cells.push(json!({ "c": c, "exact": format_ratio(&exact), "value": to_f64(&exact), "trig": trig }));
        survival += exact;
    }
    Ok(json!({
        "n": n,
        "a": a,
        "b": b,
        "cells": cells,
        "survival": format_ratio(&survival),
        "survival_value": to_f64(&survival),
    })
    .to_string())
}

fn value_json(v: &MartingaleValue) -> Value {
    match v {
        MartingaleValue::Exact(r) => json!({ "exact": format_ratio(r), "value": to_f64(r) }),
        MartingaleValue::Float(x) => json!({ "value": x }),
    }
}

/// Penalised ratios `E[1_Λ G_p] / E[G_p]` for `p = n, n+2, …, pmax`
/// against the limit `Q(Λ)`.
pub fn ratio_convergence_json(family_name: &str, weight: &str, event: &str, n: u32, pmax: u32) -> Result<String> {
    if pmax > MAX_RATIO_P {
        return Err(Error::InvalidParameter(format!("pmax ≤ {MAX_RATIO_P} in the demo")));
    }
    let f = family(family_name, weight)?;
    let ev = EventSpec::parse(if event.trim().is_empty() { "all" } else { event })?;
    let limit = q_event_mass(&f, &ev, n)?;
    let g = f.penalty();
    let mut rows = Vec::new();
    for p in (n.max(1)..=pmax).step_by(2) {
        let r = penalized_ratio(n, &ev, &g, p)?;
        let gap = (to_f64(&r) - limit.to_f64()).abs();
        rows.push(json!({ "p": p, "ratio": format_ratio(&r), "value": to_f64(&r), "gap": gap }));
    }
    Ok(json!({
        "family": f.name(),
        "functional": g.name(),
        "event": ev.to_string(),
        "n": n,
        "limit": value_json(&limit),
        "rows": rows,
    })
    .to_string())
}

/// One trajectory of the h-transformed walk of `family` from 0.
pub fn sample_q_path_json(family_name: &str, weight: &str, steps: usize, seed: u64) -> Result<String> {
    if steps > MAX_SAMPLE_STEPS {
        return Err(Error::InvalidParameter(format!("steps ≤ {MAX_SAMPLE_STEPS} in the demo")));
    }
    let kernel = ChainKernel::HTransform(FloatMartingale::new(family(family_name, weight)?)?);
    let path = sample_chain(&kernel, 0, steps, seed)?;
    Ok(json!({
        "kernel": kernel.name(),
        "seed": seed,
        "generator": penwalk::qsim::GENERATOR,
        "path": path.path,
        "absorbed_at": path.absorbed_at,
    })
    .to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn corridor_law(n: u32, a: u32, b: u32) -> std::result::Result<String, JsError> {
    js(corridor_law_json(n, a, b))
}

#[wasm_bindgen]
pub fn ratio_convergence(
    family: &str,
    weight: &str,
    event: &str,
    n: u32,
    pmax: u32,
) -> std::result::Result<String, JsError> {
    js(ratio_convergence_json(family, weight, event, n, pmax))
}

/// `seed` is a JS number; integers up to 2^53 survive the conversion.
#[wasm_bindgen]
pub fn sample_q_path(family: &str, weight: &str, steps: u32, seed: f64) -> std::result::Result<String, JsError> {
    js(sample_q_path_json(family, weight, steps as usize, seed as u64))
}
