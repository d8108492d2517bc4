//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors come back as
//! `{"error": "..."}` so the page can show them inline.

use hybridgen::analytics::{
    cluster_matrix, factory_probs, factory_sizing, factory_success_with, linspace, m_opt,
    p_boosted, DEFAULT_M_CAP,
};
use hybridgen::Result;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

/// Boosted fusion success against `eta` for `m = 1..=m_max`, plus the
/// optimal allocation at every grid point.
pub fn boosted_curve_value(m_max: u32, eta_min: f64, eta_max: f64, steps: usize) -> Result<Value> {
    if m_max == 0 || m_max > DEFAULT_M_CAP || steps < 2 || steps > 2000 {
        return Err(hybridgen::Error::InvalidParameter(
            "need 1 <= m_max <= 30 and 2 <= steps <= 2000".into(),
        ));
    }
    let etas = linspace(eta_min, eta_max, steps);
    let curves = (1..=m_max)
        .map(|m| {
            etas.iter()
                .map(|&e| p_boosted(m, e))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let opt = etas
        .iter()
        .map(|&e| m_opt(e).map(|o| o.m))
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({ "eta": etas, "p": curves, "m_opt": opt }))
}

/// Matrix of one 2D cluster quantity over `n1, n2 <= size_max`.
pub fn cluster_grid_value(
    size_max: u64,
    eta: f64,
    quantity: &str,
    t_emit: f64,
    t_h: f64,
) -> Result<Value> {
    if !(1..=20).contains(&size_max) {
        return Err(hybridgen::Error::InvalidParameter(
            "size_max must lie in 1..=20".into(),
        ));
    }
    let sizes: Vec<u64> = (1..=size_max).collect();
    let t = cluster_matrix(&sizes, &sizes, eta, quantity, t_emit, t_h)?;
    let values: Vec<Vec<Option<f64>>> = t
        .rows
        .iter()
        .map(|r| r[1..].iter().map(|c| c.as_f64()).collect())
        .collect();
    Ok(
        json!({ "sizes": sizes, "quantity": quantity, "eta": eta, "m_opt": m_opt(eta)?.m, "values": values }),
    )
}

/// Factory sizing for a target failure rate and the success curve as the
/// ring-factory supply grows with the GHZ supply held at its estimate.
pub fn factory_value(k: u64, n1: u64, eta: f64, epsilon: f64, strict: bool) -> Result<Value> {
    let m = m_opt(eta)?.m;
    let s = factory_sizing(k, n1, m, eta, epsilon, strict)?;
    let probs = factory_probs(k, n1, m, eta, strict)?;
    let top = (2 * s.n_a).clamp(10, 5000);
    let step = (top / 100).max(1);
    let n_a: Vec<u64> = (0..=top).step_by(step as usize).collect();
    let p = n_a
        .iter()
        .map(|&a| factory_success_with(k, a, s.n_b, &probs))
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "m": m,
        "p_a": probs.p_a,
        "p_b": probs.p_b,
        "p_c": probs.p_c,
        "c_hat": s.c_hat,
        "n_a_hat": s.n_a,
        "n_b_hat": s.n_b,
        "p_success": factory_success_with(k, s.n_a, s.n_b, &probs)?,
        "sweep_n_a": n_a,
        "sweep_p": p,
    }))
}

#[wasm_bindgen]
pub fn boosted_curve(m_max: u32, eta_min: f64, eta_max: f64, steps: usize) -> String {
    respond(boosted_curve_value(m_max, eta_min, eta_max, steps))
}

#[wasm_bindgen]
pub fn cluster_grid(size_max: u32, eta: f64, quantity: &str, t_emit: f64, t_h: f64) -> String {
    respond(cluster_grid_value(
        size_max.into(),
        eta,
        quantity,
        t_emit,
        t_h,
    ))
}

#[wasm_bindgen]
pub fn factory(k: u32, n1: u32, eta: f64, epsilon: f64, strict: bool) -> String {
    respond(factory_value(k.into(), n1.into(), eta, epsilon, strict))
}
