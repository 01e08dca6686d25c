//! Browser bindings for three small demos: the RMSprop two-cycle, Adam's
//! late-phase regime at a chosen `(a, b)`, and signGD flow against its PL bound.
//!
//! Everything returns plain numbers or JSON strings, so the same functions
//! are exercised by native tests.

use std::sync::Arc;

use adamlab::analysis::{classify_regime, ClassifierConfig};
use adamlab::flows::{integrate_rk4, pl_hitting_time, signgd_pl_bound, ContinuousState, Flow, FlowKind};
use adamlab::objectives::{quadratic_pl_constant, random_quadratic, synthetic_blobs, Mlp, Objective};
use adamlab::optimizers::{run, HyperParams, OptimizerKind, RateParams, RunOptions};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Iterates of RMSprop on `f(x) = x²/2`.
#[wasm_bindgen]
pub fn rmsprop_cycle(alpha: f64, eta: f64, x0: f64, n_iters: usize) -> Result<Vec<f64>, JsError> {
    let hp = HyperParams::new(eta, alpha, 0.0, 1e-8).map_err(js_err)?;
    let traj = run(OptimizerKind::RmsProp, &Objective::ScalarQuadratic, &[x0], &hp, &RunOptions::new(n_iters).recording())
        .map_err(js_err)?;
    Ok(traj.states.unwrap_or_default().iter().map(|s| s.x[0]).collect())
}

/// Full-batch Adam at `alpha = 1 − a·eta`, `beta = 1 − b·eta` on a small MLP.
/// Returns `{"losses": [...], "label": "...", "spikes": [...]}`.
#[wasm_bindgen]
pub fn adam_regime(a: f64, b: f64, eta: f64, n_iters: usize, seed: u32) -> Result<String, JsError> {
    let seed = u64::from(seed);
    let data = synthetic_blobs(100, 4, 2, seed).map_err(js_err)?;
    let mlp = Mlp::new(vec![4, 32, 32, 2], Arc::new(data), seed).map_err(js_err)?;
    let x0 = mlp.init_params();
    let obj = Objective::Mlp(mlp);
    let hp = HyperParams::from_rates(RateParams { a, b, eta }, 1e-8).map_err(js_err)?;
    let traj = run(OptimizerKind::Adam, &obj, &x0, &hp, &RunOptions::new(n_iters)).map_err(js_err)?;
    let report = classify_regime(&traj, &ClassifierConfig::default());
    // JSON has no infinity; the divergence marker becomes null
    let losses: Vec<Option<f64>> = traj.losses.iter().map(|l| l.is_finite().then_some(*l)).collect();
    Ok(json!({ "losses": losses, "label": report.label.to_string(), "spikes": report.spike_indices }).to_string())
}

/// signGD flow on a random quadratic next to the PL bound, sampled every `h`
/// up to 90% of the bound's hitting time (near the minimum the flow chatters).
/// Returns `{"t": [...], "f": [...], "bound": [...], "hitting_time": T}`.
#[wasm_bindgen]
pub fn signgd_vs_bound(dim: usize, seed: u32, h: f64) -> Result<String, JsError> {
    let obj = random_quadratic(dim, u64::from(seed)).map_err(js_err)?;
    let mu = quadratic_pl_constant(&obj).map_err(js_err)?;
    let x0 = obj.default_start();
    let f0 = obj.eval(&x0).map_err(js_err)?;
    let hitting = pl_hitting_time(f0, mu);
    let flow = Flow::new(FlowKind::SignGd, &obj).map_err(js_err)?;
    let traj = integrate_rk4(&flow, &ContinuousState::at_rest(x0), 0.9 * hitting, h).map_err(js_err)?;
    let bound: Vec<f64> = traj.times.iter().map(|&t| signgd_pl_bound(f0, mu, t)).collect();
    Ok(json!({ "t": traj.times, "f": traj.losses, "bound": bound, "hitting_time": hitting }).to_string())
}
