//! WebAssembly bindings for the browser demo.
//!
//! Every export returns a JSON string; errors become JavaScript exceptions.

use nalgebra::DVector;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use netbt::analyze;
use netbt::gramian::Orientation;
use netbt::io::{self, NetworkSpecFile};
use netbt::model::NetworkSystem;
use netbt::pipeline::{self, Reduction};
use netbt::realize::{self, SpectrumTarget};

const EXAMPLE: &str = include_str!("../../core/examples/paper_sec4.json");

fn example() -> Result<NetworkSystem, String> {
    let spec = NetworkSpecFile::parse(EXAMPLE).map_err(|e| e.to_string())?;
    spec.raw().map_err(|e| e.to_string())?.network().map_err(|e| e.to_string())
}

fn reduce(k: usize, r: usize) -> Result<(NetworkSystem, Reduction), String> {
    let net = example()?;
    let red = pipeline::reduce_network(&net, k, r, Orientation::Standard).map_err(|e| e.to_string())?;
    Ok((net, red))
}

/// Laplacian with the given comma-separated spectrum.
pub fn realize_spectrum_json(lambdas: &str) -> Result<String, String> {
    let values = lambdas
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<Result<Vec<_>, _>>()?;
    let target = SpectrumTarget::from_unsorted(values).map_err(|e| e.to_string())?;
    let l = realize::laplacian_from_spectrum(&target).map_err(|e| e.to_string())?;
    Ok(json!({ "lambdas": target.lambdas(), "laplacian": io::from_mat(l.matrix()) }).to_string())
}

/// Reduction of the bundled six-arm example with frequency responses of both models.
pub fn reduce_example_json(k: usize, r: usize, points: usize) -> Result<String, String> {
    let (net, red) = reduce(k, r)?;
    let grid = analyze::log_grid(1e-2, 1e2, points.max(2)).map_err(|e| e.to_string())?;
    let full = analyze::frequency_response(&net.state_space(), &grid).map_err(|e| e.to_string())?;
    let reduced = analyze::frequency_response(&red.realized.state_space(), &grid).map_err(|e| e.to_string())?;
    let e = &red.errors;
    Ok(json!({
        "k": k,
        "r": r,
        "L_hat": io::from_mat(red.realized.l_hat.matrix()),
        "gamma": e.gamma,
        "bound": e.total_bound,
        "actual_error": e.actual_error,
        "case": e.case.label(),
        "sync_preserved": red.sync_preserved,
        "omega": grid,
        "full": full,
        "reduced": reduced,
    })
    .to_string())
}

/// Zero-input synchronization error of the full and reduced example networks.
pub fn simulate_example_json(k: usize, r: usize, horizon: f64, seed: u64) -> Result<String, String> {
    let (net, red) = reduce(k, r)?;
    let run = |sys: &NetworkSystem| -> Result<Value, String> {
        let ss = sys.state_space();
        let x0 = analyze::random_initial(ss.order(), seed);
        let m = ss.inputs();
        let every = ((horizon / 1e-2) / 400.0).ceil().max(1.0) as usize;
        let (res, sync) = analyze::simulate_network(&ss, sys.nodes(), |_| DVector::zeros(m), &x0, horizon, 1e-2, every)
            .map_err(|e| e.to_string())?;
        Ok(json!({ "time": res.times, "sync": sync }))
    };
    let reduced = red.network().map_err(|e| e.to_string())?;
    Ok(json!({ "full": run(&net)?, "reduced": run(&reduced)? }).to_string())
}

#[wasm_bindgen]
pub fn realize_spectrum(lambdas: &str) -> Result<String, JsValue> {
    realize_spectrum_json(lambdas).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn reduce_example(k: usize, r: usize, points: usize) -> Result<String, JsValue> {
    reduce_example_json(k, r, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_example(k: usize, r: usize, horizon: f64, seed: u64) -> Result<String, JsValue> {
    simulate_example_json(k, r, horizon, seed).map_err(|e| JsValue::from_str(&e))
}
