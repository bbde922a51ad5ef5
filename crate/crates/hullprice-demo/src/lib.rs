//! Browser bindings. Each export takes and returns JSON text so the page
//! needs no glue beyond the generated loader.

use hullprice::hulls::{self_schedule_model, FormKind};
use hullprice::instance::synth::{generate, SynthConfig};
use hullprice::instance::{classify, parse_instance, serialize_instance};
use hullprice::oracle::dp_self_schedule;
use hullprice::pricing::{render_table, run_all, Algorithm, PricingOptions};
use hullprice::simplexcore::{solve_lp, SolveStatus, SolverOptions};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest instance the page will price; the browser runs single-threaded.
pub const MAX_GENERATORS: usize = 12;
pub const MAX_HORIZON: usize = 8;

pub fn generate_json(seed: u64, generators: usize, horizon: usize) -> Result<String, String> {
    if generators == 0 || horizon == 0 || generators > MAX_GENERATORS || horizon > MAX_HORIZON {
        return Err(format!(
            "need 1..={MAX_GENERATORS} generators and 1..={MAX_HORIZON} periods"
        ));
    }
    Ok(serialize_instance(&generate(&SynthConfig {
        seed,
        horizon,
        generators,
        mix: None,
        buses: 1,
    })))
}

#[derive(Serialize)]
struct Row {
    algorithm: &'static str,
    uplift: f64,
    prices: Vec<f64>,
    gamma: Vec<String>,
}

#[derive(Serialize)]
struct Priced {
    mip_cost: f64,
    table: String,
    rows: Vec<Row>,
}

pub fn price_json(instance: &str) -> Result<String, String> {
    let inst = parse_instance(instance).map_err(|e| e.to_string())?;
    if inst.generators.len() > MAX_GENERATORS || inst.horizon > MAX_HORIZON {
        return Err(format!("demo limit is {MAX_GENERATORS} generators and {MAX_HORIZON} periods"));
    }
    let (uc, reports) = run_all(&inst, &Algorithm::ALL, &PricingOptions::default()).map_err(|e| e.to_string())?;
    let out = Priced {
        mip_cost: uc.objective,
        table: render_table(&reports, 1e-5),
        rows: reports
            .iter()
            .map(|r| Row {
                algorithm: r.algorithm.name(),
                uplift: r.uplift,
                prices: r.prices[..inst.horizon].to_vec(),
                gamma: r.gamma.clone(),
            })
            .collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct SelfSchedule {
    class: String,
    on: Vec<bool>,
    output: Vec<f64>,
    /// Exact minimum of cost minus revenue.
    value: f64,
    /// Same objective over the starting pricing formulation.
    relaxed_value: f64,
    relaxed_formulation: String,
}

pub fn self_schedule_json(instance: &str, unit: &str, prices: &[f64]) -> Result<String, String> {
    let inst = parse_instance(instance).map_err(|e| e.to_string())?;
    let g = inst
        .generators
        .iter()
        .find(|g| g.id == unit)
        .ok_or_else(|| format!("no generator `{unit}`"))?;
    if prices.len() != g.horizon {
        return Err(format!("expected {} prices, got {}", g.horizon, prices.len()));
    }
    let (best, _) = dp_self_schedule(g, prices).map_err(|e| e.to_string())?;
    let class = classify(g);
    let kind = FormKind::relaxation_for(g, class);
    let (model, _) = self_schedule_model(g, kind, prices).map_err(|e| e.to_string())?;
    let r = solve_lp(&model, &SolverOptions::default());
    if r.status != SolveStatus::Optimal {
        return Err(format!("relaxed self-schedule ended {:?}", r.status));
    }
    let out = SelfSchedule {
        class: format!("{class:?}"),
        on: best.on,
        output: best.x,
        value: best.net_cost,
        relaxed_value: r.objective,
        relaxed_formulation: kind.to_string(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = generateInstance)]
pub fn generate_instance(seed: u32, generators: u32, horizon: u32) -> Result<String, JsError> {
    generate_json(seed as u64, generators as usize, horizon as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = priceInstance)]
pub fn price_instance(instance: &str) -> Result<String, JsError> {
    price_json(instance).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = selfSchedule)]
pub fn self_schedule(instance: &str, unit: &str, prices: Vec<f64>) -> Result<String, JsError> {
    self_schedule_json(instance, unit, &prices).map_err(|e| JsError::new(&e))
}
