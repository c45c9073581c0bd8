//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON strings; errors surface as JS exceptions.

pub mod demo;

use serde::de::DeserializeOwned;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn parse<T: DeserializeOwned>(json: &str) -> Result<T, JsError> {
    serde_json::from_str(json).map_err(|e| JsError::new(&format!("bad request: {e}")))
}

fn emit<T: Serialize>(value: grv::Result<T>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Analytic null curve and permutation histogram for a simulated dataset.
#[wasm_bindgen(js_name = nullComparison)]
pub fn null_comparison(request: &str) -> Result<String, JsError> {
    emit(demo::null_comparison(&parse(request)?))
}

/// Scatter data for the GRV and Mantel standardizations of one dataset.
#[wasm_bindgen]
pub fn standardizations(request: &str) -> Result<String, JsError> {
    emit(demo::standardizations(&parse(request)?))
}

/// Standardized Pearson type III densities for a JSON array of skewness values.
#[wasm_bindgen(js_name = pearson3Curves)]
pub fn pearson3_curves(gammas: &str) -> Result<String, JsError> {
    let gammas: Vec<f64> = parse(gammas)?;
    emit(Ok(demo::pearson3_curves(&gammas)))
}
