//! Browser bindings: each export takes plain strings and returns a JSON
//! report, or `{"error": message}` on bad input.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use strebel::asymptotics::detour_metric;
use strebel::extremal::annulus_power_map;
use strebel::fixtures;
use strebel::foliation::{analyze, Budgets, ComponentKind};
use strebel::numeric::Scalar;
use strebel::surface::{geodesic_flow, Surface};

fn scalar(text: &str) -> Result<Scalar, String> {
    text.trim().parse().map_err(|e| format!("{text}: {e}"))
}

fn exact(s: &Scalar) -> Value {
    json!({ "exact": s.to_string(), "decimal": s.to_decimal(12) })
}

fn finish(report: Result<Value, String>) -> String {
    let v = report.unwrap_or_else(|e| json!({ "error": e }));
    serde_json::to_string_pretty(&v).expect("json")
}

/// Names of the shipped example surfaces, as a JSON array.
#[wasm_bindgen]
pub fn fixture_names() -> String {
    let names: Vec<&str> = fixtures::ALL.iter().map(|(n, _)| *n).collect();
    serde_json::to_string(&names).expect("json")
}

/// Detour metric of a comma separated list of modulus ratios.
#[wasm_bindgen]
pub fn detour(ratios: &str) -> String {
    finish((|| {
        let rs = ratios.split(',').filter(|t| !t.trim().is_empty()).map(scalar).collect::<Result<Vec<_>, _>>()?;
        let d = detour_metric(&rs).map_err(|e| e.to_string())?;
        Ok(json!({
            "delta": d.delta.render(),
            "deltaDecimal": d.delta.to_decimal(),
            "sigma": d.sigma_star.render(),
            "sigmaDecimal": d.sigma_star.to_decimal(),
            "shiftSquare": exact(&d.shift_square),
            "shiftedTerm": d.shifted_term.render(),
        }))
    })())
}

/// Sampled dilatation of the radial power map between round annuli.
#[wasm_bindgen]
pub fn power_map(ratio: &str, samples: usize) -> String {
    finish((|| {
        let report = annulus_power_map(&scalar(ratio)?, samples.clamp(1, 100_000)).map_err(|e| e.to_string())?;
        serde_json::to_value(&report).map_err(|e| e.to_string())
    })())
}

/// Flows a surface (fixture name or surface JSON) for time `log lambda`
/// and reports its vertical cylinder decomposition.
#[wasm_bindgen]
pub fn flow_decompose(surface: &str, lambda: &str, budget_scale: u32) -> String {
    finish((|| {
        let base = match fixtures::by_name(surface.trim()) {
            Some(s) => s,
            None => Surface::from_json(surface).map_err(|e| e.to_string())?,
        };
        let flowed = geodesic_flow(&base, &scalar(lambda)?).map_err(|e| e.to_string())?;
        let budgets = Budgets::scaled(u64::from(budget_scale));
        let (graph, dec) = analyze(&flowed, &budgets).map_err(|e| e.to_string())?;
        let cylinders: Vec<Value> = dec
            .components
            .iter()
            .filter_map(|c| match &c.kind {
                ComponentKind::Cylinder { leaf_length, width } => Some(json!({
                    "modulus": exact(&(width / leaf_length)),
                    "leafLength": exact(leaf_length),
                    "width": exact(width),
                })),
                ComponentKind::Minimal { .. } => None,
            })
            .collect();
        Ok(json!({
            "surface": serde_json::from_str::<Value>(&flowed.to_json()).map_err(|e| e.to_string())?,
            "jenkinsStrebel": dec.is_jenkins_strebel(),
            "minimalComponents": dec.components.len() - cylinders.len(),
            "cylinders": cylinders,
            "graph": serde_json::to_value(&graph).map_err(|e| e.to_string())?,
        }))
    })())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn detour_of_two_and_half() {
        let v = parse(&detour("2, 1/2"));
        assert!(v.get("error").is_none(), "{v}");
        let delta: f64 = v["deltaDecimal"].as_str().unwrap().parse().unwrap();
        assert!((delta - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn bad_input_is_an_error_object() {
        assert!(parse(&detour("abc")).get("error").is_some());
        assert!(parse(&flow_decompose("nope", "2", 1)).get("error").is_some());
    }

    #[test]
    fn l_origami_flow_has_cylinders() {
        let v = parse(&flow_decompose("l_origami", "2", 1));
        assert_eq!(v["jenkinsStrebel"], true, "{v}");
        assert_eq!(v["cylinders"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn power_map_identity() {
        let v = parse(&power_map("1", 100));
        assert!(v.get("error").is_none(), "{v}");
        assert!((v["maxDilatation"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixture_list() {
        assert!(fixture_names().contains("golden_torus"));
    }
}
