//! Browser bindings: a sample path, an index set with its allocation, and a
//! small rate surface. Every function returns a JSON string.

use mimcei::estimator::{allocate_samples, build_index_set, LevelSpec, RunOptions, VarianceModel};
use mimcei::harness::{estimate_rate_surface, fit_dominating_surface, Preset};
use mimcei::noise::sample_lattice;
use mimcei::rng::StreamKey;
use mimcei::solver::solve;
use mimcei::transform::SineTransform;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn preset(name: &str) -> Result<Preset, String> {
    Preset::parse(name).ok_or_else(|| format!("unknown preset {name}"))
}

/// Terminal state of one path on `steps` time steps and `modes` modes, as
/// point values on the transform grid.
pub fn sample_path_json(name: &str, modes: usize, steps: usize, seed: u32) -> Result<String, String> {
    if !(1..=512).contains(&modes) || !(1..=4096).contains(&steps) {
        return Err("modes must be in 1..=512 and steps in 1..=4096".into());
    }
    let problem = preset(name)?.problem();
    let lattice = sample_lattice(&problem, modes, steps, StreamKey::new(u64::from(seed), [0, 0], 0))
        .map_err(|e| e.to_string())?;
    let out = solve(&problem, steps, modes, &lattice).map_err(|e| e.to_string())?;
    let mut t = SineTransform::new(modes, 4);
    let mut values = vec![0.0; t.points()];
    t.to_grid(&out.terminal.coeffs, &mut values);
    let x: Vec<f64> = t.grid().collect();
    Ok(json!({ "x": x, "u": values, "coefficients": out.terminal.coeffs, "cost": out.cost_units }).to_string())
}

/// Index set and sample counts of a multi-index run at tolerance `epsilon`.
pub fn index_set_json(name: &str, epsilon: f64, reduced: bool) -> Result<String, String> {
    let model = if reduced { VarianceModel::Reduced } else { VarianceModel::Standard };
    let rates = preset(name)?.rates(model);
    let set = build_index_set(LevelSpec::Tolerance(epsilon), &rates).map_err(|e| e.to_string())?;
    let alloc = allocate_samples(epsilon, &set, &rates).map_err(|e| e.to_string())?;
    let counts: Vec<_> = alloc
        .counts
        .iter()
        .map(|(&(l1, l2), &m)| json!({ "l1": l1, "l2": l2, "m": m }))
        .collect();
    Ok(json!({ "level": set.level(), "xi": set.xi(), "counts": counts }).to_string())
}

/// Rate surface on `0..=max_level` squared with `samples` draws per point,
/// plus its dominating fit when one exists.
pub fn rate_surface_json(name: &str, max_level: usize, samples: u32, seed: u32) -> Result<String, String> {
    if max_level > 4 {
        return Err("the demo stops at level 4".into());
    }
    let problem = preset(name)?.problem();
    let surface = estimate_rate_surface(&problem, max_level, u64::from(samples), u64::from(seed), &RunOptions::default())
        .map_err(|e| e.to_string())?;
    let fit = fit_dominating_surface(&surface).ok();
    Ok(json!({ "points": surface.points, "fit": fit }).to_string())
}

#[wasm_bindgen]
pub fn sample_path(preset: &str, modes: usize, steps: usize, seed: u32) -> Result<String, JsValue> {
    sample_path_json(preset, modes, steps, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn index_set(preset: &str, epsilon: f64, reduced: bool) -> Result<String, JsValue> {
    index_set_json(preset, epsilon, reduced).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rate_surface(preset: &str, max_level: usize, samples: u32, seed: u32) -> Result<String, JsValue> {
    rate_surface_json(preset, max_level, samples, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_has_grid_values() {
        let v: serde_json::Value = serde_json::from_str(&sample_path_json("nonlinear-nu4/3", 16, 32, 1).unwrap()).unwrap();
        assert_eq!(v["x"].as_array().unwrap().len(), 63);
        assert_eq!(v["u"].as_array().unwrap().len(), 63);
        assert!(sample_path_json("nope", 16, 32, 1).is_err());
        assert!(sample_path_json("linear-nu2", 0, 32, 1).is_err());
    }

    #[test]
    fn index_set_matches_core() {
        let v: serde_json::Value = serde_json::from_str(&index_set_json("linear-nu4/3", 0.5, false).unwrap()).unwrap();
        assert_eq!(v["level"], 1);
        assert_eq!(v["counts"].as_array().unwrap().len(), 4);
        assert!(index_set_json("linear-nu4/3", 2.0, false).is_err());
    }

    #[test]
    fn small_surface() {
        let v: serde_json::Value = serde_json::from_str(&rate_surface_json("linear-nu4/3", 2, 20, 3).unwrap()).unwrap();
        assert_eq!(v["points"].as_array().unwrap().len(), 9);
        assert!(rate_surface_json("linear-nu4/3", 5, 20, 3).is_err());
    }
}
