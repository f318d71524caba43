//! Browser bindings: star-polygon ensembles, the Biot-Savart remainder curve and the liquid
//! loop-equation residual on a regular polygon.

use looplab::biot_savart::r_table;
use looplab::ensemble::StarPolygonEnsemble;
use looplab::fields::AnalyticField;
use looplab::geometry::{PolygonalLoop, Vec3};
use looplab::operators::{OperatorContext, OperatorParams};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Vertices `f_k` of `{q/p}` in its plane plus the worst residual of the defining conditions.
pub fn star_polygon_json(q: usize, p: usize) -> Result<String, String> {
    let e = StarPolygonEnsemble::construct(q, p, Vec3::E3).map_err(|e| e.to_string())?;
    let pts: Vec<[f64; 2]> = (0..q as isize).map(|k| [e.f(k).x, e.f(k).y]).collect();
    Ok(json!({
        "q": q,
        "p": p,
        "radius": e.radius,
        "points": pts,
        "condition_residual": e.verify_conditions().max(),
    })
    .to_string())
}

/// `samples` evenly spaced values of `R(kappa)` on `[0, kappa_max]`, as `[kappa, R]` pairs.
pub fn r_curve_json(kappa_max: f64, samples: usize) -> Result<String, String> {
    if kappa_max.is_nan() || kappa_max <= 0.0 || !(2..=20_000).contains(&samples) {
        return Err("need kappa_max > 0 and 2..=20000 samples".into());
    }
    let table = r_table();
    let pts: Vec<[f64; 2]> = (0..samples)
        .map(|i| {
            let k = kappa_max * i as f64 / (samples - 1) as f64;
            [k, table.eval(k)]
        })
        .collect();
    Ok(json!({ "points": pts }).to_string())
}

/// `|R_liquid|` for the decaying ABC flow `(a, b, c)` on a unit regular polygon, N = 8, 16, ... up to `n_max`.
pub fn liquid_residuals_json(a: f64, b: f64, c: f64, alpha: f64, n_max: usize) -> Result<String, String> {
    if n_max > 256 {
        return Err("n_max is capped at 256 to keep the page responsive".into());
    }
    let f = AnalyticField::abc_decaying(a, b, c, 1.0).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut n = 8;
    while n <= n_max {
        let poly = PolygonalLoop::regular(n, Vec3::new(0.2, 0.1, -0.1), 1.0, Vec3::new(0.2, 0.3, 1.0)).map_err(|e| e.to_string())?;
        let params = OperatorParams::new(1.0, 1.0, alpha, n).map_err(|e| e.to_string())?;
        let r = OperatorContext::new(&f, &poly, 0.1, params).liquid_residual().map_err(|e| e.to_string())?;
        rows.push(json!({ "n": n, "residual": r.norm() }));
        n *= 2;
    }
    if rows.is_empty() {
        return Err("n_max must be at least 8".into());
    }
    Ok(json!({ "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn star_polygon(q: usize, p: usize) -> Result<String, JsValue> {
    star_polygon_json(q, p).map_err(js_err)
}

#[wasm_bindgen]
pub fn r_curve(kappa_max: f64, samples: usize) -> Result<String, JsValue> {
    r_curve_json(kappa_max, samples).map_err(js_err)
}

#[wasm_bindgen]
pub fn liquid_residuals(a: f64, b: f64, c: f64, alpha: f64, n_max: usize) -> Result<String, JsValue> {
    liquid_residuals_json(a, b, c, alpha, n_max).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagram_has_unit_edges() {
        let v: serde_json::Value = serde_json::from_str(&star_polygon_json(5, 2).unwrap()).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 5);
        let (x0, y0) = (pts[0][0].as_f64().unwrap(), pts[0][1].as_f64().unwrap());
        let (x1, y1) = (pts[1][0].as_f64().unwrap(), pts[1][1].as_f64().unwrap());
        assert!(((x1 - x0).hypot(y1 - y0) - 1.0).abs() < 1e-12);
        assert!(v["condition_residual"].as_f64().unwrap() < 1e-12);
        assert!(star_polygon_json(6, 2).is_err());
    }

    #[test]
    fn r_curve_starts_at_r_zero() {
        let v: serde_json::Value = serde_json::from_str(&r_curve_json(10.0, 11).unwrap()).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 11);
        assert!((pts[0][1].as_f64().unwrap() - r_table().eval(0.0)).abs() < 1e-15);
        assert!(r_curve_json(-1.0, 10).is_err());
    }

    #[test]
    fn liquid_residual_shrinks() {
        let v: serde_json::Value = serde_json::from_str(&liquid_residuals_json(1.0, 0.7, 0.4, 0.4, 32).unwrap()).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 3);
        let r: Vec<f64> = rows.iter().map(|r| r["residual"].as_f64().unwrap()).collect();
        assert!(r[2] < r[0]);
        assert!(liquid_residuals_json(1.0, 0.7, 0.4, 0.4, 4).is_err());
    }
}
