//! Least-squares slopes on log-log data.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub quantity: String,
    /// `"fitted"`, or `"budget-dominated-by-roundoff"` when some value is not strictly positive.
    pub status: String,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub pass: Option<bool>,
}

impl FitResult {
    #[must_use]
    pub fn summary(&self) -> String {
        match self.expected {
            Some(e) => format!("{}: slope {:.4} (expected {e:.2} +- {:.2}), status {}", self.quantity, self.slope, self.tolerance, self.status),
            None => format!("{}: slope {:.4}, status {}", self.quantity, self.slope, self.status),
        }
    }
}

/// Fits `log y = slope log x + intercept`. With `expected`, passes when `|slope - expected| <= tolerance`.
/// Non-positive data give status `budget-dominated-by-roundoff` and a failing (or absent) verdict.
#[must_use]
pub fn loglog_fit(quantity: &str, x: &[f64], y: &[f64], expected: Option<f64>, tolerance: f64) -> FitResult {
    let usable = x.len() == y.len() && x.len() >= 2 && x.iter().chain(y).all(|v| *v > 0.0 && v.is_finite());
    if !usable {
        return FitResult {
            quantity: quantity.into(),
            status: "budget-dominated-by-roundoff".into(),
            slope: f64::NAN,
            intercept: f64::NAN,
            residual: f64::NAN,
            expected,
            tolerance,
            pass: expected.map(|_| false),
        };
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx.iter().zip(&ly).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
    FitResult {
        quantity: quantity.into(),
        status: "fitted".into(),
        slope,
        intercept,
        residual,
        expected,
        tolerance,
        pass: expected.map(|e| (slope - e).abs() <= tolerance),
    }
}
