//! Serializable description of the field, loop and parameters an experiment runs on.

use serde::{Deserialize, Serialize};

use crate::biot_savart::BSConfig;
use crate::circulation::QuadratureConfig;
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, TimeLaw, WaveMode};
use crate::geometry::{CVec3, PolygonalLoop, SampledCurve, Vec3};
use crate::operators::OperatorParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// ABC flow decaying as `e^{-nu t}`.
    AbcDecaying { a: f64, b: f64, c: f64, nu: f64 },
    Abc { a: f64, b: f64, c: f64 },
    Rotation {},
    Constant { value: [f64; 3] },
    Modes {
        #[serde(default)]
        modes: Vec<ModeSpec>,
        #[serde(default)]
        linear: Option<[[f64; 3]; 3]>,
        #[serde(default)]
        constant: Option<[f64; 3]>,
        #[serde(default)]
        time_law: TimeLawSpec,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub v0_re: [f64; 3],
    #[serde(default)]
    pub v0_im: [f64; 3],
    pub a: [f64; 3],
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeLawSpec {
    #[default]
    Static,
    Exponential { rate: f64 },
    BeltramiDecay { lambda: f64, nu: f64 },
    Linear { rate: f64 },
}

impl From<TimeLawSpec> for TimeLaw {
    fn from(s: TimeLawSpec) -> Self {
        match s {
            TimeLawSpec::Static => Self::Static,
            TimeLawSpec::Exponential { rate } => Self::Exponential { rate },
            TimeLawSpec::BeltramiDecay { lambda, nu } => Self::BeltramiDecay { lambda, nu },
            TimeLawSpec::Linear { rate } => Self::Linear { rate },
        }
    }
}

fn v(a: [f64; 3]) -> Vec3 {
    Vec3::from_array(a)
}

impl FieldSpec {
    pub fn build(&self) -> Result<AnalyticField> {
        match self {
            Self::AbcDecaying { a, b, c, nu } => AnalyticField::abc_decaying(*a, *b, *c, *nu),
            Self::Abc { a, b, c } => Ok(AnalyticField::abc(*a, *b, *c)),
            Self::Rotation {} => Ok(AnalyticField::rotation()),
            Self::Constant { value } => Ok(AnalyticField::constant(v(*value))),
            Self::Modes { modes, linear, constant, time_law } => {
                let modes = modes
                    .iter()
                    .map(|m| WaveMode::new(CVec3::new(v(m.v0_re), v(m.v0_im)), v(m.a), m.phase))
                    .collect::<Result<Vec<_>>>()?;
                AnalyticField::new(modes, *linear, constant.map(v), (*time_law).into())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoopSpec {
    /// Regular polygon; its vertex count is taken from the parameters or the sweep.
    Regular { center: [f64; 3], radius: f64, normal: [f64; 3] },
    /// Explicit vertices; scans over `N` are not possible with this form.
    Vertices { points: Vec<[f64; 3]> },
}

impl Default for LoopSpec {
    fn default() -> Self {
        Self::Regular { center: [0.2, 0.1, -0.1], radius: 1.0, normal: [0.2, 0.3, 1.0] }
    }
}

impl LoopSpec {
    /// The loop with `n` vertices (ignored for explicit vertices).
    pub fn polygon(&self, n: usize) -> Result<PolygonalLoop> {
        match self {
            Self::Regular { center, radius, normal } => PolygonalLoop::regular(n, v(*center), *radius, v(*normal)),
            Self::Vertices { points } => PolygonalLoop::new(points.iter().map(|p| v(*p)).collect()),
        }
    }

    /// Vertex count for a requested `n`.
    #[must_use]
    pub fn resolved_n(&self, n: usize) -> usize {
        match self {
            Self::Regular { .. } => n,
            Self::Vertices { points } => points.len(),
        }
    }

    /// Smooth curve: the circumscribed circle, or the polygon itself.
    pub fn curve(&self) -> Result<SampledCurve> {
        match self {
            Self::Regular { center, radius, normal } => Ok(SampledCurve::circle(v(*center), *radius, v(*normal))),
            Self::Vertices { .. } => Ok(SampledCurve::polygon(&self.polygon(0)?)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub gamma: f64,
    pub nu: f64,
    pub alpha: f64,
    pub n: usize,
    /// Evaluation time.
    pub t: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self { gamma: 1.0, nu: 1.0, alpha: 0.4, n: 16, t: 0.1 }
    }
}

impl ParamsSpec {
    pub fn operator_params(&self, alpha: f64, n: usize) -> Result<OperatorParams> {
        OperatorParams::new(self.gamma, self.nu, alpha, n)
    }
}

/// Sweep values; empty lists fall back to each experiment's default sweep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub n_values: Vec<usize>,
    pub alphas: Vec<f64>,
    pub h_values: Vec<f64>,
    pub ell_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
}

impl ScanSpec {
    /// Values or `default`, rejecting sweeps too short for a fit.
    pub fn pick<T: Copy>(values: &[T], default: &[T], min_len: usize, name: &str) -> Result<Vec<T>> {
        let v = if values.is_empty() { default.to_vec() } else { values.to_vec() };
        if v.len() < min_len {
            return Err(Error::Argument(format!("sweep `{name}` needs at least {min_len} values")));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EulerSpec {
    pub q_values: Vec<usize>,
    pub times: Vec<f64>,
    pub t0: f64,
}

impl Default for EulerSpec {
    fn default() -> Self {
        Self { q_values: vec![3, 5, 7, 11, 25, 101], times: vec![0.0, 0.5, 1.0, 2.0], t0: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianRunSpec {
    pub samples: usize,
    pub r0: f64,
    /// Values of `gamma/nu` for the decay scan.
    pub g_values: Vec<f64>,
    /// Correlation lengths for the trend scan.
    pub r0_values: Vec<f64>,
    /// Vertex count of the polygon approximating the loop.
    pub loop_vertices: usize,
}

impl Default for GaussianRunSpec {
    fn default() -> Self {
        Self { samples: 10_000, r0: 1.0, g_values: vec![1.0, 2.0, 4.0], r0_values: vec![0.5, 1.0, 2.0], loop_vertices: 64 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KelvinSpec {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
    pub markers: usize,
    /// Step count of the coarse run in the halving check.
    pub halving_steps: usize,
}

impl Default for KelvinSpec {
    fn default() -> Self {
        Self { t0: 0.0, t1: 0.5, steps: 200, markers: 96, halving_steps: 40 }
    }
}

/// Everything an experiment needs besides the seed and thread count.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub field: FieldSpec,
    #[serde(default, rename = "loop")]
    pub loop_spec: LoopSpec,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub biot_savart: BSConfig,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub euler: EulerSpec,
    #[serde(default)]
    pub gaussian: GaussianRunSpec,
    #[serde(default)]
    pub kelvin: KelvinSpec,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self::AbcDecaying { a: 1.0, b: 0.7, c: 0.4, nu: 1.0 }
    }
}

impl Scenario {
    /// Checks the physical parameters and that the field can be built.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if !(p.gamma > 0.0 && p.nu > 0.0 && p.alpha > 0.0 && p.alpha < 1.0) || p.n < 3 || !p.t.is_finite() {
            return Err(Error::Argument("params: gamma, nu must be positive, 0 < alpha < 1, n >= 3".into()));
        }
        if let LoopSpec::Regular { radius, .. } = self.loop_spec {
            if !(radius > 0.0) {
                return Err(Error::Argument("loop.radius must be positive".into()));
            }
        }
        self.field.build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_kinds_build() {
        let specs = [
            FieldSpec::default(),
            FieldSpec::Rotation {},
            FieldSpec::Constant { value: [1.0, 0.0, 0.0] },
            FieldSpec::Modes {
                modes: vec![ModeSpec { v0_re: [0.0, 1.0, 0.0], v0_im: [0.0; 3], a: [1.0, 0.0, 0.0], phase: 0.3 }],
                linear: None,
                constant: None,
                time_law: TimeLawSpec::Exponential { rate: 0.5 },
            },
        ];
        for s in specs {
            s.build().unwrap();
        }
        let bad = FieldSpec::Modes {
            modes: vec![ModeSpec { v0_re: [1.0, 0.0, 0.0], v0_im: [0.0; 3], a: [1.0, 0.0, 0.0], phase: 0.0 }],
            linear: None,
            constant: None,
            time_law: TimeLawSpec::Static,
        };
        assert!(bad.build().is_err());
    }

    #[test]
    fn regular_loop_follows_n() {
        let l = LoopSpec::default();
        assert_eq!(l.polygon(12).unwrap().n(), 12);
        let pts = LoopSpec::Vertices { points: vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] };
        assert_eq!(pts.resolved_n(40), 3);
    }
}
