//! Circulation along a loop advected by the flow (Kelvin's theorem).
//!
//! Markers `X_j` and their tangents `T_j = dX/dtheta` are advanced together by classical RK4,
//! `dX/dt = u(X, t)`, `dT/dt = (T.grad) u`, so the circulation `(1/M) sum u(X_j).T_j` keeps the
//! spectral accuracy of the trapezoidal rule on a smooth closed curve.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{mat_vec, AnalyticField, Order};
use crate::geometry::{SampledCurve, Vec3};

#[derive(Clone, Debug)]
struct Markers {
    x: Vec<Vec3>,
    tangent: Vec<Vec3>,
}

impl Markers {
    fn rate(&self, f: &AnalyticField, t: f64) -> Self {
        let mut out = Self { x: Vec::with_capacity(self.x.len()), tangent: Vec::with_capacity(self.x.len()) };
        for (&x, &tg) in self.x.iter().zip(&self.tangent) {
            let j = f.jet(x, t, Order::First);
            out.x.push(j.u);
            out.tangent.push(mat_vec(&j.du, tg));
        }
        out
    }

    fn axpy(&self, h: f64, d: &Self) -> Self {
        Self {
            x: self.x.iter().zip(&d.x).map(|(&a, &b)| a + b * h).collect(),
            tangent: self.tangent.iter().zip(&d.tangent).map(|(&a, &b)| a + b * h).collect(),
        }
    }

    fn rk4_step(&self, f: &AnalyticField, t: f64, h: f64) -> Self {
        let k1 = self.rate(f, t);
        let k2 = self.axpy(0.5 * h, &k1).rate(f, t + 0.5 * h);
        let k3 = self.axpy(0.5 * h, &k2).rate(f, t + 0.5 * h);
        let k4 = self.axpy(h, &k3).rate(f, t + h);
        let mut out = self.clone();
        for j in 0..self.x.len() {
            out.x[j] += (k1.x[j] + (k2.x[j] + k3.x[j]) * 2.0 + k4.x[j]) * (h / 6.0);
            out.tangent[j] += (k1.tangent[j] + (k2.tangent[j] + k3.tangent[j]) * 2.0 + k4.tangent[j]) * (h / 6.0);
        }
        out
    }

    fn line_integral(&self, g: impl Fn(Vec3) -> Vec3) -> f64 {
        let m = self.x.len() as f64;
        self.x.iter().zip(&self.tangent).map(|(&x, &tg)| g(x).dot(tg)).sum::<f64>() / m
    }
}

/// One row of a Kelvin run: circulation, its finite-difference rate and `-nu oint curl(omega).dC`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KelvinRow {
    pub t: f64,
    pub circulation: f64,
    pub rate_fd: f64,
    pub rate_viscous: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KelvinReport {
    pub steps: usize,
    pub rows: Vec<KelvinRow>,
    /// `max |rate_fd - rate_viscous| / max |rate_viscous|` over the interior rows.
    pub max_rel_error: f64,
}

/// Advects `markers` points of `curve` over `[t0, t1]` in `steps` RK4 steps and compares the
/// 4th-order central difference of the circulation with `-nu oint curl(omega).dC`.
pub fn kelvin_run(
    f: &AnalyticField,
    curve: &SampledCurve,
    markers: usize,
    t0: f64,
    t1: f64,
    steps: usize,
    nu: f64,
) -> Result<KelvinReport> {
    if steps < 8 || markers < 8 || !(t1 > t0) || !(nu > 0.0) {
        return Err(Error::Argument("kelvin run needs steps >= 8, markers >= 8, t1 > t0, nu > 0".into()));
    }
    if f.time_law().is_static() {
        return Err(Error::NoTimeLaw);
    }
    let h = (t1 - t0) / steps as f64;
    let mut state = Markers {
        x: (0..markers).map(|j| curve.at(j as f64 / markers as f64)).collect(),
        tangent: (0..markers).map(|j| curve.derivative(j as f64 / markers as f64)).collect(),
    };
    let mut gamma = Vec::with_capacity(steps + 1);
    let mut visc = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        let t = t0 + n as f64 * h;
        gamma.push(state.line_integral(|x| f.velocity(x, t)));
        visc.push(-nu * state.line_integral(|x| f.curl_vorticity(x, t)));
        if n < steps {
            state = state.rk4_step(f, t, h);
        }
    }
    let rows: Vec<KelvinRow> = (2..=steps - 2)
        .map(|n| KelvinRow {
            t: t0 + n as f64 * h,
            circulation: gamma[n],
            rate_fd: (gamma[n - 2] - 8.0 * gamma[n - 1] + 8.0 * gamma[n + 1] - gamma[n + 2]) / (12.0 * h),
            rate_viscous: visc[n],
        })
        .collect();
    let scale = rows.iter().map(|r| r.rate_viscous.abs()).fold(0.0, f64::max);
    let err = rows.iter().map(|r| (r.rate_fd - r.rate_viscous).abs()).fold(0.0, f64::max);
    let max_rel_error = if scale > 0.0 { err / scale } else { err };
    Ok(KelvinReport { steps, rows, max_rel_error })
}

/// Error of `kelvin_run` at `steps` and `2 steps`, and their ratio (16 for a 4th-order scheme).
#[derive(Clone, Debug, Serialize)]
pub struct HalvingReport {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
}

pub fn step_halving(
    f: &AnalyticField,
    curve: &SampledCurve,
    markers: usize,
    t0: f64,
    t1: f64,
    steps: usize,
    nu: f64,
) -> Result<HalvingReport> {
    let coarse = kelvin_run(f, curve, markers, t0, t1, steps, nu)?.max_rel_error;
    let fine = kelvin_run(f, curve, markers, t0, t1, 2 * steps, nu)?.max_rel_error;
    Ok(HalvingReport { coarse, fine, ratio: coarse / fine })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TimeLaw;

    #[test]
    fn constant_field_keeps_zero_circulation() {
        let f = AnalyticField::constant(Vec3::new(1.0, 2.0, 3.0)).with_time_law(TimeLaw::Exponential { rate: 0.0 }).unwrap();
        let r = kelvin_run(&f, &SampledCurve::unit_circle(), 32, 0.0, 0.5, 20, 1.0).unwrap();
        for row in &r.rows {
            assert!(row.circulation.abs() < 1e-14 && row.rate_fd.abs() < 1e-12 && row.rate_viscous == 0.0);
        }
    }

    #[test]
    fn decaying_abc_obeys_kelvin() {
        let f = AnalyticField::abc_decaying(1.0, 0.7, 0.4, 0.5).unwrap();
        let c = SampledCurve::circle(Vec3::new(0.3, -0.2, 0.5), 1.0, Vec3::new(0.2, 0.4, 1.0));
        let r = kelvin_run(&f, &c, 96, 0.0, 0.5, 200, 0.5).unwrap();
        assert!(r.max_rel_error < 1e-4, "{}", r.max_rel_error);
        assert!(kelvin_run(&AnalyticField::abc(1.0, 1.0, 1.0), &c, 96, 0.0, 0.5, 200, 0.5).is_err());
    }
}
