//! Small-loop expansion of `psi(v, x + sigma gamma) = exp(i oint v.dC)` and of its momentum
//! counterpart `phi(P, x + sigma gamma)`, and the mismatch of their `sigma^2` coefficients
//! when the momentum has a constant imaginary part.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::AnalyticField;
use crate::geometry::{area_vector, SampledCurve, Vec3};
use crate::momentum::MomentumState;

/// `oint v(x + sigma gamma) . d(sigma gamma)`.
#[must_use]
pub fn small_loop_circulation(f: &AnalyticField, x: Vec3, gamma: &SampledCurve, sigma: f64, t: f64) -> f64 {
    gamma.integrate(|s| Vec3::new(f.velocity(x + gamma.at(s) * sigma, t).dot(gamma.derivative(s)) * sigma, 0.0, 0.0)).x
}

/// `exp(i Gamma) - 1`, without cancellation for small `Gamma`.
fn expm1_i(g: f64) -> Complex64 {
    let s = (0.5 * g).sin();
    Complex64::new(-2.0 * s * s, g.sin())
}

/// `E_mu[psi(v, x + sigma gamma)] - 1`.
#[must_use]
pub fn psi_minus_one(mu: &[(AnalyticField, f64)], x: Vec3, gamma: &SampledCurve, sigma: f64, t: f64) -> Complex64 {
    mu.iter().map(|(f, w)| expm1_i(small_loop_circulation(f, x, gamma, sigma, t)) * *w).sum()
}

/// `sum_k P_k . (gamma_{k+1} - gamma_k)` on the discretization of `gamma` with `P.n()` vertices.
#[must_use]
pub fn momentum_pairing(p: &MomentumState, gamma: &SampledCurve) -> Complex64 {
    let n = p.n();
    let at = |k: usize| gamma.at((k % n) as f64 / n as f64);
    (0..n).map(|k| p.p(k as isize).dot_real(at(k + 1) - at(k))).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub area: Vec3,
    /// `E_mu[A(gamma) . omega(x)]`.
    pub mean_area_vorticity: f64,
    /// `2i E_mu[A . omega]`.
    pub left: Complex64,
    /// `-E_beta[(int P . gamma')^2]`.
    pub right: Complex64,
    /// `|left - right|`.
    pub mismatch: f64,
    /// Largest `|Im int P.gamma'|` over the momentum ensemble.
    pub max_imag_pairing: f64,
    /// `sigma^2` coefficient of `E_mu[psi] - 1` measured by two-level Richardson extrapolation from `sigma = 1e-3`.
    pub measured_coefficient: Complex64,
    /// `-(i/2) E_mu[A . omega]`, the coefficient implied by `Gamma = -(1/2) sigma^2 omega.A + O(sigma^3)`.
    pub predicted_coefficient: Complex64,
}

/// Both `sigma^2` coefficients for a weighted field ensemble `mu` and momentum ensemble `beta`.
pub fn obstruction_demo(
    mu: &[(AnalyticField, f64)],
    beta: &[(MomentumState, f64)],
    gamma: &SampledCurve,
    x: Vec3,
    t: f64,
) -> Result<ObstructionReport> {
    if mu.is_empty() || beta.is_empty() {
        return Err(Error::Argument("both ensembles must be nonempty".into()));
    }
    let area = area_vector(gamma);
    let mean_area_vorticity: f64 = mu.iter().map(|(f, w)| w * area.dot(f.vorticity(x, t))).sum();
    let left = Complex64::new(0.0, 2.0 * mean_area_vorticity);
    let mut right = Complex64::new(0.0, 0.0);
    let mut max_imag_pairing: f64 = 0.0;
    for (p, w) in beta {
        let s = momentum_pairing(p, gamma);
        max_imag_pairing = max_imag_pairing.max(s.im.abs());
        right -= s * s * *w;
    }
    // c(s) = c0 + a s + b s^2 + O(s^3); two Richardson levels remove a and b
    let sigma = 1e-3;
    let c = |s: f64| psi_minus_one(mu, x, gamma, s, t) / (s * s);
    let (c1, c2, c4) = (c(sigma), c(0.5 * sigma), c(0.25 * sigma));
    let (r1, r2) = (c2 * 2.0 - c1, c4 * 2.0 - c2);
    let measured_coefficient = (r2 * 4.0 - r1) / 3.0;
    Ok(ObstructionReport {
        area,
        mean_area_vorticity,
        left,
        right,
        mismatch: (left - right).norm(),
        max_imag_pairing,
        measured_coefficient,
        predicted_coefficient: Complex64::new(0.0, -0.5 * mean_area_vorticity),
    })
}

/// `|E_mu[psi] - 1 - sigma^2 c|` for each `sigma`, with `c` the predicted coefficient.
#[must_use]
pub fn taylor_remainders(mu: &[(AnalyticField, f64)], gamma: &SampledCurve, x: Vec3, t: f64, sigmas: &[f64]) -> Vec<f64> {
    let area = area_vector(gamma);
    let c = Complex64::new(0.0, -0.5 * mu.iter().map(|(f, w)| w * area.dot(f.vorticity(x, t))).sum::<f64>());
    sigmas.iter().map(|&s| (psi_minus_one(mu, x, gamma, s, t) - c * (s * s)).norm()).collect()
}

/// A closed planar curve without central symmetry, so its cubic moments do not vanish.
#[must_use]
pub fn lopsided_curve() -> SampledCurve {
    SampledCurve::fourier(
        Vec3::ZERO,
        vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.3, 0.0, 0.0)],
        vec![Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.25, 0.0)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CVec3;

    #[test]
    fn rotation_on_unit_circle() {
        let mu = vec![(AnalyticField::rotation(), 1.0)];
        let p = MomentumState::new(vec![
            CVec3::new(Vec3::new(0.1, 0.0, 0.0), Vec3::E3),
            CVec3::new(Vec3::new(0.0, 0.4, 0.0), Vec3::E3),
            CVec3::new(Vec3::new(-0.3, 0.0, 0.2), Vec3::E3),
            CVec3::new(Vec3::new(0.2, -0.1, 0.0), Vec3::E3),
        ])
        .unwrap();
        let r = obstruction_demo(&mu, &[(p, 1.0)], &SampledCurve::unit_circle(), Vec3::ZERO, 0.0).unwrap();
        let eight_pi = 8.0 * std::f64::consts::PI;
        assert!(r.left.re == 0.0 && (r.left.im + eight_pi).abs() < 1e-9);
        assert!(r.right.im.abs() < 1e-12 && r.max_imag_pairing < 1e-12);
        assert!(r.mismatch >= eight_pi - 1e-9);
        assert!((r.measured_coefficient - r.predicted_coefficient).norm() < 1e-8);
    }

    #[test]
    fn gradient_field_has_zero_left_side() {
        let grad = AnalyticField::constant(Vec3::new(0.3, -1.0, 2.0));
        let p = MomentumState::from_increments(&[Vec3::E1, Vec3::E2, -(Vec3::E1 + Vec3::E2)]).unwrap();
        let r = obstruction_demo(&[(grad, 1.0)], &[(p, 1.0)], &lopsided_curve(), Vec3::new(0.2, 0.1, 0.0), 0.0).unwrap();
        assert_eq!(r.left, Complex64::new(0.0, 0.0));
        assert!(r.measured_coefficient.norm() < 1e-6);
    }

    #[test]
    fn remainder_is_cubic() {
        let mu = vec![(AnalyticField::abc(1.0, 0.7, 0.4), 1.0)];
        let s = [1e-1, 1e-2];
        let r = taylor_remainders(&mu, &lopsided_curve(), Vec3::new(0.3, -0.4, 0.2), 0.0, &s);
        let slope = (r[0] / r[1]).log10();
        assert!((slope - 3.0).abs() < 0.2, "{slope}");
    }
}
