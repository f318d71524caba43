//! Circulation of a field around a polygon, its exact vertex derivatives,
//! segment averages of the vorticity and the loop functional.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::fields::{curl_of, mat_t_vec, mat_vec, AnalyticField, Mat3, Order};
use crate::geometry::{CVec3, PolygonalLoop, Vec3};
use crate::quadrature::gauss_legendre;

/// Quadrature and finite-difference settings shared by loop computations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per segment panel.
    pub nodes_per_segment: usize,
    /// Gauss-Legendre nodes for averages along the median segment.
    pub nodes_a: usize,
    pub fd_step: f64,
    pub richardson_levels: usize,
    /// A segment is split into panels so that `|edge| * max|a| / panels` stays below this.
    pub max_phase_per_panel: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes_per_segment: 16, nodes_a: 32, fd_step: 1e-4, richardson_levels: 2, max_phase_per_panel: 8.0 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_segment < 2 || self.nodes_a < 2 {
            return Err(Error::Argument("quadrature node counts must be at least 2".into()));
        }
        if self.nodes_per_segment > 256 || self.nodes_a > 256 {
            return Err(Error::Argument("quadrature node counts are capped at 256".into()));
        }
        if !(self.fd_step > 0.0) || !(self.max_phase_per_panel > 0.0) {
            return Err(Error::Argument("fd_step and max_phase_per_panel must be positive".into()));
        }
        Ok(())
    }

    /// Node/weight pairs on `s in [0,1]` for a segment of length `len` in `f`.
    pub(crate) fn segment_nodes(&self, f: &AnalyticField, len: f64) -> impl Iterator<Item = (f64, f64)> {
        let panels = ((len * f.max_wavenumber() / self.max_phase_per_panel).ceil() as usize).max(1);
        let gl = gauss_legendre(self.nodes_per_segment);
        let h = 1.0 / panels as f64;
        (0..panels).flat_map(move |p| gl.nodes_on(p as f64 * h, (p + 1) as f64 * h))
    }
}

/// Value and vertex derivatives of `I(A,B) = int_0^1 u((1-s)A + sB).(B-A) ds`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SegmentDerivs {
    pub value: f64,
    pub d_a: Vec3,
    pub d_b: Vec3,
    /// `mixed[l][g] = d^2 I / dA_l dB_g`.
    pub mixed: Mat3,
}

/// `I(A,B)` only.
#[must_use]
pub fn segment_integral(f: &AnalyticField, a: Vec3, b: Vec3, t: f64, q: &QuadratureConfig) -> f64 {
    let d = b - a;
    q.segment_nodes(f, d.norm()).map(|(s, w)| w * f.velocity(a + d * s, t).dot(d)).sum()
}

/// `I(A,B)` and its derivatives; the mixed block only when `mixed` is set.
#[must_use]
pub fn segment_derivs(f: &AnalyticField, a: Vec3, b: Vec3, t: f64, q: &QuadratureConfig, mixed: bool) -> SegmentDerivs {
    let d = b - a;
    let order = if mixed { Order::Second } else { Order::First };
    let mut out = SegmentDerivs::default();
    for (s, w) in q.segment_nodes(f, d.norm()) {
        let j = f.jet(a + d * s, t, order);
        let dtu = mat_t_vec(&j.du, d);
        out.value += w * j.u.dot(d);
        out.d_b += (dtu * s + j.u) * w;
        out.d_a += (dtu * (1.0 - s) - j.u) * w;
        if mixed {
            let ss = s * (1.0 - s);
            for l in 0..3 {
                for g in 0..3 {
                    let hess: f64 = (0..3).map(|i| j.d2u[i][l][g] * d[i]).sum();
                    out.mixed[l][g] += w * (ss * hess - s * j.du[l][g] + (1.0 - s) * j.du[g][l]);
                }
            }
        }
    }
    out
}

/// `E_m(z) = int_0^1 (is)^m e^{izs} ds` for `m = 0, 1, 2`.
pub(crate) fn segment_phase_moments(z: f64) -> [Complex64; 3] {
    let i = Complex64::new(0.0, 1.0);
    if z.abs() < 0.5 {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..26 {
            for (m, o) in out.iter_mut().enumerate() {
                *o += term * i.powu(m as u32) / (n + m + 1) as f64;
            }
            term = term * i * z / (n + 1) as f64;
        }
        return out;
    }
    let e = Complex64::from_polar(1.0, z);
    let iz = i * z;
    let j0 = (e - 1.0) / iz;
    let j1 = (e - j0) / iz;
    let j2 = (e - j1 * 2.0) / iz;
    [j0, i * j1, -j2]
}

/// [`segment_derivs`] in closed form: plane waves integrate exactly along a segment.
#[must_use]
pub fn segment_derivs_closed(f: &AnalyticField, a: Vec3, b: Vec3, t: f64, mixed: bool) -> SegmentDerivs {
    let d = b - a;
    let mut out = SegmentDerivs::default();
    for m in f.modes() {
        let k = m.wavevector;
        let c = Complex64::from_polar(1.0, k.dot(a) + m.phase);
        let [e0, e1, e2] = segment_phase_moments(k.dot(d));
        let v0 = m.amplitude;
        let vd = v0.dot_real(d);
        let fval = vd * c * e0;
        let g_d = (v0 * e0 + CVec3::real(k) * (vd * e1)) * c;
        out.value += fval.re;
        out.d_b += g_d.re;
        out.d_a += (CVec3::real(k) * (Complex64::new(0.0, 1.0) * fval) - g_d).re;
        if mixed {
            let vc = v0.components();
            let gc = g_d.components();
            for l in 0..3 {
                for g in 0..3 {
                    let dd = c * ((vc[g] * k[l] + vc[l] * k[g]) * e1 + vd * e2 * (k[l] * k[g]));
                    out.mixed[l][g] += (Complex64::new(0.0, k[l]) * gc[g] - dd).re;
                }
            }
        }
    }
    if let Some(l) = f.linear() {
        let la = mat_vec(l, a);
        let sym = mat_vec(l, d) + mat_t_vec(l, d);
        out.value += la.dot(d) + 0.5 * mat_vec(l, d).dot(d);
        out.d_b += la + sym * 0.5;
        out.d_a += mat_t_vec(l, d) - la - sym * 0.5;
        if mixed {
            for p in 0..3 {
                for g in 0..3 {
                    out.mixed[p][g] += 0.5 * (l[g][p] - l[p][g]);
                }
            }
        }
    }
    if let Some(c0) = f.constant_part() {
        out.value += c0.dot(d);
        out.d_b += c0;
        out.d_a -= c0;
    }
    let (tf, _) = f.time_law().factor(t);
    if tf != 1.0 {
        out.value *= tf;
        out.d_a = out.d_a * tf;
        out.d_b = out.d_b * tf;
        for row in &mut out.mixed {
            for v in row {
                *v *= tf;
            }
        }
    }
    out
}

/// `Gamma[u, C, t]`, summed over segments in ascending order.
#[must_use]
pub fn circulation(f: &AnalyticField, c: &PolygonalLoop, t: f64, q: &QuadratureConfig) -> f64 {
    (0..c.n() as isize).map(|k| segment_integral(f, c.vertex(k), c.vertex(k + 1), t, q)).sum()
}

/// Which representation produced a loop-functional value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalMode {
    Physical,
    Momentum,
}

/// A sample of the loop functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopFunctionalValue {
    pub value: Complex64,
    pub gamma: f64,
    pub mode: FunctionalMode,
}

/// `exp(i gamma/nu Gamma)`.
pub fn loop_functional_sample(
    f: &AnalyticField,
    c: &PolygonalLoop,
    t: f64,
    gamma: f64,
    nu: f64,
    q: &QuadratureConfig,
) -> Result<LoopFunctionalValue> {
    if !(nu > 0.0) {
        return Err(Error::Argument(format!("nu must be positive, got {nu}")));
    }
    let g = circulation(f, c, t, q);
    Ok(LoopFunctionalValue {
        value: Complex64::from_polar(1.0, gamma / nu * g),
        gamma: g,
        mode: FunctionalMode::Physical,
    })
}

/// Exact `grad_{C_k} Gamma` from the two adjacent segments.
#[must_use]
pub fn gamma_gradient(f: &AnalyticField, c: &PolygonalLoop, k: isize, t: f64, q: &QuadratureConfig) -> Vec3 {
    let prev = segment_derivs(f, c.vertex(k - 1), c.vertex(k), t, q, false);
    let next = segment_derivs(f, c.vertex(k), c.vertex(k + 1), t, q, false);
    prev.d_b + next.d_a
}

/// Finite-difference `grad_{C_k} Gamma` with Richardson extrapolation.
#[must_use]
pub fn gamma_gradient_fd(f: &AnalyticField, c: &PolygonalLoop, k: isize, t: f64, q: &QuadratureConfig) -> Vec3 {
    let ck = c.vertex(k);
    let g = fd::gradient(|y| circulation(f, &c.with_vertex(k, y), t, q), ck, q.fd_step, q.richardson_levels);
    Vec3::new(g[0], g[1], g[2])
}

/// `<omega>_k = int_0^1 omega(a C_k + (1-a)(C_{k-1}+C_{k+1})/2) da`.
#[must_use]
pub fn segment_average(f: &AnalyticField, c: &PolygonalLoop, k: isize, t: f64, q: &QuadratureConfig) -> Vec3 {
    let ck = c.vertex(k);
    let m = (c.vertex(k - 1) + c.vertex(k + 1)) * 0.5;
    median_average(f, ck, m, t, q.nodes_a)
}

/// `int_0^1 omega(a p + (1-a) m) da` with `n` nodes, panelled by wavenumber.
#[must_use]
pub fn median_average(f: &AnalyticField, p: Vec3, m: Vec3, t: f64, n: usize) -> Vec3 {
    let gl = gauss_legendre(n);
    let panels = (((p - m).norm() * f.max_wavenumber() / 8.0).ceil() as usize).max(1);
    gl.composite_nodes(0.0, 1.0, panels)
        .into_iter()
        .fold(Vec3::ZERO, |acc, (a, w)| acc + f.vorticity(p * a + m * (1.0 - a), t) * w)
}

/// Discretized area derivative and its split into leading term and error.
#[derive(Clone, Copy, Debug)]
pub struct AreaDerivative {
    /// `grad_{C_{k+1}} x grad_{C_k} Gamma`.
    pub value: Vec3,
    /// `-<omega>_k`.
    pub leading: Vec3,
    /// `value + <omega>_k`.
    pub r_ad: Vec3,
}

/// `grad_{C_{k+1}} x grad_{C_k} Gamma` from the cross-vertex Hessian of segment `k`.
#[must_use]
pub fn area_derivative_value(f: &AnalyticField, c: &PolygonalLoop, k: isize, t: f64, q: &QuadratureConfig) -> Vec3 {
    let s = segment_derivs(f, c.vertex(k), c.vertex(k + 1), t, q, true);
    // (curl)_j = eps_{j g l} d_{C_{k+1},g} d_{C_k,l} Gamma = eps_{j g l} mixed[l][g]
    curl_of(&s.mixed)
}

#[must_use]
pub fn area_derivative_exact(f: &AnalyticField, c: &PolygonalLoop, k: isize, t: f64, q: &QuadratureConfig) -> AreaDerivative {
    let value = area_derivative_value(f, c, k, t, q);
    let avg = segment_average(f, c, k, t, q);
    AreaDerivative { value, leading: -avg, r_ad: value + avg }
}

/// Nested finite-difference `grad_{C_{k+1}} x grad_{C_k} Gamma`.
#[must_use]
pub fn area_derivative_fd(f: &AnalyticField, c: &PolygonalLoop, k: isize, t: f64, q: &QuadratureConfig) -> Vec3 {
    let ck1 = c.vertex(k + 1);
    let g = fd::gradient(
        |y| gamma_gradient(f, &c.with_vertex(k + 1, y), k, t, q),
        ck1,
        q.fd_step,
        q.richardson_levels,
    );
    // g[gi][l] = d_{C_{k+1},gi} d_{C_k,l} Gamma
    Vec3::new(g[1][2] - g[2][1], g[2][0] - g[0][2], g[0][1] - g[1][0])
}

/// `int C'.(-nu curl omega - omega x u)`: the time derivative of `Gamma` under Navier-Stokes
/// with the loop held fixed.
#[must_use]
pub fn ns_circulation_rate(f: &AnalyticField, c: &PolygonalLoop, t: f64, nu: f64, q: &QuadratureConfig) -> f64 {
    let mut acc = 0.0;
    for k in 0..c.n() as isize {
        let a = c.vertex(k);
        let d = c.edge(k);
        for (s, w) in q.segment_nodes(f, d.norm()) {
            let j = f.jet(a + d * s, t, Order::Second);
            let rhs = -(j.curl_vorticity() * nu) - j.vorticity().cross(j.u);
            acc += w * rhs.dot(d);
        }
    }
    acc
}

/// `d_t Psi = (i gamma/nu) Psi int C'.(-nu curl omega - omega x u)`.
pub fn dt_loop_functional(
    f: &AnalyticField,
    c: &PolygonalLoop,
    t: f64,
    gamma: f64,
    nu: f64,
    q: &QuadratureConfig,
) -> Result<Complex64> {
    if f.time_law().is_static() {
        return Err(Error::NoTimeLaw);
    }
    let psi = loop_functional_sample(f, c, t, gamma, nu, q)?.value;
    let rate = ns_circulation_rate(f, c, t, nu, q);
    Ok(Complex64::new(0.0, gamma / nu) * psi * rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{TimeLaw, WaveMode};
    use crate::geometry::CVec3;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn skew_loop() -> PolygonalLoop {
        PolygonalLoop::new(vec![
            Vec3::new(0.1, -0.2, 0.3),
            Vec3::new(0.9, 0.1, -0.2),
            Vec3::new(1.2, 0.8, 0.4),
            Vec3::new(0.4, 1.3, 0.1),
            Vec3::new(-0.3, 0.6, -0.4),
        ])
        .unwrap()
    }

    #[test]
    fn circulation_examples() {
        let sq = PolygonalLoop::unit_square();
        assert!(circulation(&AnalyticField::constant(Vec3::new(1.0, 2.0, 3.0)), &skew_loop(), 0.0, &q()).abs() < 1e-14);
        assert!((circulation(&AnalyticField::rotation(), &sq, 0.0, &q()) - 2.0).abs() < 1e-14);
        // u = (0, 0, cos x1); the loop normal e1 x e3 = -e2 is opposite to omega = (0, sin x1, 0)
        let m = WaveMode::new(CVec3::real(Vec3::E3), Vec3::E1, 0.0).unwrap();
        let f = AnalyticField::wave(m).unwrap();
        let xz = PolygonalLoop::new(vec![Vec3::ZERO, Vec3::E1, Vec3::new(1.0, 0.0, 1.0), Vec3::E3]).unwrap();
        assert!((circulation(&f, &xz, 0.0, &q()) + (1.0 - 1f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn loop_functional_examples() {
        let sq = PolygonalLoop::unit_square();
        let v = loop_functional_sample(&AnalyticField::rotation(), &sq, 0.0, 1.0, 1.0, &q()).unwrap();
        assert!((v.value - Complex64::from_polar(1.0, 2.0)).norm() < 1e-14);
        let c = loop_functional_sample(&AnalyticField::constant(Vec3::E1), &sq, 0.0, 1.0, 1.0, &q()).unwrap();
        assert!((c.value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(loop_functional_sample(&AnalyticField::rotation(), &sq, 0.0, 1.0, 0.0, &q()).is_err());
    }

    #[test]
    fn gradient_matches_fd_and_is_local() {
        let f = AnalyticField::abc(1.0, 0.7, 0.4);
        let c = skew_loop();
        for k in 0..5 {
            let g = gamma_gradient(&f, &c, k, 0.0, &q());
            let g_fd = gamma_gradient_fd(&f, &c, k, 0.0, &q());
            assert!((g - g_fd).norm() <= 1e-8 * g.norm().max(1.0), "k={k}");
        }
        let moved = c.with_vertex(3, Vec3::new(5.0, 5.0, 5.0));
        assert_eq!(gamma_gradient(&f, &c, 0, 0.0, &q()), gamma_gradient(&f, &moved, 0, 0.0, &q()));
        assert_eq!(gamma_gradient(&AnalyticField::constant(Vec3::E2), &c, 2, 0.0, &q()), Vec3::ZERO);
    }

    #[test]
    fn rotation_area_derivative_is_exact() {
        let c = skew_loop();
        for k in 0..5 {
            let a = area_derivative_exact(&AnalyticField::rotation(), &c, k, 0.0, &q());
            assert!((a.value + Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
            assert!(a.r_ad.norm() < 1e-12);
        }
    }

    #[test]
    fn area_derivative_matches_nested_fd() {
        let f = AnalyticField::abc(1.0, 0.7, 0.4);
        let c = skew_loop();
        for k in 0..5 {
            let a = area_derivative_value(&f, &c, k, 0.0, &q());
            let b = area_derivative_fd(&f, &c, k, 0.0, &q());
            assert!((a - b).norm() <= 1e-7 * a.norm().max(1.0), "k={k} {a:?} {b:?}");
        }
    }

    #[test]
    fn segment_average_closed_form() {
        let a = Vec3::new(0.4, -1.1, 0.7);
        let (e1, e2) = Vec3::orthonormal_frame(a.normalized());
        let m = WaveMode::new(CVec3::new(e1, e2 * 0.5), a, 0.3).unwrap();
        let f = AnalyticField::wave(m).unwrap();
        let c = skew_loop();
        let avg = segment_average(&f, &c, 1, 0.0, &q());
        let p = c.vertex(1);
        let mid = (c.vertex(0) + c.vertex(2)) * 0.5;
        // omega = Re(i a x v0 e^{i theta}); average of e^{i theta} along the segment
        let kappa = a.dot(p - mid);
        let phase = Complex64::from_polar(1.0, a.dot(mid) + 0.3) * (Complex64::from_polar(1.0, kappa) - 1.0)
            / Complex64::new(0.0, kappa);
        let w = m.amplitude.cross(CVec3::real(a)).scale(Complex64::new(0.0, -1.0));
        let want = w.scale(phase).re;
        assert!((avg - want).norm() < 1e-13, "{avg:?} {want:?}");
        let fine = median_average(&f, p, mid, 0.0, 128);
        assert!((avg - fine).norm() < 1e-12);
        assert!((segment_average(&AnalyticField::rotation(), &c, 1, 0.0, &q()) - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn dt_functional_beltrami() {
        let nu = 0.1;
        let f = AnalyticField::abc_decaying(1.0, 0.7, 0.4, nu).unwrap();
        let c = skew_loop();
        let t = 0.3;
        let d = dt_loop_functional(&f, &c, t, 1.0, nu, &q()).unwrap();
        let psi = loop_functional_sample(&f, &c, t, 1.0, nu, &q()).unwrap();
        let closed = Complex64::new(0.0, 1.0 / nu) * (-nu * psi.gamma) * psi.value;
        assert!((d - closed).norm() < 1e-12 * closed.norm().max(1.0));
        let fd_t = fd::central(
            |h| loop_functional_sample(&f, &c, t + h, 1.0, nu, &q()).unwrap().value,
            1e-3,
            2,
        );
        assert!((d - fd_t).norm() < 1e-6 * d.norm());
        let st = AnalyticField::constant(Vec3::E1);
        assert!(dt_loop_functional(&st, &c, 0.0, 1.0, nu, &q()).is_err());
        let ct = st.with_time_law(TimeLaw::Exponential { rate: 0.0 }).unwrap();
        assert_eq!(dt_loop_functional(&ct, &c, 0.0, 1.0, nu, &q()).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn closed_segment_derivs_match_quadrature() {
        let wave = WaveMode::new(CVec3::new(Vec3::new(0.3, -0.2, 0.0), Vec3::new(0.1, 0.5, 0.0)), Vec3::new(0.0, 0.0, 1.3), 0.4).unwrap();
        let fields = [
            AnalyticField::abc_decaying(1.0, 0.7, 0.4, 0.3).unwrap(),
            AnalyticField::rotation().with_time_law(TimeLaw::Linear { rate: 0.5 }).unwrap(),
            AnalyticField::new(vec![wave], Some([[0.1, 0.2, 0.0], [0.0, 0.3, -0.1], [0.2, 0.0, -0.4]]), Some(Vec3::new(1.0, 2.0, 3.0)), TimeLaw::Static).unwrap(),
        ];
        let pairs = [
            (Vec3::new(0.1, -0.2, 0.3), Vec3::new(0.4, 0.1, 0.2)),
            (Vec3::new(0.0, 0.0, 0.0), Vec3::new(1e-3, 2e-3, -1e-3)),
            (Vec3::new(-2.0, 1.0, 0.5), Vec3::new(5.0, -3.0, 4.0)),
        ];
        for f in &fields {
            for &(a, b) in &pairs {
                let x = segment_derivs(f, a, b, 0.3, &q(), true);
                let y = segment_derivs_closed(f, a, b, 0.3, true);
                let scale = 1.0 + (b - a).norm() * (1.0 + (b - a).norm());
                assert!((x.value - y.value).abs() < 1e-12 * scale);
                assert!((x.d_a - y.d_a).norm() < 1e-12 * scale);
                assert!((x.d_b - y.d_b).norm() < 1e-12 * scale);
                for l in 0..3 {
                    for g in 0..3 {
                        assert!((x.mixed[l][g] - y.mixed[l][g]).abs() < 1e-12 * scale, "{l}{g} {:?} {:?}", x.mixed, y.mixed);
                    }
                }
            }
        }
    }

}
