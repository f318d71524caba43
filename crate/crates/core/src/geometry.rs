//! Points, complex vectors, polygonal loops and sampled closed curves.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// A real 3-vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);
    pub const E1: Self = Self::new(1.0, 0.0, 0.0);
    pub const E2: Self = Self::new(0.0, 1.0, 0.0);
    pub const E3: Self = Self::new(0.0, 0.0, 1.0);

    #[must_use]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[must_use]
    pub const fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    #[must_use]
    pub const fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Unit basis vector `e_i`.
    #[must_use]
    pub fn basis(i: usize) -> Self {
        let mut a = [0.0; 3];
        a[i] = 1.0;
        Self::from_array(a)
    }

    #[must_use]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[must_use]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[must_use]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[must_use]
    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    #[must_use]
    pub fn normalized(self) -> Self {
        self / self.norm()
    }

    #[must_use]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Returns a copy with component `i` replaced.
    #[must_use]
    pub fn with(self, i: usize, v: f64) -> Self {
        let mut a = self.to_array();
        a[i] = v;
        Self::from_array(a)
    }

    /// Two unit vectors completing `n` (unit) to a right-handed frame.
    #[must_use]
    pub fn orthonormal_frame(n: Self) -> (Self, Self) {
        let helper = if n.x.abs() < 0.9 { Self::E1 } else { Self::E2 };
        let e1 = (helper - n * helper.dot(n)).normalized();
        let e2 = n.cross(e1);
        (e1, e2)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

/// A complex 3-vector stored as real and imaginary parts.
///
/// Two distinct products are provided: [`CVec3::dot`] is the bilinear
/// (non-conjugating) product, so `F.dot(F)` can vanish for `F != 0`;
/// [`CVec3::hdot`] is the Hermitian inner product.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CVec3 {
    pub re: Vec3,
    pub im: Vec3,
}

impl CVec3 {
    pub const ZERO: Self = Self { re: Vec3::ZERO, im: Vec3::ZERO };

    #[must_use]
    pub const fn new(re: Vec3, im: Vec3) -> Self {
        Self { re, im }
    }

    #[must_use]
    pub const fn real(re: Vec3) -> Self {
        Self { re, im: Vec3::ZERO }
    }

    #[must_use]
    pub fn from_components(c: [Complex64; 3]) -> Self {
        Self {
            re: Vec3::new(c[0].re, c[1].re, c[2].re),
            im: Vec3::new(c[0].im, c[1].im, c[2].im),
        }
    }

    #[must_use]
    pub fn component(self, i: usize) -> Complex64 {
        Complex64::new(self.re[i], self.im[i])
    }

    #[must_use]
    pub fn components(self) -> [Complex64; 3] {
        [self.component(0), self.component(1), self.component(2)]
    }

    /// Bilinear product `sum_i a_i b_i` without conjugation.
    #[must_use]
    pub fn dot(self, o: Self) -> Complex64 {
        Complex64::new(
            self.re.dot(o.re) - self.im.dot(o.im),
            self.re.dot(o.im) + self.im.dot(o.re),
        )
    }

    /// Hermitian product `sum_i conj(a_i) b_i`.
    #[must_use]
    pub fn hdot(self, o: Self) -> Complex64 {
        Complex64::new(
            self.re.dot(o.re) + self.im.dot(o.im),
            self.re.dot(o.im) - self.im.dot(o.re),
        )
    }

    /// Bilinear product with a real vector.
    #[must_use]
    pub fn dot_real(self, v: Vec3) -> Complex64 {
        Complex64::new(self.re.dot(v), self.im.dot(v))
    }

    /// Bilinear cross product.
    #[must_use]
    pub fn cross(self, o: Self) -> Self {
        Self {
            re: self.re.cross(o.re) - self.im.cross(o.im),
            im: self.re.cross(o.im) + self.im.cross(o.re),
        }
    }

    #[must_use]
    pub fn cross_real(self, v: Vec3) -> Self {
        Self { re: self.re.cross(v), im: self.im.cross(v) }
    }

    /// Hermitian norm.
    #[must_use]
    pub fn norm(self) -> f64 {
        (self.re.norm2() + self.im.norm2()).sqrt()
    }

    #[must_use]
    pub fn scale(self, c: Complex64) -> Self {
        Self {
            re: self.re * c.re - self.im * c.im,
            im: self.im * c.re + self.re * c.im,
        }
    }

    #[must_use]
    pub fn conj(self) -> Self {
        Self { re: self.re, im: -self.im }
    }

    #[must_use]
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for CVec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for CVec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for CVec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self { re: -self.re, im: -self.im }
    }
}

impl Mul<f64> for CVec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self { re: self.re * s, im: self.im * s }
    }
}

impl Mul<Complex64> for CVec3 {
    type Output = Self;
    fn mul(self, c: Complex64) -> Self {
        self.scale(c)
    }
}

impl AddAssign for CVec3 {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Mathematical modulus: result in `[0, n)`.
#[must_use]
pub fn cyclic(k: isize, n: usize) -> usize {
    k.rem_euclid(n as isize) as usize
}

/// A closed polygon with `N >= 3` vertices and cyclic indexing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonalLoop {
    vertices: Vec<Vec3>,
}

impl PolygonalLoop {
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Argument(format!(
                "a loop needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!("vertex {i} is not finite")));
        }
        Ok(Self { vertices })
    }

    /// Regular `n`-gon of circumradius `radius` around `center` in the plane normal to `normal`,
    /// traversed counterclockwise about `normal`, starting along the first frame vector.
    pub fn regular(n: usize, center: Vec3, radius: f64, normal: Vec3) -> Result<Self> {
        let (e1, e2) = Vec3::orthonormal_frame(normal.normalized());
        let v = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                center + e1 * (radius * th.cos()) + e2 * (radius * th.sin())
            })
            .collect();
        Self::new(v)
    }

    #[must_use]
    pub fn unit_square() -> Self {
        Self {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
        }
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    #[must_use]
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    #[must_use]
    pub fn vertex(&self, k: isize) -> Vec3 {
        self.vertices[cyclic(k, self.n())]
    }

    /// `C_{k+1} - C_k`.
    #[must_use]
    pub fn edge(&self, k: isize) -> Vec3 {
        self.vertex(k + 1) - self.vertex(k)
    }

    /// `sum_{k=p}^{q} |C_{k+1} - C_k|`.
    pub fn arc_length(&self, p: isize, q: isize) -> Result<f64> {
        if p > q {
            return Err(Error::Argument(format!("arc_length needs p <= q, got {p} > {q}")));
        }
        Ok((p..=q).map(|k| self.edge(k).norm()).sum())
    }

    #[must_use]
    pub fn perimeter(&self) -> f64 {
        (0..self.n() as isize).map(|k| self.edge(k).norm()).sum()
    }

    #[must_use]
    pub fn max_edge(&self) -> f64 {
        (0..self.n() as isize).map(|k| self.edge(k).norm()).fold(0.0, f64::max)
    }

    #[must_use]
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.vertices {
            for b in &self.vertices {
                d = d.max((*a - *b).norm());
            }
        }
        d
    }

    /// Copy with vertex `k` replaced by `y`.
    #[must_use]
    pub fn with_vertex(&self, k: isize, y: Vec3) -> Self {
        let mut v = self.vertices.clone();
        let i = cyclic(k, self.n());
        v[i] = y;
        Self { vertices: v }
    }

    #[must_use]
    pub fn translated(&self, h: Vec3) -> Self {
        Self { vertices: self.vertices.iter().map(|v| *v + h).collect() }
    }

    /// `sum_k C_k x C_{k+1}`: twice the vector area of the polygon.
    #[must_use]
    pub fn shoelace_vector(&self) -> Vec3 {
        (0..self.n() as isize).fold(Vec3::ZERO, |acc, k| acc + self.vertex(k).cross(self.vertex(k + 1)))
    }
}

type CurveFn = Arc<dyn Fn(f64) -> Vec3 + Send + Sync>;

/// A closed parametrized curve `theta in [0,1] -> R^3` with its derivative.
#[derive(Clone)]
pub struct SampledCurve {
    pos: CurveFn,
    deriv: CurveFn,
    /// Composite Gauss-Legendre panels for curve integrals.
    pub panels: usize,
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
}

impl std::fmt::Debug for SampledCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SampledCurve").field("panels", &self.panels).field("nodes", &self.nodes).finish()
    }
}

impl SampledCurve {
    pub fn new(
        pos: impl Fn(f64) -> Vec3 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> Vec3 + Send + Sync + 'static,
    ) -> Self {
        Self { pos: Arc::new(pos), deriv: Arc::new(deriv), panels: 256, nodes: 4 }
    }

    /// Circle of the given radius around `center`, counterclockwise about `normal`.
    #[must_use]
    pub fn circle(center: Vec3, radius: f64, normal: Vec3) -> Self {
        let (e1, e2) = Vec3::orthonormal_frame(normal.normalized());
        let tau = 2.0 * std::f64::consts::PI;
        Self::new(
            move |t| center + e1 * (radius * (tau * t).cos()) + e2 * (radius * (tau * t).sin()),
            move |t| e1 * (-radius * tau * (tau * t).sin()) + e2 * (radius * tau * (tau * t).cos()),
        )
    }

    /// Unit circle `(cos 2 pi t, sin 2 pi t, 0)`.
    #[must_use]
    pub fn unit_circle() -> Self {
        Self::circle(Vec3::ZERO, 1.0, Vec3::E3)
    }

    /// Constant-speed piecewise-linear traversal of a polygon (one edge per `1/N` of parameter).
    #[must_use]
    pub fn polygon(c: &PolygonalLoop) -> Self {
        let v = c.vertices().to_vec();
        let n = v.len();
        let seg = move |t: f64| {
            let s = t.rem_euclid(1.0) * n as f64;
            let k = (s.floor() as usize).min(n - 1);
            (k, s - k as f64)
        };
        let v2 = v.clone();
        let mut curve = Self::new(
            move |t| {
                let (k, f) = seg(t);
                v[k] + (v[(k + 1) % n] - v[k]) * f
            },
            move |t| {
                let (k, _) = seg(t);
                (v2[(k + 1) % n] - v2[k]) * n as f64
            },
        );
        // align panel boundaries with the corners
        curve.panels = n * (256 / n).max(1);
        curve
    }

    /// Closed Fourier curve `c0 + sum_j (a_j cos 2 pi j t + b_j sin 2 pi j t)`.
    #[must_use]
    pub fn fourier(c0: Vec3, cos_coeffs: Vec<Vec3>, sin_coeffs: Vec<Vec3>) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let (ca, sa) = (cos_coeffs.clone(), sin_coeffs.clone());
        Self::new(
            move |t| {
                let mut p = c0;
                for (j, a) in cos_coeffs.iter().enumerate() {
                    p += *a * (tau * (j + 1) as f64 * t).cos();
                }
                for (j, b) in sin_coeffs.iter().enumerate() {
                    p += *b * (tau * (j + 1) as f64 * t).sin();
                }
                p
            },
            move |t| {
                let mut d = Vec3::ZERO;
                for (j, a) in ca.iter().enumerate() {
                    let w = tau * (j + 1) as f64;
                    d += *a * (-w * (w * t).sin());
                }
                for (j, b) in sa.iter().enumerate() {
                    let w = tau * (j + 1) as f64;
                    d += *b * (w * (w * t).cos());
                }
                d
            },
        )
    }

    #[must_use]
    pub fn at(&self, t: f64) -> Vec3 {
        (self.pos)(t)
    }

    #[must_use]
    pub fn derivative(&self, t: f64) -> Vec3 {
        (self.deriv)(t)
    }

    /// Composite Gauss-Legendre integral over `[0,1]` of a vector integrand in `t`.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> Vec3) -> Vec3 {
        let gl = GaussLegendre::new(self.nodes);
        let h = 1.0 / self.panels as f64;
        let mut acc = Vec3::ZERO;
        for p in 0..self.panels {
            let a = p as f64 * h;
            for (x, w) in gl.nodes_on(a, a + h) {
                acc += g(x) * w;
            }
        }
        acc
    }

    /// Maximum relative mismatch between the derivative evaluator and a
    /// fourth-order central difference of the position map at `samples` points.
    #[must_use]
    pub fn derivative_mismatch(&self, samples: usize) -> f64 {
        let h = 1e-3;
        let mut worst: f64 = 0.0;
        for i in 0..samples {
            // offsets avoid polygon corners at multiples of 1/N
            let t = (i as f64 + 0.37) / samples as f64;
            let fd = (self.at(t - 2.0 * h) - self.at(t + 2.0 * h) + (self.at(t + h) - self.at(t - h)) * 8.0)
                / (12.0 * h);
            let d = self.derivative(t);
            let scale = d.norm().max(1e-300);
            worst = worst.max((fd - d).norm() / scale);
        }
        worst
    }
}

/// `A(gamma) = int_0^1 gamma'(t) x gamma(t) dt`.
#[must_use]
pub fn area_vector(g: &SampledCurve) -> Vec3 {
    g.integrate(|t| g.derivative(t).cross(g.at(t)))
}

/// Result of [`discretize_curve`].
#[derive(Clone, Debug)]
pub struct Discretization {
    pub loop_: PolygonalLoop,
    pub max_edge: f64,
    /// Smallest `M` with `max edge <= M/N`.
    pub m: f64,
}

/// Vertices `gamma(k/N)`, `k = 0..N-1`.
pub fn discretize_curve(g: &SampledCurve, n: usize) -> Result<Discretization> {
    if n < 3 {
        return Err(Error::Argument(format!("discretization needs N >= 3, got {n}")));
    }
    let loop_ = PolygonalLoop::new((0..n).map(|k| g.at(k as f64 / n as f64)).collect())?;
    let max_edge = loop_.max_edge();
    Ok(Discretization { m: max_edge * n as f64, max_edge, loop_ })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn square_edges_wrap() {
        let c = PolygonalLoop::unit_square();
        assert_eq!(c.edge(0), Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(c.edge(3), Vec3::new(0.0, -1.0, 0.0));
        assert_eq!(c.edge(-1), c.edge(3));
        assert_eq!(c.arc_length(0, 3).unwrap(), 4.0);
        assert_eq!(c.arc_length(0, 0).unwrap(), 1.0);
        assert!(c.arc_length(2, 1).is_err());
    }

    #[test]
    fn hexagon_perimeter() {
        let c = PolygonalLoop::regular(6, Vec3::ZERO, 1.0, Vec3::E3).unwrap();
        assert!((c.arc_length(0, 5).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn too_few_vertices_rejected() {
        assert!(PolygonalLoop::new(vec![Vec3::ZERO, Vec3::E1]).is_err());
    }

    #[test]
    fn unit_circle_area_vector() {
        let a = area_vector(&SampledCurve::unit_circle());
        assert!((a - Vec3::new(0.0, 0.0, -2.0 * PI)).norm() < 1e-12, "{a:?}");
    }

    #[test]
    fn constant_curve_area_zero() {
        let g = SampledCurve::new(|_| Vec3::new(1.0, 2.0, 3.0), |_| Vec3::ZERO);
        assert_eq!(area_vector(&g), Vec3::ZERO);
    }

    #[test]
    fn polygon_area_matches_shoelace() {
        let c = PolygonalLoop::new(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.5, 1.5, 0.0),
            Vec3::new(0.5, 2.0, 0.0),
        ])
        .unwrap();
        let a = area_vector(&SampledCurve::polygon(&c));
        // gamma' x gamma has the opposite orientation of C_k x C_{k+1}
        assert!((a + c.shoelace_vector()).norm() < 1e-8, "{a:?}");
    }

    #[test]
    fn circle_discretization_chords() {
        let d = discretize_curve(&SampledCurve::unit_circle(), 64).unwrap();
        assert!((d.max_edge - 2.0 * (PI / 64.0).sin()).abs() < 1e-14);
        assert!((d.m - 2.0 * PI).abs() < 2.0 * PI * 1e-3);
        assert!(discretize_curve(&SampledCurve::unit_circle(), 2).is_err());
    }

    #[test]
    fn square_sampler_recovers_corners() {
        let sq = PolygonalLoop::unit_square();
        let d = discretize_curve(&SampledCurve::polygon(&sq), 4).unwrap();
        for k in 0..4 {
            assert!((d.loop_.vertex(k) - sq.vertex(k)).norm() < 1e-15);
        }
    }

    #[test]
    fn derivative_evaluators_match_fd() {
        assert!(SampledCurve::unit_circle().derivative_mismatch(50) < 1e-6);
        let f = SampledCurve::fourier(Vec3::ZERO, vec![Vec3::E1, Vec3::E3 * 0.3], vec![Vec3::E2, Vec3::E1 * 0.2]);
        assert!(f.derivative_mismatch(50) < 1e-6);
        let p = SampledCurve::polygon(&PolygonalLoop::unit_square());
        assert!(p.derivative_mismatch(7) < 1e-6);
    }

    #[test]
    fn bilinear_dot_can_vanish() {
        let f = CVec3::new(Vec3::E1, Vec3::E2);
        assert_eq!(f.dot(f), Complex64::new(0.0, 0.0));
        assert!((f.hdot(f).re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn complex_cross_matches_componentwise() {
        let a = CVec3::new(Vec3::new(1.0, 2.0, -1.0), Vec3::new(0.5, -0.3, 2.0));
        let b = CVec3::new(Vec3::new(-0.7, 0.1, 0.4), Vec3::new(1.5, 0.2, -0.6));
        let (x, y) = (a.components(), b.components());
        let want = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
        let got = a.cross(b).components();
        for i in 0..3 {
            assert!((got[i] - want[i]).norm() < 1e-14);
        }
    }
}
