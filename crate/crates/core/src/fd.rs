//! Central finite differences with Richardson extrapolation.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::geometry::{CVec3, Vec3};

/// Values that finite differences can be taken of.
pub trait Linear: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl Linear for f64 {}
impl Linear for Vec3 {}
impl Linear for Complex64 {}
impl Linear for CVec3 {}

/// Derivative at 0 of `f` from central differences at `h, h/2, ..., h/2^levels`,
/// combined by Richardson extrapolation in `h^2`.
pub fn central<T: Linear>(f: impl Fn(f64) -> T, h: f64, levels: usize) -> T {
    let mut table: Vec<T> = (0..=levels)
        .map(|j| {
            let hj = h / f64::from(1u32 << j);
            (f(hj) - f(-hj)) * (0.5 / hj)
        })
        .collect();
    let mut factor = 4.0;
    for m in 1..=levels {
        for j in (m..=levels).rev() {
            table[j] = (table[j] * factor - table[j - 1]) * (1.0 / (factor - 1.0));
        }
        factor *= 4.0;
    }
    table[levels]
}

/// Gradient of `f` at `x` by [`central`] along each axis.
pub fn gradient<T: Linear>(f: impl Fn(Vec3) -> T, x: Vec3, h: f64, levels: usize) -> [T; 3] {
    [0, 1, 2].map(|i| central(|s| f(x + Vec3::basis(i) * s), h, levels))
}

/// Curl at `x` of a complex vector field by [`central`] differences.
pub fn curl(f: impl Fn(Vec3) -> CVec3, x: Vec3, h: f64, levels: usize) -> CVec3 {
    let g = gradient(f, x, h, levels);
    // g[j] = d_j F
    let c = |i: usize, j: usize| g[j].component(i);
    CVec3::from_components([c(2, 1) - c(1, 2), c(0, 2) - c(2, 0), c(1, 0) - c(0, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_improves_sine() {
        let exact = 1.0_f64.cos();
        let plain = central(|h| (1.0 + h).sin(), 1e-2, 0);
        let rich = central(|h| (1.0 + h).sin(), 1e-2, 2);
        assert!((rich - exact).abs() < 1e-12);
        assert!((plain - exact).abs() > 1e-6);
    }

    #[test]
    fn curl_of_rotation() {
        let c = curl(|x| CVec3::real(Vec3::new(-x.y, x.x, 0.0)), Vec3::new(0.2, 0.3, 0.1), 1e-3, 1);
        assert!((c.re - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-12);
    }
}
