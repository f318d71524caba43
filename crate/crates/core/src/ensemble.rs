//! Star-polygon Euler ensemble: momenta `P_k(t) = G_k / (gamma sqrt(2(t + t0)))` with
//! `G_k = iA + f_k`, where the `f_k` are the vertices of a `{q/p}` star polygon.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cyclic, CVec3, Vec3};
use crate::momentum::{system_residual, MomentumState, MomentumTrajectory, ResidualTable, SystemVariant};

/// Largest deviation in each of the four defining conditions, over all `k`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConditionReport {
    /// `| |f_k - f_{k-1}|^2 - 1 |`.
    pub unit_steps: f64,
    /// `|A.f_k|`.
    pub orthogonal_offset: f64,
    /// `| |f_k|^2 - |f_{k-1}|^2 |`.
    pub equal_radii: f64,
    /// `| 4|A|^2 - |f_k + f_{k+1}|^2 |`.
    pub offset_norm: f64,
}

impl ConditionReport {
    #[must_use]
    pub fn max(&self) -> f64 {
        self.unit_steps.max(self.orthogonal_offset).max(self.equal_radii).max(self.offset_norm)
    }
}

/// `I_a`, `I_b`, `I_c` at one index.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Iabc {
    pub a: CVec3,
    pub b: CVec3,
    pub c: CVec3,
    /// `F_k . F_k` (bilinear).
    pub ff: Complex64,
}

impl Iabc {
    #[must_use]
    pub fn max(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StarPolygonEnsemble {
    pub q: usize,
    pub p: usize,
    pub normal: Vec3,
    pub radius: f64,
    pub offset: Vec3,
    pub f: Vec<Vec3>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl StarPolygonEnsemble {
    /// `f_k = R(cos(2 pi p k/q) e1 + sin(2 pi p k/q) e2)` in the plane normal to `normal`,
    /// `R = 1/(2 sin(pi p/q))`, `A = R cos(pi p/q) normal`. The four conditions are checked to `1e-12`.
    pub fn construct(q: usize, p: usize, normal: Vec3) -> Result<Self> {
        if q < 3 || p == 0 || 2 * p >= q || gcd(p, q) != 1 {
            return Err(Error::Argument(format!("{{{q}/{p}}} needs q >= 3, 1 <= p < q/2 and gcd(p, q) = 1")));
        }
        if !(normal.norm() > 0.0) || !normal.is_finite() {
            return Err(Error::Argument("plane normal must be a nonzero finite vector".into()));
        }
        let n = normal.normalized();
        let (e1, e2) = Vec3::orthonormal_frame(n);
        let half = std::f64::consts::PI * p as f64 / q as f64;
        let radius = 0.5 / half.sin();
        let f = (0..q)
            .map(|k| {
                let th = 2.0 * half * k as f64;
                (e1 * th.cos() + e2 * th.sin()) * radius
            })
            .collect();
        let e = Self { q, p, normal: n, radius, offset: n * (radius * half.cos()), f };
        let r = e.verify_conditions();
        if r.max() > 1e-12 {
            return Err(Error::Consistency(format!("star polygon {{{q}/{p}}} violates its conditions by {:.3e}", r.max())));
        }
        Ok(e)
    }

    #[must_use]
    pub fn f(&self, k: isize) -> Vec3 {
        self.f[cyclic(k, self.q)]
    }

    /// `G_k = iA + f_k`.
    #[must_use]
    pub fn g(&self, k: isize) -> CVec3 {
        CVec3::new(self.f(k), self.offset)
    }

    /// The ensemble with `f_k` moved by `delta`; conditions are not re-checked.
    #[must_use]
    pub fn perturbed(&self, k: usize, delta: Vec3) -> Self {
        let mut e = self.clone();
        e.f[k % self.q] += delta;
        e
    }

    #[must_use]
    pub fn verify_conditions(&self) -> ConditionReport {
        let a = self.offset;
        let mut r = ConditionReport { unit_steps: 0.0, orthogonal_offset: 0.0, equal_radii: 0.0, offset_norm: 0.0 };
        for k in 0..self.q as isize {
            let (fk, fp, fn_) = (self.f(k), self.f(k - 1), self.f(k + 1));
            r.unit_steps = r.unit_steps.max(((fk - fp).norm2() - 1.0).abs());
            r.orthogonal_offset = r.orthogonal_offset.max(a.dot(fk).abs());
            r.equal_radii = r.equal_radii.max((fk.norm2() - fp.norm2()).abs());
            r.offset_norm = r.offset_norm.max((4.0 * a.norm2() - (fk + fn_).norm2()).abs());
        }
        r
    }

    /// `F_k = (G_k + G_{k-1})/2`, `dF_k = G_k - G_{k-1}` (real) and the three combinations
    /// `I_a = ((F.dF)^2/|dF|^2 - F.F) dF`, `I_b = (F.dF) dF`, `I_c = (1 - |dF|^2) F`.
    #[must_use]
    pub fn verify_iabc(&self, k: isize) -> Iabc {
        let f = (self.g(k) + self.g(k - 1)) * 0.5;
        let df = (self.g(k) - self.g(k - 1)).re;
        let fdf = f.dot_real(df);
        let ff = f.dot(f);
        let d2 = df.norm2();
        Iabc {
            a: CVec3::real(df).scale(fdf * fdf / d2 - ff),
            b: CVec3::real(df).scale(fdf),
            c: f * (1.0 - d2),
            ff,
        }
    }

    /// Vertices with `f_k` as rows, for export.
    #[must_use]
    pub fn rows(&self) -> Vec<(usize, Vec3)> {
        self.f.iter().copied().enumerate().collect()
    }
}

/// `P_k(t) = sqrt(1/(2(t + t0))) G_k / gamma`.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleTrajectory {
    pub ensemble: StarPolygonEnsemble,
    pub t0: f64,
    pub gamma: f64,
}

impl EnsembleTrajectory {
    pub fn new(ensemble: StarPolygonEnsemble, t0: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !t0.is_finite() {
            return Err(Error::Argument("trajectory needs gamma > 0 and finite t0".into()));
        }
        Ok(Self { ensemble, t0, gamma })
    }

    fn scale(&self, t: f64) -> Result<f64> {
        let u = t + self.t0;
        if !(u > 0.0) {
            return Err(Error::Argument(format!("time {t} is not after -t0 = {}", -self.t0)));
        }
        Ok((2.0 * u).sqrt().recip())
    }

    pub fn state(&self, t: f64) -> Result<MomentumState> {
        let s = self.scale(t)? / self.gamma;
        MomentumState::new((0..self.ensemble.q as isize).map(|k| self.ensemble.g(k) * s).collect())
    }

    /// `dP_k/dt = -(2(t + t0))^{-3/2} G_k / gamma`.
    pub fn rates(&self, t: f64) -> Result<Vec<CVec3>> {
        let s = self.scale(t)?;
        let c = -s * s * s / self.gamma;
        Ok((0..self.ensemble.q as isize).map(|k| self.ensemble.g(k) * c).collect())
    }

    pub fn trajectory(&self, times: &[f64]) -> Result<MomentumTrajectory> {
        MomentumTrajectory::from_law(times, |t| Ok((self.state(t)?, self.rates(t)?)))
    }

    /// Residuals of a momentum system along the trajectory, with `nu = 1`.
    pub fn residuals(&self, variant: SystemVariant, times: &[f64]) -> Result<ResidualTable> {
        system_residual(&self.trajectory(times)?, variant, self.gamma, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pentagram_radius_and_offset() {
        let e = StarPolygonEnsemble::construct(5, 2, Vec3::E3).unwrap();
        assert!((e.radius - 0.525_731_112_119_133_6).abs() < 1e-12);
        assert!((e.offset.norm() - 0.162_459_848_116_453).abs() < 1e-12);
        assert!(e.verify_conditions().max() < 1e-14);
    }

    #[test]
    fn triangle() {
        let e = StarPolygonEnsemble::construct(3, 1, Vec3::new(1.0, 1.0, 0.0)).unwrap();
        assert!((e.radius - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((e.offset.norm() - 0.5 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_symbols() {
        assert!(StarPolygonEnsemble::construct(4, 2, Vec3::E3).is_err());
        assert!(StarPolygonEnsemble::construct(5, 3, Vec3::E3).is_err());
        assert!(StarPolygonEnsemble::construct(2, 1, Vec3::E3).is_err());
        assert!(StarPolygonEnsemble::construct(6, 2, Vec3::E3).is_err());
    }

    #[test]
    fn iabc_vanish_and_ff_is_zero_for_nonzero_f() {
        let e = StarPolygonEnsemble::construct(7, 3, Vec3::new(0.2, -0.3, 1.0)).unwrap();
        for k in 0..7 {
            let r = e.verify_iabc(k);
            assert!(r.max() < 1e-12);
            assert!(r.ff.norm() < 1e-12);
            assert!(((e.g(k) + e.g(k - 1)) * 0.5).norm() > 0.1);
        }
        let bad = e.perturbed(2, Vec3::new(1e-3, 0.0, 0.0));
        let worst = (0..7).map(|k| bad.verify_iabc(k).max()).fold(0.0, f64::max);
        assert!(worst > 1e-4);
    }

    #[test]
    fn increments_are_real() {
        let tr = EnsembleTrajectory::new(StarPolygonEnsemble::construct(11, 4, Vec3::E2).unwrap(), 1.0, 1.3).unwrap();
        let s = tr.state(0.7).unwrap();
        for k in 0..11 {
            assert_eq!((s.p(k + 1) - s.p(k)).im, Vec3::ZERO);
        }
        assert!(tr.state(-1.0).is_err());
    }

    #[test]
    fn self_similar_residuals() {
        let e = StarPolygonEnsemble::construct(5, 2, Vec3::E3).unwrap();
        let a = EnsembleTrajectory::new(e.clone(), 1.0, 1.0).unwrap().residuals(SystemVariant::Full, &[0.5]).unwrap();
        let b = EnsembleTrajectory::new(e, 1.5, 1.0).unwrap().residuals(SystemVariant::Full, &[0.0]).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.residual, y.residual);
        }
    }
}
