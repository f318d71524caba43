//! Vertex-differential operators acting on the loop functional in physical space:
//! vorticity `Omega_k`, diffusion `D_k`, velocity `U_k`, advection
//! `Omega_{k+3} x U_k`, the variants built on `grad_{s_k} = sum_{j>k} grad_{C_j}`,
//! and the residuals of the discretized loop equations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::biot_savart::{bs_direct_complex, remainder_r, BSConfig};
use crate::circulation::{
    area_derivative_value, circulation, gamma_gradient, segment_average, segment_derivs, segment_derivs_closed,
    segment_integral,
    QuadratureConfig,
};
use crate::error::{Error, Result};
use crate::fd;
use crate::fields::{curl_of, AnalyticField, Order};
use crate::geometry::{CVec3, PolygonalLoop, Vec3};
use crate::quadrature::gauss_legendre;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `gamma`, `nu`, `alpha`, `N` with `rho = 1/N` and `ell = N^{-alpha}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorParams {
    pub gamma: f64,
    pub nu: f64,
    pub alpha: f64,
    pub n: usize,
}

impl OperatorParams {
    pub fn new(gamma: f64, nu: f64, alpha: f64, n: usize) -> Result<Self> {
        if !(gamma > 0.0 && nu > 0.0) {
            return Err(Error::Argument("gamma and nu must be positive".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if n < 8 {
            return Err(Error::Argument(format!("operators need N >= 8, got {n}")));
        }
        Ok(Self { gamma, nu, alpha, n })
    }

    /// `gamma / nu`.
    #[must_use]
    pub fn g(&self) -> f64 {
        self.gamma / self.nu
    }

    #[must_use]
    pub fn rho(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[must_use]
    pub fn ell(&self) -> f64 {
        (self.n as f64).powf(-self.alpha)
    }

    /// `log(1/rho) = log N`.
    #[must_use]
    pub fn log_n(&self) -> f64 {
        (self.n as f64).ln()
    }
}

/// `N^{alpha-1} log N + N^{-3 alpha/2}`: the shape of the loop-equation error bound.
#[must_use]
pub fn loop_residual_budget(n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    nf.powf(alpha - 1.0) * nf.ln() + nf.powf(-1.5 * alpha)
}

/// An operator applied to `Psi`: the symbol `value = raw / Psi` and named pieces of its
/// decomposition into leading term and errors.
#[derive(Clone, Debug)]
pub struct OperatorResult {
    pub value: CVec3,
    pub raw: CVec3,
    pub psi: Complex64,
    pub parts: Vec<(&'static str, CVec3)>,
}

impl OperatorResult {
    fn from_raw(raw: CVec3, psi: Complex64, parts: Vec<(&'static str, CVec3)>) -> Self {
        Self { value: raw.scale(psi.inv()), raw, psi, parts }
    }

    fn from_symbol(value: CVec3, psi: Complex64, parts: Vec<(&'static str, CVec3)>) -> Self {
        Self { value, raw: value.scale(psi), psi, parts }
    }

    #[must_use]
    pub fn part(&self, name: &str) -> Option<CVec3> {
        self.parts.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// Everything `Omega_k Psi` needs when `C_k` is replaced by a free point `y`.
struct VertexFreeze {
    prev: Vec3,
    next: Vec3,
    gamma_rest: f64,
    /// `grad_{C_{k+1}} Gamma` contribution of segment `k+1` plus any constant extra sum.
    next_grad_fixed: Vec3,
}

/// A field, a loop, a time and the numerical settings shared by all operators.
#[derive(Clone, Debug)]
pub struct OperatorContext<'a> {
    pub field: &'a AnalyticField,
    pub c: &'a PolygonalLoop,
    pub t: f64,
    pub params: OperatorParams,
    pub q: QuadratureConfig,
    /// Ball-quadrature settings; `ell` is overridden by `params.ell()`.
    pub bs: BSConfig,
}

impl<'a> OperatorContext<'a> {
    #[must_use]
    pub fn new(field: &'a AnalyticField, c: &'a PolygonalLoop, t: f64, params: OperatorParams) -> Self {
        Self { field, c, t, params, q: QuadratureConfig::default(), bs: BSConfig::default() }
    }

    fn n(&self) -> isize {
        self.c.n() as isize
    }

    #[must_use]
    pub fn gamma(&self) -> f64 {
        circulation(self.field, self.c, self.t, &self.q)
    }

    #[must_use]
    pub fn psi(&self) -> Complex64 {
        psi_of(self.params.g() * self.gamma())
    }

    fn grad(&self, c: &PolygonalLoop, k: isize) -> Vec3 {
        gamma_gradient(self.field, c, k, self.t, &self.q)
    }

    /// `sum_{j=from}^{N-1} grad_{C_j} Gamma` (empty when `from > N-1`).
    fn grad_tail(&self, c: &PolygonalLoop, from: isize) -> Vec3 {
        (from..self.n()).fold(Vec3::ZERO, |acc, j| acc + self.grad(c, j))
    }

    fn freeze(&self, k: isize, extra: Vec3) -> VertexFreeze {
        let c = self.c;
        let n = self.n();
        let gamma_rest = (0..n)
            .filter(|&j| j != (k - 1).rem_euclid(n) && j != k.rem_euclid(n))
            .map(|j| segment_integral(self.field, c.vertex(j), c.vertex(j + 1), self.t, &self.q))
            .sum();
        let seg_next = segment_derivs(self.field, c.vertex(k + 1), c.vertex(k + 2), self.t, &self.q, false);
        VertexFreeze { prev: c.vertex(k - 1), next: c.vertex(k + 1), gamma_rest, next_grad_fixed: seg_next.d_a + extra }
    }

    /// `y -> (Omega_k Psi)|_{C_k = y}`: the integrand of the velocity operator.
    pub fn velocity_integrand(&self, k: isize) -> impl Fn(Vec3) -> CVec3 + '_ {
        let z = self.freeze(k, Vec3::ZERO);
        move |y| self.omega_psi_at(&z, y).0
    }

    /// `(Omega Psi)(y)` with `C_k = y`, and `Psi(y)`.
    fn omega_psi_at(&self, z: &VertexFreeze, y: Vec3) -> (CVec3, Complex64) {
        let g = self.params.g();
        let before = segment_derivs_closed(self.field, z.prev, y, self.t, false);
        let at = segment_derivs_closed(self.field, y, z.next, self.t, true);
        let psi = psi_of(g * (z.gamma_rest + before.value + at.value));
        let grad_k = before.d_b + at.d_a;
        let grad_k1 = at.d_b + z.next_grad_fixed;
        let area = curl_of(&at.mixed);
        let symbol = CVec3::real(-area) + CVec3::real(grad_k1.cross(grad_k)).scale(-I * g);
        (symbol.scale(psi), psi)
    }

    fn vorticity_with_extra(&self, k: isize, extra: Vec3) -> OperatorResult {
        let c = self.c;
        let g = self.params.g();
        let psi = self.psi();
        let grad_k = self.grad(c, k);
        let grad_k1 = self.grad(c, k + 1) + extra;
        let area = area_derivative_value(self.field, c, k, self.t, &self.q);
        let avg = segment_average(self.field, c, k, self.t, &self.q);
        let cross = CVec3::real(grad_k1.cross(grad_k)).scale(-I * g);
        let value = CVec3::real(-area) + cross;
        OperatorResult::from_symbol(
            value,
            psi,
            vec![("segment_average", CVec3::real(avg)), ("minus_r_ad", CVec3::real(-(area + avg))), ("cross_term", cross)],
        )
    }

    /// `Omega_k Psi = -Psi (grad_{k+1} x grad_k Gamma) - (i gamma/nu) Psi (grad_{k+1} Gamma x grad_k Gamma)`.
    #[must_use]
    pub fn vorticity_op(&self, k: isize) -> OperatorResult {
        self.vorticity_with_extra(k, Vec3::ZERO)
    }

    fn diffusion_with_extra(&self, k: isize, extra: Vec3) -> OperatorResult {
        let z = self.freeze(k, extra);
        let ck = self.c.vertex(k);
        let curl = fd::curl(|y| self.omega_psi_at(&z, y).0, ck, self.q.fd_step, self.q.richardson_levels);
        let psi = self.psi();
        let raw = curl * 2.0;
        let leading = self.field.curl_vorticity(ck, self.t);
        let value = raw.scale(psi.inv());
        OperatorResult::from_raw(
            raw,
            psi,
            vec![("curl_vorticity", CVec3::real(leading)), ("r_diff", value - CVec3::real(leading))],
        )
    }

    /// `D_k Psi = 2 grad_{C_k} x (Omega_k Psi)` by a central-difference curl of the closed form.
    #[must_use]
    pub fn diffusion_op(&self, k: isize) -> OperatorResult {
        self.diffusion_with_extra(k, Vec3::ZERO)
    }

    fn velocity_with_extra(&self, k: isize, extra: Vec3) -> Result<OperatorResult> {
        let z = self.freeze(k, extra);
        let ck = self.c.vertex(k);
        let cfg = BSConfig { ell: self.params.ell(), ..self.bs };
        let bs = bs_direct_complex(&mut |y| self.omega_psi_at(&z, y).0, ck, &cfg)?;
        let raw = bs.value * (1.0 / self.params.log_n());
        let psi = self.psi();
        let value = raw.scale(psi.inv());
        let u = self.field.velocity(ck, self.t);
        let frozen = self.frozen_velocity(k);
        Ok(OperatorResult::from_raw(
            raw,
            psi,
            vec![
                ("velocity", CVec3::real(u)),
                ("total_error", value - CVec3::real(u)),
                ("frozen_phase", CVec3::real(frozen)),
                ("transport", value - CVec3::real(frozen)),
            ],
        ))
    }

    /// `U_k Psi = (1/log N) BS_ell[y -> Omega_k Psi |_{C_k = y}](C_k)` by direct ball quadrature.
    pub fn velocity_op(&self, k: isize) -> Result<OperatorResult> {
        self.velocity_with_extra(k, Vec3::ZERO)
    }

    /// `(1/log N) BS_ell[y -> <omega>_k(y)](C_k)` in closed form: the velocity operator with the
    /// phase of `Psi` frozen and the error terms of `Omega_k` dropped. Linear parts contribute 0.
    #[must_use]
    pub fn frozen_velocity(&self, k: isize) -> Vec3 {
        let x = self.c.vertex(k);
        let m = (self.c.vertex(k - 1) + self.c.vertex(k + 1)) * 0.5;
        let ell = self.params.ell();
        let (tf, _) = self.field.time_law().factor(self.t);
        let gl = gauss_legendre(16);
        let mut acc = Vec3::ZERO;
        for mode in self.field.modes() {
            let kappa = mode.wavevector.norm() / ell;
            let phase_span = mode.wavevector.dot(x - m).abs();
            let panels = ((kappa.max(phase_span) / 2.0).ceil() as usize).max(4);
            for (a, w) in gl.composite_nodes(0.0, 1.0, panels) {
                let factor = (1.0 + remainder_r(a * kappa)) / a;
                acc += mode.parts(x * a + m * (1.0 - a)).0 * (w * factor);
            }
        }
        acc * (tf / self.params.log_n())
    }

    /// `(Omega_{k+3} x U_k) Psi = (S_{k+3} x V_k) Psi` where `S`, `V` are the symbols: the
    /// operators in `C_{k+3}, C_{k+4}` do not see `V_k`, which depends on `C_{k-1..k+2}` only.
    pub fn advection_op(&self, k: isize) -> Result<OperatorResult> {
        if self.c.n() < 8 {
            return Err(Error::Argument(format!("advection needs N >= 8, got {}", self.c.n())));
        }
        let v = self.velocity_op(k)?;
        Ok(self.advection_from(k, &v))
    }

    fn advection_from(&self, k: isize, v: &OperatorResult) -> OperatorResult {
        let s = self.vorticity_op(k + 3);
        let value = s.value.cross(v.value);
        let ck = self.c.vertex(k);
        let j = self.field.jet(ck, self.t, Order::First);
        let lead = j.vorticity().cross(j.u);
        OperatorResult::from_symbol(
            value,
            v.psi,
            vec![("omega_cross_u", CVec3::real(lead)), ("r_adv", value - CVec3::real(lead))],
        )
    }

    fn check_increment_index(&self, k: isize) -> Result<()> {
        if k < 1 || k > self.n() - 2 {
            return Err(Error::Argument(format!("index k = {k} outside 1..={}", self.n() - 2)));
        }
        Ok(())
    }

    /// `sum_{j=k+2}^{N-1} grad_{C_j} Gamma`: the part of `grad_{s_k} Gamma` beyond `C_{k+1}`.
    fn increment_extra(&self, k: isize) -> Vec3 {
        self.grad_tail(self.c, k + 2)
    }

    /// `Omega^M_k Psi = (i nu/gamma) grad_{s_k} x grad_{C_k} Psi`, `grad_{s_k} = sum_{j>k} grad_{C_j}`.
    pub fn increment_vorticity_op(&self, k: isize) -> Result<OperatorResult> {
        self.check_increment_index(k)?;
        Ok(self.vorticity_with_extra(k, self.increment_extra(k)))
    }

    pub fn increment_velocity_op(&self, k: isize) -> Result<OperatorResult> {
        self.check_increment_index(k)?;
        self.velocity_with_extra(k, self.increment_extra(k))
    }

    pub fn increment_diffusion_op(&self, k: isize) -> Result<OperatorResult> {
        self.check_increment_index(k)?;
        Ok(self.diffusion_with_extra(k, self.increment_extra(k)))
    }

    /// `d_t Psi - (i gamma/nu) sum_k dC_k.(Omega_{k+3} x U_k - nu D_k) Psi`.
    pub fn loop_equation_residual(&self) -> Result<LoopResidual> {
        if self.field.time_law().is_static() {
            return Err(Error::NoTimeLaw);
        }
        let p = self.params;
        let dt_psi = self.dt_psi();
        let mut advection = Complex64::new(0.0, 0.0);
        let mut diffusion = Complex64::new(0.0, 0.0);
        for k in 0..self.n() {
            let d = self.c.edge(k);
            let v = self.velocity_op(k)?;
            let adv = self.advection_from(k, &v);
            let dif = self.diffusion_op(k);
            advection += adv.raw.dot_real(d);
            diffusion += dif.raw.dot_real(d);
        }
        let bracket = advection - diffusion * p.nu;
        let value = dt_psi - I * p.g() * bracket;
        Ok(LoopResidual { value, dt_psi, advection, diffusion })
    }

    /// `d_t Psi = (i gamma/nu) Psi int d_t u.C'` at fixed loop.
    #[must_use]
    pub fn dt_psi(&self) -> Complex64 {
        I * self.params.g() * self.psi() * self.loop_integral(|x| self.field.dt_velocity(x, self.t))
    }

    fn loop_integral(&self, v: impl Fn(Vec3) -> Vec3) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.n() {
            let a = self.c.vertex(k);
            let d = self.c.edge(k);
            for (s, w) in self.q.segment_nodes(self.field, d.norm()) {
                acc += w * v(a + d * s).dot(d);
            }
        }
        acc
    }

    /// `(d_t + i gamma sum_{k=1}^{N-2} dC_k.D^M_k) Psi - (i gamma/nu) Psi int [d_t u + nu curl omega].C'`.
    pub fn liquid_residual(&self) -> Result<Complex64> {
        let p = self.params;
        let psi = self.psi();
        let n = self.n();
        let rhs_int =
            self.loop_integral(|x| self.field.dt_velocity(x, self.t) + self.field.curl_vorticity(x, self.t) * p.nu);
        let dt_psi = self.dt_psi();
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..=n - 2 {
            sum += self.increment_diffusion_op(k)?.raw.dot_real(self.c.edge(k));
        }
        Ok(dt_psi + I * p.gamma * sum - I * p.g() * psi * rhs_int)
    }

    /// `(Omega^M_{k+3} x U^M_k) Psi` by nested central differences over `C_{k+3}` and the block
    /// translation `grad_{s_{k+3}}`, with `U^M_k` on a fixed ball grid.
    pub fn rbad_probe(&self, k: isize) -> Result<RbadReport> {
        let n = self.n();
        if k < 2 || k > n - 5 {
            return Err(Error::Argument(format!("R_bad probe needs 2 <= k <= N-5, got k = {k}")));
        }
        let level = 1;
        let u_of = |c: &PolygonalLoop| -> Result<CVec3> {
            let ctx = OperatorContext { c, ..self.clone() };
            let z = ctx.freeze(k, ctx.increment_extra(k));
            let cfg = BSConfig { ell: self.params.ell(), max_refinements: 0, ..self.bs };
            let v = crate::biot_savart::bs_direct_complex_level(
                &mut |y| ctx.omega_psi_at(&z, y).0,
                c.vertex(k),
                &cfg,
                level,
            )?;
            Ok(v * (1.0 / self.params.log_n()))
        };
        let j = k + 3;
        let h = 1e-3;
        let shift = |c: &PolygonalLoop, a: Vec3, b: Vec3| -> PolygonalLoop {
            // a moves C_j, b translates C_{j+1..N-1}
            let mut v = c.vertices().to_vec();
            v[j as usize] += a;
            for x in v.iter_mut().skip(j as usize + 1) {
                *x += b;
            }
            PolygonalLoop::new(v).expect("shifted loop")
        };
        // mixed[p][l] = d_{s,p} d_{C_j,l} (U Psi)
        let mut mixed = [[CVec3::ZERO; 3]; 3];
        for pi in 0..3 {
            for l in 0..3 {
                let ep = Vec3::basis(pi) * h;
                let el = Vec3::basis(l) * h;
                let pp = u_of(&shift(self.c, el, ep))?;
                let pm = u_of(&shift(self.c, -el, ep))?;
                let mp = u_of(&shift(self.c, el, -ep))?;
                let mm = u_of(&shift(self.c, -el, -ep))?;
                mixed[pi][l] = (pp - pm - mp + mm) * (0.25 / (h * h));
            }
        }
        // Omega^M_j(U^m Psi) for each component m of U: (i nu/gamma) eps_{a p l} mixed[p][l]_m
        let pref = I / self.params.g();
        let omega_u = |m: usize| -> [Complex64; 3] {
            let e = |p: usize, l: usize| mixed[p][l].component(m);
            [
                (e(1, 2) - e(2, 1)) * pref,
                (e(2, 0) - e(0, 2)) * pref,
                (e(0, 1) - e(1, 0)) * pref,
            ]
        };
        let cols = [omega_u(0), omega_u(1), omega_u(2)];
        // (Omega x U)_a = eps_{a l m} Omega^l (U^m Psi)
        let w = |l: usize, m: usize| cols[m][l];
        let raw = CVec3::from_components([w(1, 2) - w(2, 1), w(2, 0) - w(0, 2), w(0, 1) - w(1, 0)]);
        let psi = self.psi();
        let value = raw.scale(psi.inv());
        let ck = self.c.vertex(k);
        let jet = self.field.jet(ck, self.t, Order::First);
        let lead = CVec3::real(jet.vorticity().cross(jet.u));
        let controlled = self.advection_op(k)?;
        let r_adv = controlled.value - lead;
        let total = value - lead;
        Ok(RbadReport { n: self.c.n(), k, value, total, r_adv, r_bad: total - r_adv })
    }
}

/// Pieces of the loop-equation residual.
#[derive(Clone, Copy, Debug)]
pub struct LoopResidual {
    pub value: Complex64,
    pub dt_psi: Complex64,
    /// `sum_k dC_k.(Omega_{k+3} x U_k) Psi`.
    pub advection: Complex64,
    /// `sum_k dC_k.D_k Psi`.
    pub diffusion: Complex64,
}

/// Output of [`OperatorContext::rbad_probe`].
#[derive(Clone, Copy, Debug)]
pub struct RbadReport {
    pub n: usize,
    pub k: isize,
    /// Symbol of `(Omega^M_{k+3} x U^M_k) Psi`.
    pub value: CVec3,
    /// `value - (omega x u)(C_k)`.
    pub total: CVec3,
    /// Controlled advection error of the shifted operator built from `Omega_{k+3}`, `U_k`.
    pub r_adv: CVec3,
    pub r_bad: CVec3,
}

fn psi_of(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Nested central-difference `(i nu/gamma) grad_{C_{k+1}} x grad_{C_k} Psi`, optionally with
/// `grad_{C_{k+1}}` replaced by the block derivative `grad_{s_k} = sum_{j>k} grad_{C_j}`.
#[must_use]
pub fn vorticity_op_fd(ctx: &OperatorContext<'_>, k: isize, block: bool) -> CVec3 {
    let c = ctx.c;
    let n = c.n() as isize;
    let k = k.rem_euclid(n);
    let g = ctx.params.g();
    let psi = |c: &PolygonalLoop| psi_of(g * circulation(ctx.field, c, ctx.t, &ctx.q));
    let h = 1e-3;
    let move_outer = |c: &PolygonalLoop, d: Vec3| -> PolygonalLoop {
        if block {
            let mut v = c.vertices().to_vec();
            for x in v.iter_mut().skip(k as usize + 1) {
                *x += d;
            }
            PolygonalLoop::new(v).expect("loop")
        } else {
            c.with_vertex(k + 1, c.vertex(k + 1) + d)
        }
    };
    let inner = |c: &PolygonalLoop| -> [Complex64; 3] {
        fd::gradient(|y| psi(&c.with_vertex(k, y)), c.vertex(k), h, 2)
    };
    // outer[p][l] = d_{outer,p} d_{C_k,l} Psi
    let outer: [[Complex64; 3]; 3] = [0, 1, 2].map(|p| {
        let col = fd::central(
            |s| {
                let v = inner(&move_outer(c, Vec3::basis(p) * s));
                CVec3::from_components(v)
            },
            h,
            2,
        );
        col.components()
    });
    let e = |p: usize, l: usize| outer[p][l];
    let curl = [e(1, 2) - e(2, 1), e(2, 0) - e(0, 2), e(0, 1) - e(1, 0)];
    CVec3::from_components(curl.map(|z| z * (I / g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TimeLaw;

    fn octagon() -> PolygonalLoop {
        let base = PolygonalLoop::regular(8, Vec3::new(0.2, -0.1, 0.3), 1.0, Vec3::new(0.3, 0.2, 1.0)).unwrap();
        let v = base
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, p)| *p + Vec3::new(0.05 * (i as f64).sin(), 0.04 * (i as f64 * 1.7).cos(), 0.03 * i as f64 % 0.07))
            .collect();
        PolygonalLoop::new(v).unwrap()
    }

    fn params() -> OperatorParams {
        OperatorParams::new(1.0, 1.0, 0.4, 8).unwrap()
    }

    #[test]
    fn params_convention() {
        let p = OperatorParams::new(1.0, 0.5, 0.5, 16).unwrap();
        assert!((p.ell() - 0.25).abs() < 1e-15);
        assert!((p.rho() - 1.0 / 16.0).abs() < 1e-15);
        assert!(OperatorParams::new(1.0, 1.0, 0.5, 4).is_err());
        assert!(OperatorParams::new(1.0, 1.0, 1.5, 16).is_err());
    }

    #[test]
    fn constant_field_operators_vanish() {
        let f = AnalyticField::constant(Vec3::new(0.3, -0.4, 1.0));
        let c = octagon();
        let ctx = OperatorContext::new(&f, &c, 0.0, params());
        for k in 0..8 {
            assert!(ctx.vorticity_op(k).value.norm() < 1e-14);
            assert!(ctx.diffusion_op(k).value.norm() < 1e-9);
        }
        let v = ctx.velocity_op(2).unwrap();
        assert!(v.value.norm() < 1e-14);
        assert!((v.part("total_error").unwrap().norm() - 0.3f64.hypot(0.4).hypot(1.0)).abs() < 1e-12);
    }

    #[test]
    fn vorticity_op_matches_nested_fd() {
        let f = AnalyticField::abc(1.0, 0.7, 0.4);
        let c = octagon();
        let ctx = OperatorContext::new(&f, &c, 0.0, OperatorParams::new(0.8, 1.1, 0.4, 8).unwrap());
        for k in [0, 3, 7] {
            let a = ctx.vorticity_op(k).raw;
            let b = vorticity_op_fd(&ctx, k, false);
            assert!((a - b).norm() <= 1e-6 * a.norm(), "k={k} {a:?} {b:?}");
        }
        for k in [1, 4, 6] {
            let a = ctx.increment_vorticity_op(k).unwrap().raw;
            let b = vorticity_op_fd(&ctx, k, true);
            assert!((a - b).norm() <= 1e-6 * a.norm(), "k={k} {a:?} {b:?}");
        }
    }

    #[test]
    fn freeze_reproduces_vorticity_op() {
        let f = AnalyticField::abc(1.0, 0.7, 0.4);
        let c = octagon();
        let ctx = OperatorContext::new(&f, &c, 0.0, params());
        for k in 0..8 {
            let z = ctx.freeze(k, Vec3::ZERO);
            let (raw, psi) = ctx.omega_psi_at(&z, c.vertex(k));
            assert!((psi - ctx.psi()).norm() < 1e-13);
            assert!((raw - ctx.vorticity_op(k).raw).norm() < 1e-13);
        }
    }

    #[test]
    fn rotation_leading_terms() {
        let f = AnalyticField::rotation();
        let c = octagon();
        let ctx = OperatorContext::new(&f, &c, 0.0, params());
        for k in 1..7 {
            let r = ctx.vorticity_op(k);
            assert!((r.part("segment_average").unwrap().re - Vec3::new(0.0, 0.0, 2.0)).norm() < 1e-14);
            assert!(r.part("minus_r_ad").unwrap().norm() < 1e-12);
            let m = ctx.increment_vorticity_op(k).unwrap();
            assert_eq!(m.part("segment_average"), r.part("segment_average"));
        }
        assert!(ctx.increment_vorticity_op(0).is_err());
        assert!(ctx.increment_vorticity_op(7).is_err());
    }

    #[test]
    fn locality_of_vorticity_op() {
        let f = AnalyticField::abc(1.0, 0.7, 0.4);
        let c = octagon();
        let moved = c.with_vertex(5, c.vertex(5) + Vec3::new(0.1, 0.2, -0.1));
        let a = OperatorContext::new(&f, &c, 0.0, params());
        let b = OperatorContext::new(&f, &moved, 0.0, params());
        // Psi changes, the symbol does not
        assert_eq!(a.vorticity_op(1).value, b.vorticity_op(1).value);
        assert_ne!(a.increment_vorticity_op(1).unwrap().value, b.increment_vorticity_op(1).unwrap().value);
    }

    #[test]
    fn beltrami_diffusion_leading_term() {
        let nu = 0.5;
        let f = AnalyticField::abc_decaying(1.0, 0.7, 0.4, nu).unwrap();
        let c = PolygonalLoop::regular(32, Vec3::new(0.2, 0.1, 0.0), 1.0, Vec3::new(0.1, 0.3, 1.0)).unwrap();
        let ctx = OperatorContext::new(&f, &c, 0.2, OperatorParams::new(1.0, nu, 0.4, 32).unwrap());
        let d = ctx.diffusion_op(3);
        let u = f.velocity(c.vertex(3), 0.2);
        assert!((d.value.re - u).norm() < 0.2 * u.norm(), "{:?} {u:?}", d.value);
    }

    #[test]
    fn liquid_and_loop_residuals_need_time_law_only_for_loop() {
        let f = AnalyticField::rotation();
        let c = octagon();
        let ctx = OperatorContext::new(&f, &c, 0.0, params());
        assert!(matches!(ctx.loop_equation_residual(), Err(Error::NoTimeLaw)));
        assert!(ctx.liquid_residual().is_ok());
        let cf = AnalyticField::constant(Vec3::E1).with_time_law(TimeLaw::Exponential { rate: 0.0 }).unwrap();
        let cc = OperatorContext::new(&cf, &c, 0.0, params());
        assert!(cc.liquid_residual().unwrap().norm() < 1e-9);
    }
}
