//! The regularized Biot-Savart operator
//! `BS_l[w](x) = (1/4pi) int w(y) x grad_y(chi(l|x-y|)/|x-y|) dy`.
//!
//! Direct quadrature on spherical product grids centred at `x`, the closed
//! form on plane waves `i e^{ia.x} (a/|a|^2) x v0 (1 + R(|a|/l))`, and the
//! remainder `R(kappa) = int_1^2 chi'(s) cos(kappa s) ds`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::WaveMode;
use crate::geometry::{CVec3, Vec3};
use crate::quadrature::gauss_legendre;

fn h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// `chi(r) = h(2-r) / (h(2-r) + h(r-1))`, `h(t) = exp(-1/t)` for `t > 0`.
#[must_use]
pub fn cutoff_chi(r: f64) -> f64 {
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let (p, q) = (h(2.0 - r), h(r - 1.0));
    p / (p + q)
}

/// `chi'(r)`.
#[must_use]
pub fn cutoff_chi_prime(r: f64) -> f64 {
    if r <= 1.0 || r >= 2.0 {
        return 0.0;
    }
    let (a, b) = (2.0 - r, r - 1.0);
    let (p, q) = (h(a), h(b));
    let s = p + q;
    if p == 0.0 || q == 0.0 {
        return 0.0;
    }
    -(p / s) * (q / s) * (1.0 / (a * a) + 1.0 / (b * b))
}

const R_PANEL_NODES: usize = 16;

fn r_panels(kappa: f64) -> usize {
    ((kappa / 4.0).ceil() as usize).max(16)
}

/// `R(kappa) = int_1^2 chi'(s) cos(kappa s) ds`, evaluated directly.
#[must_use]
pub fn remainder_r_direct(kappa: f64) -> f64 {
    let gl = gauss_legendre(R_PANEL_NODES);
    gl.composite(1.0, 2.0, r_panels(kappa), |s| cutoff_chi_prime(s) * (kappa * s).cos())
}

/// `R'(kappa) = -int_1^2 s chi'(s) sin(kappa s) ds`.
#[must_use]
pub fn remainder_r_prime_direct(kappa: f64) -> f64 {
    let gl = gauss_legendre(R_PANEL_NODES);
    -gl.composite(1.0, 2.0, r_panels(kappa), |s| s * cutoff_chi_prime(s) * (kappa * s).sin())
}

/// Tabulated `R` with cubic Hermite interpolation on a uniform grid.
#[derive(Clone, Debug)]
pub struct RTable {
    pub step: f64,
    pub kappa_max: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RTable {
    #[must_use]
    pub fn build(kappa_max: f64, step: f64) -> Self {
        let n = (kappa_max / step).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| i as f64 * step).collect();
        Self {
            step,
            kappa_max: n as f64 * step,
            values: grid.iter().map(|&k| remainder_r_direct(k)).collect(),
            slopes: grid.iter().map(|&k| remainder_r_prime_direct(k)).collect(),
        }
    }

    /// Grid `(kappa_i, R(kappa_i))`.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, v)| (i as f64 * self.step, *v))
    }

    #[must_use]
    pub fn eval(&self, kappa: f64) -> f64 {
        if !(kappa < self.kappa_max) {
            return remainder_r_direct(kappa);
        }
        let x = kappa / self.step;
        let i = x.floor() as usize;
        let u = x - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * d1
    }
}

static TABLE: OnceLock<RTable> = OnceLock::new();

/// The shared table on `[0, 64]` with step `1/128`.
pub fn r_table() -> &'static RTable {
    TABLE.get_or_init(|| RTable::build(64.0, 1.0 / 128.0))
}

/// `R(kappa)` through the shared table (direct evaluation beyond it).
#[must_use]
pub fn remainder_r(kappa: f64) -> f64 {
    r_table().eval(kappa.abs())
}

/// Settings for the direct ball quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BSConfig {
    pub ell: f64,
    /// Gauss-Legendre nodes per radial panel.
    pub radial_nodes: usize,
    /// Radial panel length at refinement level 0.
    pub radial_panel_length: f64,
    /// Gauss-Legendre nodes in `cos theta` at level 0.
    pub n_theta: usize,
    /// Uniform nodes in `phi` at level 0.
    pub n_phi: usize,
    /// Relative change between successive levels that counts as converged.
    pub tol: f64,
    /// Number of doublings allowed after level 0.
    pub max_refinements: usize,
}

impl Default for BSConfig {
    fn default() -> Self {
        Self {
            ell: 0.25,
            radial_nodes: 16,
            radial_panel_length: 1.0,
            n_theta: 16,
            n_phi: 32,
            tol: 1e-6,
            max_refinements: 5,
        }
    }
}

impl BSConfig {
    #[must_use]
    pub fn with_ell(ell: f64) -> Self {
        Self { ell, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell > 0.0 && self.ell <= 1.0) {
            return Err(Error::Argument(format!("ell must lie in (0, 1], got {}", self.ell)));
        }
        if self.radial_nodes < 2 || self.n_theta < 2 || self.n_phi < 3 || self.radial_nodes > 64 {
            return Err(Error::Argument("ball quadrature orders are too small".into()));
        }
        if !(self.radial_panel_length > 0.0 && self.tol > 0.0) {
            return Err(Error::Argument("radial panel length and tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of a converged ball quadrature.
#[derive(Clone, Copy, Debug)]
pub struct BSResult {
    pub value: CVec3,
    /// Refinement level of the returned value.
    pub level: usize,
    /// `|I_level - I_{level-1}|`.
    pub last_change: f64,
    pub evaluations: usize,
}

/// Node-count multiplier of refinement `level`: 1, 2, 3, 4, 6, 8, 12, ...
fn refinement_scale(level: usize) -> usize {
    if level == 0 {
        1
    } else if level % 2 == 1 {
        1 << level.div_ceil(2)
    } else {
        3 << (level / 2 - 1)
    }
}

/// A spherical product grid `(radius, direction, weight)` with the kernel folded into the weight.
struct BallGrid {
    radial: Vec<(f64, f64)>,
    dirs: Vec<(Vec3, f64)>,
}

impl BallGrid {
    fn new(cfg: &BSConfig, level: usize) -> Self {
        let scale = refinement_scale(level);
        let ell = cfg.ell;
        let inner = 1.0 / ell;
        let p1 = ((inner / cfg.radial_panel_length).ceil() as usize).max(1) * scale;
        // the cutoff transition gets at least two panels
        let p2 = ((inner / cfg.radial_panel_length).ceil() as usize).max(2) * scale;
        let gl = gauss_legendre(cfg.radial_nodes);
        let kernel = |r: f64| (ell * r * cutoff_chi_prime(ell * r) - cutoff_chi(ell * r)) / (4.0 * std::f64::consts::PI);
        let mut radial = Vec::with_capacity((p1 + p2) * cfg.radial_nodes);
        for (r, w) in gl.composite_nodes(0.0, inner, p1).into_iter().chain(gl.composite_nodes(inner, 2.0 * inner, p2)) {
            radial.push((r, w * kernel(r)));
        }
        let nt = cfg.n_theta * scale;
        let np = cfg.n_phi * scale;
        let gt = gauss_legendre(nt.min(256));
        let mut dirs = Vec::with_capacity(nt * np);
        let dphi = 2.0 * std::f64::consts::PI / np as f64;
        for (ct, wt) in gt.nodes_on(-1.0, 1.0) {
            let st = (1.0 - ct * ct).max(0.0).sqrt();
            for j in 0..np {
                let ph = (j as f64 + 0.5) * dphi;
                dirs.push((Vec3::new(st * ph.cos(), st * ph.sin(), ct), wt * dphi));
            }
        }
        Self { radial, dirs }
    }

    fn integrate(&self, x: Vec3, w: &mut dyn FnMut(Vec3) -> CVec3) -> (CVec3, f64) {
        let mut acc = CVec3::ZERO;
        let mut mass = 0.0;
        for &(d, wd) in &self.dirs {
            let mut along = CVec3::ZERO;
            for &(r, wr) in &self.radial {
                let v = w(x + d * r);
                let term = v.cross_real(d) * wr;
                mass += term.norm() * wd;
                along += term;
            }
            acc += along * wd;
        }
        (acc, mass)
    }

    fn len(&self) -> usize {
        self.radial.len() * self.dirs.len()
    }
}

/// Direct quadrature of `BS_l[w](x)` for a complex vector field `w`, refined until
/// successive levels agree to `tol` relative to `max(|I|, 1e-3 * int|integrand|)`.
pub fn bs_direct_complex(w: &mut dyn FnMut(Vec3) -> CVec3, x: Vec3, cfg: &BSConfig) -> Result<BSResult> {
    cfg.validate()?;
    let mut evaluations = 0;
    let grid = BallGrid::new(cfg, 0);
    evaluations += grid.len();
    let (mut prev, _) = grid.integrate(x, w);
    let mut last_change = f64::INFINITY;
    for level in 1..=cfg.max_refinements {
        let grid = BallGrid::new(cfg, level);
        evaluations += grid.len();
        let (cur, mass) = grid.integrate(x, w);
        last_change = (cur - prev).norm();
        if last_change <= cfg.tol * cur.norm().max(1e-3 * mass) {
            return Ok(BSResult { value: cur, level, last_change, evaluations });
        }
        prev = cur;
    }
    Err(Error::Numerical(format!(
        "ball quadrature did not converge: change {last_change:.3e} after {} refinements ({evaluations} evaluations, ell = {})",
        cfg.max_refinements, cfg.ell
    )))
}

/// Ball quadrature on the fixed grid of refinement `level`, without a convergence test.
/// The result is a smooth function of `x` and of parameters inside `w`.
pub fn bs_direct_complex_level(w: &mut dyn FnMut(Vec3) -> CVec3, x: Vec3, cfg: &BSConfig, level: usize) -> Result<CVec3> {
    cfg.validate()?;
    Ok(BallGrid::new(cfg, level).integrate(x, w).0)
}

/// Direct quadrature for a real vorticity field.
pub fn bs_direct(w: impl Fn(Vec3) -> Vec3, x: Vec3, cfg: &BSConfig) -> Result<Vec3> {
    Ok(bs_direct_complex(&mut |y| CVec3::real(w(y)), x, cfg)?.value.re)
}

/// Closed form of `BS_l[v0 e^{i(a.y + phase)}](x)` (complex).
#[must_use]
pub fn bs_wave_closed(mode: &WaveMode, x: Vec3, ell: f64) -> CVec3 {
    let a = mode.wavevector;
    let an2 = a.norm2();
    let e = Complex64::from_polar(1.0, a.dot(x) + mode.phase);
    let dir = CVec3::real(a / an2).cross(mode.amplitude);
    dir.scale(Complex64::new(0.0, 1.0) * e * (1.0 + remainder_r(an2.sqrt() / ell)))
}

/// Relative `L^2` error `||BS_l[curl u] - u|| / ||u||` for the Leray-projected Gaussian blob
/// `u_hat(k) = P(k) c exp(-sigma^2 |k|^2 / 2)`, by Plancherel: the Fourier multiplier of
/// `BS_l curl` is `1 + R(|k|/l)`.
#[must_use]
pub fn recovery_error_l2(sigma: f64, ell: f64) -> f64 {
    // radial integrals in k; the angular factor and |c|^2 cancel in the ratio
    let kmax = 10.0 / sigma;
    let gl = gauss_legendre(16);
    let panels = ((kmax / ell / 2.0).ceil() as usize).max(64);
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, w) in gl.composite_nodes(0.0, kmax, panels) {
        let g = (-(sigma * k).powi(2)).exp() * k * k * w;
        num += remainder_r(k / ell).powi(2) * g;
        den += g;
    }
    (num / den).sqrt()
}

/// Bound check for polynomially growing vorticity `M (1 + |y|^m) e`.
#[derive(Clone, Debug)]
pub struct PolygrowthReport {
    pub m: u32,
    /// `(ell, max over samples of |BS| / (ell^{-m-1} M (1+|x|^m)))`.
    pub ratios: Vec<(f64, f64)>,
    /// Constant fitted at the largest `ell`.
    pub constant: f64,
    pub holds: bool,
}

/// Evaluates `BS_l` on `M(1+|y|^m) e` at the sample points for each `ell`, fits `C(m)` at the
/// largest `ell` and checks `|BS| <= C ell^{-m-1} M (1+|x|^m)` at the others (10% slack).
pub fn polygrowth_check(big_m: f64, m: u32, ells: &[f64], samples: &[Vec3], dir: Vec3) -> Result<PolygrowthReport> {
    if m > 2 {
        return Err(Error::Argument(format!("polygrowth check supports m <= 2, got {m}")));
    }
    let mut ratios = Vec::new();
    for &ell in ells {
        let cfg = BSConfig { tol: 1e-4, ..BSConfig::with_ell(ell) };
        let mut worst: f64 = 0.0;
        for &x in samples {
            let v = bs_direct(|y| dir * (big_m * (1.0 + y.norm().powi(m as i32))), x, &cfg)?;
            let bound = ell.powi(-(m as i32) - 1) * big_m * (1.0 + x.norm().powi(m as i32));
            worst = worst.max(v.norm() / bound);
        }
        ratios.push((ell, worst));
    }
    let (_, constant) = ratios
        .iter()
        .copied()
        .fold((0.0, 0.0), |acc, r| if r.0 > acc.0 { r } else { acc });
    let holds = ratios.iter().all(|(_, r)| *r <= 1.1 * constant + 1e-12);
    Ok(PolygrowthReport { m, ratios, constant, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_values() {
        assert_eq!(cutoff_chi(0.5), 1.0);
        assert_eq!(cutoff_chi(2.5), 0.0);
        assert_eq!(cutoff_chi(1.5), 0.5);
        let mut prev = 1.0;
        for i in 5..96 {
            let v = cutoff_chi(1.0 + i as f64 / 100.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn chi_prime_matches_fd() {
        for i in 1..40 {
            let r = 1.0 + i as f64 / 40.0;
            let fd = crate::fd::central(|e| cutoff_chi(r + e), 1e-4, 2);
            assert!((fd - cutoff_chi_prime(r)).abs() < 1e-8, "r={r}");
        }
    }

    #[test]
    fn remainder_at_zero_is_minus_one() {
        assert!((remainder_r_direct(0.0) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn remainder_decays() {
        assert!(remainder_r_direct(1e3).abs() <= 1e-8);
        let doubled = {
            let gl = gauss_legendre(R_PANEL_NODES);
            gl.composite(1.0, 2.0, 2 * r_panels(7.3), |s| cutoff_chi_prime(s) * (7.3 * s).cos())
        };
        assert!((doubled - remainder_r_direct(7.3)).abs() < 1e-14);
    }

    #[test]
    fn table_matches_direct() {
        let t = r_table();
        for i in 0..2000 {
            let k = i as f64 * 0.0317 + 0.001;
            assert!((t.eval(k) - remainder_r_direct(k)).abs() < 1e-10, "kappa={k}");
        }
    }

    #[test]
    fn curl_free_mode_gives_zero() {
        let m = WaveMode::unchecked(CVec3::real(Vec3::E3 * 2.0), Vec3::E3, 0.0);
        assert_eq!(bs_wave_closed(&m, Vec3::new(0.3, 0.1, 0.2), 0.5).norm(), 0.0);
    }

    #[test]
    fn zero_and_constant_vorticity() {
        let cfg = BSConfig::with_ell(0.5);
        assert_eq!(bs_direct(|_| Vec3::ZERO, Vec3::E1, &cfg).unwrap(), Vec3::ZERO);
        let v = bs_direct(|_| Vec3::new(0.3, -1.0, 2.0), Vec3::E1, &cfg).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn direct_matches_closed_form_on_wave() {
        let a = Vec3::new(0.6, -0.48, 0.64);
        let (e1, e2) = Vec3::orthonormal_frame(a.normalized());
        let m = WaveMode::new(CVec3::new(e1, e2 * 0.7), a, 0.2).unwrap();
        let x = Vec3::new(0.4, 0.9, -0.3);
        let cfg = BSConfig::with_ell(0.5);
        let direct = bs_direct_complex(&mut |y| m.complex_value(y), x, &cfg).unwrap();
        let closed = bs_wave_closed(&m, x, 0.5);
        assert!((direct.value - closed).norm() <= 1e-4 * closed.norm(), "{direct:?} {closed:?}");
    }

    #[test]
    fn recovery_slope_is_three_halves() {
        let ells: Vec<f64> = (0..6).map(|i| 0.5f64.powi(i)).collect();
        let errs: Vec<f64> = ells.iter().map(|&l| recovery_error_l2(0.1, l)).collect();
        let slope = (errs[5] / errs[2]).ln() / (ells[5] / ells[2]).ln();
        assert!((slope - 1.5).abs() < 0.1, "slope {slope} {errs:?}");
    }
}
