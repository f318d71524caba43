//! Loop functional in momentum variables `Psi[P, C] = exp{(i gamma/nu) sum_k P_k.dC_k}`,
//! closed-form operator actions on it, the drift terms of the three momentum systems
//! and their residuals along trajectories.
//!
//! Dot products between complex vectors are bilinear (`CVec3::dot`) unless stated otherwise.

use num_complex::Complex64;
use serde::Serialize;

use crate::biot_savart::{bs_direct_complex, remainder_r, BSConfig};
use crate::error::{Error, Result};
use crate::geometry::{cyclic, CVec3, PolygonalLoop, Vec3};
use crate::operators::OperatorParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Momenta `P_0..P_{N-1}` with real increments `dP_k = P_{k+1} - P_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentumState {
    p: Vec<CVec3>,
    dp: Vec<Vec3>,
}

impl MomentumState {
    /// Checks `N >= 3`, finiteness and `Im dP_k = 0` (to `1e-12` of the largest `|P_k|`).
    /// `P_0` is not forced to zero; see [`MomentumState::gauge_fixed`].
    pub fn new(p: Vec<CVec3>) -> Result<Self> {
        if p.len() < 3 {
            return Err(Error::Argument(format!("momentum state needs N >= 3, got {}", p.len())));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::Argument("momentum state has non-finite entries".into()));
        }
        let scale = p.iter().map(|v| v.norm()).fold(1.0, f64::max);
        let n = p.len();
        let mut dp = Vec::with_capacity(n);
        for k in 0..n {
            let d = p[(k + 1) % n] - p[k];
            if d.im.norm() > 1e-12 * scale {
                return Err(Error::Argument(format!("Im dP_{k} = {:.3e} is not zero", d.im.norm())));
            }
            dp.push(d.re);
        }
        Ok(Self { p, dp })
    }

    /// Real momenta from real increments: `P_0 = 0`, `P_{k+1} = P_k + dP_k`; the increments must sum to 0.
    pub fn from_increments(dp: &[Vec3]) -> Result<Self> {
        let sum = dp.iter().fold(Vec3::ZERO, |a, &d| a + d);
        let scale = dp.iter().map(|d| d.norm()).fold(1.0, f64::max);
        if sum.norm() > 1e-12 * scale * dp.len() as f64 {
            return Err(Error::Argument(format!("increments do not close: |sum| = {:.3e}", sum.norm())));
        }
        let mut p = Vec::with_capacity(dp.len());
        let mut acc = Vec3::ZERO;
        for d in dp {
            p.push(CVec3::real(acc));
            acc += *d;
        }
        Self::new(p)
    }

    #[must_use]
    pub fn n(&self) -> usize {
        self.p.len()
    }

    #[must_use]
    pub fn momenta(&self) -> &[CVec3] {
        &self.p
    }

    #[must_use]
    pub fn p(&self, k: isize) -> CVec3 {
        self.p[cyclic(k, self.p.len())]
    }

    /// `dP_k`, real by construction.
    #[must_use]
    pub fn dp(&self, k: isize) -> Vec3 {
        self.dp[cyclic(k, self.dp.len())]
    }

    /// `(P_k + P_{k-1})/2`.
    #[must_use]
    pub fn midpoint(&self, k: isize) -> CVec3 {
        (self.p(k) + self.p(k - 1)) * 0.5
    }

    /// The same state shifted so that `P_0 = 0`.
    #[must_use]
    pub fn gauge_fixed(&self) -> Self {
        self.shifted(-self.p[0])
    }

    /// Adds `c` to every `P_k`; the stored increments are kept as they are.
    #[must_use]
    pub fn shifted(&self, c: CVec3) -> Self {
        Self { p: self.p.iter().map(|&v| v + c).collect(), dp: self.dp.clone() }
    }

    /// Checks `1/Lambda <= |dP_k| <= Lambda`.
    pub fn check_bounds(&self, lambda: f64) -> Result<()> {
        for k in 0..self.n() as isize {
            let m = self.dp(k).norm();
            if !(m >= 1.0 / lambda && m <= lambda) {
                return Err(Error::Argument(format!("|dP_{k}| = {m} outside [1/{lambda}, {lambda}]")));
            }
        }
        Ok(())
    }

    fn dp_nonzero(&self, k: isize) -> Result<Vec3> {
        let d = self.dp(k);
        if d.norm2() == 0.0 {
            return Err(Error::Singular(format!("dP_{} = 0", cyclic(k, self.n()))));
        }
        Ok(d)
    }
}

/// Both forms of `Psi[P, C]`: `exp{i g sum P_k.dC_k}` and `exp{-i g sum C_k.dP_{k-1}}`.
pub fn psi_momentum_forms(state: &MomentumState, c: &PolygonalLoop, gamma: f64, nu: f64) -> Result<(Complex64, Complex64)> {
    if state.n() != c.n() {
        return Err(Error::Argument(format!("state has {} momenta, loop has {} vertices", state.n(), c.n())));
    }
    if !(nu > 0.0) {
        return Err(Error::Argument("nu must be positive".into()));
    }
    let g = gamma / nu;
    let n = c.n() as isize;
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    for k in 0..n {
        s1 += state.p(k).dot_real(c.edge(k));
        s2 += c.vertex(k).dot(state.dp(k - 1));
    }
    Ok(((I * g * s1).exp(), (-I * g * s2).exp()))
}

/// `Psi[P, C]`, after checking that the two summation-by-parts forms agree to `1e-9`.
pub fn psi_momentum(state: &MomentumState, c: &PolygonalLoop, gamma: f64, nu: f64) -> Result<Complex64> {
    let (a, b) = psi_momentum_forms(state, c, gamma, nu)?;
    if (a - b).norm() > 1e-9 * a.norm().max(1.0) {
        return Err(Error::Consistency(format!("momentum forms disagree: {a} vs {b}")));
    }
    Ok(a)
}

/// Operator symbols on `Psi[P, C]` at vertex `k`.
#[derive(Clone, Copy, Debug)]
pub struct MomentumSymbols {
    /// `-i g dP_k x dP_{k-1}`.
    pub omega: CVec3,
    /// `-2 g^2 (dP_k |dP_{k-1}|^2 - dP_{k-1}(dP_{k-1}.dP_k))`.
    pub diffusion: CVec3,
    /// `-(1/log N) (dP_k - dP_{k-1}(dP_{k-1}.dP_k)/|dP_{k-1}|^2)(1 + R)`.
    pub velocity: CVec3,
    /// `velocity` without the factor `1 + R`.
    pub velocity_bare: CVec3,
    /// `R(N^alpha g |dP_{k-1}|)`.
    pub remainder: f64,
}

/// `dP_k - dP_{k-1}(dP_{k-1}.dP_k)/|dP_{k-1}|^2`: `dP_k` with its component along `dP_{k-1}` removed.
fn transverse(state: &MomentumState, k: isize) -> Result<Vec3> {
    let prev = state.dp_nonzero(k - 1)?;
    let cur = state.dp(k);
    Ok(cur - prev * (prev.dot(cur) / prev.norm2()))
}

fn diffusion_vec(state: &MomentumState, k: isize) -> Vec3 {
    let prev = state.dp(k - 1);
    let cur = state.dp(k);
    cur * prev.norm2() - prev * prev.dot(cur)
}

pub fn closed_operator_actions(state: &MomentumState, k: isize, p: &OperatorParams) -> Result<MomentumSymbols> {
    if p.n != state.n() {
        return Err(Error::Argument(format!("params N = {} but state N = {}", p.n, state.n())));
    }
    let g = p.g();
    let prev = state.dp_nonzero(k - 1)?;
    let omega = CVec3::real(state.dp(k).cross(prev)).scale(-I * g);
    let diffusion = CVec3::real(diffusion_vec(state, k) * (-2.0 * g * g));
    let bare = transverse(state, k)? * (-1.0 / p.log_n());
    let remainder = remainder_r((p.n as f64).powf(p.alpha) * g * prev.norm());
    Ok(MomentumSymbols {
        omega,
        diffusion,
        velocity: CVec3::real(bare * (1.0 + remainder)),
        velocity_bare: CVec3::real(bare),
        remainder,
    })
}

/// Index pair of the first drift term: `dP_{k+3} x dP_{k+2}`, which matches the operator composition, or the
/// `dP_{k+3} x dP_{k+1}` suggested by the remainder estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EkIndexVariant {
    KPlus2,
    KPlus1,
}

/// `E_k = (1/log N)(i g)(dP_{k+3} x dP_j) x transverse_k + (2 gamma^2/nu)(dP_k|dP_{k-1}|^2 - dP_{k-1}(dP_{k-1}.dP_k))`
/// with `j = k+2` or `k+1`; `N` is the number of momenta.
pub fn e_k(state: &MomentumState, k: isize, gamma: f64, nu: f64, variant: EkIndexVariant) -> Result<CVec3> {
    let n = state.n();
    if n < 5 {
        return Err(Error::Argument(format!("E_k needs N >= 5, got {n}")));
    }
    let g = gamma / nu;
    let j = match variant {
        EkIndexVariant::KPlus2 => k + 2,
        EkIndexVariant::KPlus1 => k + 1,
    };
    let w = state.dp(k + 3).cross(state.dp(j));
    let first = CVec3::real(w.cross(transverse(state, k)?)).scale(I * g / (n as f64).ln());
    let second = CVec3::real(diffusion_vec(state, k) * (2.0 * gamma * gamma / nu));
    Ok(first + second)
}

/// First term of `E_k` built from the operator symbols: `(Omega_{k+3} x U_k)` with `R` dropped,
/// minus `nu D_k`. Arbitrates the index pair of [`e_k`].
pub fn e_k_from_operators(state: &MomentumState, k: isize, p: &OperatorParams) -> Result<CVec3> {
    let a = closed_operator_actions(state, k + 3, p)?;
    let b = closed_operator_actions(state, k, p)?;
    Ok(a.omega.cross(b.velocity_bare) - b.diffusion * p.nu)
}

fn full_terms(state: &MomentumState, k: isize, gamma: f64, nu: f64) -> Result<(CVec3, CVec3)> {
    let g = gamma / nu;
    let f = state.midpoint(k);
    let d = state.dp_nonzero(k - 1)?;
    let fd = f.dot_real(d);
    let first = CVec3::real(d).scale((fd * fd / d.norm2() - f.dot(f)) * (I * g / (state.n() as f64).ln()));
    let second = (CVec3::real(d).scale(fd) - f * d.norm2()) * (nu * g * g);
    Ok((first, second))
}

/// `E^M_k = (i g/log N)[(F.dP_{k-1})^2/|dP_{k-1}|^2 - F.F] dP_{k-1} + nu g^2 [(F.dP_{k-1}) dP_{k-1} - |dP_{k-1}|^2 F]`
/// with `F = (P_k + P_{k-1})/2` and `g = gamma/nu`; the `nu = 1` form has `g = gamma`.
pub fn full_e_k(state: &MomentumState, k: isize, gamma: f64, nu: f64) -> Result<CVec3> {
    let (a, b) = full_terms(state, k, gamma, nu)?;
    Ok(a + b)
}

/// The liquid drift: the second term of [`full_e_k`] alone.
pub fn liquid_e_k(state: &MomentumState, k: isize, gamma: f64, nu: f64) -> Result<CVec3> {
    let g = gamma / nu;
    let f = state.midpoint(k);
    let d = state.dp(k - 1);
    Ok((CVec3::real(d).scale(f.dot_real(d)) - f * d.norm2()) * (nu * g * g))
}

/// Which momentum system a residual refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemVariant {
    /// `dP_k/dt - E_k = const`, reported modulo the `k`-average.
    Operator(EkIndexVariant),
    /// `d/dt (P_k + P_{k-1})/2 - E^M_k = 0`.
    Full,
    /// `d/dt (P_k + P_{k-1})/2 - E^l_k = 0`.
    Liquid,
}

impl SystemVariant {
    #[must_use]
    pub fn name(&self) -> &'static str {
        match self {
            Self::Operator(EkIndexVariant::KPlus2) => "operator",
            Self::Operator(EkIndexVariant::KPlus1) => "operator_k1",
            Self::Full => "full",
            Self::Liquid => "liquid",
        }
    }
}

/// States on a time grid, with `dP/dt` either supplied or taken by five-point differences.
#[derive(Clone, Debug)]
pub struct MomentumTrajectory {
    times: Vec<f64>,
    states: Vec<MomentumState>,
    rates: Option<Vec<Vec<CVec3>>>,
}

impl MomentumTrajectory {
    /// A trajectory with exact derivatives `law(t) = (P(t), dP/dt(t))`.
    pub fn from_law(times: &[f64], law: impl Fn(f64) -> Result<(MomentumState, Vec<CVec3>)>) -> Result<Self> {
        let mut states = Vec::with_capacity(times.len());
        let mut rates = Vec::with_capacity(times.len());
        for &t in times {
            let (s, r) = law(t)?;
            if r.len() != s.n() {
                return Err(Error::Argument("rate length differs from state length".into()));
            }
            states.push(s);
            rates.push(r);
        }
        Self::check_common_n(&states)?;
        Ok(Self { times: times.to_vec(), states, rates: Some(rates) })
    }

    /// A sampled trajectory on a uniform grid of at least five times.
    pub fn sampled(times: Vec<f64>, states: Vec<MomentumState>) -> Result<Self> {
        if times.len() < 5 || times.len() != states.len() {
            return Err(Error::Argument(format!(
                "finite differences need >= 5 matching times and states, got {} and {}",
                times.len(),
                states.len()
            )));
        }
        let h = times[1] - times[0];
        if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12 * h.max(1.0)) {
            return Err(Error::Argument("sampled trajectories need a uniform increasing time grid".into()));
        }
        Self::check_common_n(&states)?;
        Ok(Self { times, states, rates: None })
    }

    fn check_common_n(states: &[MomentumState]) -> Result<()> {
        match states.first() {
            Some(s0) if states.iter().all(|s| s.n() == s0.n()) => Ok(()),
            Some(_) => Err(Error::Argument("states along a trajectory must share N".into())),
            None => Err(Error::Argument("empty trajectory".into())),
        }
    }

    #[must_use]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[must_use]
    pub fn states(&self) -> &[MomentumState] {
        &self.states
    }

    /// `(time index, dP/dt)` for every time where the derivative is available.
    fn rates(&self) -> Vec<(usize, Vec<CVec3>)> {
        if let Some(r) = &self.rates {
            return r.iter().cloned().enumerate().collect();
        }
        let h = self.times[1] - self.times[0];
        let n = self.states[0].n();
        (2..self.times.len() - 2)
            .map(|i| {
                let p = |j: usize, k: usize| self.states[j].momenta()[k];
                let r = (0..n)
                    .map(|k| (p(i - 2, k) - p(i - 1, k) * 8.0 + p(i + 1, k) * 8.0 - p(i + 2, k)) * (1.0 / (12.0 * h)))
                    .collect();
                (i, r)
            })
            .collect()
    }
}

/// One entry of a residual table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ResidualRow {
    pub t: f64,
    pub k: usize,
    pub residual: CVec3,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualTable {
    pub variant: &'static str,
    pub rows: Vec<ResidualRow>,
}

impl ResidualTable {
    #[must_use]
    pub fn max(&self) -> f64 {
        self.rows.iter().map(|r| r.magnitude).fold(0.0, f64::max)
    }
}

pub fn system_residual(traj: &MomentumTrajectory, variant: SystemVariant, gamma: f64, nu: f64) -> Result<ResidualTable> {
    let mut rows = Vec::new();
    for (i, rate) in traj.rates() {
        let s = &traj.states[i];
        let n = s.n();
        let mut res = Vec::with_capacity(n);
        for k in 0..n {
            let ki = k as isize;
            let r = match variant {
                SystemVariant::Operator(v) => rate[k] - e_k(s, ki, gamma, nu, v)?,
                SystemVariant::Full => (rate[k] + rate[cyclic(ki - 1, n)]) * 0.5 - full_e_k(s, ki, gamma, nu)?,
                SystemVariant::Liquid => (rate[k] + rate[cyclic(ki - 1, n)]) * 0.5 - liquid_e_k(s, ki, gamma, nu)?,
            };
            res.push(r);
        }
        if matches!(variant, SystemVariant::Operator(_)) {
            let mean = res.iter().fold(CVec3::ZERO, |a, &r| a + r) * (1.0 / n as f64);
            for r in &mut res {
                *r = *r - mean;
            }
        }
        rows.extend(res.into_iter().enumerate().map(|(k, r)| ResidualRow { t: traj.times[i], k, residual: r, magnitude: r.norm() }));
    }
    Ok(ResidualTable { variant: variant.name(), rows })
}

/// `Omega_k Psi / Psi` by nested central differences of `Psi[P, C]` in `C_{k+1}`, `C_k`.
pub fn omega_symbol_fd(state: &MomentumState, c: &PolygonalLoop, k: isize, gamma: f64, nu: f64) -> Result<CVec3> {
    let psi = |c: &PolygonalLoop| psi_momentum(state, c, gamma, nu).expect("valid state");
    let psi0 = psi_momentum(state, c, gamma, nu)?;
    let h = 1e-2;
    let inner = |c: &PolygonalLoop| CVec3::from_components(crate::fd::gradient(|y| psi(&c.with_vertex(k, y)), c.vertex(k), h, 3));
    let outer: [[Complex64; 3]; 3] = [0, 1, 2].map(|p| {
        crate::fd::central(|s| inner(&c.with_vertex(k + 1, c.vertex(k + 1) + Vec3::basis(p) * s)), h, 3).components()
    });
    let e = |p: usize, l: usize| outer[p][l];
    let curl = [e(1, 2) - e(2, 1), e(2, 0) - e(0, 2), e(0, 1) - e(1, 0)];
    Ok(CVec3::from_components(curl.map(|z| z * (I * nu / gamma) / psi0)))
}

/// `D_k Psi / Psi` as a central-difference curl in `C_k` of the closed `Omega_k Psi`.
pub fn diffusion_symbol_fd(state: &MomentumState, c: &PolygonalLoop, k: isize, p: &OperatorParams) -> Result<CVec3> {
    let omega = closed_operator_actions(state, k, p)?.omega;
    let psi0 = psi_momentum(state, c, p.gamma, p.nu)?;
    let curl = crate::fd::curl(
        |y| omega.scale(psi_momentum(state, &c.with_vertex(k, y), p.gamma, p.nu).expect("valid state")),
        c.vertex(k),
        1e-2,
        3,
    );
    Ok((curl * 2.0).scale(psi0.inv()))
}

/// `U_k Psi / Psi` by direct ball quadrature of `y -> Omega_k Psi |_{C_k = y}`.
pub fn velocity_symbol_quadrature(
    state: &MomentumState,
    c: &PolygonalLoop,
    k: isize,
    p: &OperatorParams,
    bs: &BSConfig,
) -> Result<CVec3> {
    let omega = closed_operator_actions(state, k, p)?.omega;
    let ck = c.vertex(k);
    // only the C_k term of the second form depends on y
    let a = state.dp(k - 1) * (-p.g());
    let cfg = BSConfig { ell: p.ell(), ..*bs };
    let r = bs_direct_complex(&mut |y| omega.scale(Complex64::from_polar(1.0, a.dot(y - ck))), ck, &cfg)?;
    Ok(r.value * (1.0 / p.log_n()))
}
