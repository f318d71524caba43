//! Closed-form divergence-free velocity fields with exact derivatives.
//!
//! A field is `T(t) * (sum_m Re(v0_m e^{i(a_m.x + phase_m)}) + L x + c0)` where
//! `T` is the time law.

use crate::error::{Error, Result};
use crate::geometry::{CVec3, Vec3};

/// `m[i][j]`.
pub type Mat3 = [[f64; 3]; 3];
/// `t[i][j][k]`.
pub type Tensor3 = [[[f64; 3]; 3]; 3];

/// One plane-wave velocity mode `Re(v0 e^{i(a.x + phase)})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveMode {
    pub amplitude: CVec3,
    pub wavevector: Vec3,
    pub phase: f64,
}

impl WaveMode {
    pub fn new(amplitude: CVec3, wavevector: Vec3, phase: f64) -> Result<Self> {
        let an = wavevector.norm();
        if !(an > 0.0) || !amplitude.is_finite() || !phase.is_finite() {
            return Err(Error::Argument("wave mode needs a finite nonzero wavevector".into()));
        }
        let tol = 1e-12 * an * amplitude.norm().max(1.0);
        if amplitude.re.dot(wavevector).abs() > tol || amplitude.im.dot(wavevector).abs() > tol {
            return Err(Error::Argument("wave mode amplitude must be orthogonal to its wavevector".into()));
        }
        Ok(Self { amplitude, wavevector, phase })
    }

    /// Mode without the divergence check, for vorticity profiles and test data.
    #[must_use]
    pub const fn unchecked(amplitude: CVec3, wavevector: Vec3, phase: f64) -> Self {
        Self { amplitude, wavevector, phase }
    }

    /// `(Re(v0 e^{i theta}), Re(i v0 e^{i theta}))` at `x`.
    #[must_use]
    pub fn parts(&self, x: Vec3) -> (Vec3, Vec3) {
        let th = self.wavevector.dot(x) + self.phase;
        let (s, c) = th.sin_cos();
        let (re, im) = (self.amplitude.re, self.amplitude.im);
        (re * c - im * s, -(re * s + im * c))
    }

    /// Complex value `v0 e^{i(a.x + phase)}`.
    #[must_use]
    pub fn complex_value(&self, x: Vec3) -> CVec3 {
        let th = self.wavevector.dot(x) + self.phase;
        self.amplitude.scale(num_complex::Complex64::from_polar(1.0, th))
    }
}

/// Time dependence of a field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeLaw {
    Static,
    /// `T(t) = e^{-rate t}`.
    Exponential { rate: f64 },
    /// `T(t) = e^{-nu lambda^2 t}` with `curl u = lambda u` checked at construction.
    BeltramiDecay { lambda: f64, nu: f64 },
    /// `T(t) = 1 + rate t`.
    Linear { rate: f64 },
}

impl TimeLaw {
    /// `(T(t), T'(t))`.
    #[must_use]
    pub fn factor(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Static => (1.0, 0.0),
            Self::Exponential { rate } => {
                let e = (-rate * t).exp();
                (e, -rate * e)
            }
            Self::BeltramiDecay { lambda, nu } => {
                let r = nu * lambda * lambda;
                let e = (-r * t).exp();
                (e, -r * e)
            }
            Self::Linear { rate } => (1.0 + rate * t, rate),
        }
    }

    #[must_use]
    pub fn is_static(&self) -> bool {
        matches!(self, Self::Static)
    }
}

/// Velocity, gradient and Hessian at one point.
#[derive(Clone, Copy, Debug, Default)]
pub struct Jet {
    pub u: Vec3,
    /// `du[i][j] = d_j u_i`.
    pub du: Mat3,
    /// `d2u[i][j][k] = d_j d_k u_i`.
    pub d2u: Tensor3,
}

impl Jet {
    #[must_use]
    pub fn vorticity(&self) -> Vec3 {
        curl_of(&self.du)
    }

    /// `g[i][j] = d_j omega_i`.
    #[must_use]
    pub fn grad_vorticity(&self) -> Mat3 {
        let d = &self.d2u;
        let mut g = [[0.0; 3]; 3];
        for j in 0..3 {
            g[0][j] = d[2][1][j] - d[1][2][j];
            g[1][j] = d[0][2][j] - d[2][0][j];
            g[2][j] = d[1][0][j] - d[0][1][j];
        }
        g
    }

    #[must_use]
    pub fn curl_vorticity(&self) -> Vec3 {
        curl_of(&self.grad_vorticity())
    }
}

/// Curl of a vector field from its gradient `g[i][j] = d_j v_i`.
#[must_use]
pub fn curl_of(g: &Mat3) -> Vec3 {
    Vec3::new(g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1])
}

/// `m v`.
#[must_use]
pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    )
}

/// `m^T v`.
#[must_use]
pub fn mat_t_vec(m: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(
        m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
        m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
        m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z,
    )
}

/// Derivative orders requested from [`AnalyticField::jet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    First,
    Second,
}

/// A closed-form velocity field.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticField {
    modes: Vec<WaveMode>,
    linear: Option<Mat3>,
    constant: Option<Vec3>,
    time_law: TimeLaw,
}

impl AnalyticField {
    pub fn new(modes: Vec<WaveMode>, linear: Option<Mat3>, constant: Option<Vec3>, time_law: TimeLaw) -> Result<Self> {
        for m in &modes {
            WaveMode::new(m.amplitude, m.wavevector, m.phase)?;
        }
        if let Some(l) = linear {
            let tr = l[0][0] + l[1][1] + l[2][2];
            let scale = l.iter().flatten().fold(0.0_f64, |a, b| a.max(b.abs())).max(1.0);
            if tr.abs() > 1e-12 * scale {
                return Err(Error::Argument(format!("linear component must be traceless (trace {tr})")));
            }
        }
        if constant.is_some_and(|c| !c.is_finite()) {
            return Err(Error::Argument("constant component is not finite".into()));
        }
        let f = Self { modes, linear, constant, time_law };
        if let TimeLaw::BeltramiDecay { lambda, nu } = time_law {
            if !(nu > 0.0) {
                return Err(Error::Argument("Beltrami decay needs nu > 0".into()));
            }
            let defect = f.beltrami_defect(lambda);
            if defect > 1e-10 {
                return Err(Error::Argument(format!(
                    "field is not Beltrami with lambda = {lambda} (defect {defect:.3e})"
                )));
            }
        }
        Ok(f)
    }

    /// `u = c0`.
    #[must_use]
    pub fn constant(c0: Vec3) -> Self {
        Self { modes: vec![], linear: None, constant: Some(c0), time_law: TimeLaw::Static }
    }

    /// `u = (-x2, x1, 0)`, `omega = (0, 0, 2)`.
    #[must_use]
    pub fn rotation() -> Self {
        Self {
            modes: vec![],
            linear: Some([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
            constant: None,
            time_law: TimeLaw::Static,
        }
    }

    /// ABC flow `(A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)` (static).
    #[must_use]
    pub fn abc(a: f64, b: f64, c: f64) -> Self {
        let i = |re: [f64; 3], im: [f64; 3]| CVec3::new(Vec3::from_array(re), Vec3::from_array(im));
        let modes = vec![
            WaveMode::unchecked(i([0.0, a, 0.0], [-a, 0.0, 0.0]), Vec3::E3, 0.0),
            WaveMode::unchecked(i([0.0, 0.0, b], [0.0, -b, 0.0]), Vec3::E1, 0.0),
            WaveMode::unchecked(i([c, 0.0, 0.0], [0.0, 0.0, -c]), Vec3::E2, 0.0),
        ];
        Self { modes, linear: None, constant: None, time_law: TimeLaw::Static }
    }

    /// ABC flow decaying as `e^{-nu t}`: an exact Navier-Stokes solution.
    pub fn abc_decaying(a: f64, b: f64, c: f64, nu: f64) -> Result<Self> {
        Self::abc(a, b, c).with_time_law(TimeLaw::BeltramiDecay { lambda: 1.0, nu })
    }

    /// Single mode, static.
    pub fn wave(mode: WaveMode) -> Result<Self> {
        Self::new(vec![mode], None, None, TimeLaw::Static)
    }

    pub fn with_time_law(mut self, law: TimeLaw) -> Result<Self> {
        self.time_law = TimeLaw::Static;
        Self::new(self.modes, self.linear, self.constant, law)
    }

    #[must_use]
    pub fn modes(&self) -> &[WaveMode] {
        &self.modes
    }

    #[must_use]
    pub fn linear(&self) -> Option<&Mat3> {
        self.linear.as_ref()
    }

    #[must_use]
    pub fn constant_part(&self) -> Option<Vec3> {
        self.constant
    }

    #[must_use]
    pub fn time_law(&self) -> TimeLaw {
        self.time_law
    }

    /// Largest wavevector norm (0 for mode-free fields).
    #[must_use]
    pub fn max_wavenumber(&self) -> f64 {
        self.modes.iter().map(|m| m.wavevector.norm()).fold(0.0, f64::max)
    }

    /// The field `x -> u(x - h)`.
    #[must_use]
    pub fn translated(&self, h: Vec3) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|m| WaveMode { phase: m.phase - m.wavevector.dot(h), ..*m })
            .collect();
        let mut constant = self.constant;
        if let Some(l) = &self.linear {
            constant = Some(constant.unwrap_or(Vec3::ZERO) - mat_vec(l, h));
        }
        Self { modes, linear: self.linear, constant, time_law: self.time_law }
    }

    /// Value and derivatives up to `order` at `(x, t)`.
    #[must_use]
    pub fn jet(&self, x: Vec3, t: f64, order: Order) -> Jet {
        let mut j = Jet::default();
        for m in &self.modes {
            let (w0, w1) = m.parts(x);
            let a = m.wavevector;
            j.u += w0;
            if order >= Order::First {
                for i in 0..3 {
                    for p in 0..3 {
                        j.du[i][p] += w1[i] * a[p];
                    }
                }
            }
            if order >= Order::Second {
                for i in 0..3 {
                    for p in 0..3 {
                        let c = -w0[i] * a[p];
                        for q in 0..3 {
                            j.d2u[i][p][q] += c * a[q];
                        }
                    }
                }
            }
        }
        if let Some(l) = &self.linear {
            j.u += mat_vec(l, x);
            if order >= Order::First {
                for i in 0..3 {
                    for p in 0..3 {
                        j.du[i][p] += l[i][p];
                    }
                }
            }
        }
        if let Some(c) = self.constant {
            j.u += c;
        }
        let (tf, _) = self.time_law.factor(t);
        if tf != 1.0 {
            j.u = j.u * tf;
            for i in 0..3 {
                for p in 0..3 {
                    j.du[i][p] *= tf;
                    for q in 0..3 {
                        j.d2u[i][p][q] *= tf;
                    }
                }
            }
        }
        j
    }

    /// `d_{idx[0]} ... d_{idx[n-1]} u` at `(x, t)` for any derivative order.
    #[must_use]
    pub fn derivative(&self, x: Vec3, t: f64, idx: &[usize]) -> Vec3 {
        let n = idx.len();
        let mut out = Vec3::ZERO;
        for m in &self.modes {
            let (w0, w1) = m.parts(x);
            let prod: f64 = idx.iter().map(|&i| m.wavevector[i]).product();
            let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let w = if n % 2 == 0 { w0 } else { w1 };
            out += w * (sign * prod);
        }
        if let Some(l) = &self.linear {
            match n {
                0 => out += mat_vec(l, x),
                1 => out += Vec3::new(l[0][idx[0]], l[1][idx[0]], l[2][idx[0]]),
                _ => {}
            }
        }
        if n == 0 {
            if let Some(c) = self.constant {
                out += c;
            }
        }
        out * self.time_law.factor(t).0
    }

    #[must_use]
    pub fn velocity(&self, x: Vec3, t: f64) -> Vec3 {
        self.jet(x, t, Order::Value).u
    }

    #[must_use]
    pub fn vorticity(&self, x: Vec3, t: f64) -> Vec3 {
        self.jet(x, t, Order::First).vorticity()
    }

    #[must_use]
    pub fn grad_vorticity(&self, x: Vec3, t: f64) -> Mat3 {
        self.jet(x, t, Order::Second).grad_vorticity()
    }

    #[must_use]
    pub fn curl_vorticity(&self, x: Vec3, t: f64) -> Vec3 {
        self.jet(x, t, Order::Second).curl_vorticity()
    }

    /// `d_t u` at `(x, t)`.
    #[must_use]
    pub fn dt_velocity(&self, x: Vec3, t: f64) -> Vec3 {
        let (tf, dtf) = self.time_law.factor(t);
        if dtf == 0.0 {
            return Vec3::ZERO;
        }
        self.jet(x, t, Order::Value).u * (dtf / tf)
    }

    /// Max over 20 fixed points of `|curl u - lambda u| / max(1, |u|)` at `t = 0`.
    fn beltrami_defect(&self, lambda: f64) -> f64 {
        let static_self = Self { time_law: TimeLaw::Static, ..self.clone() };
        (0..20)
            .map(|i| {
                let s = i as f64;
                let x = Vec3::new((1.3 * s).sin() * 3.0, (0.7 * s + 1.0).cos() * 3.0, s * 0.31 - 2.0);
                let j = static_self.jet(x, 0.0, Order::First);
                (j.vorticity() - j.u * lambda).norm() / j.u.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `d_t u + nu curl omega + omega x u` (Navier-Stokes with Bernoulli pressure `p = -|u|^2/2`).
    pub fn ns_residual(&self, x: Vec3, t: f64, nu: f64) -> Result<Vec3> {
        if self.time_law.is_static() {
            return Err(Error::NoTimeLaw);
        }
        let j = self.jet(x, t, Order::Second);
        Ok(self.dt_velocity(x, t) + j.curl_vorticity() * nu + j.vorticity().cross(j.u))
    }

    /// Sup-norm bounds of the static part.
    pub fn field_bounds(&self, k: usize) -> Result<FieldBounds> {
        if k > 3 {
            return Err(Error::Argument(format!("field bounds available for K <= 3, got {k}")));
        }
        let mut omega = [0.0; 4];
        let mut u_sup = 0.0;
        let mut du_sup = 0.0;
        for m in &self.modes {
            let (v, a) = (m.amplitude.norm(), m.wavevector.norm());
            for (kk, o) in omega.iter_mut().enumerate().take(k + 1) {
                *o += v * a.powi(kk as i32 + 1);
            }
            u_sup += v;
            du_sup += v * a;
        }
        if let Some(l) = &self.linear {
            omega[0] += curl_of(l).norm();
            du_sup += l.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            if l.iter().flatten().any(|x| *x != 0.0) {
                u_sup = f64::INFINITY;
            }
        }
        if let Some(c) = self.constant {
            u_sup += c.norm();
        }
        Ok(FieldBounds { order: k, omega, u_sup, du_sup })
    }

    /// Windowed Sobolev surrogate for `||u||_{H^K}`: the field multiplied by a
    /// Gaussian window of width `width`, modes treated as spectrally separated.
    #[must_use]
    pub fn windowed_hk_surrogate(&self, k: u32, width: f64) -> f64 {
        let vol = std::f64::consts::PI.powf(1.5) * width.powi(3);
        let s: f64 = self
            .modes
            .iter()
            .map(|m| 0.5 * m.amplitude.norm().powi(2) * (1.0 + m.wavevector.norm2()).powi(k as i32))
            .sum();
        (s * vol).sqrt()
    }
}

/// Sup-norm estimates feeding the error budgets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldBounds {
    pub order: usize,
    /// `omega[K] >= sup |D^K omega|` (Frobenius norm over all components), `K <= order`.
    pub omega: [f64; 4],
    pub u_sup: f64,
    pub du_sup: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts() -> Vec<Vec3> {
        (0..100)
            .map(|i| {
                let s = i as f64;
                Vec3::new((2.1 * s).sin() * 2.5, (1.7 * s + 0.3).cos() * 2.5, ((0.9 * s).sin() + 0.2) * 2.0)
            })
            .collect()
    }

    fn random_wave_field() -> AnalyticField {
        let m1 = WaveMode::new(
            CVec3::new(Vec3::new(0.3, -0.2, 0.0), Vec3::new(0.1, 0.4, 0.0)),
            Vec3::new(0.0, 0.0, 1.3),
            0.4,
        )
        .unwrap();
        let a = Vec3::new(0.7, -0.5, 0.9);
        let (e1, e2) = Vec3::orthonormal_frame(a.normalized());
        let m2 = WaveMode::new(CVec3::new(e1 * 0.8, e2 * -0.5 + e1 * 0.1), a, -1.1).unwrap();
        AnalyticField::new(vec![m1, m2], None, None, TimeLaw::Static).unwrap()
    }

    #[test]
    fn simple_values() {
        let c = AnalyticField::constant(Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(c.velocity(Vec3::new(5.0, -1.0, 2.0), 0.3), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(c.vorticity(Vec3::E1, 0.0), Vec3::ZERO);
        let r = AnalyticField::rotation();
        assert_eq!(r.velocity(Vec3::E1, 0.0), Vec3::E2);
        assert_eq!(r.vorticity(Vec3::new(0.3, 2.0, 1.0), 0.0), Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(r.grad_vorticity(Vec3::E1, 0.0), [[0.0; 3]; 3]);
        let abc = AnalyticField::abc(1.0, 1.0, 1.0);
        assert!((abc.velocity(Vec3::ZERO, 0.0) - Vec3::new(1.0, 1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn abc_is_beltrami() {
        let f = AnalyticField::abc_decaying(1.0, 0.7, 0.4, 0.1).unwrap();
        for (i, x) in pts().iter().enumerate() {
            let t = i as f64 * 0.05;
            let j = f.jet(*x, t, Order::First);
            assert!((j.vorticity() - j.u).norm() < 1e-10);
        }
    }

    #[test]
    fn non_beltrami_rejected() {
        let f = random_wave_field();
        assert!(f.with_time_law(TimeLaw::BeltramiDecay { lambda: 1.0, nu: 0.1 }).is_err());
        assert!(AnalyticField::abc(1.0, 1.0, 1.0).with_time_law(TimeLaw::BeltramiDecay { lambda: 2.0, nu: 0.1 }).is_err());
    }

    #[test]
    fn divergence_free_and_traceless_check() {
        let f = random_wave_field();
        for x in pts() {
            let j = f.jet(x, 0.0, Order::First);
            assert!((j.du[0][0] + j.du[1][1] + j.du[2][2]).abs() < 1e-12);
        }
        assert!(WaveMode::new(CVec3::real(Vec3::E3), Vec3::E3, 0.0).is_err());
        assert!(AnalyticField::new(vec![], Some([[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]), None, TimeLaw::Static).is_err());
    }

    fn fd4(f: &dyn Fn(f64) -> Vec3, h: f64) -> Vec3 {
        (f(-2.0 * h) - f(2.0 * h) + (f(h) - f(-h)) * 8.0) / (12.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fields = [random_wave_field(), AnalyticField::abc(1.0, 0.6, 0.3), AnalyticField::rotation()];
        let h = 1e-3;
        for f in &fields {
            for x in pts() {
                let j = f.jet(x, 0.0, Order::Second);
                // omega from FD of u
                let mut du = [[0.0; 3]; 3];
                for p in 0..3 {
                    let d = fd4(&|s| f.velocity(x + Vec3::basis(p) * s, 0.0), h);
                    for i in 0..3 {
                        du[i][p] = d[i];
                    }
                }
                let w_fd = curl_of(&du);
                let scale = j.vorticity().norm().max(1.0);
                assert!((w_fd - j.vorticity()).norm() / scale < 1e-7);
                let mut gw = [[0.0; 3]; 3];
                for p in 0..3 {
                    let d = fd4(&|s| f.vorticity(x + Vec3::basis(p) * s, 0.0), h);
                    for i in 0..3 {
                        gw[i][p] = d[i];
                    }
                }
                let g = j.grad_vorticity();
                for i in 0..3 {
                    for p in 0..3 {
                        assert!((gw[i][p] - g[i][p]).abs() < 1e-7 * scale);
                    }
                }
                assert!((curl_of(&gw) - j.curl_vorticity()).norm() < 1e-7 * scale);
                // general-order evaluator agrees with the jet
                for i in 0..3 {
                    for p in 0..3 {
                        let d = f.derivative(x, 0.0, &[i, p]);
                        for q in 0..3 {
                            assert!((d[q] - j.d2u[q][i][p]).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ns_residual_cases() {
        let nu = 0.1;
        let f = AnalyticField::abc_decaying(1.0, 1.0, 1.0, nu).unwrap();
        for (i, x) in pts().iter().enumerate() {
            assert!(f.ns_residual(*x, i as f64 * 0.1, nu).unwrap().norm() < 1e-10);
        }
        let c = AnalyticField::constant(Vec3::new(1.0, 2.0, 3.0)).with_time_law(TimeLaw::Exponential { rate: 0.0 }).unwrap();
        assert_eq!(c.ns_residual(Vec3::E1, 0.5, nu).unwrap(), Vec3::ZERO);
        let wrong = AnalyticField::abc(1.0, 1.0, 1.0).with_time_law(TimeLaw::Exponential { rate: 2.0 * nu }).unwrap();
        assert!(wrong.ns_residual(Vec3::ZERO, 0.1, nu).unwrap().norm() > 1e-3);
        assert!(matches!(AnalyticField::rotation().ns_residual(Vec3::ZERO, 0.0, nu), Err(Error::NoTimeLaw)));
    }

    #[test]
    fn bounds_single_mode_and_constant() {
        let m = WaveMode::new(CVec3::real(Vec3::E1), Vec3::new(0.0, 2.0, 0.0), 0.0).unwrap();
        let b = AnalyticField::wave(m).unwrap().field_bounds(1).unwrap();
        assert!((b.omega[1] - 4.0).abs() < 1e-15);
        let c = AnalyticField::constant(Vec3::E1).field_bounds(3).unwrap();
        assert_eq!(c.omega, [0.0; 4]);
        assert!(AnalyticField::rotation().field_bounds(4).is_err());
    }

    #[test]
    fn translation_shifts_argument() {
        let f = random_wave_field();
        let r = AnalyticField::rotation();
        let h = Vec3::new(0.3, -1.2, 0.8);
        for x in pts().iter().take(10) {
            assert!((f.translated(h).velocity(*x + h, 0.0) - f.velocity(*x, 0.0)).norm() < 1e-12);
            assert!((r.translated(h).velocity(*x + h, 0.0) - r.velocity(*x, 0.0)).norm() < 1e-12);
        }
    }
}
