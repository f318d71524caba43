//! Smoothed divergence-free Gaussian random fields on a periodic Fourier lattice,
//! Monte Carlo estimates of the loop functional at `t = 0` and the closed form it should match.
//!
//! A sample is `xi(x) = sum_k 2 Re(c_k e^{ik.x})` over half of the lattice `dk Z^3 cap {|k| <= K_max}`,
//! with `c_k = sqrt(w_k/2) (P_k g1 + i P_k g2)`, `g1, g2 ~ N(0, I)`, `P_k` the projector
//! orthogonal to `k` and `w_k = (dk/2pi)^3 e^{-r0^2 |k|^2}`. Then
//! `E[xi_i(x) xi_j(y)] = sum_k w_k P_k e^{ik.(x-y)}`, the lattice form of `P e^{r0^2 Laplacian}`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circulation::segment_phase_moments;
use crate::error::{Error, Result};
use crate::geometry::{CVec3, PolygonalLoop, Vec3};
use crate::par::map_indexed;
use crate::quadrature::gauss_legendre;

/// Smoothing scale and lattice of the sampler.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub r0: f64,
    /// Lattice spacing; the periodic box has side `2 pi / dk`.
    pub dk: f64,
    pub k_max: f64,
}

impl GaussianSpec {
    /// Checks `K_max r0 >= 6` so the dropped spectral tail is below `e^{-36}`.
    pub fn new(r0: f64, dk: f64, k_max: f64) -> Result<Self> {
        if !(r0 > 0.0 && dk > 0.0 && k_max > 0.0) || !(r0 * dk * k_max).is_finite() {
            return Err(Error::Argument("r0, dk and K_max must be positive and finite".into()));
        }
        if k_max * r0 < 6.0 - 1e-12 {
            return Err(Error::Argument(format!("K_max r0 = {:.3} is below 6", k_max * r0)));
        }
        if k_max / dk > 200.0 {
            return Err(Error::Argument(format!("lattice with K_max/dk = {:.0} is too large to sample", k_max / dk)));
        }
        Ok(Self { r0, dk, k_max })
    }

    /// `K_max = 6/r0` and `dk = min(pi/8, pi/(4 diameter))`.
    pub fn for_loop(r0: f64, diameter: f64) -> Result<Self> {
        let dk = if diameter > 0.0 { (PI / 8.0).min(PI / (4.0 * diameter)) } else { PI / 8.0 };
        Self::new(r0, dk, 6.0 / r0)
    }

    #[must_use]
    pub fn box_size(&self) -> f64 {
        2.0 * PI / self.dk
    }

    /// Loops must fit the lattice resolution: `dk <= pi/(4 diameter)`.
    pub fn check_loop(&self, c: &PolygonalLoop) -> Result<()> {
        let d = c.diameter();
        if self.dk * 4.0 * d > PI * (1.0 + 1e-12) {
            return Err(Error::Argument(format!("loop diameter {d:.3} too large for lattice spacing {:.4}", self.dk)));
        }
        Ok(())
    }

    /// Spectral weight `w_k = (dk/2pi)^3 e^{-r0^2|k|^2}` of one lattice point.
    #[must_use]
    pub fn weight(&self, k: Vec3) -> f64 {
        (self.dk / (2.0 * PI)).powi(3) * (-self.r0 * self.r0 * k.norm2()).exp()
    }

    /// One representative of each `{k, -k}` pair with `0 < |k| <= K_max`, in a fixed order.
    #[must_use]
    pub fn half_lattice(&self) -> Vec<[i32; 3]> {
        let m = (self.k_max / self.dk).floor() as i32;
        let r2 = (self.k_max / self.dk).powi(2) * (1.0 + 1e-12);
        let mut out = Vec::new();
        for n1 in 0..=m {
            for n2 in -m..=m {
                for n3 in -m..=m {
                    let upper = n1 > 0 || (n1 == 0 && (n2 > 0 || (n2 == 0 && n3 > 0)));
                    if upper && f64::from(n1 * n1 + n2 * n2 + n3 * n3) <= r2 {
                        out.push([n1, n2, n3]);
                    }
                }
            }
        }
        out
    }
}

fn project(k: Vec3, v: Vec3) -> Vec3 {
    v - k * (k.dot(v) / k.norm2())
}

/// Precomputed lattice of a [`GaussianSpec`]: wavevectors and amplitudes.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    pub spec: GaussianSpec,
    index: Vec<[i32; 3]>,
    k: Vec<Vec3>,
    amp: Vec<f64>,
}

impl GaussianSampler {
    #[must_use]
    pub fn new(spec: GaussianSpec) -> Self {
        let index = spec.half_lattice();
        let k: Vec<Vec3> = index
            .iter()
            .map(|n| Vec3::new(f64::from(n[0]), f64::from(n[1]), f64::from(n[2])) * spec.dk)
            .collect();
        let amp = k.iter().map(|&k| (0.5 * spec.weight(k)).sqrt()).collect();
        Self { spec, index, k, amp }
    }

    #[must_use]
    pub fn n_modes(&self) -> usize {
        self.k.len()
    }

    #[must_use]
    pub fn wavevectors(&self) -> &[Vec3] {
        &self.k
    }

    /// Coefficients of sample `sample` drawn from the ChaCha8 stream `sample` of `seed`.
    #[must_use]
    pub fn coefficients(&self, seed: u64, sample: u64) -> Vec<CVec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample);
        let normal3 = |rng: &mut ChaCha8Rng| {
            Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
        };
        self.k
            .iter()
            .zip(&self.amp)
            .map(|(&k, &a)| {
                let re = project(k, normal3(&mut rng)) * a;
                let im = project(k, normal3(&mut rng)) * a;
                CVec3::new(re, im)
            })
            .collect()
    }

    #[must_use]
    pub fn sample(&self, seed: u64, sample: u64) -> FieldSample {
        FieldSample { seed, sample, k: self.k.clone(), coeffs: self.coefficients(seed, sample) }
    }

    /// Loop integrals `J_k = oint e^{ik.C} dC` of every mode, exact on each segment.
    #[must_use]
    pub fn loop_integrals(&self, c: &PolygonalLoop) -> Vec<CVec3> {
        self.k
            .iter()
            .map(|&k| {
                let mut j = CVec3::ZERO;
                for s in 0..c.n() as isize {
                    let (a, d) = (c.vertex(s), c.edge(s));
                    let e0 = segment_phase_moments(k.dot(d))[0] * Complex64::from_polar(1.0, k.dot(a));
                    j += CVec3::real(d).scale(e0);
                }
                j
            })
            .collect()
    }

    /// `Var Gamma = sum_k 2 w_k |J_k|^2` on the lattice (`P_k J_k = J_k` since `k.J_k = 0`).
    #[must_use]
    pub fn lattice_circulation_variance(&self, c: &PolygonalLoop) -> f64 {
        self.loop_integrals(c).iter().zip(&self.amp).map(|(j, a)| 4.0 * a * a * j.hdot(*j).re).sum()
    }

    /// Circulations `Gamma[xi_m, C]` for samples `m = 0..M`, in sample order.
    #[must_use]
    pub fn circulation_samples(&self, c: &PolygonalLoop, m: usize, seed: u64, threads: usize) -> Vec<f64> {
        let j = self.loop_integrals(c);
        map_indexed(m, threads, |s| circulation_of(&self.coefficients(seed, s as u64), &j))
    }

    /// Circulations of the same `m` samples around each loop: `out[loop][sample]`.
    #[must_use]
    pub fn circulation_samples_multi(&self, loops: &[&PolygonalLoop], m: usize, seed: u64, threads: usize) -> Vec<Vec<f64>> {
        let js: Vec<Vec<CVec3>> = loops.iter().map(|c| self.loop_integrals(c)).collect();
        let rows = map_indexed(m, threads, |s| {
            let coeffs = self.coefficients(seed, s as u64);
            js.iter().map(|j| circulation_of(&coeffs, j)).collect::<Vec<_>>()
        });
        (0..loops.len()).map(|l| rows.iter().map(|r| r[l]).collect()).collect()
    }

    fn lookup(&self) -> HashMap<[i32; 3], usize> {
        self.index.iter().enumerate().map(|(i, n)| (*n, i)).collect()
    }
}

fn circulation_of(coeffs: &[CVec3], j: &[CVec3]) -> f64 {
    coeffs.iter().zip(j).map(|(c, j)| 2.0 * c.dot(*j).re).sum()
}

/// One realisation: coefficients over the half lattice (the other half is their conjugate).
#[derive(Clone, Debug)]
pub struct FieldSample {
    pub seed: u64,
    pub sample: u64,
    k: Vec<Vec3>,
    pub coeffs: Vec<CVec3>,
}

impl FieldSample {
    #[must_use]
    pub fn velocity(&self, x: Vec3) -> Vec3 {
        self.k.iter().zip(&self.coeffs).fold(Vec3::ZERO, |acc, (&k, c)| {
            acc + c.scale(Complex64::from_polar(2.0, k.dot(x))).re
        })
    }

    #[must_use]
    pub fn divergence(&self, x: Vec3) -> f64 {
        self.k
            .iter()
            .zip(&self.coeffs)
            .map(|(&k, c)| (c.dot_real(k) * Complex64::from_polar(2.0, k.dot(x)) * Complex64::new(0.0, 1.0)).re)
            .sum()
    }

    /// Largest `|k.c_k| / |k|`, zero up to rounding by construction.
    #[must_use]
    pub fn max_transverse_defect(&self) -> f64 {
        self.k.iter().zip(&self.coeffs).map(|(&k, c)| c.dot_real(k).norm() / k.norm()).fold(0.0, f64::max)
    }

    #[must_use]
    pub fn circulation(&self, c: &PolygonalLoop, sampler: &GaussianSampler) -> f64 {
        circulation_of(&self.coeffs, &sampler.loop_integrals(c))
    }
}

/// Band-limited divergence-free test field `sum_j Re(v_j e^{i q_j.x})`, `q_j = dk n_j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TestField {
    pub modes: Vec<([i32; 3], CVec3)>,
}

impl TestField {
    pub fn validate(&self, spec: &GaussianSpec) -> Result<()> {
        for (n, v) in &self.modes {
            let q = lattice_vector(*n, spec.dk);
            if q.norm2() == 0.0 || q.norm() > spec.k_max {
                return Err(Error::Argument(format!("test mode {n:?} is not a nonzero lattice mode within K_max")));
            }
            if v.dot_real(q).norm() > 1e-12 * v.norm() * q.norm() {
                return Err(Error::Argument(format!("test mode {n:?} is not divergence-free")));
            }
        }
        Ok(())
    }
}

fn lattice_vector(n: [i32; 3], dk: f64) -> Vec3 {
    Vec3::new(f64::from(n[0]), f64::from(n[1]), f64::from(n[2])) * dk
}

/// `<f, e^{r0^2 Laplacian} g> = int_box f . e^{r0^2 Laplacian} g`.
#[must_use]
pub fn heat_pairing(spec: &GaussianSpec, f: &TestField, g: &TestField) -> f64 {
    let vol = spec.box_size().powi(3);
    let mut s = 0.0;
    for (nf, v) in &f.modes {
        for (ng, u) in &g.modes {
            let q = lattice_vector(*ng, spec.dk);
            let heat = (-spec.r0 * spec.r0 * q.norm2()).exp();
            if nf == ng {
                s += 0.5 * vol * heat * v.hdot(*u).re;
            } else if *nf == [-ng[0], -ng[1], -ng[2]] {
                s += 0.5 * vol * heat * v.dot(*u).re;
            }
        }
    }
    s
}

/// `<f, xi> = int_box f . xi` from the sample coefficients.
fn field_pairing(spec: &GaussianSpec, lookup: &HashMap<[i32; 3], usize>, f: &TestField, coeffs: &[CVec3]) -> f64 {
    let vol = spec.box_size().powi(3);
    f.modes
        .iter()
        .map(|(n, v)| {
            if let Some(&i) = lookup.get(n) {
                vol * v.hdot(coeffs[i]).re
            } else {
                let i = lookup[&[-n[0], -n[1], -n[2]]];
                vol * v.dot(coeffs[i]).re
            }
        })
        .sum()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CovarianceReport {
    pub analytic: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
}

fn z_score(estimate: f64, target: f64, stderr: f64) -> f64 {
    let d = estimate - target;
    if stderr > 0.0 {
        d / stderr
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Sample mean and standard error of the mean.
#[must_use]
pub fn mean_stderr(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    (mean, (var / m).sqrt())
}

/// Monte Carlo estimate of `E[<f,xi><g,xi>]` for each pair, all from the same `m` samples.
pub fn covariance_check(
    spec: &GaussianSpec,
    pairs: &[(TestField, TestField)],
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<CovarianceReport>> {
    for (f, g) in pairs {
        f.validate(spec)?;
        g.validate(spec)?;
    }
    if m < 2 {
        return Err(Error::Argument("covariance_check needs at least 2 samples".into()));
    }
    let sampler = GaussianSampler::new(*spec);
    let lookup = sampler.lookup();
    let products = map_indexed(m, threads, |s| {
        let c = sampler.coefficients(seed, s as u64);
        pairs
            .iter()
            .map(|(f, g)| field_pairing(spec, &lookup, f, &c) * field_pairing(spec, &lookup, g, &c))
            .collect::<Vec<_>>()
    });
    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, (f, g))| {
            let col: Vec<f64> = products.iter().map(|row| row[p]).collect();
            let (estimate, stderr) = mean_stderr(&col);
            let analytic = heat_pairing(spec, f, g);
            CovarianceReport { analytic, estimate, stderr, z: z_score(estimate, analytic, stderr) }
        })
        .collect())
}

/// Prefactor of the circulation variance in the exponent of `Psi[C, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentVariant {
    /// `exp(-(1/2)(gamma/nu) V)`.
    Linear,
    /// `exp(-(1/2)(gamma/nu)^2 V)`, the characteristic function of a centred Gaussian.
    Quadratic,
}

impl ExponentVariant {
    pub const ALL: [Self; 2] = [Self::Linear, Self::Quadratic];

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Quadratic => "quadratic",
        }
    }

    #[must_use]
    pub fn exponent(self, g: f64) -> f64 {
        match self {
            Self::Linear => g,
            Self::Quadratic => g * g,
        }
    }
}

/// `oint oint K(C(s) - C(s')) dC(s).dC(s')` with the heat kernel
/// `K(z) = (4 pi r0^2)^{-3/2} e^{-|z|^2/(4 r0^2)}`, Gauss-Legendre on each pair of segments.
#[must_use]
pub fn heat_kernel_form(c: &PolygonalLoop, r0: f64, nodes: usize) -> f64 {
    let gl = gauss_legendre(nodes);
    let pts: Vec<(f64, f64)> = gl.nodes_on(0.0, 1.0).collect();
    let norm = (4.0 * PI * r0 * r0).powf(-1.5);
    let inv = 1.0 / (4.0 * r0 * r0);
    let n = c.n() as isize;
    let mut total = 0.0;
    for i in 0..n {
        let (a, da) = (c.vertex(i), c.edge(i));
        for j in 0..n {
            let (b, db) = (c.vertex(j), c.edge(j));
            let dot = da.dot(db);
            if dot == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for &(x, wx) in &pts {
                let p = a + da * x;
                for &(y, wy) in &pts {
                    s += wx * wy * (-(p - b - db * y).norm2() * inv).exp();
                }
            }
            total += dot * s;
        }
    }
    norm * total
}

/// `Psi[C, 0]` from the heat-kernel form; real in `(0, 1]`.
#[must_use]
pub fn psi0_closed(c: &PolygonalLoop, r0: f64, gamma: f64, nu: f64, variant: ExponentVariant) -> f64 {
    (-0.5 * variant.exponent(gamma / nu) * heat_kernel_form(c, r0, 12)).exp()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct McEstimate {
    pub mean: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub samples: usize,
}

impl McEstimate {
    /// `exp(i g Gamma_m)` averaged over the given circulations.
    #[must_use]
    pub fn from_circulations(gammas: &[f64], g: f64) -> Self {
        let re: Vec<f64> = gammas.iter().map(|x| (g * x).cos()).collect();
        let im: Vec<f64> = gammas.iter().map(|x| (g * x).sin()).collect();
        let (mr, sr) = mean_stderr(&re);
        let (mi, si) = mean_stderr(&im);
        Self { mean: Complex64::new(mr, mi), stderr_re: sr, stderr_im: si, samples: gammas.len() }
    }

    /// Imaginary part within `k` standard errors of zero.
    #[must_use]
    pub fn centred_within(&self, k: f64) -> bool {
        self.mean.im.abs() <= k * self.stderr_im
    }

    #[must_use]
    pub fn z_re(&self, target: f64) -> f64 {
        z_score(self.mean.re, target, self.stderr_re)
    }
}

/// Monte Carlo `E[exp(i gamma/nu Gamma[xi, C])]` over `m` samples.
pub fn psi0_mc(
    c: &PolygonalLoop,
    spec: &GaussianSpec,
    gamma: f64,
    nu: f64,
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<McEstimate> {
    spec.check_loop(c)?;
    if m < 2 || !(nu > 0.0) {
        return Err(Error::Argument("psi0_mc needs m >= 2 and nu > 0".into()));
    }
    let sampler = GaussianSampler::new(*spec);
    Ok(McEstimate::from_circulations(&sampler.circulation_samples(c, m, seed, threads), gamma / nu))
}

/// Paired-seed difference `Psi(C + h) - Psi(C)` with the standard error of the per-sample difference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TranslationReport {
    pub base: McEstimate,
    pub shifted: McEstimate,
    pub diff: Complex64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

impl TranslationReport {
    #[must_use]
    pub fn within(&self, k: f64) -> bool {
        self.diff.re.abs() <= k * self.stderr_re && self.diff.im.abs() <= k * self.stderr_im
    }
}

#[allow(clippy::too_many_arguments)]
pub fn psi0_translation(
    c: &PolygonalLoop,
    h: Vec3,
    spec: &GaussianSpec,
    gamma: f64,
    nu: f64,
    m: usize,
    seed: u64,
    threads: usize,
) -> Result<TranslationReport> {
    let shifted_loop = c.translated(h);
    spec.check_loop(c)?;
    let sampler = GaussianSampler::new(*spec);
    let g = gamma / nu;
    let mut both = sampler.circulation_samples_multi(&[c, &shifted_loop], m, seed, threads).into_iter();
    let (a, b) = (both.next().unwrap_or_default(), both.next().unwrap_or_default());
    let dre: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (g * y).cos() - (g * x).cos()).collect();
    let dim: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (g * y).sin() - (g * x).sin()).collect();
    let (mr, sr) = mean_stderr(&dre);
    let (mi, si) = mean_stderr(&dim);
    Ok(TranslationReport {
        base: McEstimate::from_circulations(&a, g),
        shifted: McEstimate::from_circulations(&b, g),
        diff: Complex64::new(mr, mi),
        stderr_re: sr,
        stderr_im: si,
    })
}

/// Exponent variants whose closed form lies within `k` standard errors of the estimate.
#[must_use]
pub fn matching_variants(c: &PolygonalLoop, r0: f64, gamma: f64, nu: f64, est: &McEstimate, k: f64) -> Vec<ExponentVariant> {
    ExponentVariant::ALL
        .into_iter()
        .filter(|&v| est.z_re(psi0_closed(c, r0, gamma, nu, v)).abs() <= k)
        .collect()
}

/// `sum_k 2 w_k (I - k k^T/|k|^2)`, the single-point velocity covariance of the lattice field.
#[must_use]
pub fn point_covariance(sampler: &GaussianSampler) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (&k, &a) in sampler.k.iter().zip(&sampler.amp) {
        let w2 = 4.0 * a * a;
        let k2 = k.norm2();
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[i][j] += w2 * (delta - k[i] * k[j] / k2);
            }
        }
    }
    out
}
