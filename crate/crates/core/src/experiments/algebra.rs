//! Exactness suites: the Euler ensemble, closed forms against finite differences, degeneracies.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::{Cell, Report, Table};
use super::scenario::Scenario;
use super::RunContext;
use crate::biot_savart::BSConfig;
use crate::circulation::{
    area_derivative_exact, area_derivative_fd, area_derivative_value, gamma_gradient, gamma_gradient_fd, segment_derivs,
    segment_derivs_closed, QuadratureConfig,
};
use crate::ensemble::{EnsembleTrajectory, StarPolygonEnsemble};
use crate::error::Result;
use crate::fields::{AnalyticField, TimeLaw, WaveMode};
use crate::geometry::{CVec3, PolygonalLoop, Vec3};
use crate::momentum::{
    closed_operator_actions, diffusion_symbol_fd, e_k, e_k_from_operators, omega_symbol_fd, psi_momentum_forms,
    velocity_symbol_quadrature, EkIndexVariant, MomentumState, SystemVariant,
};
use crate::operators::{vorticity_op_fd, OperatorContext, OperatorParams};
use crate::par::map_indexed;

/// `(n, k, family, closed, oracle, relative error)`.
type MomentumCase = (usize, isize, &'static str, f64, f64, f64);

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn rand_vec(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

/// Momentum state with random real increments summing to zero and constant imaginary part `im`.
pub(super) fn random_state(rng: &mut ChaCha8Rng, n: usize, im: Vec3) -> MomentumState {
    let mut dp: Vec<Vec3> = (0..n - 1).map(|_| rand_vec(rng)).collect();
    let s = dp.iter().fold(Vec3::ZERO, |a, &d| a + d);
    dp.push(-s);
    MomentumState::from_increments(&dp).expect("finite increments").shifted(CVec3::new(rand_vec(rng), im))
}

/// Regular polygon with every vertex moved by up to 0.1 per axis.
pub(super) fn random_loop(rng: &mut ChaCha8Rng, n: usize) -> PolygonalLoop {
    let base = PolygonalLoop::regular(n, Vec3::new(0.1, -0.2, 0.05), 1.0, Vec3::new(0.3, -0.2, 1.0)).expect("n >= 3");
    PolygonalLoop::new(base.vertices().iter().map(|&v| v + rand_vec(rng) * 0.2).collect()).expect("finite loop")
}

pub(super) fn skew_pentagon() -> PolygonalLoop {
    PolygonalLoop::new(vec![
        Vec3::new(0.1, -0.2, 0.3),
        Vec3::new(0.9, 0.1, -0.2),
        Vec3::new(1.2, 0.8, 0.4),
        Vec3::new(0.4, 1.3, 0.1),
        Vec3::new(-0.3, 0.6, -0.4),
    ])
    .expect("fixed loop")
}

fn tilted_octagon() -> PolygonalLoop {
    PolygonalLoop::regular(8, Vec3::new(0.2, 0.1, -0.1), 1.0, Vec3::new(0.2, 0.3, 1.0)).expect("fixed loop")
}

/// Fields with a wave part, a linear part, a time law, or none of these.
fn oracle_fields() -> Vec<(&'static str, AnalyticField, f64)> {
    let a = Vec3::new(1.2, -0.4, 0.7);
    let e = a.cross(Vec3::E3).normalized();
    let mode = WaveMode::new(CVec3::new(e * 0.8, a.normalized().cross(e) * 0.5), a, 0.4).expect("transverse mode");
    let b = Vec3::new(-0.3, 0.9, 0.5);
    let e2 = b.cross(Vec3::E1).normalized();
    let mode2 = WaveMode::new(CVec3::real(e2 * 0.6), b, -1.1).expect("transverse mode");
    let strain = [[0.2, 0.1, 0.0], [0.0, -0.3, 0.4], [0.1, 0.0, 0.1]];
    let mixed = AnalyticField::new(vec![mode2], Some(strain), Some(Vec3::new(0.1, 0.0, -0.2)), TimeLaw::Linear { rate: 0.4 })
        .expect("valid field");
    vec![
        ("abc", AnalyticField::abc(1.0, 0.7, 0.4), 0.0),
        ("abc_decaying", AnalyticField::abc_decaying(1.0, 0.7, 0.4, 1.0).expect("Beltrami"), 0.3),
        ("rotation", AnalyticField::rotation(), 0.0),
        ("wave", AnalyticField::wave(mode).expect("valid mode"), 0.0),
        ("wave_strain", mixed, 0.7),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    a / b.max(1e-3)
}

pub fn euler_ensemble(s: &Scenario, _ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("euler_ensemble");
    let e = &s.euler;
    let normal = Vec3::new(0.2, 0.3, 1.0);
    let gamma = s.params.gamma;
    let mut cond = Table::new(
        "conditions",
        &["q", "p", "unit_steps", "orthogonal_offset", "equal_radii", "offset_norm", "iabc_max", "full_max", "liquid_max"],
    )
    .note(format!("gamma: {gamma}, nu: 1, t0: {}, times: {:?}", e.t0, e.times));
    let mut res = Table::new("residuals", &["q", "p", "system", "t", "max_residual"]);
    let mut verts = Table::new("vertices", &["q", "p", "k", "fx", "fy", "fz", "ax", "ay", "az"]);
    let (mut worst_cond, mut worst_iabc, mut worst_sys) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &q in &e.q_values {
        for p in (1..q).filter(|&p| 2 * p < q && gcd(p, q) == 1) {
            let ens = StarPolygonEnsemble::construct(q, p, normal)?;
            let c = ens.verify_conditions();
            let iabc = (0..q as isize).map(|k| ens.verify_iabc(k).max()).fold(0.0, f64::max);
            for (k, f) in ens.rows() {
                let a = ens.offset;
                verts.push(vec![q.into(), p.into(), k.into(), f.x.into(), f.y.into(), f.z.into(), a.x.into(), a.y.into(), a.z.into()]);
            }
            let traj = EnsembleTrajectory::new(ens, e.t0, gamma)?;
            let mut maxes = [0.0_f64; 2];
            for (i, v) in [SystemVariant::Full, SystemVariant::Liquid].into_iter().enumerate() {
                let table = traj.residuals(v, &e.times)?;
                for &t in &e.times {
                    let m = table.rows.iter().filter(|row| row.t == t).map(|row| row.magnitude).fold(0.0, f64::max);
                    res.push(vec![q.into(), p.into(), v.name().into(), t.into(), m.into()]);
                }
                maxes[i] = table.max();
            }
            worst_cond = worst_cond.max(c.max());
            worst_iabc = worst_iabc.max(iabc);
            worst_sys = worst_sys.max(maxes[0]).max(maxes[1]);
            cond.push(vec![
                q.into(),
                p.into(),
                c.unit_steps.into(),
                c.orthogonal_offset.into(),
                c.equal_radii.into(),
                c.offset_norm.into(),
                iabc.into(),
                maxes[0].into(),
                maxes[1].into(),
            ]);
        }
    }
    r.check_le("star-polygon conditions", worst_cond, 1e-12);
    r.check_le("I_a, I_b, I_c", worst_iabc, 1e-12);
    r.check_le("Full and liquid system residuals", worst_sys, 1e-10);
    r.tables.extend([cond, res, verts]);
    Ok(r)
}

#[derive(Clone, Copy)]
enum Family {
    Gradient,
    AreaDerivative,
    SegmentDerivs,
    Vorticity,
    BlockVorticity,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Self::Gradient => "gamma_gradient",
            Self::AreaDerivative => "area_derivative",
            Self::SegmentDerivs => "segment_derivs",
            Self::Vorticity => "vorticity_op",
            Self::BlockVorticity => "increment_vorticity_op",
        }
    }
}

pub fn derivative_oracles(s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("derivative_oracles");
    let q = s.quadrature;
    let fields = oracle_fields();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let loops = [("pentagon", skew_pentagon()), ("octagon", tilted_octagon()), ("random10", random_loop(&mut rng, 10))];
    let params = OperatorParams::new(0.8, 1.1, 0.4, 8)?;

    let mut cases = Vec::new();
    for fi in 0..fields.len() {
        for (li, (_, c)) in loops.iter().enumerate() {
            let n = c.n() as isize;
            for k in 0..n {
                for fam in [Family::Gradient, Family::AreaDerivative, Family::SegmentDerivs, Family::Vorticity] {
                    cases.push((fam, fi, li, k));
                }
                if (1..=n - 2).contains(&k) {
                    cases.push((Family::BlockVorticity, fi, li, k));
                }
            }
        }
    }
    let eval = |i: usize| -> (f64, f64, f64) {
        let (fam, fi, li, k) = cases[i];
        let (_, f, t) = &fields[fi];
        let c = &loops[li].1;
        let pair = |a: f64, b: f64, d: f64| (a, b, rel(d, b));
        match fam {
            Family::Gradient => {
                let (a, b) = (gamma_gradient(f, c, k, *t, &q), gamma_gradient_fd(f, c, k, *t, &q));
                pair(a.norm(), b.norm(), (a - b).norm())
            }
            Family::AreaDerivative => {
                let (a, b) = (area_derivative_value(f, c, k, *t, &q), area_derivative_fd(f, c, k, *t, &q));
                pair(a.norm(), b.norm(), (a - b).norm())
            }
            Family::SegmentDerivs => {
                let q_fine = QuadratureConfig { nodes_per_segment: 24, ..q };
                let (x, y) = (c.vertex(k), c.vertex(k + 1));
                let a = segment_derivs_closed(f, x, y, *t, true);
                let b = segment_derivs(f, x, y, *t, &q_fine, true);
                let mut d = (a.value - b.value).abs().max((a.d_a - b.d_a).norm()).max((a.d_b - b.d_b).norm());
                let mut scale = b.value.abs().max(b.d_a.norm()).max(b.d_b.norm());
                for l in 0..3 {
                    for m in 0..3 {
                        d = d.max((a.mixed[l][m] - b.mixed[l][m]).abs());
                        scale = scale.max(b.mixed[l][m].abs());
                    }
                }
                pair(scale, scale, d)
            }
            Family::Vorticity | Family::BlockVorticity => {
                let mut op = OperatorContext::new(f, c, *t, params);
                op.q = q;
                let block = matches!(fam, Family::BlockVorticity);
                let a = if block { op.increment_vorticity_op(k).expect("index in range").raw } else { op.vorticity_op(k).raw };
                let b = vorticity_op_fd(&op, k, block);
                pair(a.norm(), b.norm(), (a - b).norm())
            }
        }
    };
    let results = map_indexed(cases.len(), ctx.threads, eval);

    let mut table = Table::new("cases", &["family", "field", "loop", "k", "closed_norm", "oracle_norm", "rel_error"])
        .note("rel_error = |closed - oracle| / max(|oracle|, 1e-3)");
    let mut worst = std::collections::BTreeMap::<&str, f64>::new();
    for ((fam, fi, li, k), (a, b, e)) in cases.iter().zip(&results) {
        table.push(vec![fam.name().into(), fields[*fi].0.into(), loops[*li].0.into(), (*k).into(), (*a).into(), (*b).into(), (*e).into()]);
        let w = worst.entry(fam.name()).or_insert(0.0);
        *w = w.max(*e);
    }

    // momentum-mode symbols on random states
    let mut mrng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 0x5eed);
    let mut mcases = Vec::new();
    for i in 0..40 {
        let n = [8, 10, 12][i % 3];
        let im = if i % 2 == 0 { Vec3::ZERO } else { rand_vec(&mut mrng) };
        let st = random_state(&mut mrng, n, im);
        let c = random_loop(&mut mrng, n);
        mcases.push((st, c));
    }
    let mresults = map_indexed(mcases.len(), ctx.threads, |i| -> Result<Vec<MomentumCase>> {
        let (st, c) = &mcases[i];
        let n = st.n();
        let p = OperatorParams::new(0.9, 1.3, 0.5, n)?;
        let mut out = Vec::new();
        for k in [1, n as isize / 2, n as isize - 1] {
            let sym = closed_operator_actions(st, k, &p)?;
            let w = omega_symbol_fd(st, c, k, p.gamma, p.nu)?;
            out.push((n, k, "momentum_omega", sym.omega.norm(), w.norm(), rel((sym.omega - w).norm(), w.norm())));
            let d = diffusion_symbol_fd(st, c, k, &p)?;
            out.push((n, k, "momentum_diffusion", sym.diffusion.norm(), d.norm(), rel((sym.diffusion - d).norm(), d.norm())));
        }
        Ok(out)
    });
    // a few velocity symbols against direct ball quadrature
    let bs = BSConfig { tol: 1e-9, max_refinements: 6, ..s.biot_savart };
    let vresults = map_indexed(4, ctx.threads, |i| -> Result<(usize, isize, &'static str, f64, f64, f64)> {
        let (st, c) = &mcases[i];
        let n = st.n();
        let p = OperatorParams::new(0.9, 1.3, 0.5, n)?;
        let k = 2;
        let sym = closed_operator_actions(st, k, &p)?.velocity;
        let v = velocity_symbol_quadrature(st, c, k, &p, &bs)?;
        Ok((n, k, "momentum_velocity", sym.norm(), v.norm(), rel((sym - v).norm(), v.norm())))
    });
    for row in mresults.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().chain(vresults.into_iter().collect::<Result<Vec<_>>>()?) {
        let (n, k, fam, a, b, e) = row;
        table.push(vec![fam.into(), "momentum".into(), format!("random{n}").into(), k.into(), a.into(), b.into(), e.into()]);
        let w = worst.entry(fam).or_insert(0.0);
        *w = w.max(e);
    }

    let total = table.rows.len();
    let mut summary = Table::new("summary", &["family", "cases", "max_rel_error"]);
    for (fam, w) in &worst {
        let count = table.rows.iter().filter(|row| row[0] == Cell::Text((*fam).to_string())).count();
        summary.push(vec![(*fam).into(), count.into(), (*w).into()]);
        r.check_le(&format!("{fam} against its oracle"), *w, 1e-5);
    }
    r.check("at least 500 cases", total >= 500, format!("{total} cases"));
    r.tables.extend([summary, table]);
    Ok(r)
}

pub fn degeneracies(_s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("degeneracies");
    let q = QuadratureConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let loops = [skew_pentagon(), tilted_octagon(), random_loop(&mut rng, 12)];

    let rot = AnalyticField::rotation();
    let mut rad = Table::new("rotation_r_ad", &["loop_n", "k", "r_ad"]);
    let mut worst = 0.0_f64;
    for c in &loops {
        for k in 0..c.n() as isize {
            let v = area_derivative_exact(&rot, c, k, 0.0, &q).r_ad.norm();
            worst = worst.max(v);
            rad.push(vec![c.n().into(), k.into(), v.into()]);
        }
    }
    r.check_le("rotation field R_ad", worst, 1e-12);

    let cf = AnalyticField::constant(Vec3::new(0.3, -0.4, 1.0)).with_time_law(TimeLaw::Exponential { rate: 0.0 })?;
    let c = tilted_octagon();
    let p = OperatorParams::new(1.0, 1.0, 0.4, 8)?;
    let op = OperatorContext::new(&cf, &c, 0.0, p);
    let mut ops = Table::new("constant_field", &["operator", "k", "magnitude"]);
    let mut push = |name: &str, k: isize, v: f64| ops.push(vec![name.into(), k.into(), v.into()]);
    for k in 0..8 {
        push("gamma_gradient", k, gamma_gradient(&cf, &c, k, 0.0, &q).norm());
        push("vorticity_op", k, op.vorticity_op(k).value.norm());
        push("diffusion_op", k, op.diffusion_op(k).value.norm());
        if (1..=6).contains(&k) {
            push("increment_vorticity_op", k, op.increment_vorticity_op(k)?.value.norm());
            push("increment_diffusion_op", k, op.increment_diffusion_op(k)?.value.norm());
        }
    }
    for k in [0, 3] {
        push("velocity_op", k, op.velocity_op(k)?.value.norm());
        push("advection_op", k, op.advection_op(k)?.value.norm());
    }
    push("liquid_residual", -1, op.liquid_residual()?.norm());
    push("loop_equation_residual", -1, op.loop_equation_residual()?.value.norm());
    let worst_const = ops.column("magnitude").unwrap_or_default().into_iter().fold(0.0, f64::max);
    r.check_le("constant field operators", worst_const, 1e-12);

    let mut sbp = Table::new("summation_by_parts", &["state", "n", "form_difference"]);
    let mut worst_sbp = 0.0_f64;
    for i in 0..100 {
        let n = 4 + i % 9;
        let im = if i % 2 == 0 { Vec3::ZERO } else { rand_vec(&mut rng) };
        let st = random_state(&mut rng, n, im);
        let c = random_loop(&mut rng, n);
        let (a, b) = psi_momentum_forms(&st, &c, 0.9, 1.3)?;
        let d = (a - b).norm();
        worst_sbp = worst_sbp.max(d);
        sbp.push(vec![i.into(), n.into(), d.into()]);
    }
    r.check_le("summation-by-parts forms", worst_sbp, 1e-12);
    r.tables.extend([rad, ops, sbp]);
    Ok(r)
}

pub fn ek_index_oracle(_s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("ek_index_oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut t = Table::new("cases", &["state", "n", "k", "k2_rel", "k1_rel"]);
    let (mut worst_k2, mut min_k1) = (0.0_f64, f64::INFINITY);
    for i in 0..20 {
        let n = 8 + 2 * (i % 3);
        let st = random_state(&mut rng, n, Vec3::ZERO);
        let p = OperatorParams::new(0.9, 1.4, 0.5, n)?;
        for k in 0..n as isize {
            let comp = e_k_from_operators(&st, k, &p)?;
            let scale = comp.norm().max(1e-3);
            let a = (comp - e_k(&st, k, p.gamma, p.nu, EkIndexVariant::KPlus2)?).norm() / scale;
            let b = (comp - e_k(&st, k, p.gamma, p.nu, EkIndexVariant::KPlus1)?).norm() / scale;
            worst_k2 = worst_k2.max(a);
            min_k1 = min_k1.min(b);
            t.push(vec![i.into(), n.into(), k.into(), a.into(), b.into()]);
        }
    }
    r.check_le("(k+3, k+2) matches the operator composition", worst_k2, 1e-10);
    r.check("(k+3, k+1) does not", min_k1 > 1e-6, format!("smallest relative gap {min_k1:.3e}"));
    r.tables.push(t);
    Ok(r)
}
