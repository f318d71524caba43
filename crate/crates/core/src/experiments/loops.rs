//! Scans over loop resolution, edge length and cutoff.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::algebra::skew_pentagon;
use super::fit::loglog_fit;
use super::report::{Plot, Report, Series, Table};
use super::scenario::{ScanSpec, Scenario};
use super::RunContext;
use crate::biot_savart::{bs_direct_complex, bs_wave_closed, recovery_error_l2, remainder_r, remainder_r_direct, BSConfig};
use crate::circulation::area_derivative_exact;
use crate::error::{Error, Result};
use crate::fields::{AnalyticField, WaveMode};
use crate::geometry::{CVec3, PolygonalLoop, Vec3};
use crate::operators::{loop_residual_budget, OperatorContext, OperatorParams};
use crate::par::map_indexed;

const PERIODIC_NOTE: &str = "fields are periodic, not decaying on R^3; integrals stay finite through the cutoff";

fn plot(name: &str, title: &str, x: &str, y: &str, series: Vec<Series>, legend: Vec<String>) -> Plot {
    Plot { name: name.into(), title: title.into(), x_label: x.into(), y_label: y.into(), series, legend }
}

fn series(label: &str, x: &[f64], y: &[f64]) -> Series {
    Series { label: label.into(), points: x.iter().copied().zip(y.iter().copied()).collect() }
}

/// Largest `|ns_residual|` over a few points and times.
fn ns_defect(f: &AnalyticField, nu: f64, t: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, x) in [Vec3::new(0.1, 0.2, 0.3), Vec3::new(-0.7, 0.4, 1.1), Vec3::new(1.3, -0.9, -0.2)].into_iter().enumerate() {
        worst = worst.max(f.ns_residual(x, t + 0.1 * i as f64, nu)?.norm());
    }
    Ok(worst)
}

fn context<'a>(s: &Scenario, f: &'a AnalyticField, c: &'a PolygonalLoop, p: OperatorParams) -> OperatorContext<'a> {
    let mut ctx = OperatorContext::new(f, c, s.params.t, p);
    ctx.q = s.quadrature;
    ctx.bs = s.biot_savart;
    ctx
}

pub fn area_derivative_scan(s: &Scenario, _ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("area_derivative_scan");
    let f = s.field.build()?;
    let hs = ScanSpec::pick(&s.scan.h_values, &[0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125], 3, "h_values")?;
    let x0 = Vec3::new(0.3, -0.2, 0.5);
    let shape = skew_pentagon();
    let k = 1;
    let mut t = Table::new("r_ad", &["h", "edge_span", "r_ad"]).note(PERIODIC_NOTE);
    let (mut span, mut rad) = (Vec::new(), Vec::new());
    for &h in &hs {
        let c = PolygonalLoop::new(shape.vertices().iter().map(|&v| x0 + (v - shape.vertex(k)) * h).collect())?;
        let e = (c.vertex(k + 1) - c.vertex(k - 1)).norm();
        let v = area_derivative_exact(&f, &c, k, s.params.t, &s.quadrature).r_ad.norm();
        t.push(vec![h.into(), e.into(), v.into()]);
        span.push(e);
        rad.push(v);
    }
    r.fit(loglog_fit("|R_ad| vs |C_{k+1} - C_{k-1}|", &span, &rad, Some(1.0), 0.3));
    r.plots.push(plot("r_ad", "Area-derivative remainder", "|C_{k+1} - C_{k-1}|", "|R_ad|", vec![series("|R_ad|", &span, &rad)], vec![]));
    r.tables.push(t);
    Ok(r)
}

pub fn bs_recovery(s: &Scenario, _ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("bs_recovery");
    let ells = ScanSpec::pick(&s.scan.ell_values, &[0.25, 0.125, 0.0625, 0.03125], 3, "ell_values")?;
    let sigma = 0.1;
    let err: Vec<f64> = ells.iter().map(|&l| recovery_error_l2(sigma, l)).collect();
    let mut t = Table::new("recovery", &["ell", "rel_l2_error"]).note(format!("Gaussian blob width sigma: {sigma}"));
    for (l, e) in ells.iter().zip(&err) {
        t.push(vec![(*l).into(), (*e).into()]);
    }
    r.fit(loglog_fit("BS recovery error vs ell", &ells, &err, Some(1.5), 0.3));
    r.plots.push(plot("recovery", "Biot-Savart recovery", "ell", "relative L2 error", vec![series("error", &ells, &err)], vec![format!("sigma = {sigma}")]));
    r.tables.push(t);
    Ok(r)
}

fn random_mode(rng: &mut ChaCha8Rng) -> WaveMode {
    let dir = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5).normalized();
    let a = dir * (0.5 + 1.5 * rng.random::<f64>());
    let (e1, e2) = Vec3::orthonormal_frame(dir);
    let re = e1 * (rng.random::<f64>() - 0.5) + e2 * (rng.random::<f64>() - 0.5);
    let im = e1 * (rng.random::<f64>() - 0.5) + e2 * (rng.random::<f64>() - 0.5);
    WaveMode::new(CVec3::new(re, im), a, std::f64::consts::TAU * rng.random::<f64>()).expect("transverse mode")
}

pub fn bs_closed_form(s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("bs_closed_form");
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let triples: Vec<(WaveMode, Vec3, f64)> = (0..10)
        .map(|_| {
            let m = random_mode(&mut rng);
            let x = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 2.0;
            let ell = 0.25 + 0.75 * rng.random::<f64>();
            (m, x, ell)
        })
        .collect();
    let bs = s.biot_savart;
    let out = map_indexed(triples.len(), ctx.threads, |i| -> Result<(CVec3, CVec3)> {
        let (m, x, ell) = triples[i];
        let direct = bs_direct_complex(&mut |y| m.complex_value(y), x, &BSConfig { ell, ..bs })?;
        Ok((direct.value, bs_wave_closed(&m, x, ell)))
    });
    let mut t = Table::new("triples", &["i", "a_norm", "ell", "kappa", "direct_norm", "closed_norm", "rel_error"]);
    let mut worst = 0.0_f64;
    for (i, ((m, _, ell), res)) in triples.iter().zip(out).enumerate() {
        let (d, c) = res?;
        let e = (d - c).norm() / c.norm();
        worst = worst.max(e);
        let kappa = m.wavevector.norm() / ell;
        t.push(vec![i.into(), m.wavevector.norm().into(), (*ell).into(), kappa.into(), d.norm().into(), c.norm().into(), e.into()]);
    }
    r.check_le("direct quadrature against closed form", worst, 1e-4);

    let mut decay = Table::new("remainder_decay", &["kappa", "r", "r_direct", "weighted"]).note("weighted = |R(kappa)| (1 + kappa)^4");
    let (mut ks, mut ws) = (Vec::new(), Vec::new());
    let (mut head, mut tail) = (0.0_f64, 0.0_f64);
    for i in 0..=80 {
        let kappa = 10f64.powf(i as f64 / 20.0);
        let rv = remainder_r(kappa);
        let w = rv.abs() * (1.0 + kappa).powi(4);
        if kappa <= 100.0 {
            head = head.max(w);
        } else {
            tail = tail.max(w);
        }
        decay.push(vec![kappa.into(), rv.into(), remainder_r_direct(kappa).into(), w.into()]);
        ks.push(kappa);
        ws.push(w);
    }
    r.check("|R| (1 + kappa)^4 bounded on [1, 1e4]", head.is_finite() && tail <= head, format!("max on [1, 100]: {head:.3e}, on (100, 1e4]: {tail:.3e}"));
    r.plots.push(plot("remainder_decay", "Schwartz decay of R", "kappa", "|R| (1 + kappa)^4", vec![series("weighted remainder", &ks, &ws)], vec![]));
    r.tables.extend([t, decay]);
    Ok(r)
}

fn failing_rows(what: &str, rows: &[String]) -> String {
    if rows.is_empty() {
        String::new()
    } else {
        format!("{what} {}", rows.join(", "))
    }
}

pub fn residual_scan(s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("residual_scan");
    let f = s.field.build()?;
    if f.time_law().is_static() {
        return Err(Error::NoTimeLaw);
    }
    let nu = s.params.nu;
    let defect = ns_defect(&f, nu, s.params.t)?;
    if defect > 1e-8 {
        return Err(Error::Argument(format!("residual_scan needs an exact Navier-Stokes field (defect {defect:.3e} at nu = {nu})")));
    }
    let ns = ScanSpec::pick(&s.scan.n_values, &[8, 16, 32], 3, "n_values")?;
    let alphas = ScanSpec::pick(&s.scan.alphas, &[0.4, 0.6], 1, "alphas")?;
    let points: Vec<(f64, usize)> = alphas.iter().flat_map(|&a| ns.iter().map(move |&n| (a, s.loop_spec.resolved_n(n)))).collect();
    let out = map_indexed(points.len(), ctx.threads, |i| -> Result<_> {
        let (alpha, n) = points[i];
        let c = s.loop_spec.polygon(n)?;
        let p = s.params.operator_params(alpha, n)?;
        context(s, &f, &c, p).loop_equation_residual()
    });
    let mut t = Table::new("residuals", &["alpha", "n", "r_loop", "dt_psi", "advection", "diffusion", "budget", "frozen_bound", "ratio"])
        .note(PERIODIC_NOTE)
        .note(format!("ns_defect: {defect:.3e}"))
        .note("frozen_bound = C budget(N), C = r_loop / budget at the smallest N");
    let mut series_list = Vec::new();
    let mut legend = Vec::new();
    for &alpha in &alphas {
        let (mut xs, mut ys, mut bs) = (Vec::new(), Vec::new(), Vec::new());
        let mut constant = None;
        let mut prev: Option<f64> = None;
        let (mut monotone, mut dominated) = (true, true);
        let (mut rising, mut over) = (Vec::new(), Vec::new());
        for (&(a, n), res) in points.iter().zip(&out) {
            if a != alpha {
                continue;
            }
            let res = res.as_ref().map_err(|e| Error::Numerical(format!("alpha {a}, N {n}: {e}")))?;
            let v = res.value.norm();
            let budget = loop_residual_budget(n, alpha);
            let c = *constant.get_or_insert(v / budget);
            let bound = c * budget;
            if prev.is_some_and(|p| v > p) {
                monotone = false;
                rising.push(format!("N = {n}"));
            }
            if v > bound * (1.0 + 1e-12) {
                dominated = false;
                over.push(format!("N = {n}"));
            }
            prev = Some(v);
            t.push(vec![
                alpha.into(),
                n.into(),
                v.into(),
                res.dt_psi.norm().into(),
                res.advection.norm().into(),
                res.diffusion.norm().into(),
                budget.into(),
                bound.into(),
                (v / bound).into(),
            ]);
            xs.push(n as f64);
            ys.push(v);
            bs.push(bound);
        }
        r.check(&format!("alpha = {alpha}: non-increasing in N"), monotone, failing_rows("increases at", &rising));
        r.check(&format!("alpha = {alpha}: below the frozen budget"), dominated, failing_rows("exceeds the bound at", &over));
        let fit = loglog_fit(&format!("|R_loop| vs N at alpha = {alpha}"), &xs, &ys, None, 0.3);
        legend.push(fit.summary());
        r.fit(fit);
        series_list.push(series(&format!("|R_loop|, alpha = {alpha}"), &xs, &ys));
        series_list.push(series(&format!("frozen budget, alpha = {alpha}"), &xs, &bs));
    }
    r.plots.push(plot("residuals", "Loop-equation residual", "N", "|R_loop|", series_list, legend));
    r.tables.push(t);
    Ok(r)
}

pub fn liquid_scan(s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("liquid_scan");
    let f = s.field.build()?;
    let ns = ScanSpec::pick(&s.scan.n_values, &[8, 16, 32, 64, 128], 4, "n_values")?;
    let ns: Vec<usize> = ns.iter().map(|&n| s.loop_spec.resolved_n(n)).collect();
    let out = map_indexed(ns.len(), ctx.threads, |i| -> Result<f64> {
        let c = s.loop_spec.polygon(ns[i])?;
        let p = s.params.operator_params(s.params.alpha, ns[i])?;
        Ok(context(s, &f, &c, p).liquid_residual()?.norm())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let inv: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    let mut t = Table::new("liquid", &["n", "r_liquid"]).note(PERIODIC_NOTE);
    for (n, v) in ns.iter().zip(&out) {
        t.push(vec![(*n).into(), (*v).into()]);
    }
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit = loglog_fit("|R_liquid| vs 1/N", &inv, &out, Some(1.0), 0.3);
    r.plots.push(plot("liquid", "Liquid loop-equation residual", "N", "|R_liquid|", vec![series("|R_liquid|", &nf, &out)], vec![fit.summary()]));
    r.fit(fit);
    r.tables.push(t);
    Ok(r)
}

pub fn operator_errors(s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("operator_errors");
    let f = s.field.build()?;
    let ns = ScanSpec::pick(&s.scan.n_values, &[8, 16, 32], 1, "n_values")?;
    let ns: Vec<usize> = ns.iter().map(|&n| s.loop_spec.resolved_n(n)).collect();
    let k = 2;
    let out = map_indexed(ns.len(), ctx.threads, |i| -> Result<[f64; 5]> {
        let c = s.loop_spec.polygon(ns[i])?;
        let p = s.params.operator_params(s.params.alpha, ns[i])?;
        let op = context(s, &f, &c, p);
        let part = |o: &crate::operators::OperatorResult, name: &str| o.part(name).map_or(f64::NAN, CVec3::norm);
        let w = op.vorticity_op(k);
        let d = op.diffusion_op(k);
        let v = op.velocity_op(k)?;
        let a = op.advection_op(k)?;
        let lead = f.vorticity(c.vertex(k), s.params.t);
        Ok([(w.value - CVec3::real(lead)).norm(), part(&w, "minus_r_ad"), part(&d, "r_diff"), part(&v, "total_error"), part(&a, "r_adv")])
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("errors", &["n", "vorticity_error", "r_ad", "r_diff", "velocity_error", "r_adv"])
        .note(format!("vertex k = {k}, alpha = {}", s.params.alpha))
        .note(PERIODIC_NOTE);
    let nf: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let names = ["vorticity_error", "r_ad", "r_diff", "velocity_error", "r_adv"];
    for (n, row) in ns.iter().zip(&out) {
        let mut cells = vec![(*n).into()];
        cells.extend(row.iter().map(|v| (*v).into()));
        t.push(cells);
    }
    let series_list = (0..5).map(|j| series(names[j], &nf, &out.iter().map(|row| row[j]).collect::<Vec<_>>())).collect();
    let finite = out.iter().flatten().all(|v| v.is_finite());
    r.check("all terms finite", finite, "exploratory; no size threshold");
    r.plots.push(plot("errors", "Operator error terms", "N", "magnitude", series_list, vec![format!("alpha = {}", s.params.alpha)]));
    r.tables.push(t);
    Ok(r)
}

pub fn rbad_scan(s: &Scenario, ctx: &RunContext) -> Result<Report> {
    let mut r = Report::new("rbad_scan");
    let f = s.field.build()?;
    let ns = ScanSpec::pick(&s.scan.n_values, &[8, 16, 32], 1, "n_values")?;
    let ns: Vec<usize> = ns.iter().map(|&n| s.loop_spec.resolved_n(n)).collect();
    let k = 2;
    let out = map_indexed(ns.len(), ctx.threads, |i| {
        let c = s.loop_spec.polygon(ns[i])?;
        let p = s.params.operator_params(s.params.alpha, ns[i])?;
        context(s, &f, &c, p).rbad_probe(k)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("rbad", &["n", "r_bad", "r_bad_log_n", "r_adv", "total"])
        .note(format!("vertex k = {k}, alpha = {}; exploratory, no pass/fail", s.params.alpha));
    for (n, rep) in ns.iter().zip(&out) {
        let rb = rep.r_bad.norm();
        t.push(vec![(*n).into(), rb.into(), (rb * (*n as f64).ln()).into(), rep.r_adv.norm().into(), rep.total.norm().into()]);
    }
    let finite = out.iter().all(|rep| rep.r_bad.is_finite() && rep.r_adv.is_finite() && rep.total.is_finite());
    r.check("all terms finite", finite, "exploratory; no size threshold");
    r.notes.push("R_bad has no known bound; the table is for inspection only".into());
    r.tables.push(t);
    Ok(r)
}
