//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the libtest harness so the
//! lines always reach stdout. The full loop-equation scan takes several minutes.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use looplab::experiments::{self, write_report, Report, RunContext, Scenario};

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: &str, s: &Scenario, ctx: &RunContext) -> Result<(Report, Duration), String> {
    let t = Instant::now();
    let r = experiments::run(id, s, ctx).map_err(|e| format!("{id}: {e}"))?;
    Ok((r, t.elapsed()))
}

fn failures(r: &Report) -> Vec<String> {
    r.checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {} ({})", r.id, c.name, c.detail)).collect()
}

/// All checks of the named experiments pass, each within its time budget.
fn suite(ids: &[&str], budget: Duration, s: &Scenario, ctx: &RunContext) -> Outcome {
    let mut bad = Vec::new();
    let mut total = Duration::ZERO;
    let mut checks = 0;
    for id in ids {
        match run(id, s, ctx) {
            Ok((r, dt)) => {
                total += dt;
                checks += r.checks.len();
                bad.extend(failures(&r));
                if r.checks.is_empty() {
                    bad.push(format!("{id}: no checks"));
                }
            }
            Err(e) => bad.push(e),
        }
    }
    if total > budget {
        bad.push(format!("took {:.1} s, budget {:.0} s", total.as_secs_f64(), budget.as_secs_f64()));
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() { format!("{checks} checks in {:.1} s", total.as_secs_f64()) } else { bad.join("; ") },
    }
}

fn scaling(s: &Scenario, ctx: &RunContext) -> Outcome {
    let mut bad = Vec::new();
    let mut slopes = Vec::new();
    let mut total = Duration::ZERO;
    for id in ["area_derivative_scan", "bs_recovery", "taylor_remainder", "liquid_scan"] {
        match run(id, s, ctx) {
            Ok((r, dt)) => {
                total += dt;
                bad.extend(failures(&r));
                if r.fits.len() != 1 || r.fits[0].expected.is_none() {
                    bad.push(format!("{id}: expected one fit against a target slope"));
                }
                if r.tables.iter().map(|t| t.rows.len()).max().unwrap_or(0) < 4 {
                    bad.push(format!("{id}: fewer than 4 points"));
                }
                slopes.extend(r.fits.iter().map(|f| format!("{id} {:.3}", f.slope)));
            }
            Err(e) => bad.push(e),
        }
    }
    if total > Duration::from_secs(600) {
        bad.push(format!("took {:.1} s", total.as_secs_f64()));
    }
    Outcome { pass: bad.is_empty(), detail: if bad.is_empty() { slopes.join(", ") } else { bad.join("; ") } }
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn reproducible(s: &Scenario, seed: u64) -> Outcome {
    let mut s = s.clone();
    s.gaussian.samples = 2000;
    let ids = ["gaussian_stats", "derivative_oracles", "euler_ensemble"];
    let tmp = tempfile::tempdir().unwrap();
    let header = vec![("seed".to_string(), seed.to_string())];
    let mut runs = Vec::new();
    for (name, threads) in [("a", 1), ("b", 1), ("c", 3)] {
        let dir = tmp.path().join(name);
        for id in ids {
            match experiments::run(id, &s, &RunContext { seed, threads }) {
                Ok(r) => {
                    write_report(&r, &dir, &header).unwrap();
                }
                Err(e) => return Outcome { pass: false, detail: format!("{id}: {e}") },
            }
        }
        runs.push(csv_bytes(&dir));
    }
    let files = runs[0].len();
    let same = files > 0 && runs[1] == runs[0] && runs[2] == runs[0];
    Outcome { pass: same, detail: format!("{files} CSV files compared across 3 runs (threads 1, 1, 3)") }
}

fn main() -> ExitCode {
    let s = Scenario::default();
    let ctx = RunContext { seed: 1, threads: looplab::par::default_threads() };
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 Euler-ensemble exactness", Box::new(|| suite(&["euler_ensemble"], Duration::from_secs(10), &s, &ctx))),
        ("2 derivative oracles", Box::new(|| suite(&["derivative_oracles"], Duration::from_secs(120), &s, &ctx))),
        ("3 exact degeneracies", Box::new(|| suite(&["degeneracies"], Duration::from_secs(120), &s, &ctx))),
        ("4 scaling slopes", Box::new(|| scaling(&s, &ctx))),
        ("5 loop-equation residual", Box::new(|| suite(&["residual_scan"], Duration::from_secs(1800), &s, &ctx))),
        ("6 Biot-Savart closed form", Box::new(|| suite(&["bs_closed_form"], Duration::from_secs(600), &s, &ctx))),
        ("7 Gaussian statistics", Box::new(|| suite(&["gaussian_stats"], Duration::from_secs(300), &s, &ctx))),
        ("8 obstruction", Box::new(|| suite(&["obstruction_demo"], Duration::from_secs(120), &s, &ctx))),
        ("9 Kelvin check", Box::new(|| suite(&["kelvin_check"], Duration::from_secs(300), &s, &ctx))),
        ("10 reproducibility", Box::new(|| reproducible(&s, 1))),
    ];
    let mut all = true;
    for (name, check) in &criteria {
        let o = check();
        all &= o.pass;
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
