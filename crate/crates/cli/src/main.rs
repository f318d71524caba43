//! `looplab`: run loop-calculus experiments from a config file.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use looplab::biot_savart::{r_table, RTable};
use looplab::experiments::{self, write_report, RunContext, EXPERIMENTS};
use looplab::Error;
use serde::Serialize;

use crate::config::RunConfig;

const DEFAULT_OUT: &str = "looplab-out";
const OUT_ENV: &str = "LOOPLAB_OUT";

#[derive(Parser)]
#[command(name = "looplab", version, about = "Discretized loop calculus experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments named in a config file.
    Run {
        config: PathBuf,
        /// Overrides `seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; overrides `threads` in the config.
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; overrides `out` in the config and $LOOPLAB_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only these experiment ids from the config.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// List experiment ids with what each one checks.
    ListExperiments,
    /// Describe one experiment.
    Describe { id: String },
    /// Write the tabulated Biot-Savart remainder R(kappa) as CSV.
    DumpRTable {
        /// Destination file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        kappa_max: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
    },
}

#[derive(Serialize)]
struct ExperimentEntry {
    id: String,
    status: &'static str,
    wall_seconds: f64,
    files: Vec<String>,
    checks: Vec<experiments::Check>,
    fits: Vec<experiments::FitResult>,
    notes: Vec<String>,
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    config_path: String,
    config: RunConfig,
    seed: u64,
    threads: usize,
    out: String,
    wall_seconds: f64,
    status: &'static str,
    experiments: Vec<ExperimentEntry>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { config, seed, threads, out, only } => run(&config, seed, threads, out, &only),
        Command::ListExperiments => {
            for e in EXPERIMENTS {
                let kind = if e.exploratory { "exploratory" } else { "checked" };
                println!("{:<22} {:<12} {:<10} {}", e.id, kind, e.runtime, e.verifies);
            }
            ExitCode::SUCCESS
        }
        Command::Describe { id } => match experiments::find(&id) {
            Ok(e) => {
                println!("{}: {}\n\nChecks: {}\n\n{}\n\nTypical runtime: {}", e.id, e.title, e.verifies, e.description, e.runtime);
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(1)
            }
        },
        Command::DumpRTable { out, kappa_max, step } => dump_r_table(out.as_deref(), kappa_max, step),
    }
}

fn dump_r_table(out: Option<&Path>, kappa_max: Option<f64>, step: Option<f64>) -> ExitCode {
    let built;
    let table = if kappa_max.is_none() && step.is_none() {
        r_table()
    } else {
        let (k, s) = (kappa_max.unwrap_or(r_table().kappa_max), step.unwrap_or(r_table().step));
        if !(k > 0.0 && s > 0.0 && k / s <= 1e7) {
            eprintln!("error: need kappa_max > 0, step > 0 and at most 1e7 entries");
            return ExitCode::from(1);
        }
        built = RTable::build(k, s);
        &built
    };
    let mut csv = String::from("# R(kappa) = int_1^2 chi'(s) cos(kappa s) ds\nkappa,r\n");
    for (k, v) in table.entries() {
        csv.push_str(&format!("{k:.12e},{v:.12e}\n"));
    }
    match out {
        None => {
            print!("{csv}");
            ExitCode::SUCCESS
        }
        Some(p) => match std::fs::write(p, csv) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", p.display());
                ExitCode::from(2)
            }
        },
    }
}

fn run(path: &Path, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>, only: &[String]) -> ExitCode {
    let cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(1);
        }
    };
    if threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(1);
    }
    if let Some(bad) = only.iter().find(|id| !cfg.experiments.contains(id)) {
        eprintln!("error: --only names `{bad}`, which the config does not list");
        return ExitCode::from(1);
    }
    let seed = seed.or(cfg.seed).unwrap_or(1);
    let threads = threads.or(cfg.threads).unwrap_or_else(looplab::par::default_threads);
    let out = out
        .or_else(|| cfg.out.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(2);
    }
    let scenario = cfg.scenario();
    let ctx = RunContext { seed, threads };
    let header = vec![
        ("tool".to_string(), format!("looplab {}", env!("CARGO_PKG_VERSION"))),
        ("config".to_string(), path.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned())),
        ("seed".to_string(), seed.to_string()),
    ];
    let start = Instant::now();
    let mut entries = Vec::new();
    let mut usage_error = false;
    for id in cfg.experiments.iter().filter(|id| only.is_empty() || only.contains(id)) {
        let t0 = Instant::now();
        println!("running {id}");
        let mut entry = ExperimentEntry {
            id: id.clone(),
            status: "error",
            wall_seconds: 0.0,
            files: Vec::new(),
            checks: Vec::new(),
            fits: Vec::new(),
            notes: Vec::new(),
            error: None,
        };
        match experiments::run(id, &scenario, &ctx) {
            Ok(report) => {
                match write_report(&report, &out, &header) {
                    Ok(files) => entry.files = files.iter().map(|f| f.display().to_string()).collect(),
                    Err(e) => entry.error = Some(e.to_string()),
                }
                for c in &report.checks {
                    println!("  [{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                }
                entry.status = if report.passed() && entry.error.is_none() { "pass" } else { "fail" };
                entry.checks = report.checks;
                entry.fits = report.fits;
                entry.notes = report.notes;
            }
            Err(e) => {
                usage_error |= matches!(e, Error::Argument(_) | Error::NoTimeLaw);
                println!("  [ERROR] {e}");
                entry.error = Some(e.to_string());
            }
        }
        entry.wall_seconds = t0.elapsed().as_secs_f64();
        entries.push(entry);
    }
    let all_pass = entries.iter().all(|e| e.status == "pass");
    let status = if all_pass { "pass" } else if usage_error { "usage_error" } else { "fail" };
    let manifest = Manifest {
        tool: "looplab",
        version: env!("CARGO_PKG_VERSION"),
        config_path: path.display().to_string(),
        config: cfg,
        seed,
        threads,
        out: out.display().to_string(),
        wall_seconds: start.elapsed().as_secs_f64(),
        status,
        experiments: entries,
    };
    let manifest_path = out.join("manifest.json");
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(|e| e.to_string())
        .and_then(|s| std::fs::write(&manifest_path, s + "\n").map_err(|e| e.to_string()));
    if let Err(e) = written {
        eprintln!("error: cannot write {}: {e}", manifest_path.display());
        return ExitCode::from(2);
    }
    println!("{status}: manifest at {}", manifest_path.display());
    if all_pass {
        ExitCode::SUCCESS
    } else if usage_error {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}
