use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const ABC: &str = "[field]\nkind = \"abc_decaying\"\na = 1.0\nb = 0.7\nc = 0.4\nnu = 1.0\n";

fn looplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_looplab")).args(args).env_remove("LOOPLAB_OUT").output().unwrap()
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn lists_at_least_ten_experiments() {
    let o = looplab(&["list-experiments"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().count() >= 10);
}

#[test]
fn describe_names_the_loop_equation() {
    let o = looplab(&["describe", "residual_scan"]);
    assert!(o.status.success());
    assert!(stdout(&o).to_lowercase().contains("discretized loop equation"), "{}", stdout(&o));
}

#[test]
fn describe_unknown_id_is_a_usage_error() {
    let o = looplab(&["describe", "no_such_experiment"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_experiment"));
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiments = [\"euler_ensemble\"]\n");
    let o = looplab(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("field"), "{}", stderr(&o));
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("experiments = [\"euler_ensemble\"]\n{ABC}[params]\ngama = 2.0\n"));
    let o = looplab(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("gama") && err.contains("line 9"), "{err}");
}

#[test]
fn negative_viscosity_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("experiments = [\"euler_ensemble\"]\n{ABC}[params]\nnu = -1.0\n"));
    let o = looplab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn euler_config_passes_with_tiny_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = looplab(&["run", config_path("euler_52.cfg").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("euler_ensemble__residuals.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(v <= 1e-10, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
    assert_eq!(manifest(dir.path())["status"], "pass");
}

#[test]
fn failing_budget_exits_2_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("experiments = [\"residual_scan\"]\n{ABC}[scan]\nn_values = [10, 8, 9]\nalphas = [0.4]\n");
    let cfg = write_config(dir.path(), &text);
    let o = looplab(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("increases at N = 8"), "{}", stdout(&o));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "fail");
    assert_eq!(m["experiments"][0]["status"], "fail");
}

#[test]
fn static_field_in_residual_scan_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = "experiments = [\"residual_scan\"]\n[field]\nkind = \"abc\"\na = 1.0\nb = 1.0\nc = 1.0\n";
    let cfg = write_config(dir.path(), text);
    let o = looplab(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("manifest.json").exists());
}

fn run_in(dir: &Path, cfg: &Path, threads: &str) {
    let o = looplab(&["run", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--threads", threads]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "experiments = [\"gaussian_stats\", \"bs_closed_form\"]\nseed = 11\n{ABC}[gaussian]\nsamples = 600\ng_values = [1.0]\nr0_values = [0.5, 1.0]\n"
    );
    let cfg = write_config(dir.path(), &text);
    let (a, b) = (dir.path().join("one"), dir.path().join("three"));
    run_in(&a, &cfg, "1");
    run_in(&b, &cfg, "3");
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.retain(|n| n != "manifest.json");
    names.sort();
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(std::fs::read(a.join(&n)).unwrap(), std::fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_looplab"))
        .args(["run", config_path("euler_52.cfg").to_str().unwrap()])
        .env("LOOPLAB_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("manifest.json").exists());
    assert!(out.join("euler_ensemble__residuals.csv").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = looplab(&["run", config_path("euler_52.cfg").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success());
    assert_eq!(manifest(dir.path())["seed"], 9);
    let csv = std::fs::read_to_string(dir.path().join("euler_ensemble__residuals.csv")).unwrap();
    assert!(csv.contains("# seed: 9"));
}

#[test]
fn r_table_dump_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.csv");
    let o = looplab(&["dump-r-table", "--kappa-max", "4", "--step", "0.5", "--out", p.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(p).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "kappa,r");
    assert_eq!(rows.len(), 1 + 9);
}
