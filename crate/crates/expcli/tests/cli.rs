use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn examples() -> PathBuf {
  Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn scratch(name: &str) -> PathBuf {
  let dir = std::env::temp_dir().join(format!("expcli-cli-{}-{name}", std::process::id()));
  let _ = fs::remove_dir_all(&dir);
  fs::create_dir_all(&dir).unwrap();
  dir
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
  Command::new(env!("CARGO_BIN_EXE_expcli"))
    .arg("--config")
    .arg(config)
    .arg("--out")
    .arg(out)
    .args(extra)
    .output()
    .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
  let p = dir.join("config.toml");
  fs::write(&p, text).unwrap();
  p
}

fn csv(path: &Path) -> Vec<Vec<f64>> {
  fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn exponent_table_of_the_example() {
  let out = scratch("exponent");
  let o = run(&examples().join("exponent.toml"), &out, &[]);
  assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
  for row in csv(&out.join("exponent.csv")) {
    let (l, phi, d1, d2) = (row[0], row[1], row[2], row[3]);
    // Φ(λ) = -λ + λ², Φ'(λ) = -1 + 2λ, Φ'' = 2
    assert!((phi - (l * l - l)).abs() < 1e-12, "{row:?}");
    assert!((d1 - (2.0 * l - 1.0)).abs() < 1e-12 && (d2 - 2.0).abs() < 1e-12, "{row:?}");
  }
  let phi1 = csv(&out.join("exponent.csv")).into_iter().find(|r| r[0] == 1.0).unwrap()[1];
  assert!(phi1.abs() < 1e-15);
  let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
  assert_eq!(report["status"], "pass");
  assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
  assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("weakly_subcritical"));
}

#[test]
fn zero_environment_survival_matches_the_closed_form() {
  let out = scratch("cbre");
  let o = run(&examples().join("cbre_zero_environment.toml"), &out, &[]);
  assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
  let rows = csv(&out.join("survival.csv"));
  assert_eq!(rows.len(), 7);
  for r in rows {
    let t = r[0];
    let exact = if t == 0.0 { 1.0 } else { 1.0 - (-1.3 * (0.8 * 0.6 * t).powf(-1.0 / 0.6)).exp() };
    assert!((r[1] - exact).abs() < 1e-6, "t = {t}: {} vs {exact}", r[1]);
  }
}

#[test]
fn invalid_config_lists_every_problem_and_exits_2() {
  let dir = scratch("invalid");
  let cfg = write_config(
    &dir,
    "kind = \"asymptotics\"\nstep = 0.1\ngrid.t = [1.0]\ntriplet.drift_a = 0.0\ntriplet.sigma = -1.0\ntriplet.jumps.family = \"zero\"\ncolour = 3\n",
  );
  let o = run(&cfg, &dir.join("out"), &[]);
  assert_eq!(o.status.code(), Some(2));
  let err = String::from_utf8_lossy(&o.stderr);
  assert!(err.contains("seed required"), "{err}");
  assert!(err.contains("line 5: triplet.sigma"), "{err}");
  assert!(err.contains("colour: unknown key"), "{err}");
  assert!(err.contains("fspec"), "{err}");
  assert!(!dir.join("out").exists());
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_counts() {
  let dir = scratch("determinism");
  let cfg = examples().join("simulate.toml");
  let a = run(&cfg, &dir.join("a"), &["--sequential"]);
  let b = run(&cfg, &dir.join("b"), &["--sequential"]);
  let c = run(&cfg, &dir.join("c"), &["--workers", "3"]);
  for o in [&a, &b, &c] {
    assert_eq!(o.status.code(), Some(0));
  }
  for f in ["report.json", "functional.csv", "paths.csv", "summary.txt"] {
    let ra = fs::read(dir.join("a").join(f)).unwrap();
    assert_eq!(ra, fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    assert_eq!(ra, fs::read(dir.join("c").join(f)).unwrap(), "{f}");
  }
}

#[test]
fn seed_override_changes_seed_and_hash() {
  let dir = scratch("seed");
  let cfg = examples().join("exponent.toml");
  run(&cfg, &dir.join("a"), &[]);
  let o = run(&cfg, &dir.join("b"), &["--seed-override", "99"]);
  assert_eq!(o.status.code(), Some(0));
  let read = |d: &str| -> serde_json::Value { serde_json::from_str(&fs::read_to_string(dir.join(d).join("report.json")).unwrap()).unwrap() };
  let (a, b) = (read("a"), read("b"));
  assert_eq!(b["seed"], 99);
  assert_ne!(a["config_hash"], b["config_hash"]);
}

#[test]
fn failed_check_and_ess_flag_have_distinct_exit_codes() {
  let dir = scratch("exit");
  let base = fs::read_to_string(examples().join("cbre_zero_environment.toml")).unwrap();
  let strict = write_config(&dir, &format!("{base}\n[tolerances]\nclosed_form = 1e-300\n"));
  let o = run(&strict, &dir.join("strict"), &[]);
  assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
  assert!(dir.join("strict/report.json").exists());

  let tiny = dir.join("tiny.toml");
  fs::write(&tiny, base.replace("n_paths = 200", "n_paths = 10")).unwrap();
  let o = run(&tiny, &dir.join("tiny"), &[]);
  assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
  let report = fs::read_to_string(dir.join("tiny/report.json")).unwrap();
  assert!(report.contains("\"ess_flagged\": true"));
}

#[test]
fn acceptance_kind_runs_selected_criteria() {
  let dir = scratch("acceptance");
  let cfg = write_config(&dir, "kind = \"acceptance\"\nseed = 4\nacceptance.criteria = [1, 11]\n");
  let o = run(&cfg, &dir.join("out"), &[]);
  assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
  let stdout = String::from_utf8_lossy(&o.stdout);
  assert!(stdout.contains("PASS C1 ") && stdout.contains("PASS C11"), "{stdout}");
}
