use randwave::ensembles::Field;
use randwave::geometry::SpectralBlock;
use randwave::normlab::a_qh_closed_form;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn randwave(config: &str, dir: &Path, extra: &[&str], envs: &[(&str, &str)]) -> Output {
    let file = dir.join("config.ini");
    fs::write(&file, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_randwave"));
    cmd.arg(&file).arg("--out").arg(dir.join("out")).args(extra).env_remove("RANDWAVE_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn csv(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name).join("result.csv")).unwrap()
}

const TINY: &str = "# schema guard\n[tails]\nseed = 5\ntrials = 100\nstatistic = linf\ndegree = 4\nthresholds = 0.5, 1, 1.5\n";

#[test]
fn golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = randwave(TINY, dir.path(), &["--workers", "1"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got = csv(dir.path(), "tails-5");
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/tails-5.csv");
    if std::env::var_os("RANDWAVE_BLESS").is_some() {
        fs::write(&golden, &got).unwrap();
    }
    assert_eq!(got, fs::read_to_string(golden).unwrap());
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = "[medians]\nseed = 3\ntrials = 300\ndegree = 6\n";
    let mut seen = Vec::new();
    for w in ["1", "4", "8"] {
        let out = randwave(config, dir.path(), &["--workers", w], &[]);
        assert!(out.status.success());
        seen.push(csv(dir.path(), "medians-3"));
    }
    let out = randwave(config, dir.path(), &[], &[("RANDWAVE_WORKERS", "4")]);
    assert!(out.status.success());
    seen.push(csv(dir.path(), "medians-3"));
    assert!(seen.iter().all(|s| *s == seen[0]));
    let json = fs::read_to_string(dir.path().join("out/medians-3/result.json")).unwrap();
    let record: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(record["workers"], 4);
    assert_eq!(record["schema_version"], 1);
}

#[test]
fn medians_rows_match_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = randwave("[medians]\nmanifold = sphere\ndegree = 10\nq = 4\ntrials = 2000\nseed = 7\n", dir.path(), &[], &[]);
    assert!(out.status.success());
    let text = csv(dir.path(), "medians-7");
    let want = a_qh_closed_form(4.0, &SpectralBlock::sphere_degree(2, 10).unwrap(), Field::Complex).unwrap();
    let row = text.lines().find(|l| l.starts_with("closed_form_A_qh,")).unwrap();
    let value: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(value, want);
    let median: f64 = text.lines().find(|l| l.starts_with("mc_median,")).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((median / want - 1.0).abs() < 0.02, "median {median} vs A {want}");
}

#[test]
fn kakutani_identical_specs() {
    let dir = tempfile::tempdir().unwrap();
    let out = randwave("[kakutani]\nperturbation = identical\n", dir.path(), &["--seed", "2"], &[]);
    assert!(out.status.success());
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/kakutani-2/result.json")).unwrap()).unwrap();
    assert_eq!(record["report"]["verdict"], "equivalent");
    assert_eq!(record["report"]["partial_product"], 1.0);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["[tails]\ntrials = -5\n", "[tails]\nbogus = 1\n", "trials = 3\n", "[tails]\ndegree\n"] {
        let out = randwave(bad, dir.path(), &[], &[]);
        assert_eq!(out.status.code(), Some(1), "{bad}");
        assert!(!dir.path().join("out").exists());
    }
    let out = randwave("[tails]\ntrials = -5\n", dir.path(), &[], &[]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials must be positive"));
    let out = Command::new(env!("CARGO_BIN_EXE_randwave")).arg(dir.path().join("missing.ini")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invariant_failures_exit_with_two_and_leave_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = randwave("[sphere-basis]\ndegrees = 4\ntolerance = 0\nseed = 1\n", dir.path(), &[], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out/sphere-basis-1").exists());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = randwave(TINY, dir.path(), &["--seed", "9", "--trials", "150"], &[]);
    assert!(out.status.success());
    let record: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/tails-9/result.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["trials"], "150");
    assert_eq!(record["config"]["seed"], "9");
}
