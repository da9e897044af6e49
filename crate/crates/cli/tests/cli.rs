use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rigidmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidmix"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

/// Drops `#` provenance lines so contents compare across versions.
fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

const HALF_RIGID: &str = r#"
seed = 5
output = "half"

[caps]
q_cap = 4

[build]
kind = "half_rigid"
segments = 1
epsilon = { first = "9/10", ratio = "97/100", bound = "100" }
set = { kind = "complement", of = { kind = "geometric_intervals", base = 2, period = 2 } }
"#;

const STAIRCASE: &str = r#"
output = "stair"

[build]
kind = "staircase"
depth = 6

[analyze]
plan = "stair/plan.toml"
set = { kind = "squares" }
window = [1, 10000]
a = { stage = 1, runs = [[0, 1]] }
b = { stage = 1, runs = [[1, 3]] }
k = "3/2"
"#;

fn setup(config: &str) -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), config).unwrap();
    dir
}

#[test]
fn half_rigid_build_writes_a_plan_and_a_report() {
    let dir = setup(HALF_RIGID);
    let out = rigidmix(dir.path(), &["build", "-c", "run.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = read(dir.path().join("half/plan.toml"));
    let report = read(dir.path().join("half/build_report.toml"));
    assert!(plan.starts_with("# rigidmix "));
    assert!(plan.contains("seed 5"));
    assert!(report.contains("kind = \"half_rigid\""));
    assert!(report.contains("[[rounds]]"));

    // Same config, byte-identical files.
    let again = rigidmix(dir.path(), &["build", "-c", "run.toml", "-o", "again"]);
    assert_eq!(code(&again), 0);
    assert_eq!(body(&plan), body(&read(dir.path().join("again/plan.toml"))));
    assert_eq!(body(&report), body(&read(dir.path().join("again/build_report.toml"))));
}

#[test]
fn zero_segments_gives_a_staircase_plan() {
    let dir = setup(HALF_RIGID);
    let out = rigidmix(dir.path(), &["build", "-c", "run.toml", "--segments", "0", "--depth", "4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let plan = read(dir.path().join("half/plan.toml"));
    assert_eq!(plan.matches("spacers = \"staircase\"").count(), 4, "{plan}");
    assert!(plan.contains("rigid_times = []"));
}

#[test]
fn staircase_plan_matches_the_golden_file() {
    let dir = setup(STAIRCASE);
    let out = rigidmix(dir.path(), &["build", "-c", "run.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let golden = read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/staircase_plan.toml"));
    assert_eq!(body(&read(dir.path().join("stair/plan.toml"))), golden);
}

#[test]
fn malformed_configs_exit_with_code_two() {
    let dir = setup("[build]\nkind = \"half_rigid\"\nsegments = \"two\"\n");
    let out = rigidmix(dir.path(), &["build", "-c", "run.toml"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("segments"), "{}", stderr(&out));

    let dir = setup("[caps]\nq_cap = 0\n[build]\nkind = \"staircase\"\n");
    let out = rigidmix(dir.path(), &["build", "-c", "run.toml"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("caps.q_cap"));

    let out = rigidmix(dir.path(), &["analyze"]);
    assert_eq!(code(&out), 2);
    let out = rigidmix(dir.path(), &["build", "--kind", "nonsense"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn analyze_writes_sorted_csv_summary_and_plot() {
    let dir = setup(STAIRCASE);
    assert_eq!(code(&rigidmix(dir.path(), &["build", "-c", "run.toml"])), 0);
    let out = rigidmix(dir.path(), &["analyze", "-c", "run.toml"]);
    assert!(code(&out) <= 1, "{}", stderr(&out));
    let csv = read(dir.path().join("stair/correlations.csv"));
    let rows: Vec<i64> = body(&csv)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(!rows.is_empty());
    assert!(rows.windows(2).all(|w| w[0] < w[1]));
    assert!(rows.iter().all(|&n| (n as f64).sqrt().fract() == 0.0));
    let header = body(&csv).lines().next().unwrap().to_string();
    assert_eq!(header, "n,value_num,value_den,err_num,err_den");
    let summary = read(dir.path().join("stair/summary.toml"));
    assert!(summary.contains("config_hash"));
    assert!(summary.contains("[k_bound]"));
    assert!(read(dir.path().join("stair/decay.svg")).contains("<polyline"));

    // An identical run rewrites byte-identical files.
    let again = rigidmix(dir.path(), &["analyze", "-c", "run.toml"]);
    assert_eq!(code(&again), code(&out));
    assert_eq!(csv, read(dir.path().join("stair/correlations.csv")));
    assert_eq!(summary, read(dir.path().join("stair/summary.toml")));
}

#[test]
fn empty_and_clipped_windows_are_reported() {
    let dir = setup(STAIRCASE);
    assert_eq!(code(&rigidmix(dir.path(), &["build", "-c", "run.toml"])), 0);

    let out = rigidmix(dir.path(), &["analyze", "-c", "run.toml", "--window", "2,3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("no points"));
    assert_eq!(body(&read(dir.path().join("stair/correlations.csv"))).lines().count(), 1);
    assert!(read(dir.path().join("stair/summary.toml")).contains("vacuous = true"));

    let out = rigidmix(dir.path(), &["analyze", "-c", "run.toml", "--window", "1,1000000000000"]);
    assert!(stdout(&out).starts_with("warning: window"), "{}", stdout(&out));
    assert!(read(dir.path().join("stair/summary.toml")).contains("truncated = true"));
}

#[test]
fn realize_reports_heights_and_budget_overruns() {
    let dir = setup(STAIRCASE);
    assert_eq!(code(&rigidmix(dir.path(), &["build", "-c", "run.toml"])), 0);
    let out = rigidmix(dir.path(), &["realize", "--plan", "stair/plan.toml", "--depth", "3", "-o", "real"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = read(dir.path().join("real/realization.toml"));
    assert!(text.contains("heights = [1, 3, 12, 54]"), "{text}");

    let out = rigidmix(dir.path(), &["realize", "--plan", "stair/plan.toml", "--realize-budget", "100"]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let out = rigidmix(dir.path(), &["realize", "--plan", "stair/plan.toml", "--depth", "99"]);
    assert_eq!(code(&out), 2);
}

const RIESZ: &str = r#"
output = "riesz"
seed = 11

[spectral]
measure = { freqs = [5, 125, 3125, 78125], coeffs = ["1/2", "1/2", "1/2", "1/2"] }
window = [0, 10000]
along = { kind = "squares" }
"#;

#[test]
fn spectral_table_is_exact() {
    let dir = setup(RIESZ);
    let out = rigidmix(dir.path(), &["spectral", "-c", "run.toml"]);
    assert!(code(&out) <= 1, "{}", stderr(&out));
    let csv = body(&read(dir.path().join("riesz/coefficients.csv")));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "m,re_num,re_den,im_num,im_den,word_length");
    assert_eq!(rows[1], "0,1,1,0,1,0");
    assert_eq!(rows[1 + 5], "5,1,2,0,1,1");
    assert_eq!(rows[1 + 130], "130,1,4,0,1,2");
    assert_eq!(rows[1 + 7], "7,0,1,0,1,");
    assert_eq!(rows.len(), 1 + 10_001);
    let summary = read(dir.path().join("riesz/spectral.toml"));
    assert!(summary.contains("[verdict]"));
}

#[test]
fn gaussian_samples_follow_the_seed() {
    let dir = setup(RIESZ);
    let args = ["spectral", "-c", "run.toml", "--window", "0,10", "--gaussian-length", "500"];
    assert!(code(&rigidmix(dir.path(), &args)) <= 1);
    let first = read(dir.path().join("riesz/sample.csv"));
    assert!(code(&rigidmix(dir.path(), &[&args[..], &["-o", "again"]].concat())) <= 1);
    assert_eq!(body(&first), body(&read(dir.path().join("again/sample.csv"))));
    assert!(code(&rigidmix(dir.path(), &[&args[..], &["-o", "other", "--seed", "12"]].concat())) <= 1);
    assert_ne!(body(&first), body(&read(dir.path().join("other/sample.csv"))));
    assert!(first.contains("seed 11"));
}

#[test]
fn sets_verdicts_set_the_exit_code() {
    let config = r#"
output = "sets"
[sets]
set = { kind = "geometric_intervals", base = 2, period = 2 }
window = [0, 1048576]
radius = 8
factor = 2
"#;
    let dir = setup(config);
    let out = rigidmix(dir.path(), &["sets", "-c", "run.toml"]);
    assert_eq!(code(&out), 0, "{}{}", stdout(&out), stderr(&out));
    assert!(read(dir.path().join("sets/sets.toml")).contains("center = "));

    let out = rigidmix(dir.path(), &["sets", "-c", "run.toml", "--window", "0,20"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("no 1-fold grid"));
}
