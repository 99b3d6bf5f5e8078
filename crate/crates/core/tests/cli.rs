use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semirandom")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_matching_prints_transcript() {
    let o = cli(&["run-matching", "--n", "999", "--profile", "desk", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outcome"], "Success");
    assert_eq!(v["n"], 999);
    assert_eq!(v["structure"].as_array().unwrap().len(), 333);
}

#[test]
fn odd_n_hamilton_is_a_usage_error() {
    let o = cli(&["run-hamilton", "--n", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not divisible"));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&["run-matching", "--n", "999", "--r", "3"]).status.code(), Some(2));
}

#[test]
fn params_reports_builder_constants() {
    let o = cli(&["params", "--k", "10", "--eps", "1e-5"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lambda = v["lambda"].as_f64().unwrap();
    assert!(lambda > 37.0 && lambda < 38.0);
    assert!(v["C"].as_f64().unwrap() < 80.0);
    assert!(v["k_eta"].as_f64().unwrap() <= 0.1);
}

#[test]
fn sweep_csv_is_stable_across_thread_counts() {
    let args = ["sweep", "--task", "matching", "--n", "999,1998", "--seeds", "1-4"];
    let one = Command::new(env!("CARGO_BIN_EXE_semirandom")).args(args).env("SEMIRANDOM_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_semirandom")).args(args).env("SEMIRANDOM_THREADS", "4").output().unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed,n,s,r,outcome,rounds_total,rounds_ignored,phase1_rounds,phase2_actions,wallclock_ms");
    assert_eq!(lines.len(), 9);
    assert!(lines[1].starts_with("1,999,3,2,Success,"));
    assert!(lines[5].starts_with("1,1998,3,2,Success,"));
}

#[test]
fn empty_sweep_and_output_file() {
    let dir = std::env::temp_dir().join(format!("semirandom-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("rows.csv");
    let o = cli(&["sweep", "--task", "hamilton", "--n", "1000", "--seeds", "", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn audit_passes_with_small_sizes() {
    let o = cli(&["audit", "--n-side", "5000", "--seeds", "3", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let checks: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["pass"] == true));
}

#[test]
fn profile_file_is_accepted() {
    let dir = std::env::temp_dir().join(format!("semirandom-profile-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("stress.toml");
    std::fs::write(
        &path,
        "name = \"custom\"\nk = 10\neps_d = 0.01\neps_q = 0.1\nc = 30.0\nsurplus = 0.001\nbudget_slack = 2.0\nretries = 3\n",
    )
    .unwrap();
    let o = cli(&["run-hamilton", "--n", "2000", "--profile", path.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().nth(1).unwrap().contains(",Success,"));
    std::fs::remove_dir_all(&dir).unwrap();
}
