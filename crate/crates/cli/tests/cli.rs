use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn globalvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_globalvote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

const SMALL: [&str; 6] = ["--n", "300", "--transient-mcs", "10", "--measure-mcs", "300"];

#[test]
fn run_writes_artifact_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let mut args = vec!["run", "--out", out, "--run-id", "r1", "--seed", "4", "--bins", "21"];
    args.extend(SMALL);
    let o = globalvote(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("r1");
    for f in [
        "config.json",
        "magnetization.csv",
        "returns.csv",
        "acf.csv",
        "hist.csv",
        "ecdf.csv",
        "qq.csv",
        "fit_student_t.json",
        "fit_gaussian.json",
        "fit_exp.json",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(dir.join("hist.csv")).unwrap().lines().count(), 22);
    let config = fs::read_to_string(dir.join("config.json")).unwrap();
    assert!(config.contains("\"n\": 300") && config.contains("\"seed\": 4"));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(
        &cfg,
        "[simulation]\nn = 250\nmeasure_mcs = 100\ntransient_mcs = 5\nq = 0.3\n",
    )
    .unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = globalvote(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--q",
        "0.2",
        "--out",
        out,
        "--run-id",
        "x",
    ]);
    assert!(o.status.success());
    let config = fs::read_to_string(tmp.path().join("x/config.json")).unwrap();
    assert!(config.contains("\"n\": 250") && config.contains("\"q\": 0.2,"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(globalvote(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(globalvote(&["run", "--n", "many"]).status.code(), Some(1));
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[simulation]\nwat = 1\n").unwrap();
    assert_eq!(
        globalvote(&["run", "--config", bad.to_str().unwrap()]).status.code(),
        Some(1)
    );
    assert_eq!(globalvote(&["run", "--config", "/no/such.toml"]).status.code(), Some(1));
    assert_eq!(globalvote(&["run", "--f", "1.5"]).status.code(), Some(1));
    let out = tmp.path().to_str().unwrap();
    let o = globalvote(&["sweep", "--mean-degrees", "7", "--out", out, "--run-id", "s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!tmp.path().join("s").exists());
    assert_eq!(globalvote(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let flat = tmp.path().join("flat.csv");
    fs::write(
        &flat,
        "Date,Close\n2020-01-01,5\n2020-01-02,5\n2020-01-03,5\n2020-01-06,5\n2020-01-07,5\n",
    )
    .unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(
        globalvote(&["analyze", flat.to_str().unwrap(), "--out", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        globalvote(&["analyze", "/no/such.csv", "--out", out]).status.code(),
        Some(2)
    );
}

fn dir_contents(root: &Path) -> Vec<(String, String)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, fs::read_to_string(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn sweep_output_ignores_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let mut base = vec![
        "sweep",
        "--out",
        out,
        "--mean-degrees",
        "6,8",
        "--fractions",
        "0.2,0.7",
        "--seed",
        "3",
    ];
    base.extend(SMALL);
    for (id, workers) in [("w1", "1"), ("w4", "4")] {
        let mut args = base.clone();
        args.extend(["--run-id", id, "--workers", workers]);
        let o = globalvote(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = dir_contents(&tmp.path().join("w1"));
    assert_eq!(a.len(), 1 + 4 * 12);
    assert_eq!(a, dir_contents(&tmp.path().join("w4")));
    let manifest = fs::read_to_string(tmp.path().join("w1/manifest.json")).unwrap();
    assert_eq!(manifest.matches("\"status\": \"done\"").count(), 4);
    assert!(manifest.contains("\"q\": 0.275"));
}

#[test]
fn analyze_price_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = globalvote(&[
        "analyze",
        &fixture("sp500_daily.csv"),
        "--date-format",
        "%m/%d/%Y",
        "--out",
        out,
        "--run-id",
        "spx",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = fs::read_to_string(tmp.path().join("spx/fit_student_t.json")).unwrap();
    assert!(fit.contains("\"status\": \"ok\"") && fit.contains("\"nu\""));
}

#[test]
fn graph_check_command() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let o = globalvote(&[
        "graph-check",
        "--out",
        out,
        "--run-id",
        "g",
        "--n",
        "1000",
        "--networks",
        "2",
        "--mean-degrees",
        "6,8",
    ]);
    assert!(o.status.success());
    let csv = fs::read_to_string(tmp.path().join("g/degree_distribution.csv")).unwrap();
    assert!(csv.lines().skip(1).any(|l| l.starts_with("8,")));
}
