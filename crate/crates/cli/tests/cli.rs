use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ksearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksearch"))
        .args(args)
        .env_remove("KSEARCH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// Header and numeric rows of a CSV written by the tool.
fn read_csv(file: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(file).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|c| c.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    (header, rows)
}

fn read_json(file: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap()
}

#[test]
fn overlay_of_reduced_and_sparse_engines() {
    let dir = tempfile::tempdir().unwrap();
    let out = ksearch(&[
        "fidelity",
        "--n",
        "10",
        "--k",
        "2",
        "--all-to-all",
        "--gamma",
        "0.1",
        "--engine",
        "both",
        "--out",
        &path(dir.path(), "overlay"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("overlay.csv"));
    assert_eq!(header, ["t", "fidelity_reduced", "fidelity_sparse"]);
    assert_eq!(rows.len(), 2000);
    for r in &rows {
        assert!((r[1] - r[2]).abs() <= 1e-8);
    }
    let json = read_json(&dir.path().join("overlay.json"));
    assert_eq!(json["manifest"]["command"], "fidelity");
    assert_eq!(json["result"]["series"].as_array().unwrap().len(), 2);
    assert!(json["result"]["engine_gap"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn long_range_run_records_optimal_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = path(dir.path(), "lr");
    let missing = ksearch(&[
        "fidelity",
        "--n",
        "12",
        "--k",
        "3",
        "--alpha",
        "1.0",
        "--optimize-gamma",
        "auto",
        "--out",
        &prefix,
    ]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--marked"));

    let out = ksearch(&[
        "fidelity",
        "--n",
        "12",
        "--k",
        "3",
        "--alpha",
        "1.0",
        "--marked",
        "1,5,9",
        "--optimize-gamma",
        "auto",
        "--points",
        "400",
        "--out",
        &prefix,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json = read_json(&dir.path().join("lr.json"));
    let opt = &json["result"]["optimum"];
    let gamma = opt["gamma"].as_f64().unwrap();
    let value = opt["value"].as_f64().unwrap();
    assert!(gamma > 0.0 && (0.0..=1.0).contains(&value));
    assert_eq!(
        json["manifest"]["params"]["marked"],
        serde_json::json!([1, 5, 9])
    );
    assert_eq!(json["manifest"]["params"]["coupling"]["alpha"], 1.0);
    let csv = fs::read_to_string(dir.path().join("lr.csv")).unwrap();
    assert!(csv.contains("# gamma_optimal="));
    assert!(csv.contains("# marked=1 5 9"));
}

#[test]
fn zero_hopping_gives_a_flat_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = ksearch(&[
        "fidelity",
        "--n",
        "4",
        "--k",
        "1",
        "--gamma",
        "0",
        "--out",
        &path(dir.path(), "flat"),
    ]);
    assert_eq!(code(&out), 0);
    let (_, rows) = read_csv(&dir.path().join("flat.csv"));
    assert!(rows.iter().all(|r| (r[1] - 0.25).abs() < 1e-14));
}

#[test]
fn asymptotic_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let out = ksearch(&[
        "asymptotic",
        "--kmax",
        "10",
        "--points",
        "501",
        "--out",
        &path(dir.path(), "a"),
    ]);
    assert_eq!(code(&out), 0);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    let (header, rows) = read_csv(&dir.path().join("a_table.csv"));
    assert_eq!(header, ["k", "max_fidelity", "tau_star"]);
    assert_eq!(rows.len(), 10);
    assert!((rows[0][1] - 1.0).abs() < 1e-9 && (rows[0][2] - PI / 2.0).abs() < 1e-6);
    assert!((rows[1][1] - 8.0 / 9.0).abs() < 1e-9 && (rows[1][2] - PI / 6f64.sqrt()).abs() < 1e-6);
    let (header, curves) = read_csv(&dir.path().join("a_curves.csv"));
    assert_eq!(header.len(), 11);
    assert_eq!(curves.len(), 501);
    assert!(curves.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn protocol_table_and_coverage_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = ksearch(&[
        "protocol",
        "--k-range",
        "1:5",
        "--n-range",
        "20,40,inf",
        "--eps-s",
        "0.01",
        "--out",
        &path(dir.path(), "p"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "k,n,N_k,s_k,r_k,t_1subspace,t_ksubspace,ratio");
    let rows: Vec<Vec<&str>> = body[1..].iter().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 15);
    let large: Vec<&Vec<&str>> = rows.iter().filter(|r| r[1].is_empty()).collect();
    let s: Vec<&str> = large.iter().map(|r| r[3]).collect();
    assert_eq!(s, ["1", "8", "15", "21", "28"]);
    let ratios: Vec<f64> = large.iter().map(|r| r[7].parse().unwrap()).collect();
    assert!((ratios[0] - 1.0).abs() < 1e-6);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
    let finite = rows.iter().find(|r| r[0] == "2" && r[1] == "20").unwrap();
    assert_eq!(finite[2], "190");
    for r in rows.iter().filter(|r| r[0] == "1" && !r[1].is_empty()) {
        assert!((r[7].parse::<f64>().unwrap() - 1.0).abs() < 0.05);
    }
}

#[test]
fn identical_manifests_give_identical_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = path(dir.path(), name);
        ksearch(&[
            "fidelity",
            "--n",
            "9",
            "--k",
            "3",
            "--alpha",
            "1.3",
            "--marked",
            "2,4,7",
            "--gamma",
            "0.1234567",
            "--points",
            "300",
            "--out",
            &out,
        ])
    };
    assert_eq!(code(&run("a")), 0);
    assert_eq!(code(&run("b")), 0);
    let body = |f: &str| {
        let t = fs::read_to_string(dir.path().join(f)).unwrap();
        t.lines()
            .filter(|l| !l.starts_with("# manifest="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body("a.csv"), body("b.csv"));

    let a_csv = path(dir.path(), "a.csv");
    assert_eq!(code(&ksearch(&["replay", &a_csv, "--check"])), 0);
    let replayed = ksearch(&["replay", &a_csv, "--out", &path(dir.path(), "c")]);
    assert_eq!(code(&replayed), 0);
    assert_eq!(body("a.csv"), body("c.csv"));

    let tampered = fs::read_to_string(dir.path().join("a.csv"))
        .unwrap()
        .replace("\n0.0,", "\n0.0,0.5");
    fs::write(dir.path().join("a.csv"), tampered).unwrap();
    assert_eq!(code(&ksearch(&["replay", &a_csv, "--check"])), 1);
}

#[test]
fn quick_verification_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = ksearch(&[
        "verify",
        "--quick",
        "--seed",
        "7",
        "--out",
        &path(dir.path(), "v"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let json = read_json(&dir.path().join("v.json"));
    let checks = json["report"]["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    for c in checks {
        assert!(c["name"].is_string() && c["tolerance"].is_number() && c["observed"].is_number());
        assert_eq!(c["pass"], true);
    }
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("replay_")).count(), 3);
    assert_eq!(json["report"]["passed"], true);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ksearch"))
        .args([
            "fidelity", "--n", "6", "--k", "2", "--gamma", "0.2", "--points", "50",
        ])
        .env("KSEARCH_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(dir.path().join("fidelity_n6_k2.csv").exists());
    assert!(dir.path().join("fidelity_n6_k2.json").exists());
}

#[test]
fn config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"n": 8, "k": 2, "gamma": 0.5, "points": 64, "engine": "both", "jobs": 1}"#,
    )
    .unwrap();
    let out = ksearch(&[
        "--config",
        &cfg.to_string_lossy(),
        "fidelity",
        "--gamma",
        "0.2",
        "--out",
        &path(dir.path(), "c"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let params = &read_json(&dir.path().join("c.json"))["manifest"]["params"];
    assert_eq!(params["n"], 8);
    assert_eq!(params["points"], 64);
    assert_eq!(params["gamma"]["value"], 0.2);
    assert_eq!(params["engines"], serde_json::json!(["reduced", "sparse"]));

    fs::write(&cfg, r#"{"n": 8, "kk": 2}"#).unwrap();
    let bad = ksearch(&[
        "--config",
        &cfg.to_string_lossy(),
        "fidelity",
        "--gamma",
        "0.2",
    ]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn exit_codes_separate_failure_kinds() {
    let dir = tempfile::tempdir().unwrap();
    // validation
    assert_eq!(code(&ksearch(&["fidelity", "--n", "5"])), 2);
    assert_eq!(
        code(&ksearch(&[
            "fidelity", "--n", "6", "--k", "2", "--alpha", "1", "--marked", "1,2", "--gamma",
            "0.1", "--engine", "reduced"
        ])),
        2
    );
    assert_eq!(code(&ksearch(&["protocol", "--eps-r", "0"])), 2);
    assert_eq!(
        code(&ksearch(&["protocol", "--k-range", "5", "--n-range", "6"])),
        2
    );
    // numerical: the k = 1 peak at pi/2 lies beyond the window
    let small = ksearch(&[
        "asymptotic",
        "--kmax",
        "1",
        "--tau-max",
        "0.5",
        "--out",
        &path(dir.path(), "s"),
    ]);
    assert_eq!(code(&small), 3);
    // I/O
    assert_eq!(
        code(&ksearch(&["replay", &path(dir.path(), "missing.csv")])),
        4
    );
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = ksearch(&[
        "fidelity",
        "--n",
        "4",
        "--k",
        "1",
        "--gamma",
        "0.1",
        "--out",
        &path(&blocker, "x"),
    ]);
    assert_eq!(code(&out), 4);
}

#[test]
fn worker_pool_size_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    for (jobs, name) in [("1", "one"), ("3", "three")] {
        let out = ksearch(&[
            "--jobs",
            jobs,
            "protocol",
            "--k-range",
            "1:3",
            "--n-range",
            "12,30,inf",
            "--out",
            &path(dir.path(), name),
        ]);
        assert_eq!(code(&out), 0);
    }
    let body = |f: &str| ksearch_body(&dir.path().join(f));
    assert_eq!(body("one.csv"), body("three.csv"));
}

fn ksearch_body(file: &Path) -> String {
    fs::read_to_string(file)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
