use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mopul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mopul"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let mut args = vec!["generate", "--out", s(dir)];
    args.extend_from_slice(extra);
    let o = mopul(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("problem.json")
}

fn solve(problem: &Path, out: &Path, form: &str) -> (Output, Value) {
    let o = mopul(&["solve", s(problem), "--form", form, "--out", s(out)]);
    let sol = json(&out.join("solution.json"));
    (o, sol)
}

#[test]
fn generate_is_byte_reproducible_and_writes_manifest() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "--preset", "amopul1", "--n", "5", "--N", "4", "--seed", "7", "--sigma", "0.1",
    ];
    let a = generate(&tmp.path().join("a"), &args);
    let b = generate(&tmp.path().join("b"), &args);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(tmp.path().join("a/references.csv")).unwrap(),
        fs::read(tmp.path().join("b/references.csv")).unwrap()
    );
    let problem = json(&a);
    assert_eq!(problem["system"]["x0"].as_array().unwrap().len(), 5);
    assert_eq!(problem["system"]["references"].as_array().unwrap().len(), 4);
    let manifest = json(&tmp.path().join("a/manifest.json"));
    assert_eq!(manifest["command"], "generate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 3);
    assert!(manifest["tool_version"].is_string() && manifest["wall_time_secs"].is_number());

    let c = generate(
        &tmp.path().join("c"),
        &[
            "--preset", "amopul1", "--n", "5", "--N", "4", "--seed", "8", "--sigma", "0.1",
        ],
    );
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn zero_noise_solves_to_zero_level_in_both_forms() {
    let tmp = TempDir::new().unwrap();
    let problem = generate(
        &tmp.path().join("gen"),
        &["--preset", "amopul1", "--n", "5", "--N", "4", "--seed", "7"],
    );
    let (o, soc) = solve(&problem, &tmp.path().join("soc"), "soc");
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("status      optimal"));
    let (o, lmi) = solve(&problem, &tmp.path().join("lmi"), "lmi");
    assert_eq!(code(&o), 0);
    let (vs, vl) = (
        soc["objective"].as_f64().unwrap(),
        lmi["objective"].as_f64().unwrap(),
    );
    assert!(vs <= 1e-6 && vl <= 1e-6);
    assert!((vs - vl).abs() <= 1e-6 * vs.abs().max(1.0));
    assert_eq!(soc["a"].as_array().unwrap().len(), 5);
    assert_eq!(soc["u"].as_array().unwrap().len(), 4);
}

#[test]
fn noisy_forms_agree_and_solution_validates() {
    let tmp = TempDir::new().unwrap();
    let problem = generate(
        &tmp.path().join("gen"),
        &[
            "--preset", "amopul1", "--n", "4", "--N", "5", "--seed", "3", "--sigma", "0.8",
        ],
    );
    let (_, soc) = solve(&problem, &tmp.path().join("soc"), "soc");
    let (_, lmi) = solve(&problem, &tmp.path().join("lmi"), "lmi");
    let (vs, vl) = (
        soc["objective"].as_f64().unwrap(),
        lmi["objective"].as_f64().unwrap(),
    );
    assert!(vs > 1e-3);
    assert!((vs - vl).abs() <= 1e-6 * vs.abs().max(1.0), "{vs} vs {vl}");

    let o = mopul(&[
        "validate",
        "--problem",
        s(&problem),
        "--solution",
        s(&tmp.path().join("soc/solution.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("all constraints satisfied"));
}

#[test]
fn corrupted_matrix_entry_fails_validation_by_name() {
    let tmp = TempDir::new().unwrap();
    let problem = generate(
        &tmp.path().join("gen"),
        &[
            "--preset", "amopul1", "--n", "3", "--N", "3", "--seed", "2", "--sigma", "0.2",
        ],
    );
    let (_, mut sol) = solve(&problem, &tmp.path().join("sol"), "soc");
    sol["a"][1][2] = Value::from(5.0);
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&sol).unwrap()).unwrap();
    let out = tmp.path().join("report");
    let o = mopul(&[
        "validate",
        "--problem",
        s(&problem),
        "--solution",
        s(&bad),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 5);
    assert!(
        stdout(&o)
            .lines()
            .any(|l| l.starts_with("FAIL") && l.contains("a_box")),
        "{}",
        stdout(&o)
    );
    let report = json(&out.join("validation.json"));
    assert_eq!(report["satisfied"], false);
}

#[test]
fn fixed_level_validation_checks_cumulative_error() {
    let tmp = TempDir::new().unwrap();
    let problem = generate(
        &tmp.path().join("gen"),
        &[
            "--preset",
            "amopul2",
            "--n",
            "3",
            "--N",
            "4",
            "--seed",
            "5",
            "--sigma",
            "0.3",
            "--omega-tilde",
            "0.5",
            "--omega-t",
            "0.3",
        ],
    );
    let (o, mut sol) = solve(&problem, &tmp.path().join("sol"), "soc");
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let solution = tmp.path().join("sol/solution.json");
    let o = mopul(&[
        "validate",
        "--problem",
        s(&problem),
        "--solution",
        s(&solution),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("approximate_cumulative_error"));

    // controls pinned to zero leave the noise unabsorbed, so the level is exceeded
    for u in sol["u"].as_array_mut().unwrap() {
        for v in u.as_array_mut().unwrap() {
            *v = Value::from(0.0);
        }
    }
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&sol).unwrap()).unwrap();
    let o = mopul(&["validate", "--problem", s(&problem), "--solution", s(&bad)]);
    assert_eq!(code(&o), 5);
}

#[test]
fn unreachable_pinned_references_exit_infeasible_with_certificate() {
    let tmp = TempDir::new().unwrap();
    let problem = generate(
        &tmp.path().join("gen"),
        &[
            "--preset",
            "amopul2",
            "--n",
            "2",
            "--N",
            "4",
            "--seed",
            "17",
            "--sigma",
            "0.3",
            "--omega-tilde",
            "0",
            "--omega-t",
            "0",
        ],
    );
    for form in ["soc", "lmi"] {
        let (o, sol) = solve(&problem, &tmp.path().join(form), form);
        assert_eq!(code(&o), 3, "{}", stdout(&o));
        assert_eq!(sol["status"], "primal_infeasible");
        assert!(sol["certificate"]["residual"].as_f64().unwrap() <= 1e-6);
        assert!(sol.get("a").is_none());
    }
    let o = mopul(&[
        "validate",
        "--problem",
        s(&problem),
        "--solution",
        s(&tmp.path().join("soc/solution.json")),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn malformed_problem_reports_line() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.json");
    fs::write(&path, "{\n  \"system\": {\n    \"b\": [[1.0]],,\n  }\n}\n").unwrap();
    let o = mopul(&["solve", s(&path), "--out", s(&tmp.path().join("out"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn bounds_command() {
    let o = mopul(&[
        "bounds",
        "--theorem",
        "t3",
        "--beta",
        "1",
        "--N",
        "4",
        "--omega-c",
        "8",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "2");

    let o = mopul(&["bounds", "--theorem", "t3", "--N", "4", "--omega-c", "8"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--beta"));

    let o = mopul(&[
        "bounds",
        "--theorem",
        "t4",
        "--eps",
        "0,0,0",
        "--gamma",
        "0.7",
    ]);
    assert_eq!(stdout(&o).trim(), "0");

    let tmp = TempDir::new().unwrap();
    let problem = generate(
        &tmp.path().join("gen"),
        &[
            "--preset",
            "amopul1",
            "--n",
            "3",
            "--N",
            "4",
            "--seed",
            "4",
            "--sigma",
            "0.5",
            "--a-bound",
            "0.15",
        ],
    );
    let (o, _) = solve(&problem, &tmp.path().join("sol"), "soc");
    assert_eq!(code(&o), 0);
    let solution = tmp.path().join("sol/solution.json");
    let out = tmp.path().join("cert");
    let o = mopul(&[
        "bounds",
        "--theorem",
        "t2",
        "--problem",
        s(&problem),
        "--solution",
        s(&solution),
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let cert = json(&out.join("certificate.json"));
    assert_eq!(cert["holds"], true);
    assert_eq!(cert["preconditions_met"], true);
    assert!((cert["inputs"]["beta"].as_f64().unwrap() - 0.45).abs() <= 1e-12);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn experiment_rejects_unknown_table() {
    let tmp = TempDir::new().unwrap();
    let o = mopul(&["experiment", "--table", "4", "--out", s(tmp.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown table"));
}

#[test]
fn experiment_csv_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let run = |dir: &str, threads: &str| {
        let out = tmp.path().join(dir);
        let o = mopul(&[
            "experiment",
            "--table",
            "2",
            "--scale",
            "desk",
            "--seed",
            "1",
            "--instances",
            "1",
            "--threads",
            threads,
            "--out",
            s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let a = run("a", "1");
    let b = run("b", "2");
    for f in [
        "summary.csv",
        "raw.csv",
        "plots/table2_REA.dat",
        "plots/table2_ACE.dat",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary
        .starts_with("table,cell,mu,sigma,omega_tilde,omega_t,metric,mean,std,count,failures\n"));
    assert_eq!(summary.lines().count(), 1 + 9 * 2);
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["config"]["run"]["n"], 20);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 4);
}
