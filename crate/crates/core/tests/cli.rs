use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curlforce"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(cmd: &str, problem_file: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, problem_file.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not a report ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

#[test]
fn classify_shipped_planar_problem() {
    let out = run_in("classify", &problem("berry2d.json"), &["--region", "r1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["command"], "classify");
    assert_eq!(r["results"]["class"], "two-potential");
    assert_eq!(r["results"]["samples"], 200);
}

#[test]
fn verify_passes_and_failing_assertion_exits_4() {
    let p = problem("berry2d.json");
    let ok = run_in("verify", &p, &["--assert-residual", "1e-8"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert_eq!(report(&ok)["assertions"][0]["passed"], true);

    let strict = run_in("verify", &p, &["--assert-residual", "0"]);
    assert_eq!(strict.status.code(), Some(4));
    assert_eq!(report(&strict)["assertions"][0]["passed"], false);
}

#[test]
fn square_loop_work() {
    let p = problem("berry2d.json");
    let out = run_in(
        "work",
        &p,
        &[
            "--path",
            "square",
            "--assert-value",
            "-0.5",
            "--tol",
            "1e-6",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rev = run_in(
        "work",
        &p,
        &["--path", "square", "--reverse", "--assert-value", "0.5"],
    );
    assert_eq!(rev.status.code(), Some(0), "{}", stderr(&rev));
    let stokes = run_in(
        "stokes",
        &p,
        &["--path", "square", "--assert-value", "-0.5"],
    );
    assert_eq!(stokes.status.code(), Some(0), "{}", stderr(&stokes));
    let wrong = run_in("work", &p, &["--path", "square", "--assert-value", "0.5"]);
    assert_eq!(wrong.status.code(), Some(4));
}

#[test]
fn triple_problem_commands() {
    let p = problem("triple3d.json");
    let out = run_in("classify", &p, &["--region", "r1"]);
    assert_eq!(report(&out)["results"]["class"], "two-potential");

    let out = run_in("verify", &p, &["--assert-residual", "1e-12"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = run_in(
        "decompose3d",
        &p,
        &["--region", "r1", "--assert-curl", "1e-6"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["results"]["decompositions"].as_array().unwrap().len(), 2);
    assert_eq!(r["results"]["equivalence"].as_array().unwrap().len(), 1);

    let out = run_in(
        "characteristics",
        &p,
        &["--x0", "1,1,1", "--assert-deviation", "1e-8"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run_in(
        "characteristics",
        &p,
        &["--x0", "1,1,1", "--v", "x", "--assert-deviation", "1e-8"],
    );
    assert_eq!(out.status.code(), Some(4));

    let out = run_in("stokes", &p, &["--path", "tilted"]);
    let r = report(&out);
    let (s, l) = (
        r["results"]["surface"]["value"].as_f64().unwrap(),
        r["results"]["line"]["value"].as_f64().unwrap(),
    );
    assert!((s - l).abs() <= 1e-9, "{s} {l}");
}

#[test]
fn simulate_writes_trajectory_then_reports_domain_exit() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    let out = run_in(
        "simulate",
        &problem("berry2d.json"),
        &[
            "--x0",
            "1,1",
            "--v0",
            "0.1,-0.1",
            "--t-end",
            "2",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    // The orbit leaves [0.05, 5]^2 through y = 0.05 before t = 2.
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("left the domain"), "{}", stderr(&out));
    assert_eq!(
        first_line(&out_dir.join("trajectory.csv")),
        "t,x,y,vx,vy,K,Wcum"
    );
    let r: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert!(r["results"]["work_energy_residual"].as_f64().unwrap() <= 1e-7);
    assert!(r["results"]["exit"].is_array());

    let ok = run_in(
        "simulate",
        &problem("berry2d.json"),
        &[
            "--x0",
            "1,1",
            "--v0",
            "0.2,0.1",
            "--t-end",
            "1",
            "--integrator",
            "rk4",
            "--step",
            "0.01",
        ],
    );
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
}

#[test]
fn series_headers() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("berry2d.json");
    let motion = ["--x0", "1,1", "--v0", "0.2,0", "--t-end", "1"];
    let cases = [
        ("auxiliary", "auxiliary.csv", "t,x,y,vx,vy,H"),
        (
            "nonlocal-h",
            "nonlocal.csv",
            "t,pbar_x,pbar_y,xbar_x,xbar_y,H",
        ),
    ];
    for (cmd, file, header) in cases {
        let out_dir = dir.path().join(cmd);
        let mut args = motion.to_vec();
        args.extend(["--out", out_dir.to_str().unwrap()]);
        let out = run_in(cmd, &p, &args);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", stderr(&out));
        assert_eq!(first_line(&out_dir.join(file)), header);
    }
    let out_dir = dir.path().join("trace");
    let out = run_in(
        "trace2d",
        &p,
        &[
            "--x0",
            "1,1",
            "--assert-work",
            "1e-8",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(first_line(&out_dir.join("trace.csv")), "sigma,x,y");

    let out_dir = dir.path().join("maneuver");
    let out = run_in(
        "maneuver3d",
        &problem("triple3d.json"),
        &[
            "--x0",
            "1,1,1",
            "--epsilon",
            "0.05",
            "--assert-work",
            "1e-8",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(first_line(&out_dir.join("maneuver.csv")), "x,y,z");
}

#[test]
fn csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("aux");
    run_in(
        "auxiliary",
        &problem("berry2d.json"),
        &[
            "--x0",
            "1,1",
            "--v0",
            "0.2,0",
            "--t-end",
            "0.5",
            "--out",
            out_dir.to_str().unwrap(),
        ],
    );
    let text = std::fs::read_to_string(out_dir.join("auxiliary.csv")).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 6);
        for c in cells {
            let v: f64 = c.parse().unwrap();
            assert_eq!(curlforce::cli::fmt_num(v), c);
        }
    }
}

#[test]
fn empty_series_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let header: Vec<String> = ["t", "x", "y"].iter().map(|s| s.to_string()).collect();
    curlforce::cli::write_csv(&path, &header, &[]).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,x,y\n");
}

#[test]
fn reports_are_deterministic_except_for_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let p = problem("berry2d.json");
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run_in(
            "nonlocal-h",
            &p,
            &[
                "--x0",
                "1,1",
                "--v0",
                "0.2,0",
                "--t-end",
                "1",
                "--out",
                out_dir.to_str().unwrap(),
            ],
        );
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let mut r: Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
                .unwrap();
        r.as_object_mut().unwrap().remove("timestamp");
        reports.push((r, std::fs::read(out_dir.join("nonlocal.csv")).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);

    let a = report(&run_in("classify", &p, &["--seed", "3"]));
    let b = report(&run_in("classify", &p, &["--seed", "3"]));
    let c = report(&run_in("classify", &p, &["--seed", "4"]));
    assert_eq!(a["inputs_digest"], b["inputs_digest"]);
    assert_eq!(a["results"], b["results"]);
    assert_ne!(a["inputs_digest"], c["inputs_digest"]);
}

#[test]
fn sample_flags_override_the_region() {
    let p = problem("berry2d.json");
    let r = report(&run_in("verify", &p, &["--samples", "17", "--seed", "2"]));
    assert_eq!(r["results"]["samples"], 17);
    let r = report(&run_in("verify", &p, &["--region", "grid"]));
    assert_eq!(r["results"]["samples"], 225);
}

#[test]
fn gauge_and_vpde_commands() {
    let p = problem("berry2d.json");
    let out = run_in("gauge", &p, &["--f", "exp(u)", "--assert-residual", "1e-8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run_in(
        "vpde",
        &p,
        &["--phi", "s^2 + 1", "--assert-residual", "1e-8"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run_in("vpde", &p, &["--v", "x^2*y^3", "--assert-residual", "1e-8"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn reachability_command() {
    let out = run_in(
        "reach2d",
        &problem("berry2d.json"),
        &[
            "--x0",
            "1,1",
            "--target",
            "1.2,0.8571428571428571",
            "--target",
            "1.5,1.5",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = report(&out);
    assert_eq!(r["results"]["targets"][0]["reachable"], true);
    assert_eq!(r["results"]["targets"][1]["reachable"], false);
}

fn write_variant(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let text = std::fs::read_to_string(problem("triple3d.json")).unwrap();
    assert!(text.contains(from));
    let path = dir.join(name);
    std::fs::write(&path, text.replacen(from, to, 1)).unwrap();
    path
}

#[test]
fn input_errors_exit_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let arity = write_variant(dir.path(), "arity.json", "\"-x*y\"]", "\"-x*y\", \"1\"]");
    let out = run_in("verify", &arity, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("force:"), "{}", stderr(&out));

    let unknown = write_variant(dir.path(), "unknown.json", "-2*x*z", "-2*k*z");
    let out = run_in("verify", &unknown, &[]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(
        msg.contains("force[1]") && msg.contains("'k'") && msg.contains("3..4"),
        "{msg}"
    );

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"dimension\": 2,\n \"force\": [").unwrap();
    let out = run_in("verify", &broken, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    let extra = write_variant(
        dir.path(),
        "extra.json",
        "\"dimension\"",
        "\"colour\": 1, \"dimension\"",
    );
    let out = run_in("verify", &extra, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("colour"), "{}", stderr(&out));

    let out = run_in("verify", &dir.path().join("missing.json"), &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = run_in("work", &problem("berry2d.json"), &["--path", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nowhere"));

    let out = run_in("trace2d", &problem("triple3d.json"), &["--x0", "1,1,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn singular_probe_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(problem("berry2d.json"))
        .unwrap()
        .replace("[[0.05, 5.0], [0.05, 5.0]]", "[[0.0, 5.0], [0.0, 5.0]]");
    let path = dir.path().join("singular.json");
    std::fs::write(&path, text).unwrap();
    let out = run_in("verify", &path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("probe"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    let p = problem("berry2d.json");
    assert_eq!(
        run_in("simulate", &p, &["--x0", "1,1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run_in("trace2d", &p, &["--x0", "one,two"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn auxiliary_domain_exit_exits_3() {
    let out = run_in(
        "auxiliary",
        &problem("berry2d.json"),
        &["--x0", "0.3,0.3", "--v0", "-1,-1", "--t-end", "2"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}
