//! End-to-end tests of the `softpen` binary: outputs, exit codes and reproducibility.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use softpen::schema::ProblemSpec;
use softpen::Norm;
use softpen_cli::RunRecord;

fn softpen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softpen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn softpen_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_softpen"))
        .args(args)
        .env("SOFTPEN_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn generate(name: &str, args: &[&str]) -> String {
    let path = scratch(name);
    let path_str = path.display().to_string();
    let mut full = vec!["generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path_str]);
    let o = softpen(&full);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    path_str
}

fn example_2(n: usize) -> String {
    let n = n.to_string();
    generate(
        &format!("example2_{n}.json"),
        &["--family", "entrywise-quadratic", "--n", &n, "--m", &n],
    )
}

fn inverse_kkt(seed: u64) -> String {
    let seed = seed.to_string();
    generate(
        &format!("ikkt_{seed}.json"),
        &[
            "--family",
            "inverse-kkt",
            "--n",
            "8",
            "--m",
            "5",
            "--seed",
            &seed,
        ],
    )
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_example_two_meets_contract() {
    let spec = example_2(10);
    let out = scratch("solve_example2.json");
    let out_str = out.display().to_string();
    let o = softpen(&[
        "solve",
        &spec,
        "--xi",
        "1.5",
        "--epsilon",
        "0.05",
        "--q",
        "2",
        "--out",
        &out_str,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let record: RunRecord = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let c = &record.certificate;
    assert!(c.certified);
    assert!(c.eps_a_measured <= 0.05);

    // The certificate agrees with a recomputation from the final point.
    let problem_spec = ProblemSpec::from_json(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    let problem = problem_spec.to_problem().unwrap();
    assert_eq!(
        problem.violation_norm(&c.point, Norm::L2).unwrap(),
        c.eps_a_measured
    );
    let f_star = problem_spec.reference.as_ref().unwrap().f_star;
    assert_eq!(
        problem.eval_objective(&c.point).unwrap() - f_star,
        c.eps_f_measured.unwrap()
    );
    assert_eq!(record.instance_hash, problem_spec.content_hash());
    assert_eq!(record.penalty.delta, c.schedule.delta);

    let back: RunRecord = serde_json::from_str(&serde_json::to_string(&record).unwrap()).unwrap();
    assert_eq!(back, record);

    let trace = std::fs::read_to_string(record.trace_path.as_ref().unwrap()).unwrap();
    assert!(trace.starts_with("iteration,component_gradients_cum,objective,gradmap_norm\n"));
    assert_eq!(trace.lines().count(), c.solver_report.trace.len() + 1);
}

#[test]
fn solve_to_stdout_is_reproducible_apart_from_wall_time() {
    let spec = inverse_kkt(2);
    let args = [
        "solve",
        &spec,
        "--xi",
        "4",
        "--epsilon",
        "0.05",
        "--solver",
        "svrg",
        "--seed",
        "9",
    ];
    let a = softpen(&args);
    let b = softpen(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let mut ra: RunRecord = serde_json::from_str(&stdout(&a)).unwrap();
    let mut rb: RunRecord = serde_json::from_str(&stdout(&b)).unwrap();
    assert!(ra.trace_path.is_none());
    ra.wall_time_secs = 0.0;
    rb.wall_time_secs = 0.0;
    assert_eq!(ra, rb);
}

#[test]
fn solve_exit_codes() {
    let bad = scratch("truncated.json");
    std::fs::write(&bad, "{\"spec_version\": 1,").unwrap();
    let o = softpen(&[
        "solve",
        &bad.display().to_string(),
        "--xi",
        "1",
        "--epsilon",
        "0.1",
    ]);
    assert_eq!(code(&o), 2);

    let o = softpen(&[
        "solve",
        &fixture("wrong_type.json"),
        "--xi",
        "1",
        "--epsilon",
        "0.1",
    ]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("objective.components[0].vector[1]"),
        "{}",
        stderr(&o)
    );

    let o = softpen(&[
        "solve",
        "/nonexistent/spec.json",
        "--xi",
        "1",
        "--epsilon",
        "0.1",
    ]);
    assert_eq!(code(&o), 2);

    let spec = example_2(4);
    let o = softpen(&["solve", &spec, "--xi", "1.5", "--epsilon", "1e6"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(o.stdout.is_empty());

    let o = softpen(&[
        "solve",
        &spec,
        "--xi",
        "1.5",
        "--epsilon",
        "0.05",
        "--q",
        "3",
    ]);
    assert_eq!(code(&o), 2);

    let o = softpen(&[
        "solve",
        &spec,
        "--xi",
        "1.5",
        "--epsilon",
        "1e-4",
        "--max-iterations",
        "1",
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let record: RunRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!record.certificate.certified);
}

#[test]
fn reproduce_example_two_ratios() {
    let o = softpen(&[
        "reproduce-example",
        "--example",
        "2",
        "--m",
        "10",
        "--n",
        "10",
        "--xi",
        "1.5",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stderr(&o).trim(), "PASS");
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 4);
    let (m, u, xi) = (10.0_f64, 20.0_f64, 1.5_f64);
    for r in &rows {
        let delta: f64 = r[0].parse().unwrap();
        let ratio: f64 = r[4].parse().unwrap();
        let envelope = 10.0 * (u * xi / delta).ln();
        assert!(
            (1.0..=envelope).contains(&ratio),
            "delta {delta}: ratio {ratio}"
        );
        let measured: f64 = r[1].parse().unwrap();
        let oracle: f64 = r[2].parse().unwrap();
        assert!((measured - oracle).abs() <= 1e-6 * m.sqrt());
        assert_eq!(r[8], "PASS");
    }
}

#[test]
fn reproduce_example_one_gap_column() {
    let o = softpen(&["reproduce-example", "--example", "1", "--xi", "1.5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for r in csv_rows(&stdout(&o)) {
        let delta: f64 = r[0].parse().unwrap();
        let gap: f64 = r[5].parse().unwrap();
        assert!(
            (gap - 10.0 * delta * 0.5f64.ln()).abs() <= 1e-6,
            "delta {delta}: gap {gap}"
        );
    }
}

#[test]
fn reproduce_example_rejects_bad_input() {
    let o = softpen(&["reproduce-example", "--example", "2", "--delta-grid", ""]);
    assert_eq!(code(&o), 2);
    let o = softpen(&["reproduce-example", "--example", "1", "--xi", "2.5"]);
    assert_eq!(code(&o), 3);
    let o = softpen(&["reproduce-example", "--example", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_bounds_has_no_violations_and_is_deterministic() {
    let args = [
        "check-bounds",
        "--seeds",
        "0..4",
        "--m-grid",
        "2,5",
        "--delta-count",
        "3",
    ];
    let a = softpen_with_threads(&args, "1");
    let b = softpen_with_threads(&args, "4");
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["verdict"], "PASS");
    assert_eq!(report["summary"]["cells"], 24);
    assert_eq!(report["summary"]["theorem_violations"], 0);
    assert_eq!(report["summary"]["sandwich_violations"], 0);
    for cell in report["cells"].as_array().unwrap() {
        let lower_slack =
            cell["f_gap"].as_f64().unwrap() - cell["sandwich_lower"].as_f64().unwrap();
        assert!(lower_slack >= 0.0, "{cell}");
    }

    let o = softpen_with_threads(&args, "zero");
    assert_eq!(code(&o), 2);
}

#[test]
fn gradcheck_passes_on_zoo_and_fails_on_corrupted_fixture() {
    for spec in [
        example_2(5),
        inverse_kkt(1),
        generate(
            "linear.json",
            &["--family", "entrywise-linear", "--n", "4", "--m", "3"],
        ),
    ] {
        let o = softpen(&["gradcheck", &spec, "--points", "20", "--seed", "3"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let report: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(report["worst_error"].as_f64().unwrap() <= 1e-5);
    }

    let o = softpen(&[
        "gradcheck",
        &fixture("corrupted_gradient.json"),
        "--points",
        "10",
    ]);
    assert_eq!(code(&o), 1);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["verdict"], "FAIL");
    let failing: Vec<&str> = report["oracles"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["passed"] == false)
        .map(|r| r["oracle"].as_str().unwrap())
        .collect();
    assert!(failing.contains(&"objective.components[0]"), "{failing:?}");
    assert!(!failing.contains(&"constraints[0]"));

    let o = softpen(&[
        "gradcheck",
        &fixture("corrupted_gradient.json"),
        "--points",
        "0",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_delta_slope_and_reproducibility() {
    let spec = example_2(10);
    let args = [
        "sweep-delta",
        &spec,
        "--xi",
        "1.5",
        "--delta-grid",
        "1e-4,3e-4,1e-3,3e-3,1e-2",
    ];
    let a = softpen(&args);
    let b = softpen_with_threads(&args, "2");
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let footer = text.lines().last().unwrap();
    let slope: f64 = footer.strip_prefix("# slope,").unwrap().parse().unwrap();
    assert!((0.9..=1.1).contains(&slope), "slope {slope}");
    assert_eq!(csv_rows(&text).len(), 5);

    let out = scratch("sweep_single.csv");
    let out_str = out.display().to_string();
    let o = softpen(&[
        "sweep-delta",
        &spec,
        "--xi",
        "1.5",
        "--delta-grid",
        "1e-3",
        "--out",
        &out_str,
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().last().unwrap(), "# slope,");
    assert_eq!(csv_rows(&text).len(), 1);

    let o = softpen(&["sweep-delta", &spec, "--xi", "1.5", "--delta-grid", "1e3"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&stdout(&o))[0][5], "false");

    let linear = generate(
        "linear_sweep.json",
        &["--family", "entrywise-linear", "--n", "3", "--m", "3"],
    );
    let o = softpen(&[
        "sweep-delta",
        &linear,
        "--xi",
        "1.5",
        "--delta-grid",
        "1e-2",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn generated_specs_match_library_instances() {
    let spec = inverse_kkt(5);
    let parsed = ProblemSpec::from_json(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    let z = softpen::zoo::make_inverse_kkt(5, 8, 5, 1.0, 3).unwrap();
    assert_eq!(parsed.content_hash(), z.instance_hash());
}
