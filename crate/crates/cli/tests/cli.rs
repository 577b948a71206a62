use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellperm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn step_pure_input() {
    let o = run(&["step", "--werner", "1", "--scheme", "dej"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(value(&text, "fidelity"), 1.0);
    assert_eq!(value(&text, "success"), 1.0);
}

#[test]
fn step_werner_numbers() {
    let text = stdout(&run(&["step", "--werner", "0.8", "--scheme", "dej"]));
    assert!((value(&text, "success") - 173.0 / 225.0).abs() < 1e-11);
    assert!((value(&text, "fidelity") - 145.0 / 173.0).abs() < 1e-11);
    assert!(text.contains("success 0.768888888889"));
    let text = stdout(&run(&[
        "step",
        "--state",
        "0.25,0.25,0.25,0.25",
        "--scheme",
        "dej",
    ]));
    assert_eq!(value(&text, "success"), 0.5);
}

#[test]
fn step_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dej.txt");
    std::fs::write(&path, "2 1\n1111\n").unwrap();
    let a = stdout(&run(&[
        "step",
        "--werner",
        "0.8",
        "--file",
        path.to_str().unwrap(),
    ]));
    let b = stdout(&run(&["step", "--werner", "0.8", "--scheme", "dej"]));
    assert_eq!(a, b);
    std::fs::write(&path, "2 1\n1000\n0100\n").unwrap();
    let o = run(&["step", "--werner", "0.8", "--file", path.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["step", "--werner", "0.8"]).status.code(), Some(2));
    assert_eq!(
        run(&["step", "--werner", "1.5", "--scheme", "dej"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["step", "--state", "a,b", "--scheme", "dej"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--fmin", "0.4"]).status.code(), Some(2));
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = run(&[
            "sweep",
            "--fmin",
            "0.55",
            "--fmax",
            "0.95",
            "--points",
            "9",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let rows = bellperm::pipeline::parse_sweep_csv(&text).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(text.lines().any(|l| l == bellperm::pipeline::SWEEP_HEADER));
    assert!(rows
        .iter()
        .all(|r| r.log10_l_proposed.is_finite() && r.log10_l_dej.is_finite()));
}

#[test]
fn search_lists_all_candidates_and_ignores_shards() {
    let one = run(&[
        "search", "--n", "2", "--m", "1", "--werner", "0.8", "--top", "15",
    ]);
    let four = run(&[
        "search", "--n", "2", "--m", "1", "--werner", "0.8", "--top", "15", "--shards", "4",
    ]);
    assert!(one.status.success());
    assert_eq!(stdout(&one), stdout(&four));
    let text = stdout(&one);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rank,score,success,S_row1"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    let top: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    let step = stdout(&run(&["step", "--werner", "0.8", "--scheme", "dej"]));
    assert!((top - value(&step, "fidelity")).abs() < 1e-11);
}

#[test]
fn search_refuses_large_instances() {
    let o = run(&["search", "--n", "9", "--werner", "0.8"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn pipeline_reports_l() {
    let text = stdout(&run(&["pipeline", "--state", "1,0,0,0"]));
    assert_eq!(value(&text, "L"), 1.0);
    let text = stdout(&run(&["pipeline", "--werner", "0.5", "--steps", ""]));
    assert!(text.contains("L +inf"));
    let text = stdout(&run(&["pipeline", "--werner", "0.8", "--steps", "dej"]));
    assert!(text.contains("1,dej,"));
}

#[test]
fn group_and_decompose() {
    let text = stdout(&run(&["group", "sp4"]));
    assert_eq!(text.split("\n\n").count(), 720);
    let text = stdout(&run(&["group", "gamma"]));
    assert!(text.contains("0001 p5,6") && text.contains("1111 p3,6"));
    assert!(run(&["group", "cnot"]).status.success());
    let o = run(&[
        "group",
        "complete",
        "--n",
        "2",
        "--rows",
        "1111",
        "--positions",
        "4",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().nth(3), Some("1111"));
    let o = run(&["decompose", "--random", "4", "--seed", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("recomposes true"));
}

#[test]
fn generator_search_on_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cnot.txt");
    std::fs::write(&path, "1010\n0100\n0010\n0101\n").unwrap();
    let o = run(&[
        "group",
        "generators",
        "--matrix",
        path.to_str().unwrap(),
        "--max-len",
        "3",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("length "));
}

#[test]
fn verify_exit_code_tracks_checks() {
    let o = run(&["verify"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with('[')).collect();
    assert_eq!(lines.len(), 12);
    let all_pass = lines.iter().all(|l| l.starts_with("[PASS]"));
    assert_eq!(o.status.code(), Some(if all_pass { 0 } else { 1 }));
    let tampered = run(&["verify", "--tamper-gamma"]);
    assert_eq!(tampered.status.code(), Some(1));
    assert!(stdout(&tampered)
        .lines()
        .any(|l| l.starts_with("[FAIL]  2")));
}
