use std::fs;
use std::path::Path;
use std::process::Command;

use levelset_cli::{run_cli, EXIT_ASSERTION, EXIT_OK, EXIT_USAGE};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levelset"))
}

fn run(args: &[&str]) -> i32 {
    run_cli(
        std::iter::once("levelset")
            .chain(args.iter().copied())
            .map(String::from)
            .collect(),
    )
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn arcs_list_prints_every_cell() {
    let out = bin()
        .args(["arcs", "--N", "16", "--Q", "4", "--l", "1", "--list"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "q,a,b,x_lo,x_hi,t_lo,t_hi,t_inner_radius"
    );
    assert_eq!(lines.count(), 82);
}

#[test]
fn missing_config_is_a_usage_error() {
    assert_eq!(
        run(&["probe", "--kind", "levelset", "--config", "missing.json"]),
        EXIT_USAGE
    );
    let st = bin()
        .args(["probe", "--kind", "levelset", "--config", "missing.json"])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(EXIT_USAGE));
}

#[test]
fn bad_arguments_are_usage_errors() {
    assert_eq!(run(&["nonsense"]), EXIT_USAGE);
    assert_eq!(
        run(&["arcs", "--N", "16", "--Q", "3", "--list"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(&["construct", "--kind", "fixed_denominator"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(&["construct", "--kind", "no_such_thing", "--q", "5"]),
        EXIT_USAGE
    );
    assert_eq!(run(&["kernel", "--N", "64"]), EXIT_USAGE);
}

#[test]
fn fixed_denominator_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("c");
    let g = dir.path().join("g");
    assert_eq!(
        run(&[
            "--out",
            c.to_str().unwrap(),
            "construct",
            "--kind",
            "fixed_denominator",
            "--q",
            "5"
        ]),
        EXIT_OK
    );
    let input = c.join("construction.json");
    assert_eq!(
        run(&[
            "--out",
            g.to_str().unwrap(),
            "graph",
            "--input",
            input.to_str().unwrap(),
            "--analyze",
            "--fork"
        ]),
        EXIT_OK
    );
    let a = json(&g.join("analysis.json"));
    // 5 lies in the block [4, 8).
    assert_eq!(a["dominant"][0], serde_json::json!([4, 1, 1]));
    assert_eq!(a["R"], 9);
    let s = json(&g.join("fork_structure.json"));
    assert_eq!(s["violations"].as_array().unwrap().len(), 0);
    assert!(g.join("graph.json").exists() && g.join("fork.json").exists());
}

#[test]
fn profile_reads_label_csv() {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    fs::write(&labels, "a1,b1,q1,a2,b2,q2\n1,1,5,2,3,7\n1,0,6,1,0,10\n").unwrap();
    let out = bin()
        .args(["profile", "--labels", labels.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    // 1/5 + 2/7 = 17/35 with coprime denominators.
    assert_eq!(&rows[0][6..12], &["1", "5", "7", "1", "1", "17/35"]);
    // 1/6 + 1/10 = 4/15: d = 2, and 2 | 1·5 + 1·3.
    assert_eq!(&rows[1][6..12], &["2", "3", "5", "2", "2", "4/15"]);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for i in 0..2 {
        let o = dir.path().join(format!("run{i}"));
        let st = run(&[
            "--out",
            o.to_str().unwrap(),
            "probe",
            "--kind",
            "conditional",
            "--N",
            "256",
            "--samples",
            "10",
        ]);
        assert_eq!(st, EXIT_OK);
        texts.push((
            fs::read(o.join("report.json")).unwrap(),
            fs::read(o.join("table.csv")).unwrap(),
        ));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn probe_config_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"kind": "lp", "N": [64, 128], "p": 4.0, "schemes": [{"scheme": "single_frequency", "freq": 3}]}"#)
        .unwrap();
    let o = dir.path().join("out");
    assert_eq!(
        run(&[
            "--out",
            o.to_str().unwrap(),
            "probe",
            "--config",
            cfg.to_str().unwrap(),
            "--N",
            "32,64"
        ]),
        EXIT_OK
    );
    let rep = json(&o.join("report.json"));
    assert_eq!(rep["config"]["N"], serde_json::json!([32, 64]));
    let table = fs::read_to_string(o.join("table.csv")).unwrap();
    // A single exponential has |S| = 1 everywhere.
    for line in table.lines().skip(1) {
        let norm: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((norm - 1.0).abs() < 1e-9, "{line}");
    }
}

#[test]
fn failing_bounds_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // An empty exponent window cannot contain the fitted slope.
    fs::write(
        &cfg,
        r#"{"kind": "lp", "N": [64, 128], "exponent_window": [5.0, 6.0]}"#,
    )
    .unwrap();
    let o = dir.path().join("out");
    assert_eq!(
        run(&[
            "--out",
            o.to_str().unwrap(),
            "probe",
            "--config",
            cfg.to_str().unwrap()
        ]),
        EXIT_ASSERTION
    );
    assert!(o.join("report.json").exists());
}

#[test]
fn box_and_admissible_commands_write_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("boxes");
    assert_eq!(
        run(&[
            "--out",
            o.to_str().unwrap(),
            "boxes",
            "--N",
            "256",
            "--Q",
            "4",
            "--l",
            "1"
        ]),
        EXIT_OK
    );
    let s = json(&o.join("boxes_summary.json"));
    assert!(s["aggregates"]["tuples"].as_u64().unwrap() > 0);

    let o = dir.path().join("adm");
    let st = run(&[
        "--out",
        o.to_str().unwrap(),
        "admissible",
        "--N",
        "1024",
        "--Q",
        "8",
        "--l",
        "1",
        "--x",
        "1/2",
        "--t",
        "1/3",
        "--D",
        "1",
        "--P",
        "1",
        "--F",
        "1",
        "--separated",
    ]);
    assert_eq!(st, EXIT_OK);
    assert!(o.join("admissible.csv").exists());
    let s = json(&o.join("admissible_summary.json"));
    assert!(s["separated"]["count"].is_u64());
}

#[test]
fn kernel_report_and_random_graph() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("k");
    let st = run(&[
        "--out",
        o.to_str().unwrap(),
        "kernel",
        "--report",
        "--N",
        "256",
        "--Q",
        "4",
        "--l",
        "1",
        "--samples",
        "20",
    ]);
    assert_eq!(st, EXIT_OK);
    let csv = fs::read_to_string(o.join("kernel_samples.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);

    let o = dir.path().join("g");
    assert_eq!(
        run(&[
            "--out",
            o.to_str().unwrap(),
            "graph",
            "--random",
            "64",
            "--K",
            "2"
        ]),
        EXIT_OK
    );
    let a = json(&o.join("analysis.json"));
    assert_eq!(a["edges"], 1024);
}
