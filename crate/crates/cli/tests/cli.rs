use std::path::Path;
use std::process::{Command, Output};

fn plap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const DECAY: &str = "\
[solver]
p = 3
[experiment]
name = caloric_decay
seeds = 4
refine = false
";

#[test]
fn validate_oscillation_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = plap(&["validate", "--module", "oscillation"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS mean_value_inequalities"), "{stdout}");
    for f in ["report.json", "data.csv", "meta.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = plap(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = plap(&["experiment", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = plap(&["solve", "--refine", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_errors_exit_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.cfg",
        "[grid]\nn = 2\n[solver]\np = 1.5\n[experiment]\nname = run_intrinsic_bmo\n",
    );
    let out = plap(&["solve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("line 4: p must exceed 2 for intrinsic experiments"),
        "{err}"
    );

    let cfg = write(dir.path(), "b.cfg", "[geometry]\nb = 2.5\n");
    let out = plap(&["geometry", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b must lie in (0,2)"));

    let out = plap(&["solve", "--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    // the subcommand's constraints apply even if the config names nothing
    let cfg = write(dir.path(), "p2.cfg", "[solver]\np = 2\n");
    let out = plap(
        &["experiment", "intrinsic_bmo", "--config", &cfg],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", DECAY);
    let out = plap(
        &["experiment", "caloric_decay", "--config", &cfg],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = std::fs::read_to_string(dir.path().join("out/report.json")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("out/data.csv")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["command"], "experiment caloric_decay");
    assert_eq!(v["result"]["seeds"][0]["seed"], 4);
    assert!(csv.starts_with("seed,theta,phi,osc"));
    assert!(csv.lines().count() > 2);
    assert!(v["result"]["seeds"][0]["skipped"].is_null(), "{json}");
}

fn json_numbers(v: &serde_json::Value, out: &mut Vec<f64>) {
    match v {
        serde_json::Value::Number(n) => out.push(n.as_f64().unwrap()),
        serde_json::Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out)),
        serde_json::Value::Object(o) => o.values().for_each(|x| json_numbers(x, out)),
        _ => {}
    }
}

#[test]
fn identical_runs_give_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", DECAY);
    for o in ["a", "b"] {
        let out = plap(
            &["experiment", "caloric_decay", "--config", &cfg, "--out", o],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a/report.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/report.json")).unwrap();
    assert_eq!(a, b);
    let ma = std::fs::read_to_string(dir.path().join("a/meta.json")).unwrap();
    assert!(ma.contains("started_unix"));
    assert!(!String::from_utf8_lossy(&a).contains("unix"));

    // every CSV number is a JSON number, to the last bit
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let mut nums = Vec::new();
    json_numbers(&v, &mut nums);
    let csv = std::fs::read_to_string(dir.path().join("a/data.csv")).unwrap();
    for line in csv.lines().skip(1) {
        for cell in line.split(',') {
            if cell == "null" {
                continue;
            }
            let x: f64 = cell.parse().unwrap();
            assert!(
                nums.iter().any(|y| y.to_bits() == x.to_bits()),
                "{cell} missing from report.json"
            );
        }
    }
}

#[test]
fn seed_flag_changes_random_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.cfg",
        "[grid]\nm = 32\nT = 0.01\n[experiment]\ninitial = random_trig\n",
    );
    for (o, s) in [("a", "1"), ("b", "2")] {
        let out = plap(
            &["solve", "--config", &cfg, "--seed", s, "--out", o],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a/data.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/data.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn geometry_and_seminorm_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "g.cfg",
        "[grid]\nm = 64\nT = 0.1\n[solver]\np = 3\n[geometry]\nouter_radius = 0.2\n[experiment]\nseminorm = zygmund\nfield = u\n",
    );
    let out = plap(&["geometry", "--config", &cfg, "--refine", "2"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("out/data.csv")).unwrap();
    assert!(csv.starts_with("r,s_tilde,s,lambda"));
    let out = plap(&["seminorm", "--config", &cfg], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = plap(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("experiment"));
}
