use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use wham_core::term::parse;

fn wham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wham"))
        .args(args)
        .output()
        .expect("spawn wham")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(format!("{}-{name}", std::process::id()))
}

#[test]
fn run_mam_on_self_application() {
    let o = wham(&["run", "--machine", "mam", "--expr", "(\\x. x x) (\\z. z)", "--fuel", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["status"], "Final");
    assert_eq!(v["decoded"], "\\z. z");
    assert_eq!(v["beta_count"], 2);
    assert_eq!(v["tallies"]["varsub"], 3);
}

#[test]
fn every_machine_agrees_on_a_small_term() {
    for m in ["search", "micro", "mam", "mam-eff", "kam-list", "kam-array"] {
        let o = wham(&["run", "--machine", m, "--expr", "(\\x. \\y. x) a b"]);
        let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        assert_eq!(v["decoded"], "a", "{m}");
        assert_eq!(v["beta_count"], 2, "{m}");
    }
}

#[test]
fn reference_reducers() {
    let o = wham(&["run", "--machine", "ref-ri", "--expr", "(\\x. x) ((\\y. y) z)"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["steps"], 2);
    assert_eq!(v["result"], "z");
    let o = wham(&["run", "--machine", "ref-wh", "--expr", "\\w. (\\y. y) w"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["steps"], 0);
}

#[test]
fn trace_and_metrics_files() {
    let (trace, metrics) = (scratch("trace.txt"), scratch("metrics.json"));
    let o = wham(&[
        "run",
        "--expr",
        "(\\x. x x) (\\z. z)",
        "--trace",
        trace.to_str().unwrap(),
        "--metrics",
        metrics.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let lines = std::fs::read_to_string(&trace).unwrap();
    let kinds: Vec<&str> = lines.lines().map(|l| l.split_whitespace().nth(1).unwrap()).collect();
    assert_eq!(kinds, ["search", "beta", "search", "varsub", "beta", "varsub", "varsub"]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    let bounds = v["bounds"].as_array().unwrap();
    assert!(bounds.iter().all(|b| b["pass"] == true));
    assert!(bounds.iter().any(|b| b["name"] == "var <= beta^2" && b["lhs"] == 3 && b["rhs"] == 4));
}

#[test]
fn family_size_matches_printed_term() {
    let o = wham(&["family", "--name", "ui", "--n", "3", "--size-only"]);
    assert_eq!(stdout(&o).trim(), "26");
    for (name, n) in [("ui", 3), ("t", 4), ("s", 3), ("r", 2), ("chain", 5)] {
        let n = n.to_string();
        let size: usize = stdout(&wham(&["family", "--name", name, "--n", &n, "--size-only"]))
            .trim()
            .parse()
            .unwrap();
        let printed = stdout(&wham(&["family", "--name", name, "--n", &n, "--print"]));
        assert_eq!(parse(printed.trim()).unwrap().size(), size, "{name} {n}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["run", "--machine", "nope", "--expr", "x"],
        vec!["run", "--expr", "(\\x. "],
        vec!["run"],
        vec!["family", "--name", "q", "--n", "1"],
        vec!["check", "--suite", "everything"],
        vec!["bench", "--n-min", "5", "--n-max", "2"],
        vec!["frobnicate"],
    ] {
        let o = wham(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = wham(&["run", "--expr", "(\\x. "]);
    assert!(String::from_utf8(o.stderr).unwrap().contains("term grammar"));
    let o = wham(&["run", "--expr", "x y", "--require-closed"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_output_is_reproducible() {
    let args = [
        "bench", "--families", "ui,chain", "--machines", "mam,kam-list", "--n-min", "1", "--n-max", "6",
    ];
    let strip = |o: Output| -> Vec<String> {
        stdout(&o)
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(9);
                f.join(",")
            })
            .collect()
    };
    let a = strip(wham(&args));
    assert_eq!(a[0], "machine,family,n,term_size,beta,search,varsub,cost_units,peak_state,status");
    assert_eq!(a.len(), 1 + 2 * 2 * 6);
    assert_eq!(a, strip(wham(&args)));

    let out = scratch("bench.json");
    let o = wham(&[
        "bench", "--families", "ui", "--machines", "search", "--n-min", "4", "--n-max", "10", "--format", "json",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 7);
    assert!(v["fits"][0]["semilog2"].as_f64().unwrap() > 0.9);
}

#[test]
fn check_families_suite() {
    let o = wham(&["check", "--suite", "families"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("families: PASS"));
}

#[test]
fn check_all_suites_on_the_default_corpus() {
    let o = wham(&["check", "--suite", "all", "--corpus-seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches(": PASS").count(), 5);
}
