mod common;

use std::path::Path;
use std::process::{Command, Output};

use ssd_core::cli::{cmd_compare, CompareReport, Report, RunConfig, Strategy};

fn ssd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssd")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stepwise_forward_count_is_gen_len() {
    let o = ssd(&["decode", "--strategy", "stepwise", "--gen-length", "256", "--topk", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let r = Report::parse(&stdout(&o)).unwrap();
    assert_eq!(r.summary.forwards, 256);
    assert_eq!(r.summary.baseline_forwards, 256);
    assert_eq!(r.summary.tokens.len(), 256);
    assert!(r.rounds.is_empty());
}

#[test]
fn greedy_context_free_uses_65_forwards() {
    let o = ssd(&[
        "decode",
        "--strategy",
        "greedy",
        "--gen-length",
        "256",
        "--draft-length",
        "3",
        "--context-window",
        "0",
        "--topk",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = Report::parse(&stdout(&o)).unwrap();
    assert_eq!(r.summary.forwards, 65);
    assert_eq!(r.rounds.len(), 64);
    assert!(r.rounds.iter().all(|x| x.accepted == 4 && x.batch_size == 4));
    assert!((r.summary.speedup - 256.0 / 65.0).abs() < 1e-12);
    assert!((r.summary.reduction - (1.0 - 65.0 / 256.0)).abs() < 1e-12);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["decode", "--strategy", "mix_order", "--seed", "42", "--gen-length", "64", "--draft-length", "4"];
    let a = ssd(&args);
    let b = ssd(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compare_against_stepwise() {
    for strategy in ["greedy", "mix_order"] {
        let o = ssd(&["compare", "--strategy", strategy, "--seed", "3", "--gen-length", "128", "--draft-length", "4"]);
        assert_eq!(o.status.code(), Some(0));
        let c = CompareReport::parse(&stdout(&o)).unwrap();
        assert!(c.summary.identical);
        assert_eq!(c.summary.baseline, "stepwise");
        assert!(c.summary.reduction > 0.0 && c.summary.reduction <= 0.8, "{}", c.summary.reduction);
        assert_eq!(c.baseline.summary.tokens, c.candidate.summary.tokens);
    }
}

#[test]
fn compare_rejects_mismatched_lengths() {
    let a = RunConfig {
        strategy: Strategy::Stepwise,
        gen_len: 16,
        ..RunConfig::default()
    };
    let b = RunConfig { gen_len: 32, ..a.clone() };
    assert!(matches!(cmd_compare(&a, &b), Err(ssd_core::Error::InvalidArgument(_))));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("baseline.toml");
    std::fs::write(&cfg, toml::to_string(&a).unwrap()).unwrap();
    let o = ssd(&["compare", "--gen-length", "32", "--baseline-config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn analyze_grid_from_recorded_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let report = dir.path().join("report.jsonl");
    let o = ssd(&[
        "decode",
        "--strategy",
        "stepwise",
        "--gen-length",
        "120",
        "--topk",
        "5",
        "--trace-out",
        path_str(&trace),
        "--out",
        path_str(&report),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(Report::parse(&std::fs::read_to_string(&report).unwrap()).is_ok());

    let o = ssd(&["analyze", "--trace", path_str(&trace)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "Draft Length | k=1 | k=2 | k=3 | k=4 | k=5 | Upper Bound");
    for (line, ub) in lines[1..].iter().zip(["75.0%", "80.0%", "83.3%"]) {
        let cells: Vec<f64> = line
            .split(" | ")
            .skip(1)
            .map(|c| c.trim_end_matches('%').parse().unwrap())
            .collect();
        assert!(line.ends_with(ub));
        let (bound, ks) = cells.split_last().unwrap();
        assert!(ks.windows(2).all(|w| w[0] <= w[1]), "{line}");
        assert!(ks.iter().all(|c| c <= bound), "{line}");
    }

    let o = ssd(&["analyze", "--trace", path_str(&trace), "--ks", "6"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn table_fixture_and_config_file() {
    let sc = &common::out_of_order_scenarios()[0];
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("fixture.table");
    std::fs::write(&table, sc.fixture_text()).unwrap();
    let prompt: Vec<String> = sc.prompt.iter().map(u32::to_string).collect();
    let config = format!(
        "seed = 0\ngen_len = {}\nblock_len = {}\ndraft_len = {}\nstrategy = \"mix_order\"\ntopk = 2\n\
         [model]\nbackend = \"table\"\npath = {:?}\n[prompt]\ntokens = [{}]\n",
        sc.gen_len(),
        sc.gen_len(),
        sc.draft_len,
        path_str(&table),
        prompt.join(", ")
    );
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let o = ssd(&["compare", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let c = CompareReport::parse(&stdout(&o)).unwrap();
    assert_eq!(c.candidate.summary.tokens, sc.targets);
}

#[test]
fn sweep_prints_one_row_per_cell() {
    let o = ssd(&["sweep", "--gen-length", "32", "--runs", "2", "--draft-lengths", "3,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("3 | greedy | 4 |"));
    assert!(rows[1].starts_with("3 | mix_order | 6 |"));
    assert!(rows[3].starts_with("4 | mix_order | 8 |"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ssd(&["decode", "--gen-length", "0"]).status.code(), Some(1));
    assert_eq!(ssd(&["decode", "--strategy", "beam"]).status.code(), Some(1));
    assert_eq!(ssd(&["nope"]).status.code(), Some(1));
    assert_eq!(ssd(&["decode", "--table", "/nonexistent/table"]).status.code(), Some(1));
}
