use std::collections::BTreeSet;
use std::process::Command;

use chlax_cli::emit::json;
use chlax_cli::runner::Report;
use chlax_cli::{emit, parse_json, read_registry, run, run_with_registry, write_registry, CaseFilter, Format, RunConfig, Verdict};
use chlax_core::reduction::{case_registry, CaseSpec};

fn small(case: &str) -> RunConfig {
    let one: BTreeSet<u32> = [1].into_iter().collect();
    RunConfig {
        n: one.clone(),
        reduction_n: one,
        cases: case.parse().unwrap(),
        oracle_samples: 5,
        ..RunConfig::default()
    }
}

fn mutated_registry() -> Vec<CaseSpec> {
    let mut reg: Vec<CaseSpec> = case_registry(1).into_iter().filter(|c| c.map.id == "I.1").collect();
    let exp = reg[0].expected.as_mut().unwrap();
    assert!(exp.spatial.contains("1/4"));
    exp.spatial = exp.spatial.replace("1/4", "1/3");
    reg
}

#[test]
fn single_case_selection() {
    let r = run(&small("I.1"));
    assert_eq!(r.cases.len(), 1);
    assert_eq!((r.cases[0].id.as_str(), r.cases[0].n), ("I.1", 1));
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn mutated_registry_fails_with_residual() {
    let r = run_with_registry(&small("I.1"), &mutated_registry());
    assert_eq!(r.verdict, Verdict::Fail);
    let failed: Vec<_> = r.cases[0].stages.iter().filter(|s| !s.passed).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().any(|s| !s.residuals.is_empty()));
    assert!(emit(&r, Format::Text).contains("residual:"));
}

#[test]
fn empty_report_is_a_valid_document() {
    let doc: serde_json::Value = serde_json::from_str(&json(&Report::empty())).unwrap();
    assert_eq!(doc["cases"], serde_json::json!([]));
    assert!(doc["version"].is_u64());
}

#[test]
fn json_round_trips_and_is_deterministic() {
    let cfg = small("I.3,IV.1");
    let a = json(&run(&cfg));
    let b = json(&run(&cfg));
    assert_eq!(a, b);
    assert_eq!(json(&parse_json(&a).unwrap()), a);
}

#[test]
fn latex_typesets_the_reduced_hierarchy() {
    let doc = emit(&run(&small("I.1")), Format::Latex);
    assert!(doc.contains("H_{z_2} - V^{[1]}_{z_1} + V^{[1]}_{z_1z_1z_1} = 0"));
    assert!(doc.contains("\\end{document}"));
}

#[test]
fn case_filter_parses_lists() {
    assert_eq!("all".parse::<CaseFilter>().unwrap(), CaseFilter::All);
}

fn chlax(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_chlax")).args(args).output().unwrap()
}

#[test]
fn exit_status_encodes_the_verdict() {
    let ok = chlax(&["--case", "I.1", "--n", "1", "--oracle-samples", "5"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verdict: PASS"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    write_registry(&bad, &mutated_registry()).unwrap();
    let fail = chlax(&["--case", "I.1", "--n", "1", "--oracle-samples", "5", "--import-cases", bad.to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(1));

    for args in [&["--n", "0"][..], &["--case", "III.1"], &["--format", "pdf"], &["--oracle-samples", "0"]] {
        assert_eq!(chlax(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn registry_export_and_import() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cases.json");
    let out = chlax(&["--export-cases", path.to_str().unwrap(), "--case", "I.2,IV.3"]);
    assert_eq!(out.status.code(), Some(0));
    let got = read_registry(&path).unwrap();
    let want: Vec<CaseSpec> = [1, 2]
        .into_iter()
        .flat_map(case_registry)
        .filter(|c| c.map.id == "I.2" || c.map.id == "IV.3")
        .collect();
    assert_eq!(got.len(), want.len());
    for w in &want {
        assert!(got.contains(w), "{} n={}", w.map.id, w.map.n);
    }
    let json_out = chlax(&["--import-cases", path.to_str().unwrap(), "--case", "IV.3", "--n", "1", "--oracle-samples", "5", "--format", "json"]);
    assert_eq!(json_out.status.code(), Some(0));
    let report = parse_json(&String::from_utf8(json_out.stdout).unwrap()).unwrap();
    assert_eq!(report.cases.len(), 1);
}
