//! End-to-end acceptance run: one PASS/FAIL line per criterion.

use std::time::{Duration, Instant};

use chlax_cli::emit::json;
use chlax_cli::runner::{CheckReport, Section};
use chlax_cli::{run, Report, RunConfig};
use chlax_core::expr::{parse, Equation};
use chlax_core::lax::{build_ch_lax, ch_context, compatibility, Hierarchy, Schedule};
use chlax_core::oracle::Expectation;
use chlax_core::reduction::StageOutcome;

const CASES: [&str; 9] = ["I.1", "I.2", "I.3", "I.4", "I.5", "IV.1", "IV.2", "IV.3", "IV.4"];

struct Criterion {
    failures: Vec<String>,
    detail: String,
}

impl Criterion {
    fn new() -> Criterion {
        Criterion {
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn total(stages: &[StageOutcome]) -> Duration {
    stages.iter().map(|s| s.elapsed).sum()
}

fn checks<'a>(r: &'a Report, section: Section, id: &'a str) -> impl Iterator<Item = &'a CheckReport> {
    r.checks.iter().filter(move |c| c.section == section && c.id == id)
}

fn hierarchy_derivation() -> Criterion {
    let mut c = Criterion::new();
    let mut worst = Duration::ZERO;
    for n in 1..=3 {
        let ctx = ch_context(n);
        let start = Instant::now();
        let derived = build_ch_lax(n, &ctx).and_then(|lp| compatibility(&lp, &ctx, Schedule::CrossRules));
        let elapsed = start.elapsed();
        worst = worst.max(elapsed);
        let mut want = Hierarchy::ch(n, &ctx).expect("hierarchy").equations;
        let niso = parse(&format!("lam_y - lam^{n}*lam_t"), &ctx).expect("parses");
        want.push(Equation::from_expr(&niso, &ctx).expect("nonzero"));
        match derived {
            Ok(d) => c.require(d.system.same_as(&want), || format!("n={n}: derived system differs")),
            Err(e) => c.failures.push(format!("n={n}: {e}")),
        }
        c.require(elapsed < Duration::from_secs(5), || format!("n={n}: took {elapsed:?}"));
    }
    c.detail = format!("slowest {worst:.2?}");
    c
}

fn symmetry_families(r: &Report) -> Criterion {
    let mut c = Criterion::new();
    let mut worst = Duration::ZERO;
    for id in ["xi3 family", "xi2 family", "xi1 family (+1)", "xi1 family (-1)"] {
        for n in 1..=2 {
            let Some(chk) = checks(r, Section::Symmetry, id).find(|x| x.n == n) else {
                c.failures.push(format!("{id} n={n}: missing"));
                continue;
            };
            let t = total(&chk.stages);
            worst = worst.max(t);
            c.require(chk.passed, || format!("{id} n={n}: failed"));
            c.require(t < Duration::from_secs(30), || format!("{id} n={n}: took {t:?}"));
        }
    }
    c.detail = format!("slowest family {worst:.2?}");
    c
}

fn reductions(r: &Report) -> Criterion {
    let mut c = Criterion::new();
    let mut worst = Duration::ZERO;
    let required = ["jacobian closure", "invariance", "pull-back", "parameter relation", "reduced hierarchy"];
    for id in CASES {
        for n in 1..=2 {
            let Some(case) = r.cases.iter().find(|x| x.id == id && x.n == n) else {
                c.failures.push(format!("{id} n={n}: missing"));
                continue;
            };
            for name in required {
                let ok = case.stages.iter().any(|s| s.stage == name && s.passed);
                c.require(ok, || format!("{id} n={n}: stage `{name}` missing or failed"));
            }
            c.require(case.passed, || format!("{id} n={n}: failed"));
            c.require(
                !case.cofactors.is_empty() && case.cofactors.iter().all(|f| f != "0"),
                || format!("{id} n={n}: cofactors {:?}", case.cofactors),
            );
            let t = total(&case.stages);
            worst = worst.max(t);
            c.require(t < Duration::from_secs(10), || format!("{id} n={n}: took {t:?}"));
        }
    }
    c.detail = format!("slowest case {worst:.2?}");
    c
}

fn second_kind_equivalence(r: &Report) -> Criterion {
    let mut c = Criterion::new();
    for k in 1..=5 {
        let id = format!("II.{k} ~ I.{k}");
        for n in 1..=2 {
            let ok = checks(r, Section::Appendix, &id).any(|x| x.n == n && x.passed);
            c.require(ok, || format!("{id} n={n}: missing or failed"));
        }
    }
    c
}

fn stationary(r: &Report) -> Criterion {
    let mut c = Criterion::new();
    for n in 1..=3 {
        let Some(chk) = checks(r, Section::Stationary, "stationary solution").find(|x| x.n == n) else {
            c.failures.push(format!("n={n}: missing"));
            continue;
        };
        for s in &chk.stages {
            c.require(s.passed, || format!("n={n}: {} failed", s.stage));
        }
        c.require(chk.stages.len() == 2, || format!("n={n}: expected two stages"));
    }
    c
}

fn autonomy(r: &Report) -> Criterion {
    let mut c = Criterion::new();
    for (id, want) in [("I.4", true), ("I.5", false), ("IV.4", false)] {
        for n in 1..=2 {
            let got = r
                .cases
                .iter()
                .find(|x| x.id == id && x.n == n)
                .and_then(|x| x.reduced.as_ref())
                .map(|x| x.autonomous);
            c.require(got == Some(want), || format!("{id} n={n}: autonomous = {got:?}"));
        }
    }
    c
}

fn oracle(r: &Report) -> Criterion {
    let mut c = Criterion::new();
    let mut worst = 0f64;
    let (mut zeros, mut mutations) = (0, 0);
    for cert in &r.oracle {
        c.require(cert.passed, || format!("{}: {:?}", cert.name, cert.failure));
        match cert.expectation {
            Expectation::Equal => {
                zeros += 1;
                worst = worst.max(cert.max_relative);
                c.require(cert.samples >= 100, || format!("{}: {} samples", cert.name, cert.samples));
                c.require(cert.max_relative < 1e-9, || {
                    format!("{}: residual {:e}", cert.name, cert.max_relative)
                });
            }
            Expectation::Differ => {
                mutations += 1;
                c.require(cert.differing_samples >= 1, || format!("{}: mutation not seen", cert.name));
            }
        }
    }
    c.require(zeros > 0 && mutations > 0, || "no certificates".into());
    c.detail = format!("{zeros} zeros, {mutations} mutations, max residual {worst:.1e}");
    c
}

#[test]
fn acceptance_criteria() {
    let cfg = RunConfig::default();
    let start = Instant::now();
    let first = run(&cfg);
    let first_time = start.elapsed();
    let second = run(&cfg);
    let (a, b) = (json(&first), json(&second));
    let mut determinism = Criterion::new();
    determinism.require(a == b, || "reports differ".into());
    determinism.detail = format!("{} bytes, run {first_time:.1?}", a.len());

    let results = [
        ("1 compatibility equals the hierarchy", hierarchy_derivation()),
        ("2 symmetry families", symmetry_families(&first)),
        ("3 reductions I.1-I.5, IV.1-IV.4", reductions(&first)),
        ("4 second-kind equivalence", second_kind_equivalence(&first)),
        ("5 stationary solution", stationary(&first)),
        ("6 autonomy labels", autonomy(&first)),
        ("7 numeric oracle", oracle(&first)),
        ("8 deterministic JSON", determinism),
    ];
    let mut failed = Vec::new();
    for (name, c) in &results {
        let mark = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        let detail = if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) };
        println!("{mark} criterion {name}{detail}");
        for f in &c.failures {
            println!("     {f}");
        }
        if !c.failures.is_empty() {
            failed.push(*name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
