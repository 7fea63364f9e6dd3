use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use chlax_core::expr::{parse, Equation, PdeSystem, Syntax};
use chlax_core::lax::{
    build_ch_lax, ch_context, check_recursion_form, compatibility, specialize_flow, Flow, Hierarchy, Schedule,
};
use chlax_core::oracle::{
    certify_appendix, certify_case, certify_case_mutation, certify_compatibility, certify_section6,
    certify_symmetries, Certificate, OracleConfig,
};
use chlax_core::reduction::{
    appendix_pull_back, case_registry, verify_case, verify_reversal, verify_section6, CaseReport, CaseSpec, StageOutcome,
};
use chlax_core::symmetry::{
    family_xi1, family_xi2, family_xi3, symmetry_context, verify_symmetry, SymmetryCandidate, SymmetryOptions,
    SymmetryTarget,
};

use crate::config::{CaseFilter, RunConfig};

/// Version of the JSON report layout.
pub const REPORT_VERSION: u32 = 1;

/// Assumptions that hold for every run.
const GLOBAL_ASSUMPTIONS: [&str; 4] = [
    "the spectral parameter is transcendental: coefficients of distinct powers vanish separately",
    "A1, B1, C1 are opaque functions of t",
    "fractional powers and logarithms take the principal branch on positive arguments",
    "oracle samples draw positive rationals for variables, parameters and undifferentiated functions",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Lax,
    Symmetry,
    Appendix,
    Stationary,
}

impl Section {
    pub fn label(self) -> &'static str {
        match self {
            Section::Lax => "lax pair",
            Section::Symmetry => "symmetry",
            Section::Appendix => "appendix",
            Section::Stationary => "stationary",
        }
    }
}

/// Outcome of a check that is not a reduction case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub section: Section,
    pub id: String,
    pub n: u32,
    pub passed: bool,
    pub stages: Vec<StageOutcome>,
    pub assumptions: Vec<String>,
}

impl CheckReport {
    fn new(section: Section, id: String, n: u32, stages: Vec<StageOutcome>) -> CheckReport {
        CheckReport {
            section,
            id,
            n,
            passed: stages.iter().all(|s| s.passed),
            stages,
            assumptions: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Wall-clock time of one stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Timing {
    pub label: String,
    pub stage: String,
    pub elapsed: Duration,
}

/// Result of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub config: Option<RunConfig>,
    pub checks: Vec<CheckReport>,
    pub cases: Vec<CaseReport>,
    pub oracle: Vec<Certificate>,
    pub assumptions: Vec<String>,
    pub verdict: Verdict,
    /// Kept out of JSON so that identical configs give identical bytes.
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl Report {
    pub fn empty() -> Report {
        Report {
            version: REPORT_VERSION,
            config: None,
            checks: Vec::new(),
            cases: Vec::new(),
            oracle: Vec::new(),
            assumptions: Vec::new(),
            verdict: Verdict::Pass,
            timings: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn finish(&mut self) {
        let ok = self.checks.iter().all(|c| c.passed)
            && self.cases.iter().all(|c| c.passed)
            && self.oracle.iter().all(|c| c.passed);
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
        let mut set: BTreeSet<String> = GLOBAL_ASSUMPTIONS.iter().map(|s| s.to_string()).collect();
        for c in &self.checks {
            set.extend(c.assumptions.iter().cloned());
        }
        for c in &self.cases {
            set.extend(c.assumptions.iter().cloned());
        }
        self.assumptions = set.into_iter().collect();
    }
}

#[derive(Clone, Debug)]
enum Job {
    Lax(u32),
    Symmetry(u32),
    Case(CaseSpec),
    Appendix(u32, u32),
    Stationary(u32),
    OracleCompatibility(u32),
    OracleSymmetry(u32),
    OracleCase(CaseSpec),
    OracleAppendix(u32, u32),
    OracleStationary(u32),
}

enum Output {
    Checks(Vec<CheckReport>),
    Case(CaseReport),
    Certificates(Vec<(Certificate, Duration)>),
}

impl Output {
    fn passed(&self) -> bool {
        match self {
            Output::Checks(v) => v.iter().all(|c| c.passed),
            Output::Case(c) => c.passed,
            Output::Certificates(v) => v.iter().all(|(c, _)| c.passed),
        }
    }
}

/// Builtin registry for every level in `cfg.reduction_n`.
pub fn builtin_registry(cfg: &RunConfig) -> Vec<CaseSpec> {
    cfg.reduction_n.iter().flat_map(|&n| case_registry(n)).collect()
}

/// Runs the builtin registry.
pub fn run(cfg: &RunConfig) -> Report {
    run_with_registry(cfg, &builtin_registry(cfg))
}

fn appendix_selected(filter: &CaseFilter, k: u32) -> bool {
    filter.selects(&format!("I.{k}")) || filter.selects(&format!("II.{k}"))
}

fn plan(cfg: &RunConfig, registry: &[CaseSpec]) -> Vec<Job> {
    let mut jobs = Vec::new();
    let cases: Vec<&CaseSpec> = registry
        .iter()
        .filter(|c| cfg.reduction_n.contains(&c.map.n) && cfg.cases.selects(&c.map.id))
        .collect();
    let has = |id: &str, n: u32| registry.iter().any(|c| c.map.id == id && c.map.n == n);
    jobs.extend(cfg.n.iter().map(|&n| Job::Lax(n)));
    jobs.extend(cfg.reduction_n.iter().map(|&n| Job::Symmetry(n)));
    jobs.extend(cases.iter().map(|c| Job::Case((*c).clone())));
    let appendix: Vec<(u32, u32)> = cfg
        .reduction_n
        .iter()
        .flat_map(|&n| (1..=5).map(move |k| (k, n)))
        .filter(|&(k, n)| appendix_selected(&cfg.cases, k) && has(&format!("I.{k}"), n) && has(&format!("II.{k}"), n))
        .collect();
    jobs.extend(appendix.iter().map(|&(k, n)| Job::Appendix(k, n)));
    jobs.extend(cfg.n.iter().map(|&n| Job::Stationary(n)));
    jobs.extend(cfg.n.iter().map(|&n| Job::OracleCompatibility(n)));
    jobs.extend(cfg.reduction_n.iter().map(|&n| Job::OracleSymmetry(n)));
    jobs.extend(
        cases
            .iter()
            .filter(|c| c.expected.is_some())
            .map(|c| Job::OracleCase((*c).clone())),
    );
    jobs.extend(appendix.iter().map(|&(k, n)| Job::OracleAppendix(k, n)));
    jobs.extend(cfg.n.iter().map(|&n| Job::OracleStationary(n)));
    jobs
}

/// Runs `cfg` against `registry`. Jobs run in parallel and are merged in
/// plan order; with `fail_fast` they run in order and stop at the first failure.
pub fn run_with_registry(cfg: &RunConfig, registry: &[CaseSpec]) -> Report {
    let jobs = plan(cfg, registry);
    let oracle = OracleConfig {
        samples: cfg.oracle_samples,
        seed: cfg.seed,
    };
    let outputs: Vec<Output> = if cfg.fail_fast {
        let mut out = Vec::new();
        for j in &jobs {
            let o = execute(j, oracle);
            let stop = !o.passed();
            out.push(o);
            if stop {
                break;
            }
        }
        out
    } else {
        jobs.par_iter().map(|j| execute(j, oracle)).collect()
    };
    let mut report = Report::empty();
    report.config = Some(cfg.clone());
    for o in outputs {
        match o {
            Output::Checks(v) => {
                for c in v {
                    let label = format!("{} {} n={}", c.section.label(), c.id, c.n);
                    push_timings(&mut report.timings, &label, &c.stages);
                    report.checks.push(c);
                }
            }
            Output::Case(c) => {
                push_timings(&mut report.timings, &format!("case {} n={}", c.id, c.n), &c.stages);
                report.cases.push(c);
            }
            Output::Certificates(v) => {
                for (c, t) in v {
                    report.timings.push(Timing {
                        label: "oracle".into(),
                        stage: c.name.clone(),
                        elapsed: t,
                    });
                    report.oracle.push(c);
                }
            }
        }
    }
    let order: Vec<&str> = registry.iter().map(|c| c.map.id.as_str()).collect();
    let rank = |id: &str| order.iter().position(|x| *x == id).unwrap_or(usize::MAX);
    report.cases.sort_by(|a, b| (rank(&a.id), a.n).cmp(&(rank(&b.id), b.n)));
    report.finish();
    report
}

fn push_timings(out: &mut Vec<Timing>, label: &str, stages: &[StageOutcome]) {
    for s in stages {
        out.push(Timing {
            label: label.into(),
            stage: s.stage.clone(),
            elapsed: s.elapsed,
        });
    }
}

fn timed(f: impl FnOnce() -> Certificate) -> (Certificate, Duration) {
    let start = Instant::now();
    let c = f();
    (c, start.elapsed())
}

fn execute(job: &Job, oracle: OracleConfig) -> Output {
    match job {
        Job::Lax(n) => Output::Checks(vec![lax_checks(*n)]),
        Job::Symmetry(n) => Output::Checks(symmetry_checks(*n)),
        Job::Case(c) => Output::Case(verify_case(c)),
        Job::Appendix(k, n) => Output::Checks(vec![appendix_check(*k, *n)]),
        Job::Stationary(n) => Output::Checks(vec![stationary_check(*n)]),
        Job::OracleCompatibility(n) => Output::Certificates(vec![timed(|| certify_compatibility(*n, oracle))]),
        Job::OracleSymmetry(n) => {
            let start = Instant::now();
            let v = certify_symmetries(*n, oracle);
            let each = start.elapsed() / v.len().max(1) as u32;
            Output::Certificates(v.into_iter().map(|c| (c, each)).collect())
        }
        Job::OracleCase(c) => {
            let mut v: Vec<(Certificate, Duration)> = Vec::new();
            let start = Instant::now();
            let certs = certify_case(c, oracle);
            let each = start.elapsed() / certs.len().max(1) as u32;
            v.extend(certs.into_iter().map(|x| (x, each)));
            v.push(timed(|| certify_case_mutation(c, oracle)));
            Output::Certificates(v)
        }
        Job::OracleAppendix(k, n) => Output::Certificates(vec![
            timed(|| certify_appendix(*k, *n, false, oracle)),
            timed(|| certify_appendix(*k, *n, true, oracle)),
        ]),
        Job::OracleStationary(n) => Output::Certificates(vec![
            timed(|| certify_section6(*n, false, oracle)),
            timed(|| certify_section6(*n, true, oracle)),
        ]),
    }
}

/// Runs `f` as a stage named `name`: residuals on failure, errors as failures.
fn stage(name: &str, f: impl FnOnce() -> Result<Vec<String>, String>) -> StageOutcome {
    let start = Instant::now();
    let mut out = match f() {
        Ok(res) => StageOutcome::from_residuals(name, res),
        Err(e) => StageOutcome::failed(name, e),
    };
    out.elapsed = start.elapsed();
    out
}

fn system_difference(got: &PdeSystem, want: &PdeSystem) -> Vec<String> {
    let (extra, missing) = got.difference(want);
    let mut v: Vec<String> = extra
        .iter()
        .map(|e| format!("unexpected: {}", e.render(Syntax::Text)))
        .collect();
    v.extend(missing.iter().map(|e| format!("missing: {}", e.render(Syntax::Text))));
    v
}

/// Compatibility, recursion form and flow specializations at level `n`.
pub fn lax_checks(n: u32) -> CheckReport {
    let ctx = ch_context(n);
    let mut derived = Err("compatibility was not computed".to_string());
    let hierarchy = Hierarchy::ch(n, &ctx).map_err(|e| e.to_string());
    // The printed system: the hierarchy plus the evolution of the spectral parameter.
    let expected = hierarchy.clone().and_then(|h| {
        let mut sys = h.equations;
        let niso = parse(&format!("lam_y - lam^{n}*lam_t"), &ctx).map_err(|e| e.to_string())?;
        if let Some(eq) = Equation::from_expr(&niso, &ctx) {
            sys.push(eq);
        }
        Ok(sys)
    });
    // Timed from the Lax pair onwards.
    let mut stages = vec![stage("compatibility", || {
        derived = build_ch_lax(n, &ctx)
            .and_then(|lp| compatibility(&lp, &ctx, Schedule::CrossRules))
            .map_err(|e| e.to_string());
        let d = derived.as_ref().map_err(Clone::clone)?;
        let e = expected.as_ref().map_err(Clone::clone)?;
        Ok(system_difference(&d.system, e))
    })];
    stages.push(stage("elimination order independence", || {
        let d = derived.as_ref().map_err(Clone::clone)?;
        let lp = build_ch_lax(n, &ctx).map_err(|e| e.to_string())?;
        let other = compatibility(&lp, &ctx, Schedule::DirectDifference).map_err(|e| e.to_string())?;
        Ok(system_difference(&other.system, &d.system))
    }));
    stages.push(stage("recursion form", || {
        let h = hierarchy.as_ref().map_err(Clone::clone)?;
        let ok = check_recursion_form(h, &ctx).map_err(|e| e.to_string())?;
        Ok(if ok {
            vec![]
        } else {
            vec!["chained operator statements disagree with the hierarchy".into()]
        })
    }));
    stages.push(stage("flow specializations", || {
        let d = derived.as_ref().map_err(Clone::clone)?;
        let e = expected.as_ref().map_err(Clone::clone)?;
        let mut res = Vec::new();
        for (flow, label) in [(Flow::YToX, "y -> x"), (Flow::YToT, "y -> t")] {
            let a = specialize_flow(&d.system, flow, &ctx).map_err(|e| e.to_string())?;
            let b = specialize_flow(e, flow, &ctx).map_err(|e| e.to_string())?;
            res.extend(system_difference(&a, &b).into_iter().map(|r| format!("{label}: {r}")));
        }
        Ok(res)
    }));
    stages.push(stage("reversal symmetry", || {
        verify_reversal(n).map(|s| s.residuals).map_err(|e| e.to_string())
    }));
    let mut c = CheckReport::new(Section::Lax, "compatibility".into(), n, stages);
    c.assumptions.push(GLOBAL_ASSUMPTIONS[0].into());
    c
}

fn symmetry_stage(name: &str, c: &SymmetryCandidate, side: bool, expect_pass: bool, assumptions: &mut Vec<String>) -> StageOutcome {
    stage(name, || {
        let ctx = symmetry_context(c.n).map_err(|e| e.to_string())?;
        let target = SymmetryTarget::ch(c.n, &ctx).map_err(|e| e.to_string())?;
        let opts = SymmetryOptions {
            use_side_constraints: side,
            ..Default::default()
        };
        let r = verify_symmetry(c, &target, opts, &ctx).map_err(|e| e.to_string())?;
        assumptions.extend(r.assumptions.iter().cloned());
        Ok(match (r.passed, expect_pass) {
            (true, true) | (false, false) => vec![],
            (false, true) => r
                .residuals
                .iter()
                .map(|x| format!("{} [{}]: {}", x.equation, x.jets, x.residual))
                .collect(),
            (true, false) => vec!["candidate passed although it was expected to fail".into()],
        })
    })
}

/// The three symmetry families at level `n`.
pub fn symmetry_checks(n: u32) -> Vec<CheckReport> {
    let ctx = match symmetry_context(n) {
        Ok(c) => c,
        Err(e) => {
            return vec![CheckReport::new(
                Section::Symmetry,
                "context".into(),
                n,
                vec![StageOutcome::failed("context", e.to_string())],
            )]
        }
    };
    let mut out = Vec::new();
    let mut add = |id: &str, built: Result<SymmetryCandidate, String>, runs: &[(&str, bool, bool)]| {
        let mut assumptions = Vec::new();
        let stages = match built {
            Ok(c) => runs
                .iter()
                .map(|&(name, side, expect)| symmetry_stage(name, &c, side, expect, &mut assumptions))
                .collect(),
            Err(e) => vec![StageOutcome::failed("construction", e)],
        };
        let mut r = CheckReport::new(Section::Symmetry, id.into(), n, stages);
        assumptions.sort();
        assumptions.dedup();
        r.assumptions = assumptions;
        out.push(r);
    };
    add(
        "xi3 family",
        family_xi3(n, &ctx).map_err(|e| e.to_string()),
        &[("determining equations", false, true)],
    );
    add(
        "xi2 family",
        family_xi2(n, &ctx).map_err(|e| e.to_string()),
        &[("determining equations", false, true)],
    );
    for sign in [1i64, -1] {
        add(
            &format!("xi1 family ({sign:+})"),
            family_xi1(n, sign, true, &ctx).map_err(|e| e.to_string()),
            &[
                ("rejected without side constraints", false, false),
                ("determining equations with M_t = M_y = 0", true, true),
            ],
        );
    }
    out
}

/// Second-kind reduction `II.k` against the reduced pair of `I.k`.
pub fn appendix_check(k: u32, n: u32) -> CheckReport {
    let stages = vec![
        stage("equivalence", || {
            let pb = appendix_pull_back(k, n, false).map_err(|e| e.to_string())?;
            Ok(if pb.passed() {
                vec![]
            } else {
                pb.residuals
                    .iter()
                    .filter(|r| !r.is_zero())
                    .map(chlax_core::expr::render_text)
                    .collect()
            })
        }),
        stage("mutation rejected", || {
            let pb = appendix_pull_back(k, n, true).map_err(|e| e.to_string())?;
            Ok(if pb.passed() {
                vec!["mutated prefactor still reduces to the same pair".into()]
            } else {
                vec![]
            })
        }),
    ];
    CheckReport::new(Section::Appendix, format!("II.{k} ~ I.{k}"), n, stages)
}

/// Stationary solution with constant amplitude, and its rejection when the
/// amplitude depends on `t`.
pub fn stationary_check(n: u32) -> CheckReport {
    let mut a = verify_section6(n, false).unwrap_or_else(|e| StageOutcome::failed("stationary solution", e.to_string()));
    a.stage = "constant amplitude".into();
    let b = stage("time-dependent amplitude rejected", || {
        let s = verify_section6(n, true).map_err(|e| e.to_string())?;
        Ok(if s.passed {
            vec!["H0(t) still solves the hierarchy".into()]
        } else {
            vec![]
        })
    });
    CheckReport::new(Section::Stationary, "stationary solution".into(), n, vec![a, b])
}
