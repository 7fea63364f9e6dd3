use std::fmt::Write;

use chlax_core::reduction::{CaseReport, StageOutcome};

use crate::config::Format;
use crate::runner::{Report, Verdict};

/// Renders `report` in `format`.
pub fn emit(report: &Report, format: Format) -> String {
    match format {
        Format::Text => text(report),
        Format::Latex => latex(report),
        Format::Json => json(report),
    }
}

/// Pretty JSON with a trailing newline; parsing and re-emitting gives the same bytes.
pub fn json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

pub fn parse_json(s: &str) -> Result<Report, serde_json::Error> {
    serde_json::from_str(s)
}

fn mark(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn stage_lines(out: &mut String, stages: &[StageOutcome]) {
    for s in stages {
        let _ = writeln!(out, "    {} {}", mark(s.passed), s.stage);
        if !s.passed {
            for r in &s.residuals {
                let _ = writeln!(out, "        residual: {r}");
            }
        }
    }
}

/// Human-readable summary, including per-stage timings.
pub fn text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "chlax report (schema {})", report.version);
    if !report.checks.is_empty() {
        let _ = writeln!(out, "\nchecks");
        for c in &report.checks {
            let _ = writeln!(out, "  {} {} {} n={}", mark(c.passed), c.section.label(), c.id, c.n);
            stage_lines(&mut out, &c.stages);
        }
    }
    if !report.cases.is_empty() {
        let _ = writeln!(out, "\nreduction cases");
        for c in &report.cases {
            let auto = match &c.reduced {
                Some(r) if r.autonomous => " (autonomous)",
                Some(_) => " (non-autonomous)",
                None => "",
            };
            let _ = writeln!(out, "  {} {} n={}{auto}", mark(c.passed), c.id, c.n);
            stage_lines(&mut out, &c.stages);
        }
    }
    if !report.oracle.is_empty() {
        let passed = report.oracle.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "\noracle: {passed}/{} certificates", report.oracle.len());
        for c in report.oracle.iter().filter(|c| !c.passed) {
            let _ = writeln!(
                out,
                "  FAIL {}: {}",
                c.name,
                c.failure.as_deref().unwrap_or("no reason recorded")
            );
        }
    }
    if !report.assumptions.is_empty() {
        let _ = writeln!(out, "\nassumptions");
        for a in &report.assumptions {
            let _ = writeln!(out, "  - {a}");
        }
    }
    if !report.timings.is_empty() {
        let _ = writeln!(out, "\ntimings");
        for t in &report.timings {
            let _ = writeln!(out, "  {:>10.3} ms  {} / {}", t.elapsed.as_secs_f64() * 1e3, t.label, t.stage);
        }
    }
    let verdict = match report.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
    };
    let _ = writeln!(out, "\nverdict: {verdict}");
    out
}

fn escape(s: &str) -> String {
    let mut out = String::new();
    for ch in s.chars() {
        match ch {
            '_' | '&' | '%' | '#' | '$' | '{' | '}' => {
                out.push('\\');
                out.push(ch);
            }
            '\\' => out.push_str("\\textbackslash{}"),
            '^' => out.push_str("\\^{}"),
            '~' => out.push_str("\\~{}"),
            _ => out.push(ch),
        }
    }
    out
}

fn latex_case(out: &mut String, c: &CaseReport) {
    let _ = writeln!(out, "\\section*{{Case {}, $n = {}$: {}}}", escape(&c.id), c.n, mark(c.passed));
    if let Some(r) = &c.reduced {
        let _ = writeln!(out, "Reduced spectral problem:");
        let _ = writeln!(out, "\\begin{{align*}}");
        let mut rows = vec![r.latex.spatial.clone(), r.latex.temporal.clone()];
        rows.extend(r.latex.ode.iter().cloned());
        let _ = writeln!(out, "{}", rows.join(" \\\\\n"));
        let _ = writeln!(out, "\\end{{align*}}");
        let label = if r.autonomous { "autonomous" } else { "non-autonomous" };
        let _ = writeln!(out, "Reduced hierarchy ({label}):");
        let _ = writeln!(out, "\\begin{{align*}}");
        let _ = writeln!(out, "{}", r.latex.hierarchy.join(" \\\\\n"));
        let _ = writeln!(out, "\\end{{align*}}");
    }
    let _ = writeln!(out, "\\begin{{itemize}}");
    for s in &c.stages {
        let _ = writeln!(out, "  \\item {} {}", mark(s.passed), escape(&s.stage));
        for r in s.residuals.iter().filter(|_| !s.passed) {
            let _ = writeln!(out, "  \\item[] \\texttt{{{}}}", escape(r));
        }
    }
    let _ = writeln!(out, "\\end{{itemize}}");
}

/// Standalone LaTeX document typesetting each case's reduced problem and hierarchy.
pub fn latex(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("\\documentclass{article}\n\\usepackage{amsmath}\n\\begin{document}\n");
    for c in &report.cases {
        latex_case(&mut out, c);
    }
    if !report.checks.is_empty() {
        out.push_str("\\section*{Checks}\n\\begin{itemize}\n");
        for c in &report.checks {
            let _ = writeln!(
                out,
                "  \\item {} {} {}, $n = {}$",
                mark(c.passed),
                escape(c.section.label()),
                escape(&c.id),
                c.n
            );
        }
        out.push_str("\\end{itemize}\n");
    }
    let _ = writeln!(
        out,
        "Verdict: {}.",
        if report.verdict == Verdict::Pass { "pass" } else { "fail" }
    );
    out.push_str("\\end{document}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_json_round_trips() {
        let r = Report::empty();
        let s = json(&r);
        let back = parse_json(&s).unwrap();
        assert!(back.cases.is_empty());
        assert_eq!(json(&back), s);
    }

    #[test]
    fn latex_escapes() {
        assert_eq!(escape("a_b & c"), "a\\_b \\& c");
    }
}
