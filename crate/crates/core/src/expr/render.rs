//! Text and LaTeX rendering. Text output parses back to the same expression.

use num_traits::{One, Signed, Zero};

use super::atom::{Atom, Frac, Monomial};
use super::poly::{Coeff, Poly};
use super::ratfunc::{frac_to_coeff, Expr};

/// Output syntax for [`render`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Syntax {
    Text,
    Latex,
}

pub fn render(e: &Expr, syntax: Syntax) -> String {
    match syntax {
        Syntax::Text => render_text(e),
        Syntax::Latex => render_latex(e),
    }
}

// ---------------------------------------------------------------------------
// Text

pub fn render_text(e: &Expr) -> String {
    let num = poly_text(e.num());
    if e.den().is_empty() {
        return num;
    }
    let num = if e.num().len() > 1 { format!("({num})") } else { num };
    // One division per factor: parsing a product would expand it into a
    // single factor and lose the stored factorization.
    let mut out = num;
    for (f, k) in e.den() {
        out.push_str(&format!("/({})", poly_text(f)));
        if *k > 1 {
            out.push_str(&format!("^{k}"));
        }
    }
    out
}

fn poly_text(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().enumerate() {
        let body = term_text(m, &c.abs());
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    out
}

fn term_text(m: &Monomial, c: &Coeff) -> String {
    let mono = monomial_text(m);
    if mono.is_empty() {
        return c.to_string();
    }
    if c.is_one() {
        mono
    } else {
        format!("{c}*{mono}")
    }
}

fn monomial_text(m: &Monomial) -> String {
    let parts: Vec<String> = m.factors().iter().map(|(a, e)| factor_text(a, *e)).collect();
    parts.join("*")
}

fn factor_text(a: &Atom, e: Frac) -> String {
    if let Atom::Exp(arg) = a {
        let scaled = arg.scale(&frac_to_coeff(e));
        return format!("exp({})", render_text(&scaled));
    }
    let base = match a {
        Atom::Var(s) | Atom::Param(s) => s.to_string(),
        Atom::Jet(f, idx) if idx.is_empty() => f.to_string(),
        Atom::Jet(f, idx) => format!("{f}_{}", idx.suffix()),
        Atom::Log(arg) => format!("log({})", render_text(arg)),
        Atom::Root(p) => format!("({})", poly_text(p)),
        Atom::Surd(s) if s.is_negative() => format!("({s})"),
        Atom::Surd(s) => s.to_string(),
        Atom::Exp(_) => unreachable!(),
    };
    if e.is_one() {
        base
    } else if e.is_integer() && e > Frac::zero() {
        format!("{base}^{e}")
    } else {
        format!("{base}^({e})")
    }
}

// ---------------------------------------------------------------------------
// LaTeX

pub fn render_latex(e: &Expr) -> String {
    let num = poly_latex(e.num());
    if e.den().is_empty() {
        return num;
    }
    let den: Vec<String> = e
        .den()
        .iter()
        .map(|(f, k)| {
            let s = format!("\\left({}\\right)", poly_latex(f));
            if *k == 1 {
                s
            } else {
                format!("{s}^{{{k}}}")
            }
        })
        .collect();
    format!("\\frac{{{num}}}{{{}}}", den.join(" "))
}

fn poly_latex(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().enumerate() {
        let body = term_latex(m, &c.abs());
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        }
        out.push_str(&body);
    }
    out
}

fn coeff_latex(c: &Coeff) -> String {
    if c.is_integer() {
        c.to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

fn term_latex(m: &Monomial, c: &Coeff) -> String {
    let mono: Vec<String> = m.factors().iter().map(|(a, e)| factor_latex(a, *e)).collect();
    let mono = mono.join(" ");
    if mono.is_empty() {
        return coeff_latex(c);
    }
    if c.is_one() {
        mono
    } else {
        format!("{} {mono}", coeff_latex(c))
    }
}

/// LaTeX spelling of a bare symbol name.
pub fn latex_name(name: &str) -> String {
    match name {
        "psi" => return "\\psi".into(),
        "Phi" => return "\\Phi".into(),
        "lam" => return "\\lambda".into(),
        "Lam" => return "\\Lambda".into(),
        "lam0" => return "\\lambda_0".into(),
        "z1" => return "z_1".into(),
        "z2" => return "z_2".into(),
        _ => {}
    }
    let letters: String = name.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let digits = &name[letters.len()..];
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return name.to_string();
    }
    if letters == "U" || letters == "V" {
        format!("{letters}^{{[{digits}]}}")
    } else {
        format!("{letters}_{{{digits}}}")
    }
}

fn factor_latex(a: &Atom, e: Frac) -> String {
    if let Atom::Exp(arg) = a {
        let scaled = arg.scale(&frac_to_coeff(e));
        return format!("e^{{{}}}", render_latex(&scaled));
    }
    if let Atom::Surd(s) = a {
        if s.is_negative() && e == Frac::new(1, 2) {
            return "i".into();
        }
    }
    let base = match a {
        Atom::Var(s) | Atom::Param(s) => latex_name(s),
        Atom::Jet(f, idx) if idx.is_empty() => latex_name(f),
        Atom::Jet(f, idx) => {
            let sub: Vec<String> = idx.expanded().iter().map(|v| latex_name(v)).collect();
            let base = latex_name(f);
            if base.contains('_') {
                format!("\\left({base}\\right)_{{{}}}", sub.join(""))
            } else {
                format!("{base}_{{{}}}", sub.join(""))
            }
        }
        Atom::Log(arg) => format!("\\ln\\left({}\\right)", render_latex(arg)),
        Atom::Root(p) => format!("\\left({}\\right)", poly_latex(p)),
        Atom::Surd(s) if s.is_negative() => "\\left(-1\\right)".into(),
        Atom::Surd(s) => s.to_string(),
        Atom::Exp(_) => unreachable!(),
    };
    if e.is_one() {
        base
    } else if e.is_integer() {
        format!("{base}^{{{e}}}")
    } else {
        format!("{base}^{{{}/{}}}", e.numer(), e.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::context::{Context, FnKind};
    use crate::expr::parse::parse;

    fn ctx() -> Context {
        let mut c = Context::with_vars(&["x", "y", "t"]);
        c.add_function("lam", &["y", "t"], FnKind::Field);
        c.add_function("M", &["x", "y", "t"], FnKind::Field);
        c.add_function("U1", &["x", "y", "t"], FnKind::Field);
        c
    }

    #[test]
    fn text_round_trips() {
        let c = ctx();
        for src in [
            "lam_y - lam^2*lam_t",
            "M_y - U1_x + U1_xxx",
            "exp(-x/2)*(1 + x)^(1/2)",
            "(x + y)/(1 + x)^2",
            "x/((1 + x^2)*(1 + y))/(1 + y)",
            "(-1)^(1/2)*2^(1/2)*M^(1/2)",
            "log(1 + x^2)*exp(a0*t/b3)",
        ] {
            let e = parse(src, &c).unwrap();
            let back = parse(&render_text(&e), &c).unwrap();
            assert_eq!(back, e, "{src}");
        }
    }

    #[test]
    fn canonical_text_of_hierarchy_terms() {
        let c = ctx();
        assert_eq!(render_text(&parse("-lam^2*lam_t + lam_y", &c).unwrap()), "lam_y - lam^2*lam_t");
        assert_eq!(render_text(&parse("U1_xxx + M_y - U1_x", &c).unwrap()), "M_y - U1_x + U1_xxx");
    }

    #[test]
    fn latex_names() {
        let c = ctx();
        let e = parse("lam^2*U1_x", &c).unwrap();
        assert_eq!(render_latex(&e), "U^{[1]}_{x} \\lambda^{2}");
    }
}
