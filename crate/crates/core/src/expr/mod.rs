//! Exact symbolic kernel: canonical rational expressions over atoms
//! (variables, parameters, jets, exponentials, logarithms and radicals),
//! with parsing, rendering, derivations, substitution and evaluation.

mod atom;
mod context;
mod diff;
mod equation;
mod error;
mod eval;
mod parse;
mod poly;
mod ratfunc;
mod render;
mod subst;

pub use atom::{sym, var_rank, Atom, Frac, Monomial, MultiIndex, Sym};
pub use context::{Context, FnKind, FunctionSymbol};
pub use diff::{degree_in, derive, partial, Chain};
pub use equation::{Equation, Normalized, PdeSystem};
pub use error::{KResult, KernelError};
pub use eval::{numeric_eval, Assignment, Number};
pub use parse::{instantiate, parse};
pub use poly::{Coeff, Poly};
pub use ratfunc::Expr;
pub use render::{latex_name, render, render_latex, render_text, Syntax};
pub use subst::{map_atoms, reduce_fixpoint, Binding, Substitution};

/// True when `e` is identically zero.
pub fn is_zero(e: &Expr) -> bool {
    e.is_zero()
}
