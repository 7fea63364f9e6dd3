//! Symbol tables: independent variables, function symbols with their
//! dependencies and derivative rules, and named definitions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::atom::{sym, Atom, MultiIndex, Sym};
use super::error::{KResult, KernelError};
use super::poly::Poly;
use super::ratfunc::Expr;

/// Role of a function symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnKind {
    /// Unknown field of a differential system.
    Field,
    /// Arbitrary given function (integration constants, auxiliary primitives).
    Given,
}

/// Function symbol with its dependency list and known first derivatives.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSymbol {
    pub name: Sym,
    pub deps: Vec<Sym>,
    pub kind: FnKind,
    /// Derivative rules `f_v = expr`; jets along `v` are rewritten eagerly.
    pub rules: Vec<(Sym, Expr)>,
}

impl FunctionSymbol {
    pub fn depends_on(&self, v: &str) -> bool {
        self.deps.iter().any(|d| &**d == v)
    }
}

/// Symbol table shared by parsing, differentiation and normalization.
#[derive(Clone, Debug, Default)]
pub struct Context {
    vars: Vec<Sym>,
    funcs: BTreeMap<Sym, FunctionSymbol>,
    defs: BTreeMap<Sym, Expr>,
    nonzero: BTreeSet<Sym>,
    nonzero_factors: Vec<Poly>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn with_vars(vars: &[&str]) -> Self {
        let mut c = Context::new();
        for v in vars {
            c.add_var(v);
        }
        c
    }

    pub fn add_var(&mut self, name: &str) {
        if !self.is_var(name) {
            self.vars.push(sym(name));
        }
    }

    pub fn is_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| &**v == name)
    }

    pub fn vars(&self) -> &[Sym] {
        &self.vars
    }

    pub fn add_function(&mut self, name: &str, deps: &[&str], kind: FnKind) {
        for d in deps {
            self.add_var(d);
        }
        self.funcs.insert(
            sym(name),
            FunctionSymbol {
                name: sym(name),
                deps: deps.iter().map(|d| sym(d)).collect(),
                kind,
                rules: Vec::new(),
            },
        );
    }

    /// Registers `f_v = rule`. Jets of `f` containing `v` are rewritten on creation.
    pub fn add_rule(&mut self, f: &str, v: &str, rule: Expr) -> KResult<()> {
        let fs = self
            .funcs
            .get_mut(f)
            .ok_or_else(|| KernelError::UnknownFunction(f.to_string()))?;
        if !fs.depends_on(v) {
            return Err(KernelError::UndeclaredDirection {
                func: f.into(),
                var: v.into(),
            });
        }
        fs.rules.retain(|(d, _)| &**d != v);
        fs.rules.push((sym(v), rule));
        let deps = fs.deps.clone();
        fs.rules
            .sort_by_key(|(d, _)| deps.iter().position(|x| x == d).unwrap_or(usize::MAX));
        Ok(())
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSymbol> {
        self.funcs.get(name)
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunctionSymbol> {
        self.funcs.values()
    }

    pub fn define(&mut self, name: &str, value: Expr) {
        self.defs.insert(sym(name), value);
    }

    pub fn definition(&self, name: &str) -> Option<&Expr> {
        self.defs.get(name)
    }

    pub fn remove_definition(&mut self, name: &str) {
        self.defs.remove(name);
    }

    /// Declares a parameter or a function (its zeroth jet) generically nonzero.
    pub fn declare_nonzero(&mut self, name: &str) {
        self.nonzero.insert(sym(name));
    }

    /// Declares a polynomial factor that may be divided out of equations.
    pub fn declare_nonzero_factor(&mut self, p: Poly) {
        if !self.nonzero_factors.contains(&p) {
            self.nonzero_factors.push(p);
        }
    }

    pub fn nonzero_factors(&self) -> &[Poly] {
        &self.nonzero_factors
    }

    pub fn is_nonzero_atom(&self, a: &Atom) -> bool {
        match a {
            Atom::Param(p) => self.nonzero.contains(p),
            Atom::Jet(f, idx) => idx.is_empty() && self.nonzero.contains(f),
            Atom::Exp(_) | Atom::Root(_) | Atom::Surd(_) => true,
            Atom::Var(_) | Atom::Log(_) => false,
        }
    }

    /// Jet `f_idx`, rewritten through derivative rules when one applies.
    pub fn jet(&self, f: &str, idx: &MultiIndex) -> KResult<Expr> {
        let fs = self
            .funcs
            .get(f)
            .ok_or_else(|| KernelError::UnknownFunction(f.to_string()))?;
        for (v, _) in idx.iter() {
            if !fs.depends_on(v) {
                return Err(KernelError::UndeclaredDirection {
                    func: f.into(),
                    var: v.to_string(),
                });
            }
        }
        for (v, rule) in &fs.rules {
            if let Some(rest) = idx.lowered(v) {
                let mut e = rule.clone();
                for w in rest.expanded() {
                    e = self.diff(&e, &w)?;
                }
                return Ok(e);
            }
        }
        Ok(Expr::atom(Atom::Jet(fs.name.clone(), idx.clone())))
    }

    pub fn func(&self, f: &str) -> KResult<Expr> {
        self.jet(f, &MultiIndex::empty())
    }

    /// Parses a jet name such as `psi_xxt` or `H_z1z2`.
    pub fn parse_jet_name(&self, name: &str) -> KResult<Option<(Sym, MultiIndex)>> {
        let Some((base, suffix)) = name.split_once('_') else {
            return Ok(None);
        };
        let fs = self
            .funcs
            .get(base)
            .ok_or_else(|| KernelError::UnknownFunction(base.to_string()))?;
        let mut idx = MultiIndex::empty();
        let mut rest = suffix;
        while !rest.is_empty() {
            let dep = fs
                .deps
                .iter()
                .filter(|d| rest.starts_with(&***d))
                .max_by_key(|d| d.len())
                .cloned();
            match dep {
                Some(d) => {
                    rest = &rest[d.len()..];
                    idx = idx.with(&d, 1);
                }
                None => {
                    let v: String = rest.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
                    let v = if v.is_empty() { rest.to_string() } else { v };
                    return Err(KernelError::UndeclaredDirection {
                        func: base.to_string(),
                        var: v,
                    });
                }
            }
        }
        Ok(Some((fs.name.clone(), idx)))
    }
}
