//! Plain expression trees: parsed from the text grammar, differentiated and
//! substituted without any simplification beyond folding zeros and ones.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Debug)]
pub enum Node {
    Num(BigRational),
    Var(String),
    Param(String),
    /// Function name and derivative directions, sorted.
    Jet(String, Vec<String>),
    Add(Vec<Tree>),
    Mul(Vec<Tree>),
    Pow(Tree, Tree),
    Exp(Tree),
    Log(Tree),
}

pub type Tree = Rc<Node>;

/// Evaluation key of a leaf; jets use `name_d1,d2` with sorted directions.
pub fn leaf_key(name: &str, dirs: &[String]) -> String {
    if dirs.is_empty() {
        name.to_string()
    } else {
        format!("{name}_{}", dirs.join(","))
    }
}

pub fn num(k: i64) -> Tree {
    Rc::new(Node::Num(BigRational::from_integer(k.into())))
}

pub fn rat(q: BigRational) -> Tree {
    Rc::new(Node::Num(q))
}

pub fn is_zero(t: &Tree) -> bool {
    matches!(&**t, Node::Num(q) if q.is_zero())
}

pub fn is_one(t: &Tree) -> bool {
    matches!(&**t, Node::Num(q) if q.is_one())
}

pub fn add(v: Vec<Tree>) -> Tree {
    let v: Vec<Tree> = v.into_iter().filter(|t| !is_zero(t)).collect();
    match v.len() {
        0 => num(0),
        1 => v.into_iter().next().unwrap(),
        _ => Rc::new(Node::Add(v)),
    }
}

pub fn mul(v: Vec<Tree>) -> Tree {
    if v.iter().any(is_zero) {
        return num(0);
    }
    let v: Vec<Tree> = v.into_iter().filter(|t| !is_one(t)).collect();
    match v.len() {
        0 => num(1),
        1 => v.into_iter().next().unwrap(),
        _ => Rc::new(Node::Mul(v)),
    }
}

pub fn pow(b: Tree, e: Tree) -> Tree {
    if is_zero(&e) {
        return num(1);
    }
    if is_one(&e) {
        return b;
    }
    Rc::new(Node::Pow(b, e))
}

pub fn neg(a: Tree) -> Tree {
    mul(vec![num(-1), a])
}

pub fn sub(a: Tree, b: Tree) -> Tree {
    add(vec![a, neg(b)])
}

pub fn div(a: Tree, b: Tree) -> Tree {
    mul(vec![a, pow(b, num(-1))])
}

pub fn exp(a: Tree) -> Tree {
    if is_zero(&a) {
        return num(1);
    }
    Rc::new(Node::Exp(a))
}

pub fn log(a: Tree) -> Tree {
    if is_one(&a) {
        return num(0);
    }
    Rc::new(Node::Log(a))
}

pub fn jet_leaf(name: &str, dirs: &[String]) -> Tree {
    let mut d = dirs.to_vec();
    d.sort();
    Rc::new(Node::Jet(name.into(), d))
}

/// Derivative of the leaves handled by `base`, extended by the chain,
/// product, power, exp and log rules. Shared subtrees are visited once.
pub fn derive(t: &Tree, base: &mut dyn FnMut(&Tree) -> Tree) -> Tree {
    let mut memo = HashMap::new();
    derive_memo(t, base, &mut memo)
}

fn derive_memo(t: &Tree, base: &mut dyn FnMut(&Tree) -> Tree, memo: &mut HashMap<*const Node, Tree>) -> Tree {
    let key = Rc::as_ptr(t);
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let d = match &**t {
        Node::Num(_) => num(0),
        Node::Var(_) | Node::Param(_) | Node::Jet(..) => base(t),
        Node::Add(v) => add(v.iter().map(|a| derive_memo(a, base, memo)).collect()),
        Node::Mul(v) => {
            let mut terms = Vec::new();
            for i in 0..v.len() {
                let di = derive_memo(&v[i], base, memo);
                if is_zero(&di) {
                    continue;
                }
                let mut f = v.clone();
                f[i] = di;
                terms.push(mul(f));
            }
            add(terms)
        }
        Node::Pow(b, e) => {
            let db = derive_memo(b, base, memo);
            if let Node::Num(k) = &**e {
                mul(vec![e.clone(), pow(b.clone(), rat(k - BigRational::one())), db])
            } else {
                let de = derive_memo(e, base, memo);
                let mut terms = Vec::new();
                if !is_zero(&de) {
                    terms.push(mul(vec![t.clone(), de, log(b.clone())]));
                }
                if !is_zero(&db) {
                    terms.push(mul(vec![t.clone(), e.clone(), db, pow(b.clone(), num(-1))]));
                }
                add(terms)
            }
        }
        Node::Exp(a) => mul(vec![t.clone(), derive_memo(a, base, memo)]),
        Node::Log(a) => mul(vec![derive_memo(a, base, memo), pow(a.clone(), num(-1))]),
    };
    memo.insert(key, d.clone());
    d
}

/// Rebuilds `t` with leaves replaced by `f` (`None` keeps the leaf).
pub fn substitute(t: &Tree, f: &mut dyn FnMut(&Tree) -> Option<Tree>) -> Tree {
    let mut memo = HashMap::new();
    subst_memo(t, f, &mut memo)
}

fn subst_memo(t: &Tree, f: &mut dyn FnMut(&Tree) -> Option<Tree>, memo: &mut HashMap<*const Node, Tree>) -> Tree {
    let key = Rc::as_ptr(t);
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let r = match &**t {
        Node::Num(_) => t.clone(),
        Node::Var(_) | Node::Param(_) | Node::Jet(..) => f(t).unwrap_or_else(|| t.clone()),
        Node::Add(v) => add(v.iter().map(|a| subst_memo(a, f, memo)).collect()),
        Node::Mul(v) => mul(v.iter().map(|a| subst_memo(a, f, memo)).collect()),
        Node::Pow(b, e) => pow(subst_memo(b, f, memo), subst_memo(e, f, memo)),
        Node::Exp(a) => exp(subst_memo(a, f, memo)),
        Node::Log(a) => log(subst_memo(a, f, memo)),
    };
    memo.insert(key, r.clone());
    r
}

/// Keys of all leaves of `t` accepted by `pred`.
pub fn leaves(t: &Tree, pred: &dyn Fn(&Node) -> bool) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![t.clone()];
    while let Some(n) = stack.pop() {
        if !seen.insert(Rc::as_ptr(&n)) {
            continue;
        }
        match &*n {
            Node::Var(s) | Node::Param(s) if pred(&n) => out.push(s.clone()),
            Node::Jet(f, d) if pred(&n) => out.push(leaf_key(f, d)),
            Node::Add(v) | Node::Mul(v) => stack.extend(v.iter().cloned()),
            Node::Pow(a, b) => {
                stack.push(a.clone());
                stack.push(b.clone());
            }
            Node::Exp(a) | Node::Log(a) => stack.push(a.clone()),
            _ => {}
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Function symbol of a [`RawEnv`].
#[derive(Clone, Debug, Default)]
pub struct RawFunction {
    pub deps: Vec<String>,
    pub field: bool,
    pub rules: BTreeMap<String, Tree>,
}

/// Jacobian `d new / d old` of a change of variables.
pub type RawChain = BTreeMap<(String, String), Tree>;

/// Symbols for parsing and differentiating trees.
#[derive(Clone, Debug, Default)]
pub struct RawEnv {
    pub vars: Vec<String>,
    pub funcs: BTreeMap<String, RawFunction>,
    pub defs: BTreeMap<String, Tree>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError(pub String);

impl RawEnv {
    pub fn new(vars: &[&str]) -> RawEnv {
        RawEnv {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, v: &str) {
        self.vars.push(v.into());
    }

    pub fn add_function(&mut self, name: &str, deps: &[&str], field: bool) {
        self.funcs.insert(
            name.into(),
            RawFunction {
                deps: deps.iter().map(|s| s.to_string()).collect(),
                field,
                rules: BTreeMap::new(),
            },
        );
    }

    pub fn is_field(&self, f: &str) -> bool {
        self.funcs.get(f).map(|s| s.field).unwrap_or(false)
    }

    /// Jet of `f`; a direction with a known derivative rule is eliminated.
    pub fn jet(&self, f: &str, dirs: &[String]) -> Tree {
        if let Some(func) = self.funcs.get(f) {
            for (i, d) in dirs.iter().enumerate() {
                if let Some(r) = func.rules.get(d) {
                    let mut rest = dirs.to_vec();
                    rest.remove(i);
                    return self.diff_many(r, &rest, None);
                }
            }
        }
        jet_leaf(f, dirs)
    }

    fn with_dir(dirs: &[String], v: &str) -> Vec<String> {
        let mut d = dirs.to_vec();
        d.push(v.into());
        d
    }

    /// Total derivative along `v`, through `chain` for functions of new variables.
    pub fn diff(&self, t: &Tree, v: &str, chain: Option<&RawChain>) -> Tree {
        let mut base = |leaf: &Tree| -> Tree {
            match &**leaf {
                Node::Var(u) if u == v => num(1),
                Node::Var(u) => chain.and_then(|c| c.get(&(u.clone(), v.to_string())).cloned()).unwrap_or_else(|| num(0)),
                Node::Param(_) => num(0),
                Node::Jet(f, dirs) => {
                    let Some(func) = self.funcs.get(f) else {
                        return num(0);
                    };
                    if func.deps.iter().any(|d| d == v) {
                        return self.jet(f, &Self::with_dir(dirs, v));
                    }
                    let Some(c) = chain else {
                        return num(0);
                    };
                    let mut terms = Vec::new();
                    for z in &func.deps {
                        if let Some(j) = c.get(&(z.clone(), v.to_string())) {
                            if !is_zero(j) {
                                terms.push(mul(vec![j.clone(), self.jet(f, &Self::with_dir(dirs, z))]));
                            }
                        }
                    }
                    add(terms)
                }
                _ => unreachable!(),
            }
        };
        derive(t, &mut base)
    }

    pub fn diff_many(&self, t: &Tree, vars: &[String], chain: Option<&RawChain>) -> Tree {
        let mut out = t.clone();
        for v in vars {
            out = self.diff(&out, v, chain);
        }
        out
    }

    /// Partial derivative along `v` with every field jet held fixed.
    pub fn diff_frozen(&self, t: &Tree, v: &str) -> Tree {
        let mut base = |leaf: &Tree| -> Tree {
            match &**leaf {
                Node::Var(u) if u == v => num(1),
                Node::Jet(f, dirs) if !self.is_field(f) => match self.funcs.get(f) {
                    Some(func) if func.deps.iter().any(|d| d == v) => self.jet(f, &Self::with_dir(dirs, v)),
                    _ => num(0),
                },
                _ => num(0),
            }
        };
        derive(t, &mut base)
    }

    /// Parses `src` with the symbols of this environment.
    pub fn parse(&self, src: &str) -> Result<Tree, ParseError> {
        let toks = lex(src)?;
        let mut p = RawParser { toks, pos: 0, env: self };
        let t = p.sum()?;
        if p.pos != p.toks.len() {
            return Err(ParseError(format!("trailing input in `{src}`")));
        }
        Ok(t)
    }

    fn split_dirs(&self, suffix: &str) -> Option<Vec<String>> {
        let mut vars: Vec<&String> = self.vars.iter().collect();
        vars.sort_by_key(|v| std::cmp::Reverse(v.len()));
        let mut rest = suffix;
        let mut out = Vec::new();
        while !rest.is_empty() {
            let v = vars.iter().find(|v| rest.starts_with(v.as_str()))?;
            out.push(v.to_string());
            rest = &rest[v.len()..];
        }
        Some(out)
    }

    fn identifier(&self, name: &str) -> Tree {
        if let Some(d) = self.defs.get(name) {
            return d.clone();
        }
        if self.vars.iter().any(|v| v == name) {
            return Rc::new(Node::Var(name.into()));
        }
        if let Some(pos) = name.find('_') {
            let (head, suffix) = (&name[..pos], &name[pos + 1..]);
            if let Some(dirs) = self.split_dirs(suffix) {
                if let Some(d) = self.defs.get(head) {
                    return self.diff_many(d, &dirs, None);
                }
                if self.funcs.contains_key(head) {
                    return self.jet(head, &dirs);
                }
            }
        }
        if self.funcs.contains_key(name) {
            return self.jet(name, &[]);
        }
        Rc::new(Node::Param(name.into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, ParseError> {
    let b: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = b[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| ParseError(text.clone()))?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_alphanumeric() || b[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(b[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(ParseError(format!("unexpected `{c}`")));
        }
    }
    Ok(out)
}

struct RawParser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    env: &'a RawEnv,
}

impl RawParser<'_> {
    fn peek_op(&self, c: char) -> bool {
        self.toks.get(self.pos) == Some(&Tok::Op(c))
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek_op(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ParseError(format!("expected `{c}` at token {}", self.pos)))
        }
    }

    fn sum(&mut self) -> Result<Tree, ParseError> {
        let mut terms = vec![self.product()?];
        loop {
            if self.peek_op('+') {
                self.pos += 1;
                terms.push(self.product()?);
            } else if self.peek_op('-') {
                self.pos += 1;
                terms.push(neg(self.product()?));
            } else {
                return Ok(add(terms));
            }
        }
    }

    fn product(&mut self) -> Result<Tree, ParseError> {
        let mut f = vec![self.unary()?];
        loop {
            if self.peek_op('*') {
                self.pos += 1;
                f.push(self.unary()?);
            } else if self.peek_op('/') {
                self.pos += 1;
                f.push(pow(self.unary()?, num(-1)));
            } else {
                return Ok(mul(f));
            }
        }
    }

    fn unary(&mut self) -> Result<Tree, ParseError> {
        if self.peek_op('-') {
            self.pos += 1;
            return Ok(neg(self.unary()?));
        }
        let base = self.primary()?;
        if self.peek_op('^') {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(pow(base, e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Tree, ParseError> {
        match self.toks.get(self.pos).cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(rat(BigRational::from_integer(n)))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if (name == "exp" || name == "log") && self.peek_op('(') {
                    self.pos += 1;
                    let a = self.sum()?;
                    self.expect(')')?;
                    return Ok(if name == "exp" { exp(a) } else { log(a) });
                }
                Ok(self.env.identifier(&name))
            }
            other => Err(ParseError(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jets_split_on_multi_letter_variables() {
        let mut env = RawEnv::new(&["z1", "z2"]);
        env.add_function("V1", &["z1", "z2"], true);
        let t = env.parse("V1_z1z2z1").unwrap();
        match &*t {
            Node::Jet(f, d) => {
                assert_eq!(f, "V1");
                assert_eq!(d, &vec!["z1".to_string(), "z1".into(), "z2".into()]);
            }
            _ => panic!("not a jet"),
        }
    }

    #[test]
    fn rules_apply_to_jets() {
        let mut env = RawEnv::new(&["x", "t"]);
        env.add_function("W", &["x", "t"], false);
        let r = env.parse("x^2").unwrap();
        env.funcs.get_mut("W").unwrap().rules.insert("x".into(), r);
        let t = env.parse("W_xx").unwrap();
        assert!(leaves(&t, &|n| matches!(n, Node::Jet(..))).is_empty());
    }
}
