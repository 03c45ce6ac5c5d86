//! Surface syntax of the datalog fragment: terms, atoms, literals, rules and
//! programs, together with a canonical renderer.
//!
//! Predicates are identified by name *and* arity (`color/1` and `color/2` are
//! different predicates), which is the usual convention for ASP front ends.

mod parser;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse_program, parse_query, ParseError};

/// Prefix reserved for generated predicate names.
pub const RESERVED_PREFIX: &str = "__";

/// A ground value.
///
/// The derived ordering puts every integer before every symbol, orders
/// integers numerically and symbols lexicographically. Comparison literals
/// use exactly this order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constant {
    Int(i64),
    Sym(String),
}

impl Constant {
    pub fn sym(s: impl Into<String>) -> Self {
        Constant::Sym(s.into())
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(i) => write!(f, "{i}"),
            Constant::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(Constant),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn sym(name: impl Into<String>) -> Self {
        Term::Const(Constant::Sym(name.into()))
    }

    pub fn int(i: i64) -> Self {
        Term::Const(Constant::Int(i))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    /// Resolves the term under `subst`; `None` if it is an unbound variable.
    pub fn resolve(&self, subst: &Subst) -> Option<Constant> {
        match self {
            Term::Var(v) => subst.get(v).cloned(),
            Term::Const(c) => Some(c.clone()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => c.fmt(f),
        }
    }
}

/// Variable bindings.
pub type Subst = BTreeMap<String, Constant>;

/// A predicate symbol together with its arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredKey {
    pub name: String,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        PredKey {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(self.predicate.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn ground(&self, subst: &Subst) -> Option<GroundAtom> {
        let args = self
            .args
            .iter()
            .map(|t| t.resolve(subst))
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom {
            predicate: self.predicate.clone(),
            args,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        write_args(f, &self.args)
    }
}

fn write_args<T: fmt::Display>(f: &mut fmt::Formatter<'_>, args: &[T]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    f.write_str("(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        a.fmt(f)?;
    }
    f.write_str(")")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "=<",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    /// The complementary operator: `a op b` is false exactly when
    /// `a op.negate() b` is true.
    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    pub fn eval(self, left: &Constant, right: &Constant) -> bool {
        match self {
            CmpOp::Lt => left < right,
            CmpOp::Gt => left > right,
            CmpOp::Le => left <= right,
            CmpOp::Ge => left >= right,
            CmpOp::Eq => left == right,
            CmpOp::Ne => left != right,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp { left: Term, op: CmpOp, right: Term },
}

impl Literal {
    pub fn cmp(left: Term, op: CmpOp, right: Term) -> Self {
        Literal::Cmp { left, op, right }
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            Literal::Cmp { .. } => None,
        }
    }

    pub fn vars(&self) -> Vec<&str> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => a.vars().collect(),
            Literal::Cmp { left, right, .. } => {
                left.as_var().into_iter().chain(right.as_var()).collect()
            }
        }
    }

    /// Systematic negation: the literal flips sign, comparisons flip operator.
    pub fn negate(&self) -> Literal {
        match self {
            Literal::Pos(a) => Literal::Neg(a.clone()),
            Literal::Neg(a) => Literal::Pos(a.clone()),
            Literal::Cmp { left, op, right } => Literal::Cmp {
                left: left.clone(),
                op: op.negate(),
                right: right.clone(),
            },
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Pos(a) => a.fmt(f),
            Literal::Neg(a) => write!(f, "not {a}"),
            Literal::Cmp { left, op, right } => write!(f, "{left} {op} {right}"),
        }
    }
}

/// A rule. A rule without head is a constraint; a rule without body is a fact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Option<Atom>,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn new(head: Option<Atom>, body: Vec<Literal>) -> Self {
        debug_assert!(head.is_some() || !body.is_empty());
        Rule { head, body }
    }

    pub fn fact(head: Atom) -> Self {
        Rule {
            head: Some(head),
            body: Vec::new(),
        }
    }

    pub fn is_fact(&self) -> bool {
        self.head.is_some() && self.body.is_empty()
    }

    pub fn is_constraint(&self) -> bool {
        self.head.is_none()
    }

    /// Every variable of the rule, head first, in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let head_vars = self.head.iter().flat_map(|h| h.vars());
        let body_vars = self.body.iter().flat_map(|l| l.vars());
        for v in head_vars.chain(body_vars) {
            if !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
        out
    }

    /// Variables that occur in the body but not in the head.
    pub fn body_only_vars(&self) -> Vec<String> {
        let head: Vec<&str> = self.head.iter().flat_map(|h| h.vars()).collect();
        let mut out: Vec<String> = Vec::new();
        for v in self.body.iter().flat_map(|l| l.vars()) {
            if !head.contains(&v) && !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = &self.head {
            h.fmt(f)?;
            if !self.body.is_empty() {
                f.write_str(" ")?;
            }
        }
        if !self.body.is_empty() {
            f.write_str(":- ")?;
            for (i, l) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                l.fmt(f)?;
            }
        }
        f.write_str(".")
    }
}

/// An ordered list of rules plus the source line of each rule.
///
/// Equality is structural: source lines are ignored.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub lines: Vec<usize>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl Eq for Program {}

impl Program {
    /// Builds a program from rules, numbering them as if rendered one per line.
    pub fn new(rules: Vec<Rule>) -> Self {
        let lines = (1..=rules.len()).collect();
        Program { rules, lines }
    }

    pub fn line(&self, rule: usize) -> usize {
        self.lines.get(rule).copied().unwrap_or(rule + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// All predicates in order of first occurrence (heads and bodies).
    pub fn predicates(&self) -> Vec<PredKey> {
        let mut out: Vec<PredKey> = Vec::new();
        let mut push = |k: PredKey| {
            if !out.contains(&k) {
                out.push(k);
            }
        };
        for r in &self.rules {
            if let Some(h) = &r.head {
                push(h.key());
            }
            for l in &r.body {
                if let Some(a) = l.atom() {
                    push(a.key());
                }
            }
        }
        out
    }

    /// Indices of the rules whose head is over `pred`, in source order.
    pub fn rules_for<'a>(&'a self, pred: &'a PredKey) -> impl Iterator<Item = usize> + 'a {
        self.rules
            .iter()
            .enumerate()
            .filter(move |(_, r)| r.head.as_ref().is_some_and(|h| &h.key() == pred))
            .map(|(i, _)| i)
    }

    /// Every constant mentioned anywhere in the program, sorted.
    pub fn constants(&self) -> Vec<Constant> {
        let mut out = std::collections::BTreeSet::new();
        for r in &self.rules {
            for a in r.head.iter().chain(r.body.iter().filter_map(Literal::atom)) {
                for t in &a.args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
            for l in &r.body {
                if let Literal::Cmp { left, right, .. } = l {
                    for t in [left, right] {
                        if let Term::Const(c) = t {
                            out.insert(c.clone());
                        }
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Canonical text: one rule per line, `, ` between literals and arguments.
pub fn render_program(p: &Program) -> String {
    p.to_string()
}

/// A variable-free atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<Constant>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: Vec<Constant>) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn key(&self) -> PredKey {
        PredKey::new(self.predicate.clone(), self.args.len())
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        write_args(f, &self.args)
    }
}
