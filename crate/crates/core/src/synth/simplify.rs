//! Semantics-preserving rewrites, applied to a fixpoint.

use std::collections::{BTreeMap, BTreeSet};

use super::{Cond, ImpProgram, Proc, Stmt};
use crate::syntax::{PredKey, Term};

/// Deliberate defects for testing the differential harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Strips a negation in front of any call, not only in front of a
    /// complementary call.
    UnguardedDoubleNegation,
}

pub fn simplify(ip: ImpProgram) -> ImpProgram {
    simplify_with(ip, Mutation::None)
}

pub fn simplify_with(mut ip: ImpProgram, mutation: Mutation) -> ImpProgram {
    for _ in 0..64 {
        let before = ip.clone();
        let names: BTreeSet<String> = ip.procs.iter().map(|p| p.name.clone()).collect();
        let constant = constant_procs(&ip);
        for p in &mut ip.procs {
            let mut scope = Scope::default();
            for (x, r) in p.params.iter().zip(&p.requires) {
                if let Some(t) = r {
                    scope.rows.push((t.clone(), vec![Some(x.clone())]));
                }
            }
            let rw = Rewriter {
                names: &names,
                constant: &constant,
                mutation,
            };
            p.body = rw.block(std::mem::take(&mut p.body), &mut scope);
            hoist(p);
            tail_if(p);
        }
        inline(&mut ip);
        if ip == before {
            break;
        }
    }
    ip
}

/// Procedures that return a constant without requirements.
fn constant_procs(ip: &ImpProgram) -> BTreeMap<String, bool> {
    ip.procs
        .iter()
        .filter(|p| p.requires.iter().all(Option::is_none))
        .filter_map(|p| match p.body.as_slice() {
            [Stmt::Return(Cond::Const(b))] => Some((p.name.clone(), *b)),
            _ => None,
        })
        .collect()
}

/// Rows known to be in a table: from requirements and enclosing loops.
#[derive(Default, Clone)]
struct Scope {
    rows: Vec<(PredKey, Vec<Option<String>>)>,
}

impl Scope {
    fn implies(&self, table: &PredKey, args: &[Term]) -> bool {
        self.rows.iter().any(|(t, pat)| {
            t == table
                && pat.len() == args.len()
                && pat
                    .iter()
                    .zip(args)
                    .all(|(p, a)| p.as_deref().is_some_and(|p| a.as_var() == Some(p)))
        })
    }
}

struct Rewriter<'a> {
    names: &'a BTreeSet<String>,
    constant: &'a BTreeMap<String, bool>,
    mutation: Mutation,
}

impl Rewriter<'_> {
    fn cond(&self, c: Cond, scope: &Scope) -> Cond {
        match c {
            Cond::InTable { table, args } if scope.implies(&table, &args) => Cond::Const(true),
            Cond::Cmp { left, op, right } => match (&left, &right) {
                (Term::Const(a), Term::Const(b)) => Cond::Const(op.eval(a, b)),
                (Term::Var(a), Term::Var(b)) if a == b => {
                    Cond::Const(matches!(op, crate::syntax::CmpOp::Eq | crate::syntax::CmpOp::Le | crate::syntax::CmpOp::Ge))
                }
                _ => Cond::Cmp { left, op, right },
            },
            Cond::Call { proc, args } => match self.constant.get(&proc) {
                Some(b) => Cond::Const(*b),
                None => Cond::Call { proc, args },
            },
            Cond::Not(inner) => match self.cond(*inner, scope) {
                Cond::Const(b) => Cond::Const(!b),
                Cond::Not(c) => *c,
                Cond::Cmp { left, op, right } => Cond::Cmp {
                    left,
                    op: op.negate(),
                    right,
                },
                Cond::Call { proc, args } => match self.complement(&proc) {
                    Some(q) => Cond::Call { proc: q, args },
                    None if self.mutation == Mutation::UnguardedDoubleNegation => Cond::Call { proc, args },
                    None => Cond::negate(Cond::Call { proc, args }),
                },
                c => Cond::negate(c),
            },
            Cond::And(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    match self.cond(c, scope) {
                        Cond::Const(true) => {}
                        Cond::Const(false) => return Cond::Const(false),
                        Cond::And(inner) => out.extend(inner),
                        c => out.push(c),
                    }
                }
                match out.len() {
                    0 => Cond::Const(true),
                    1 => out.pop().unwrap(),
                    _ => Cond::And(out),
                }
            }
            c => c,
        }
    }

    /// `check_q` for `check_not_q`.
    fn complement(&self, proc: &str) -> Option<String> {
        let rest = proc.strip_prefix("check_not_")?;
        let q = format!("check_{rest}");
        self.names.contains(&q).then_some(q)
    }

    fn block(&self, b: Vec<Stmt>, scope: &mut Scope) -> Vec<Stmt> {
        let mut out = Vec::new();
        for s in b {
            match s {
                Stmt::ForEach { vars, table, body } => {
                    scope.rows.push((table.clone(), vars.clone()));
                    let body = self.block(body, scope);
                    scope.rows.pop();
                    if !body.is_empty() {
                        out.push(Stmt::ForEach { vars, table, body });
                    }
                }
                Stmt::If { cond, then, els } => {
                    let cond = self.cond(cond, scope);
                    let then = self.block(then, scope);
                    let els = self.block(els, scope);
                    match cond {
                        Cond::Const(true) => out.extend(then),
                        Cond::Const(false) => out.extend(els),
                        _ if then.is_empty() && els.is_empty() => {}
                        Cond::Not(c) if then.is_empty() => out.push(Stmt::If {
                            cond: *c,
                            then: els,
                            els: Vec::new(),
                        }),
                        cond => out.push(Stmt::If { cond, then, els }),
                    }
                }
                Stmt::Return(c) => out.push(Stmt::Return(self.cond(c, scope))),
                Stmt::Search(mut s) => {
                    s.on_accept = self.block(s.on_accept, scope);
                    out.push(Stmt::Search(s));
                }
                s => out.push(s),
            }
            if matches!(out.last(), Some(Stmt::Return(_))) {
                break;
            }
        }
        out
    }
}

/// Returns of a constant-returning procedure: (non-final values, final value).
fn constant_returns(p: &Proc) -> Option<(Vec<bool>, bool)> {
    let Some(Stmt::Return(Cond::Const(last))) = p.body.last() else {
        return None;
    };
    let mut vals = Vec::new();
    fn walk(b: &[Stmt], vals: &mut Vec<bool>) -> bool {
        b.iter().all(|s| match s {
            Stmt::Return(Cond::Const(v)) => {
                vals.push(*v);
                true
            }
            Stmt::Return(_) | Stmt::Search(_) | Stmt::EmitModel | Stmt::Call { .. } => false,
            Stmt::ForEach { body, .. } => walk(body, vals),
            Stmt::If { then, els, .. } => walk(then, vals) && walk(els, vals),
        })
    }
    if !walk(&p.body[..p.body.len() - 1], &mut vals) {
        return None;
    }
    Some((vals, *last))
}

/// Whether every `return !default` in `b` sits under an `if` whose
/// conjunction contains `test`.
fn guarded(b: &[Stmt], default: bool, test: &Cond, covered: bool) -> bool {
    b.iter().all(|s| match s {
        Stmt::Return(Cond::Const(v)) => *v == default || covered,
        Stmt::ForEach { body, .. } => guarded(body, default, test, covered),
        Stmt::If { cond, then, els } => {
            let has = match cond {
                Cond::And(cs) => cs.contains(test),
                c => c == test,
            };
            guarded(then, default, test, covered || has) && guarded(els, default, test, covered)
        }
        _ => true,
    })
}

fn tests_of(b: &[Stmt], out: &mut Vec<Cond>) {
    for s in b {
        match s {
            Stmt::ForEach { body, .. } => tests_of(body, out),
            Stmt::If { cond, then, els } => {
                match cond {
                    Cond::And(cs) => out.extend(cs.iter().cloned()),
                    c => out.push(c.clone()),
                }
                tests_of(then, out);
                tests_of(els, out);
            }
            _ => {}
        }
    }
}

/// Moves a parameter membership test that guards every non-default return
/// into the procedure's requirements.
fn hoist(p: &mut Proc) {
    let Some((_, default)) = constant_returns(p) else {
        return;
    };
    if p.requires.iter().any(Option::is_some) && p.outside != default {
        return;
    }
    let mut tests = Vec::new();
    tests_of(&p.body, &mut tests);
    for (i, x) in p.params.iter().enumerate() {
        if p.requires[i].is_some() {
            continue;
        }
        let found = tests.iter().find_map(|t| match t {
            Cond::InTable { table, args }
                if table.arity == 1 && args[0].as_var() == Some(x) && guarded(&p.body, default, t, false) =>
            {
                Some(table.clone())
            }
            _ => None,
        });
        if let Some(t) = found {
            p.requires[i] = Some(t);
            p.outside = default;
        }
    }
}

/// `if c: return b` followed by `return !b` becomes a single return.
fn tail_if(p: &mut Proc) {
    let n = p.body.len();
    if n < 2 {
        return;
    }
    let (Stmt::If { cond, then, els }, Stmt::Return(Cond::Const(last))) = (&p.body[n - 2], &p.body[n - 1]) else {
        return;
    };
    let [Stmt::Return(Cond::Const(b))] = then.as_slice() else {
        return;
    };
    if !els.is_empty() || b == last {
        return;
    }
    let c = if *b { cond.clone() } else { Cond::negate(cond.clone()) };
    p.body.truncate(n - 2);
    p.body.push(Stmt::Return(c));
}

fn call_counts(ip: &ImpProgram) -> BTreeMap<String, usize> {
    fn cond(c: &Cond, n: &mut BTreeMap<String, usize>) {
        match c {
            Cond::Call { proc, .. } => *n.entry(proc.clone()).or_default() += 1,
            Cond::Not(c) => cond(c, n),
            Cond::And(cs) => cs.iter().for_each(|c| cond(c, n)),
            _ => {}
        }
    }
    fn block(b: &[Stmt], n: &mut BTreeMap<String, usize>) {
        for s in b {
            match s {
                Stmt::ForEach { body, .. } => block(body, n),
                Stmt::If { cond: c, then, els } => {
                    cond(c, n);
                    block(then, n);
                    block(els, n);
                }
                Stmt::Return(c) => cond(c, n),
                Stmt::Call { proc, .. } => *n.entry(proc.clone()).or_default() += 1,
                Stmt::Search(s) => {
                    *n.entry(s.prune.clone()).or_default() += 1;
                    *n.entry(s.accept.clone()).or_default() += 1;
                    block(&s.on_accept, n);
                }
                Stmt::EmitModel => {}
            }
        }
    }
    let mut n = BTreeMap::new();
    for p in &ip.procs {
        block(&p.body, &mut n);
    }
    n
}

fn locals(b: &[Stmt], out: &mut BTreeSet<String>) {
    for s in b {
        match s {
            Stmt::ForEach { vars, body, .. } => {
                out.extend(vars.iter().flatten().cloned());
                locals(body, out);
            }
            Stmt::If { then, els, .. } => {
                locals(then, out);
                locals(els, out);
            }
            Stmt::Call { bind: Some(v), .. } => {
                out.insert(v.clone());
            }
            _ => {}
        }
    }
}

struct Renaming(BTreeMap<String, Term>);

impl Renaming {
    fn term(&self, t: &Term) -> Term {
        match t {
            Term::Var(v) => self.0.get(v).cloned().unwrap_or_else(|| t.clone()),
            c => c.clone(),
        }
    }

    fn name(&self, v: &str) -> String {
        match self.0.get(v) {
            Some(Term::Var(w)) => w.clone(),
            _ => v.to_string(),
        }
    }

    fn terms(&self, ts: &[Term]) -> Vec<Term> {
        ts.iter().map(|t| self.term(t)).collect()
    }

    fn cond(&self, c: &Cond) -> Cond {
        match c {
            Cond::Const(b) => Cond::Const(*b),
            Cond::Cmp { left, op, right } => Cond::Cmp {
                left: self.term(left),
                op: *op,
                right: self.term(right),
            },
            Cond::Call { proc, args } => Cond::Call {
                proc: proc.clone(),
                args: self.terms(args),
            },
            Cond::InTable { table, args } => Cond::InTable {
                table: table.clone(),
                args: self.terms(args),
            },
            Cond::Decided { pred, args } => Cond::Decided {
                pred: pred.clone(),
                args: self.terms(args),
            },
            Cond::Known { pred, args } => Cond::Known {
                pred: pred.clone(),
                args: self.terms(args),
            },
            Cond::Local(v) => Cond::Local(self.name(v)),
            Cond::Not(c) => Cond::negate(self.cond(c)),
            Cond::And(cs) => Cond::And(cs.iter().map(|c| self.cond(c)).collect()),
        }
    }

    fn block(&self, b: &[Stmt]) -> Vec<Stmt> {
        b.iter()
            .map(|s| match s {
                Stmt::ForEach { vars, table, body } => Stmt::ForEach {
                    vars: vars.iter().map(|v| v.as_ref().map(|v| self.name(v))).collect(),
                    table: table.clone(),
                    body: self.block(body),
                },
                Stmt::If { cond, then, els } => Stmt::If {
                    cond: self.cond(cond),
                    then: self.block(then),
                    els: self.block(els),
                },
                Stmt::Return(c) => Stmt::Return(self.cond(c)),
                Stmt::Call { proc, args, bind } => Stmt::Call {
                    proc: proc.clone(),
                    args: self.terms(args),
                    bind: bind.as_ref().map(|v| self.name(v)),
                },
                s => s.clone(),
            })
            .collect()
    }
}

/// Replaces `return f(args)` by the body of `f` when `f` has exactly one
/// call site and the caller's requirements cover `f`'s.
fn inline(ip: &mut ImpProgram) {
    let counts = call_counts(ip);
    let snapshot: BTreeMap<String, Proc> = ip.procs.iter().map(|p| (p.name.clone(), p.clone())).collect();
    for p in &mut ip.procs {
        let Some(Stmt::Return(Cond::Call { proc, args })) = p.body.last() else {
            continue;
        };
        let Some(callee) = snapshot.get(proc) else { continue };
        if callee.name == p.name || counts.get(proc) != Some(&1) || !returns_only(&callee.body) {
            continue;
        }
        let covered = callee.requires.iter().zip(args).all(|(r, a)| match r {
            None => true,
            Some(t) => a.as_var().is_some_and(|v| {
                p.params
                    .iter()
                    .zip(&p.requires)
                    .any(|(x, rx)| x == v && rx.as_ref() == Some(t))
            }),
        });
        if !covered {
            continue;
        }
        let mut used: BTreeSet<String> = p.params.iter().cloned().collect();
        locals(&p.body, &mut used);
        let mut map: BTreeMap<String, Term> = callee
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        let mut callee_locals = BTreeSet::new();
        locals(&callee.body, &mut callee_locals);
        for v in callee_locals {
            let mut w = v.clone();
            while used.contains(&w) {
                w.push('_');
            }
            used.insert(w.clone());
            map.insert(v, Term::Var(w));
        }
        let body = Renaming(map).block(&callee.body);
        p.body.pop();
        p.body.extend(body);
    }
}

fn returns_only(b: &[Stmt]) -> bool {
    b.iter().all(|s| match s {
        Stmt::Search(_) | Stmt::EmitModel => false,
        Stmt::ForEach { body, .. } => returns_only(body),
        Stmt::If { then, els, .. } => returns_only(then) && returns_only(els),
        _ => true,
    })
}
