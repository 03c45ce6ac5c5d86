//! Synthesis of imperative programs from the completion.
//!
//! Tier 1 (hierarchical programs) compiles every predicate into a decision
//! procedure, with forall goals turned into loops. Tier 2 (tight programs
//! with choice components) adds a depth-first search over the atoms of the
//! choice components, pruned and accepted by compiled support checks.
//! Tables are inputs: a synthesized program runs on any fact base with the
//! same signature.

mod compile;
mod emit;
mod interp;
mod simplify;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::analysis::{ArgSource, DomainMap, ProgramClass, RejectReason};
use crate::completion::CompletionProgram;
use crate::syntax::{CmpOp, Constant, PredKey, Program, Term};

pub use emit::{emit_proc, emit_text, Style};
pub use interp::{interpret, interpret_with, InterpError, InterpResult, Invocation, Machine, DEFAULT_SEARCH_BUDGET};
pub use simplify::{simplify, simplify_with, Mutation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    Const(bool),
    Cmp { left: Term, op: CmpOp, right: Term },
    Call { proc: String, args: Vec<Term> },
    /// Row membership in a domain table.
    InTable { table: PredKey, args: Vec<Term> },
    /// The atom is decided and true (search state).
    Decided { pred: PredKey, args: Vec<Term> },
    /// The atom is decided (search state).
    Known { pred: PredKey, args: Vec<Term> },
    /// A boolean bound by `Stmt::Call`.
    Local(String),
    Not(Box<Cond>),
    And(Vec<Cond>),
}

impl Cond {
    pub fn negate(c: Cond) -> Cond {
        Cond::Not(Box::new(c))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    /// Iterates the rows of `table`, binding the named positions.
    ForEach {
        vars: Vec<Option<String>>,
        table: PredKey,
        body: Vec<Stmt>,
    },
    If {
        cond: Cond,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    Return(Cond),
    Call {
        proc: String,
        args: Vec<Term>,
        bind: Option<String>,
    },
    Search(Search),
    EmitModel,
}

/// Ground atoms of a predicate, one source list per defining rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomSpace {
    pub pred: PredKey,
    pub sources: Vec<Vec<ArgSource>>,
}

/// Depth-first assignment of the candidate atoms, false before true.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Search {
    pub candidates: Vec<AtomSpace>,
    pub prune: String,
    pub accept: String,
    pub on_accept: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Proc {
    pub name: String,
    pub params: Vec<String>,
    /// Unary table each parameter must belong to; otherwise the procedure
    /// returns `outside` without running its body.
    pub requires: Vec<Option<PredKey>>,
    pub outside: bool,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableDecl {
    pub pred: PredKey,
    pub name: String,
    pub rows: Vec<Vec<Constant>>,
}

/// Decision procedures of one predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub pred: PredKey,
    pub holds: String,
    pub fails: String,
}

/// A predicate listed by `EmitModel` through its check procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derived {
    pub space: AtomSpace,
    pub check: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    One,
    Two,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImpProgram {
    pub tier: Tier,
    pub tables: Vec<TableDecl>,
    pub procs: Vec<Proc>,
    pub decisions: Vec<Decision>,
    pub derived: Vec<Derived>,
    /// Procedure that enumerates the models.
    pub models: String,
}

impl ImpProgram {
    pub fn proc(&self, name: &str) -> Option<&Proc> {
        self.procs.iter().find(|p| p.name == name)
    }

    pub fn decision(&self, pred: &PredKey) -> Option<&Decision> {
        self.decisions.iter().find(|d| &d.pred == pred)
    }

    pub fn table_name(&self, pred: &PredKey) -> String {
        self.tables
            .iter()
            .find(|t| &t.pred == pred)
            .map(|t| t.name.clone())
            .unwrap_or_else(|| pred.name.clone())
    }

    /// Checks the structural invariants: calls resolve with the right
    /// arity, loops iterate declared tables, every procedure returns on all
    /// paths, and at most one Search exists (Tier 2 only).
    pub fn validate(&self) -> Result<(), String> {
        let tables: BTreeSet<&PredKey> = self.tables.iter().map(|t| &t.pred).collect();
        let mut searches = 0;
        for p in &self.procs {
            if p.requires.len() != p.params.len() {
                return Err(format!("{}: requires/params length mismatch", p.name));
            }
            for t in p.requires.iter().flatten() {
                if !tables.contains(t) {
                    return Err(format!("{}: requires undeclared table {t}", p.name));
                }
            }
            self.validate_block(&p.body, &tables, &mut searches)
                .map_err(|e| format!("{}: {e}", p.name))?;
            if !returns(&p.body) {
                return Err(format!("{}: a path ends without return", p.name));
            }
        }
        if searches > 1 || (searches == 1 && self.tier == Tier::One) {
            return Err(format!("{searches} search nodes in a {:?} program", self.tier));
        }
        if self.proc(&self.models).is_none() {
            return Err(format!("missing model procedure {}", self.models));
        }
        Ok(())
    }

    fn check_call(&self, proc: &str, args: usize) -> Result<(), String> {
        match self.proc(proc) {
            None => Err(format!("call to missing procedure {proc}")),
            Some(p) if p.params.len() != args => Err(format!(
                "call to {proc} with {args} arguments, expected {}",
                p.params.len()
            )),
            Some(_) => Ok(()),
        }
    }

    fn validate_cond(&self, c: &Cond, tables: &BTreeSet<&PredKey>) -> Result<(), String> {
        match c {
            Cond::Call { proc, args } => self.check_call(proc, args.len()),
            Cond::InTable { table, .. } if !tables.contains(table) => {
                Err(format!("membership in undeclared table {table}"))
            }
            Cond::Not(c) => self.validate_cond(c, tables),
            Cond::And(cs) => cs.iter().try_for_each(|c| self.validate_cond(c, tables)),
            _ => Ok(()),
        }
    }

    fn validate_block(&self, b: &[Stmt], tables: &BTreeSet<&PredKey>, searches: &mut usize) -> Result<(), String> {
        for s in b {
            match s {
                Stmt::ForEach { table, body, vars } => {
                    if !tables.contains(table) {
                        return Err(format!("loop over undeclared table {table}"));
                    }
                    if vars.len() != table.arity {
                        return Err(format!("loop pattern does not match {table}"));
                    }
                    self.validate_block(body, tables, searches)?;
                }
                Stmt::If { cond, then, els } => {
                    self.validate_cond(cond, tables)?;
                    self.validate_block(then, tables, searches)?;
                    self.validate_block(els, tables, searches)?;
                }
                Stmt::Return(c) => self.validate_cond(c, tables)?,
                Stmt::Call { proc, args, .. } => self.check_call(proc, args.len())?,
                Stmt::Search(s) => {
                    *searches += 1;
                    self.check_call(&s.prune, 0)?;
                    self.check_call(&s.accept, 0)?;
                    self.validate_block(&s.on_accept, tables, searches)?;
                }
                Stmt::EmitModel => {}
            }
        }
        Ok(())
    }
}

/// Whether every path through `b` ends in a return.
fn returns(b: &[Stmt]) -> bool {
    b.iter().any(|s| match s {
        Stmt::Return(_) => true,
        Stmt::If { then, els, .. } => returns(then) && returns(els),
        _ => false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SynthError {
    #[error("cannot synthesize: {}", join_reasons(.0))]
    Rejected(Vec<RejectReason>),
}

fn join_reasons(r: &[RejectReason]) -> String {
    r.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("; ")
}

/// Compiles and simplifies.
pub fn synthesize(
    p: &Program,
    class: &ProgramClass,
    c: &CompletionProgram,
    d: &DomainMap,
) -> Result<ImpProgram, SynthError> {
    Ok(simplify(synthesize_raw(p, class, c, d)?))
}

/// Compiles without simplification.
pub fn synthesize_raw(
    p: &Program,
    class: &ProgramClass,
    c: &CompletionProgram,
    d: &DomainMap,
) -> Result<ImpProgram, SynthError> {
    match class {
        ProgramClass::Rejected(reasons) => Err(SynthError::Rejected(reasons.clone())),
        ProgramClass::Hierarchical => Ok(compile::Compiler::new(p, c, d, &[]).tier_one()),
        ProgramClass::TightChoice { choice_sccs } => {
            let choice: Vec<PredKey> = choice_sccs.iter().flatten().cloned().collect();
            Ok(compile::Compiler::new(p, c, d, &choice).tier_two())
        }
    }
}

impl fmt::Display for ImpProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_text(self, Style::Plain))
    }
}
