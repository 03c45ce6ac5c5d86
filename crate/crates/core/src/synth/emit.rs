//! Textual rendering of [`ImpProgram`] in a small indentation-based
//! pseudocode.
//!
//! Grammar (one construct per line, blocks indented by four spaces):
//!
//! ```text
//! table NAME: [(c, ...), ...]
//! proc NAME(X, ...):
//! for X in TABLE:          for (X, _, ...) in TABLE:
//! if COND:                 else:
//! return COND
//! let X = NAME(ARG, ...)   NAME(ARG, ...)
//! search PRED/K, ... prune NAME accept NAME:
//! emit
//! ```
//!
//! A parameter requirement becomes a leading guard in plain style and a
//! comment on the `def` line in Python style.

use std::fmt::Write;

use super::{Cond, ImpProgram, Proc, Stmt};
use crate::syntax::{Constant, PredKey, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Style {
    /// The canonical form, parsed back by the grammar tests.
    #[default]
    Plain,
    /// Python-flavoured: `def`, `True`/`False`, and `check_` dropped from
    /// procedure names.
    Python,
}

pub fn emit_text(ip: &ImpProgram, style: Style) -> String {
    let e = Emitter { ip, style };
    let mut out = String::new();
    for t in &ip.tables {
        let rows: Vec<String> = t
            .rows
            .iter()
            .map(|r| format!("({})", r.iter().map(|c| e.constant(c)).collect::<Vec<_>>().join(", ")))
            .collect();
        writeln!(out, "table {}: [{}]", t.name, rows.join(", ")).unwrap();
    }
    for p in &ip.procs {
        if !out.is_empty() {
            out.push('\n');
        }
        e.proc(p, &mut out);
    }
    out
}

/// One procedure, or `None` if the program has no procedure `name`.
pub fn emit_proc(ip: &ImpProgram, name: &str, style: Style) -> Option<String> {
    let mut out = String::new();
    Emitter { ip, style }.proc(ip.proc(name)?, &mut out);
    Some(out)
}

struct Emitter<'a> {
    ip: &'a ImpProgram,
    style: Style,
}

impl Emitter<'_> {
    fn name(&self, proc: &str) -> String {
        match self.style {
            Style::Plain => proc.to_string(),
            Style::Python => proc.strip_prefix("check_").unwrap_or(proc).to_string(),
        }
    }

    fn boolean(&self, b: bool) -> &'static str {
        match (self.style, b) {
            (Style::Plain, true) => "true",
            (Style::Plain, false) => "false",
            (Style::Python, true) => "True",
            (Style::Python, false) => "False",
        }
    }

    fn constant(&self, c: &Constant) -> String {
        match c {
            Constant::Int(i) => i.to_string(),
            Constant::Sym(s) => format!("\"{s}\""),
        }
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Var(v) => v.clone(),
            Term::Const(c) => self.constant(c),
        }
    }

    fn terms(&self, ts: &[Term]) -> String {
        ts.iter().map(|t| self.term(t)).collect::<Vec<_>>().join(", ")
    }

    fn table(&self, t: &PredKey) -> String {
        self.ip.table_name(t)
    }

    fn atom(&self, pred: &PredKey, args: &[Term]) -> String {
        if args.is_empty() {
            pred.name.clone()
        } else {
            format!("{}({})", pred.name, self.terms(args))
        }
    }

    fn tuple(&self, args: &[Term]) -> String {
        match args {
            [a] => self.term(a),
            _ => format!("({})", self.terms(args)),
        }
    }

    fn cond(&self, c: &Cond) -> String {
        match c {
            Cond::Const(b) => self.boolean(*b).to_string(),
            Cond::Cmp { left, op, right } => {
                format!("{} {} {}", self.term(left), op.symbol(), self.term(right))
            }
            Cond::Call { proc, args } => format!("{}({})", self.name(proc), self.terms(args)),
            Cond::InTable { table, args } => format!("{} in {}", self.tuple(args), self.table(table)),
            Cond::Decided { pred, args } => format!("decided {}", self.atom(pred, args)),
            Cond::Known { pred, args } => format!("known {}", self.atom(pred, args)),
            Cond::Local(v) => v.clone(),
            Cond::Not(inner) => match inner.as_ref() {
                Cond::Call { .. }
                | Cond::Local(_)
                | Cond::Const(_)
                | Cond::Decided { .. }
                | Cond::Known { .. } => format!("not {}", self.cond(inner)),
                _ => format!("not ({})", self.cond(inner)),
            },
            Cond::And(cs) => cs
                .iter()
                .map(|c| match c {
                    Cond::And(_) => format!("({})", self.cond(c)),
                    _ => self.cond(c),
                })
                .collect::<Vec<_>>()
                .join(" and "),
        }
    }

    fn proc(&self, p: &Proc, out: &mut String) {
        let reqs: Vec<String> = p
            .params
            .iter()
            .zip(&p.requires)
            .filter_map(|(x, r)| r.as_ref().map(|t| format!("{x} in {}", self.table(t))))
            .collect();
        match self.style {
            Style::Plain => {
                writeln!(out, "proc {}({}):", self.name(&p.name), p.params.join(", ")).unwrap();
                for r in reqs {
                    writeln!(out, "    if not ({r}):\n        return {}", self.boolean(p.outside)).unwrap();
                }
            }
            Style::Python => {
                write!(out, "def {}({}):", self.name(&p.name), p.params.join(", ")).unwrap();
                if !reqs.is_empty() {
                    write!(out, "  # {}, else {}", reqs.join(", "), self.boolean(p.outside)).unwrap();
                }
                out.push('\n');
            }
        }
        self.block(&p.body, 1, out);
    }

    fn block(&self, b: &[Stmt], depth: usize, out: &mut String) {
        let pad = "    ".repeat(depth);
        for s in b {
            match s {
                Stmt::ForEach { vars, table, body } => {
                    let names: Vec<&str> = vars.iter().map(|v| v.as_deref().unwrap_or("_")).collect();
                    let pattern = match names.as_slice() {
                        [one] => one.to_string(),
                        _ => format!("({})", names.join(", ")),
                    };
                    writeln!(out, "{pad}for {pattern} in {}:", self.table(table)).unwrap();
                    self.block(body, depth + 1, out);
                }
                Stmt::If { cond, then, els } => {
                    writeln!(out, "{pad}if {}:", self.cond(cond)).unwrap();
                    self.block(then, depth + 1, out);
                    if !els.is_empty() {
                        writeln!(out, "{pad}else:").unwrap();
                        self.block(els, depth + 1, out);
                    }
                }
                Stmt::Return(c) => writeln!(out, "{pad}return {}", self.cond(c)).unwrap(),
                Stmt::Call { proc, args, bind } => {
                    let call = format!("{}({})", self.name(proc), self.terms(args));
                    match bind {
                        Some(v) => writeln!(out, "{pad}let {v} = {call}").unwrap(),
                        None => writeln!(out, "{pad}{call}").unwrap(),
                    }
                }
                Stmt::Search(s) => {
                    let preds: Vec<String> = s.candidates.iter().map(|c| c.pred.to_string()).collect();
                    writeln!(
                        out,
                        "{pad}search {} prune {} accept {}:",
                        preds.join(", "),
                        self.name(&s.prune),
                        self.name(&s.accept)
                    )
                    .unwrap();
                    self.block(&s.on_accept, depth + 1, out);
                }
                Stmt::EmitModel => writeln!(out, "{pad}emit").unwrap(),
            }
        }
    }
}
