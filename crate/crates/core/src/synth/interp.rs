//! Reference executor for [`ImpProgram`].
//!
//! The program is first lowered: variables become frame slots and constants
//! become ids whose numeric order is the constant order, so comparisons and
//! table lookups work on integers.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use thiserror::Error;

use super::{AtomSpace, Cond, ImpProgram, Stmt};
use crate::analysis::{ArgSource, DomainMap};
use crate::syntax::{CmpOp, Constant, GroundAtom, PredKey, Term};

pub const DEFAULT_SEARCH_BUDGET: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("no procedure named {0}")]
    MissingProc(String),
    #[error("{proc} takes {expected} arguments, got {found}")]
    Arity {
        proc: String,
        expected: usize,
        found: usize,
    },
    #[error("search budget of {0} decisions exceeded")]
    Budget(u64),
    #[error("constant {0} is unknown to the program")]
    UnknownConstant(Constant),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Invocation {
    Call { proc: String, args: Vec<Constant> },
    Models,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InterpResult {
    Bool(bool),
    Models(Vec<BTreeSet<GroundAtom>>),
}

pub fn interpret(ip: &ImpProgram, facts: &DomainMap, inv: &Invocation) -> Result<InterpResult, InterpError> {
    interpret_with(ip, facts, inv, DEFAULT_SEARCH_BUDGET)
}

pub fn interpret_with(
    ip: &ImpProgram,
    facts: &DomainMap,
    inv: &Invocation,
    budget: u64,
) -> Result<InterpResult, InterpError> {
    let extra: &[Constant] = match inv {
        Invocation::Call { args, .. } => args,
        Invocation::Models => &[],
    };
    let mut m = Machine::with_constants(ip, facts, extra);
    m.budget = budget;
    match inv {
        Invocation::Call { proc, args } => m.call(proc, args).map(InterpResult::Bool),
        Invocation::Models => m.models().map(InterpResult::Models),
    }
}

#[derive(Clone, Copy, Debug)]
enum Val {
    Slot(usize),
    Const(u32),
}

enum LCond {
    Const(bool),
    Cmp(Val, CmpOp, Val),
    Call(usize, Vec<Val>),
    InTable(usize, Vec<Val>),
    Decided(u32, Vec<Val>),
    Known(u32, Vec<Val>),
    Local(usize),
    Not(Box<LCond>),
    And(Vec<LCond>),
}

enum LStmt {
    ForEach {
        table: usize,
        binds: Vec<(usize, usize)>,
        body: Vec<LStmt>,
    },
    If {
        cond: LCond,
        then: Vec<LStmt>,
        els: Vec<LStmt>,
    },
    Return(LCond),
    Call {
        proc: usize,
        args: Vec<Val>,
        bind: Option<usize>,
    },
    Search {
        spaces: Vec<LSpace>,
        prune: usize,
        accept: usize,
        on_accept: Vec<LStmt>,
    },
    Emit,
}

#[derive(Clone)]
enum LSource {
    Column(usize, usize),
    Const(u32),
    SameAs(usize),
}

#[derive(Clone)]
struct LSpace {
    pred: u32,
    sources: Vec<Vec<LSource>>,
}

struct LProc {
    params: usize,
    slots: usize,
    requires: Vec<Option<usize>>,
    outside: bool,
    body: Vec<LStmt>,
}

#[derive(Default)]
struct Table {
    rows: Vec<Vec<u32>>,
    set: HashSet<Vec<u32>>,
    first_column: HashSet<u32>,
}

enum Flow {
    Next,
    Return(bool),
}

const UNDECIDED: u8 = 2;

/// A lowered program bound to one fact base.
pub struct Machine {
    consts: Vec<Constant>,
    preds: Vec<PredKey>,
    tables: Vec<Table>,
    procs: Rc<Vec<LProc>>,
    proc_ids: HashMap<String, usize>,
    derived: Rc<Vec<(LSpace, usize)>>,
    models_proc: Option<usize>,
    stack: Vec<u32>,
    /// Search state: candidate key (pred id followed by args) to index.
    cand_index: HashMap<Vec<u32>, usize>,
    cands: Vec<Vec<u32>>,
    values: Vec<u8>,
    key: Vec<u32>,
    emitted: Vec<BTreeSet<GroundAtom>>,
    decisions: u64,
    pub budget: u64,
}

struct Lowering {
    consts: Vec<Constant>,
    const_ids: HashMap<Constant, u32>,
    preds: Vec<PredKey>,
    pred_ids: HashMap<PredKey, u32>,
    tables: HashMap<PredKey, usize>,
    table_preds: Vec<PredKey>,
}

impl Lowering {
    fn konst(&mut self, c: &Constant) -> u32 {
        if let Some(&i) = self.const_ids.get(c) {
            return i;
        }
        let i = self.consts.len() as u32;
        self.consts.push(c.clone());
        self.const_ids.insert(c.clone(), i);
        i
    }

    fn pred(&mut self, k: &PredKey) -> u32 {
        if let Some(&i) = self.pred_ids.get(k) {
            return i;
        }
        let i = self.preds.len() as u32;
        self.preds.push(k.clone());
        self.pred_ids.insert(k.clone(), i);
        i
    }

    fn table(&mut self, k: &PredKey) -> usize {
        if let Some(&i) = self.tables.get(k) {
            return i;
        }
        let i = self.table_preds.len();
        self.table_preds.push(k.clone());
        self.tables.insert(k.clone(), i);
        i
    }
}

struct Frame<'a> {
    slots: HashMap<&'a str, usize>,
    next: usize,
}

impl<'a> Frame<'a> {
    fn slot(&mut self, name: &'a str) -> usize {
        if let Some(&s) = self.slots.get(name) {
            return s;
        }
        let s = self.next;
        self.next += 1;
        self.slots.insert(name, s);
        s
    }
}

impl Machine {
    pub fn new(ip: &ImpProgram, facts: &DomainMap) -> Machine {
        Machine::with_constants(ip, facts, &[])
    }

    /// Like `new`, also making `extra` known so procedures can be called
    /// on constants outside the program and its tables.
    pub fn with_constants(ip: &ImpProgram, facts: &DomainMap, extra: &[Constant]) -> Machine {
        let mut lw = Lowering {
            consts: Vec::new(),
            const_ids: HashMap::new(),
            preds: Vec::new(),
            pred_ids: HashMap::new(),
            tables: HashMap::new(),
            table_preds: Vec::new(),
        };
        let proc_ids: HashMap<String, usize> = ip
            .procs
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.clone(), i))
            .collect();
        for c in extra {
            lw.konst(c);
        }
        for k in facts.predicates() {
            lw.table(k);
            for row in facts.tuples(k) {
                for c in row {
                    lw.konst(c);
                }
            }
        }
        let procs: Vec<LProc> = ip
            .procs
            .iter()
            .map(|p| {
                let mut f = Frame {
                    slots: HashMap::new(),
                    next: 0,
                };
                for x in &p.params {
                    f.slot(x);
                }
                let body = lower_block(&p.body, &mut f, &mut lw, &proc_ids);
                LProc {
                    params: p.params.len(),
                    slots: f.next,
                    requires: p.requires.iter().map(|r| r.as_ref().map(|t| lw.table(t))).collect(),
                    outside: p.outside,
                    body,
                }
            })
            .collect();
        let derived = ip
            .derived
            .iter()
            .filter_map(|d| Some((lower_space(&d.space, &mut lw), *proc_ids.get(&d.check)?)))
            .collect();

        // Renumber constants so that id order is constant order.
        let mut order: Vec<u32> = (0..lw.consts.len() as u32).collect();
        order.sort_by(|a, b| lw.consts[*a as usize].cmp(&lw.consts[*b as usize]));
        let mut rank = vec![0u32; order.len()];
        for (r, &old) in order.iter().enumerate() {
            rank[old as usize] = r as u32;
        }
        let consts: Vec<Constant> = order.iter().map(|&o| lw.consts[o as usize].clone()).collect();
        let mut procs = procs;
        for p in procs.iter_mut() {
            renumber_block(&mut p.body, &rank);
        }
        let mut derived: Vec<(LSpace, usize)> = derived;
        for (s, _) in &mut derived {
            renumber_space(s, &rank);
        }

        let tables = lw
            .table_preds
            .iter()
            .map(|k| {
                let rows: Vec<Vec<u32>> = facts
                    .tuples(k)
                    .iter()
                    .map(|r| r.iter().map(|c| rank[lw.const_ids[c] as usize]).collect())
                    .collect();
                Table {
                    set: rows.iter().cloned().collect(),
                    first_column: rows.iter().filter_map(|r| r.first().copied()).collect(),
                    rows,
                }
            })
            .collect();

        Machine {
            consts,
            preds: lw.preds,
            tables,
            models_proc: proc_ids.get(&ip.models).copied(),
            procs: Rc::new(procs),
            proc_ids,
            derived: Rc::new(derived),
            stack: Vec::new(),
            cand_index: HashMap::new(),
            cands: Vec::new(),
            values: Vec::new(),
            key: Vec::new(),
            emitted: Vec::new(),
            decisions: 0,
            budget: DEFAULT_SEARCH_BUDGET,
        }
    }

    fn const_id(&self, c: &Constant) -> Option<u32> {
        self.consts.binary_search(c).ok().map(|i| i as u32)
    }

    /// Runs a procedure on ground arguments.
    pub fn call(&mut self, proc: &str, args: &[Constant]) -> Result<bool, InterpError> {
        let &pi = self
            .proc_ids
            .get(proc)
            .ok_or_else(|| InterpError::MissingProc(proc.to_string()))?;
        let expected = self.procs[pi].params;
        if expected != args.len() {
            return Err(InterpError::Arity {
                proc: proc.to_string(),
                expected,
                found: args.len(),
            });
        }
        let ids = args
            .iter()
            .map(|c| self.const_id(c).ok_or_else(|| InterpError::UnknownConstant(c.clone())))
            .collect::<Result<Vec<u32>, _>>()?;
        self.invoke(pi, &ids)
    }

    /// Enumerates the models in emission order.
    pub fn models(&mut self) -> Result<Vec<BTreeSet<GroundAtom>>, InterpError> {
        let pi = self.models_proc.ok_or_else(|| InterpError::MissingProc("models".into()))?;
        self.emitted.clear();
        self.decisions = 0;
        self.invoke(pi, &[])?;
        Ok(std::mem::take(&mut self.emitted))
    }

    fn invoke(&mut self, pi: usize, args: &[u32]) -> Result<bool, InterpError> {
        let procs = Rc::clone(&self.procs);
        let p = &procs[pi];
        for (a, req) in args.iter().zip(&p.requires) {
            if let Some(t) = req {
                if !self.tables[*t].first_column.contains(a) {
                    return Ok(p.outside);
                }
            }
        }
        let base = self.stack.len();
        self.stack.resize(base + p.slots, 0);
        self.stack[base..base + args.len()].copy_from_slice(args);
        let r = self.exec(&p.body, base);
        self.stack.truncate(base);
        Ok(match r? {
            Flow::Return(b) => b,
            Flow::Next => false,
        })
    }

    fn val(&self, v: Val, base: usize) -> u32 {
        match v {
            Val::Slot(s) => self.stack[base + s],
            Val::Const(c) => c,
        }
    }

    fn lookup(&mut self, pred: u32, args: &[Val], base: usize) -> Option<usize> {
        let mut key = std::mem::take(&mut self.key);
        key.clear();
        key.push(pred);
        for &a in args {
            key.push(self.val(a, base));
        }
        let r = self.cand_index.get(key.as_slice()).copied();
        self.key = key;
        r
    }

    fn cond(&mut self, c: &LCond, base: usize) -> Result<bool, InterpError> {
        Ok(match c {
            LCond::Const(b) => *b,
            LCond::Cmp(l, op, r) => {
                let (a, b) = (self.val(*l, base), self.val(*r, base));
                match op {
                    CmpOp::Lt => a < b,
                    CmpOp::Gt => a > b,
                    CmpOp::Le => a <= b,
                    CmpOp::Ge => a >= b,
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                }
            }
            LCond::Call(pi, args) => {
                let vals: Vec<u32> = args.iter().map(|a| self.val(*a, base)).collect();
                self.invoke(*pi, &vals)?
            }
            LCond::InTable(t, args) => {
                let row: Vec<u32> = args.iter().map(|a| self.val(*a, base)).collect();
                self.tables[*t].set.contains(&row)
            }
            LCond::Decided(p, args) => self
                .lookup(*p, args, base)
                .is_some_and(|i| self.values[i] == 1),
            LCond::Known(p, args) => self
                .lookup(*p, args, base)
                .is_some_and(|i| self.values[i] != UNDECIDED),
            LCond::Local(s) => self.stack[base + s] != 0,
            LCond::Not(c) => !self.cond(c, base)?,
            LCond::And(cs) => {
                for c in cs {
                    if !self.cond(c, base)? {
                        return Ok(false);
                    }
                }
                true
            }
        })
    }

    fn exec(&mut self, block: &[LStmt], base: usize) -> Result<Flow, InterpError> {
        for s in block {
            match s {
                LStmt::ForEach { table, binds, body } => {
                    let n = self.tables[*table].rows.len();
                    for r in 0..n {
                        for &(pos, slot) in binds {
                            self.stack[base + slot] = self.tables[*table].rows[r][pos];
                        }
                        if let Flow::Return(b) = self.exec(body, base)? {
                            return Ok(Flow::Return(b));
                        }
                    }
                }
                LStmt::If { cond, then, els } => {
                    let branch = if self.cond(cond, base)? { then } else { els };
                    if let Flow::Return(b) = self.exec(branch, base)? {
                        return Ok(Flow::Return(b));
                    }
                }
                LStmt::Return(c) => return Ok(Flow::Return(self.cond(c, base)?)),
                LStmt::Call { proc, args, bind } => {
                    let vals: Vec<u32> = args.iter().map(|a| self.val(*a, base)).collect();
                    let r = self.invoke(*proc, &vals)?;
                    if let Some(s) = bind {
                        self.stack[base + s] = r as u32;
                    }
                }
                LStmt::Search {
                    spaces,
                    prune,
                    accept,
                    on_accept,
                } => {
                    let mut cands: Vec<Vec<u32>> = spaces.iter().flat_map(|s| self.atoms(s)).collect();
                    cands.sort_by(|a, b| {
                        self.preds[a[0] as usize]
                            .name
                            .cmp(&self.preds[b[0] as usize].name)
                            .then_with(|| a[1..].cmp(&b[1..]))
                    });
                    cands.dedup();
                    self.cand_index = cands.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
                    self.values = vec![UNDECIDED; cands.len()];
                    self.cands = cands;
                    self.search(0, *prune, *accept, on_accept, base)?;
                    self.cand_index.clear();
                    self.cands.clear();
                    self.values.clear();
                }
                LStmt::Emit => {
                    let mut model: BTreeSet<GroundAtom> = BTreeSet::new();
                    for (i, c) in self.cands.iter().enumerate() {
                        if self.values[i] == 1 {
                            model.insert(self.ground(c));
                        }
                    }
                    let derived = Rc::clone(&self.derived);
                    for (space, check) in derived.iter() {
                        for atom in self.atoms(space) {
                            if self.invoke(*check, &atom[1..])? {
                                model.insert(self.ground(&atom));
                            }
                        }
                    }
                    self.emitted.push(model);
                }
            }
        }
        Ok(Flow::Next)
    }

    fn search(
        &mut self,
        i: usize,
        prune: usize,
        accept: usize,
        on_accept: &[LStmt],
        base: usize,
    ) -> Result<(), InterpError> {
        if i == self.cands.len() {
            if self.invoke(accept, &[])? {
                self.exec(on_accept, base)?;
            }
            return Ok(());
        }
        for v in [0u8, 1] {
            self.decisions += 1;
            if self.decisions > self.budget {
                return Err(InterpError::Budget(self.budget));
            }
            self.values[i] = v;
            if self.invoke(prune, &[])? {
                self.search(i + 1, prune, accept, on_accept, base)?;
            }
        }
        self.values[i] = UNDECIDED;
        Ok(())
    }

    /// Distinct atoms of a space as keys (pred id, args).
    fn atoms(&self, s: &LSpace) -> Vec<Vec<u32>> {
        let mut out: Vec<Vec<u32>> = Vec::new();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        for sources in &s.sources {
            let mut partial: Vec<Vec<u32>> = vec![vec![s.pred]];
            for src in sources {
                let mut next = Vec::new();
                for p in &partial {
                    match src {
                        LSource::Column(t, pos) => {
                            let mut col: Vec<u32> = Vec::new();
                            for r in &self.tables[*t].rows {
                                if !col.contains(&r[*pos]) {
                                    col.push(r[*pos]);
                                }
                            }
                            for c in col {
                                let mut q = p.clone();
                                q.push(c);
                                next.push(q);
                            }
                        }
                        LSource::Const(c) => {
                            let mut q = p.clone();
                            q.push(*c);
                            next.push(q);
                        }
                        LSource::SameAs(j) => {
                            let mut q = p.clone();
                            q.push(p[1 + j]);
                            next.push(q);
                        }
                    }
                }
                partial = next;
            }
            for a in partial {
                if seen.insert(a.clone()) {
                    out.push(a);
                }
            }
        }
        out
    }

    fn ground(&self, key: &[u32]) -> GroundAtom {
        GroundAtom::new(
            self.preds[key[0] as usize].name.clone(),
            key[1..].iter().map(|&c| self.consts[c as usize].clone()).collect(),
        )
    }
}

fn lower_space(s: &AtomSpace, lw: &mut Lowering) -> LSpace {
    LSpace {
        pred: lw.pred(&s.pred),
        sources: s
            .sources
            .iter()
            .map(|srcs| {
                srcs.iter()
                    .map(|src| match src {
                        ArgSource::Column { predicate, position } => LSource::Column(lw.table(predicate), *position),
                        ArgSource::Const(c) => LSource::Const(lw.konst(c)),
                        ArgSource::SameAs(j) => LSource::SameAs(*j),
                    })
                    .collect()
            })
            .collect(),
    }
}

fn lower_val<'a>(t: &'a Term, f: &mut Frame<'a>, lw: &mut Lowering) -> Val {
    match t {
        Term::Var(v) => Val::Slot(f.slot(v)),
        Term::Const(c) => Val::Const(lw.konst(c)),
    }
}

fn lower_vals<'a>(ts: &'a [Term], f: &mut Frame<'a>, lw: &mut Lowering) -> Vec<Val> {
    ts.iter().map(|t| lower_val(t, f, lw)).collect()
}

fn lower_cond<'a>(c: &'a Cond, f: &mut Frame<'a>, lw: &mut Lowering, procs: &HashMap<String, usize>) -> LCond {
    match c {
        Cond::Const(b) => LCond::Const(*b),
        Cond::Cmp { left, op, right } => LCond::Cmp(lower_val(left, f, lw), *op, lower_val(right, f, lw)),
        Cond::Call { proc, args } => LCond::Call(procs[proc], lower_vals(args, f, lw)),
        Cond::InTable { table, args } => LCond::InTable(lw.table(table), lower_vals(args, f, lw)),
        Cond::Decided { pred, args } => LCond::Decided(lw.pred(pred), lower_vals(args, f, lw)),
        Cond::Known { pred, args } => LCond::Known(lw.pred(pred), lower_vals(args, f, lw)),
        Cond::Local(v) => LCond::Local(f.slot(v)),
        Cond::Not(c) => LCond::Not(Box::new(lower_cond(c, f, lw, procs))),
        Cond::And(cs) => LCond::And(cs.iter().map(|c| lower_cond(c, f, lw, procs)).collect()),
    }
}

fn lower_block<'a>(b: &'a [Stmt], f: &mut Frame<'a>, lw: &mut Lowering, procs: &HashMap<String, usize>) -> Vec<LStmt> {
    b.iter()
        .map(|s| match s {
            Stmt::ForEach { vars, table, body } => LStmt::ForEach {
                table: lw.table(table),
                binds: vars
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| v.as_ref().map(|v| (i, f.slot(v))))
                    .collect(),
                body: lower_block(body, f, lw, procs),
            },
            Stmt::If { cond, then, els } => LStmt::If {
                cond: lower_cond(cond, f, lw, procs),
                then: lower_block(then, f, lw, procs),
                els: lower_block(els, f, lw, procs),
            },
            Stmt::Return(c) => LStmt::Return(lower_cond(c, f, lw, procs)),
            Stmt::Call { proc, args, bind } => LStmt::Call {
                proc: procs[proc],
                args: lower_vals(args, f, lw),
                bind: bind.as_ref().map(|b| f.slot(b)),
            },
            Stmt::Search(s) => LStmt::Search {
                spaces: s.candidates.iter().map(|c| lower_space(c, lw)).collect(),
                prune: procs[&s.prune],
                accept: procs[&s.accept],
                on_accept: lower_block(&s.on_accept, f, lw, procs),
            },
            Stmt::EmitModel => LStmt::Emit,
        })
        .collect()
}

fn renumber_val(v: &mut Val, rank: &[u32]) {
    if let Val::Const(c) = v {
        *c = rank[*c as usize];
    }
}

fn renumber_cond(c: &mut LCond, rank: &[u32]) {
    match c {
        LCond::Cmp(l, _, r) => {
            renumber_val(l, rank);
            renumber_val(r, rank);
        }
        LCond::Call(_, a) | LCond::InTable(_, a) | LCond::Decided(_, a) | LCond::Known(_, a) => {
            a.iter_mut().for_each(|v| renumber_val(v, rank))
        }
        LCond::Not(c) => renumber_cond(c, rank),
        LCond::And(cs) => cs.iter_mut().for_each(|c| renumber_cond(c, rank)),
        LCond::Const(_) | LCond::Local(_) => {}
    }
}

fn renumber_space(s: &mut LSpace, rank: &[u32]) {
    for srcs in &mut s.sources {
        for src in srcs {
            if let LSource::Const(c) = src {
                *c = rank[*c as usize];
            }
        }
    }
}

fn renumber_block(b: &mut [LStmt], rank: &[u32]) {
    for s in b {
        match s {
            LStmt::ForEach { body, .. } => renumber_block(body, rank),
            LStmt::If { cond, then, els } => {
                renumber_cond(cond, rank);
                renumber_block(then, rank);
                renumber_block(els, rank);
            }
            LStmt::Return(c) => renumber_cond(c, rank),
            LStmt::Call { args, .. } => args.iter_mut().for_each(|v| renumber_val(v, rank)),
            LStmt::Search { spaces, on_accept, .. } => {
                spaces.iter_mut().for_each(|s| renumber_space(s, rank));
                renumber_block(on_accept, rank);
            }
            LStmt::Emit => {}
        }
    }
}
