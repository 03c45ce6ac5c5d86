//! Goal-directed evaluation over the completion with a coinductive
//! hypothesis set (CHS).
//!
//! Only ground literals over the program's own non-domain predicates enter
//! the CHS. Domain literals and comparisons are decided on the spot, and the
//! generated `__nr`/`__nb` predicates are expanded inline into disjunctions.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::analysis::{dependency_graph, head_sources, ArgSource, DomainMap, Generator};
use crate::completion::{CompletionProgram, ForallGoal, RuleNegation};
use crate::syntax::{Constant, GroundAtom, Literal, PredKey, Subst, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("derivation budget exceeded (depth {0})")]
    BudgetExceeded(usize),
    #[error("step limit of {0} calls exceeded")]
    StepLimit(usize),
    #[error("goal {0} is not ground")]
    NonGround(String),
    #[error("unsafe query variable {0}: {1} has no domain")]
    UnsafeQueryVariable(String, PredKey),
    #[error("a comparison is not a valid query")]
    ComparisonQuery,
}

/// A ground literal as stored in the CHS.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundLit {
    Pos(GroundAtom),
    Neg(GroundAtom),
}

impl fmt::Display for GroundLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundLit::Pos(a) => a.fmt(f),
            GroundLit::Neg(a) => write!(f, "not {a}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartialModel {
    pub positive: BTreeSet<GroundAtom>,
    pub negative: BTreeSet<GroundAtom>,
}

impl PartialModel {
    pub fn is_consistent(&self) -> bool {
        self.positive.is_disjoint(&self.negative)
    }

    /// Positive part inside `model`, negative part outside it.
    pub fn embeds_in(&self, model: &BTreeSet<GroundAtom>) -> bool {
        self.positive.is_subset(model) && self.negative.is_disjoint(model)
    }
}

impl fmt::Display for PartialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .positive
            .iter()
            .map(|a| a.to_string())
            .chain(self.negative.iter().map(|a| format!("not {a}")))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Call,
    /// Already in the CHS (coinductive success or earlier proof).
    Hypothesis,
    PositiveLoop,
    Inconsistent,
    Exit,
    Redo,
    Fail,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Call => "call",
            Outcome::Hypothesis => "succeed (chs)",
            Outcome::PositiveLoop => "fail (positive loop)",
            Outcome::Inconsistent => "fail (inconsistent)",
            Outcome::Exit => "exit",
            Outcome::Redo => "redo",
            Outcome::Fail => "fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub depth: usize,
    pub goal: String,
    pub outcome: Outcome,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:indent$}{}: {}", "", self.goal, self.outcome, indent = 2 * self.depth)
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalContext {
    pub chs: BTreeSet<GroundLit>,
    pub trail: Vec<TraceEvent>,
    /// Maximum ancestor depth; 0 means "derive from the Herbrand base".
    pub budget: usize,
    /// Maximum number of calls per proof; 0 means [`DEFAULT_STEP_LIMIT`].
    pub step_limit: usize,
}

pub const DEFAULT_STEP_LIMIT: usize = 100_000;

impl EvalContext {
    fn insert(&mut self, l: GroundLit) {
        debug_assert!(!self.chs.contains(&complement(&l)), "inconsistent CHS insertion");
        self.chs.insert(l);
    }

    pub fn partial_model(&self) -> PartialModel {
        let mut m = PartialModel::default();
        for l in &self.chs {
            match l {
                GroundLit::Pos(a) => m.positive.insert(a.clone()),
                GroundLit::Neg(a) => m.negative.insert(a.clone()),
            };
        }
        m
    }
}

fn complement(l: &GroundLit) -> GroundLit {
    match l {
        GroundLit::Pos(a) => GroundLit::Neg(a.clone()),
        GroundLit::Neg(a) => GroundLit::Pos(a.clone()),
    }
}

#[derive(Clone, Debug)]
enum Goal {
    Atom(GroundAtom),
    Not(GroundAtom),
    /// Alternatives, each a conjunction.
    Or(Vec<Vec<Goal>>),
    /// Leaves the scope of the innermost ancestor.
    Exit,
}

enum Cont {
    Nil,
    Cons(Goal, Rc<Cont>),
}

fn push_all(goals: Vec<Goal>, rest: Rc<Cont>) -> Rc<Cont> {
    goals
        .into_iter()
        .rev()
        .fold(rest, |k, g| Rc::new(Cont::Cons(g, k)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Ancestor {
    Pos(GroundAtom),
    Neg,
}

enum Undo {
    Chs(GroundLit),
    Push,
    Pop(Ancestor),
}

struct ChoicePoint {
    mark: usize,
    depth: usize,
    alts: std::vec::IntoIter<Vec<Goal>>,
    rest: Rc<Cont>,
}

/// Three-valued result of evaluating a literal statically.
enum Static {
    True,
    False,
    Goal(Goal),
}

/// Read-only view of a completion program prepared for evaluation.
pub struct Evaluator<'a> {
    c: &'a CompletionProgram,
    d: &'a DomainMap,
    rules: HashMap<PredKey, Vec<usize>>,
    duals: HashMap<PredKey, usize>,
    budget: usize,
    /// Atoms on a cycle through negation; each must be decided after a query.
    nmr: Vec<GroundAtom>,
    no_instances: RefCell<HashMap<GroundAtom, bool>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(c: &'a CompletionProgram, d: &'a DomainMap) -> Self {
        let mut rules: HashMap<PredKey, Vec<usize>> = HashMap::new();
        for (i, r) in c.normalized.rules.iter().enumerate() {
            if let Some(h) = &r.head {
                rules.entry(h.key()).or_default().push(i);
            }
        }
        let duals = c
            .duals
            .iter()
            .enumerate()
            .map(|(i, d)| (d.pred.clone(), i))
            .collect();
        let mut ev = Evaluator {
            c,
            d,
            rules,
            duals,
            budget: herbrand_estimate(c, d).saturating_mul(4).max(16),
            nmr: Vec::new(),
            no_instances: RefCell::default(),
        };
        ev.nmr = ev.nmr_atoms();
        ev
    }

    fn nmr_atoms(&self) -> Vec<GroundAtom> {
        let graph = dependency_graph(&self.c.original);
        let mut out = Vec::new();
        for scc in graph.sccs.iter().filter(|s| s.has_negative_internal_edge) {
            for pred in &scc.preds {
                let Some(doms) = self.position_domains(pred) else {
                    continue;
                };
                let vars: Vec<String> = (0..pred.arity).map(|i| i.to_string()).collect();
                for_each_assignment(&vars, &doms, &mut Subst::new(), &mut |s| {
                    let args = vars.iter().map(|v| s[v].clone()).collect();
                    out.push(GroundAtom::new(pred.name.clone(), args));
                });
            }
        }
        out
    }

    pub fn default_budget(&self) -> usize {
        self.budget
    }

    fn column(&self, g: &Generator) -> Vec<Constant> {
        self.d.column(&g.predicate, g.position)
    }

    fn classify(&self, l: &Literal, s: &Subst) -> Result<Static, EvalError> {
        let ground = |a: &crate::syntax::Atom| {
            a.ground(s).ok_or_else(|| EvalError::NonGround(a.to_string()))
        };
        Ok(match l {
            Literal::Cmp { left, op, right } => {
                let (Some(a), Some(b)) = (left.resolve(s), right.resolve(s)) else {
                    return Err(EvalError::NonGround(l.to_string()));
                };
                if op.eval(&a, &b) {
                    Static::True
                } else {
                    Static::False
                }
            }
            Literal::Pos(a) => self.atom_goal(ground(a)?, true),
            Literal::Neg(a) => self.atom_goal(ground(a)?, false),
        })
    }

    fn atom_goal(&self, a: GroundAtom, positive: bool) -> Static {
        if self.d.is_domain(&a.key()) {
            if self.d.contains(&a) == positive {
                Static::True
            } else {
                Static::False
            }
        } else if positive {
            Static::Goal(Goal::Atom(a))
        } else {
            Static::Goal(Goal::Not(a))
        }
    }

    /// Conjunctions, one per rule instance of `a`, in source order.
    fn rule_instances(&self, a: &GroundAtom) -> Result<Vec<Vec<Goal>>, EvalError> {
        let mut out = Vec::new();
        for &ri in self.rules.get(&a.key()).map(Vec::as_slice).unwrap_or(&[]) {
            let rule = &self.c.normalized.rules[ri];
            let head = rule.head.as_ref().unwrap();
            let mut s = Subst::new();
            for (t, v) in head.args.iter().zip(&a.args) {
                if let Term::Var(x) = t {
                    s.insert(x.clone(), v.clone());
                }
            }
            let ys = rule.body_only_vars();
            let gens = &self.c.generators[ri];
            let columns: Vec<Vec<Constant>> = ys
                .iter()
                .map(|y| gens.get(y).map(|g| self.column(g)).unwrap_or_default())
                .collect();
            let mut err = None;
            for_each_assignment(&ys, &columns, &mut s, &mut |s| {
                let mut conj = Vec::new();
                for l in &rule.body {
                    match self.classify(l, s) {
                        Ok(Static::True) => {}
                        Ok(Static::False) => return,
                        Ok(Static::Goal(g)) => conj.push(g),
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    }
                }
                out.push(conj);
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(out)
    }

    /// `Some(or)` for a disjunction that still needs solving; `None` when
    /// one disjunct is statically true. An empty `or` is a failure.
    fn disjunction(&self, lits: &[Literal], s: &Subst) -> Result<Option<Vec<Vec<Goal>>>, EvalError> {
        let mut alts = Vec::new();
        for l in lits {
            match self.classify(l, s)? {
                Static::True => return Ok(None),
                Static::False => {}
                Static::Goal(g) => alts.push(vec![g]),
            }
        }
        Ok(Some(alts))
    }

    fn forall_goals(&self, fa: &ForallGoal, s: &Subst) -> Result<Option<Vec<Goal>>, EvalError> {
        let ys: Vec<String> = fa.bound.iter().map(|b| b.name.clone()).collect();
        let columns: Vec<Vec<Constant>> = fa.bound.iter().map(|b| self.column(&b.generator)).collect();
        let mut s = s.clone();
        let mut conj = Vec::new();
        let mut res: Result<bool, EvalError> = Ok(true);
        for_each_assignment(&ys, &columns, &mut s, &mut |s| {
            if !matches!(res, Ok(true)) {
                return;
            }
            let guard = fa.guard.iter().all(|g| g.ground(s).is_some_and(|a| self.d.contains(&a)));
            if !guard {
                return;
            }
            match self.disjunction(&fa.disjuncts, s) {
                Ok(None) => {}
                Ok(Some(alts)) if alts.is_empty() => res = Ok(false),
                Ok(Some(alts)) => conj.push(Goal::Or(alts)),
                Err(e) => res = Err(e),
            }
        });
        Ok(res?.then_some(conj))
    }

    /// The dual of `a` as one conjunction, or `None` if it fails statically.
    fn dual_goals(&self, a: &GroundAtom) -> Result<Option<Vec<Goal>>, EvalError> {
        let Some(&di) = self.duals.get(&a.key()) else {
            // Not mentioned by the program: closed world.
            return Ok(Some(Vec::new()));
        };
        let mut conj = Vec::new();
        for rd in &self.c.duals[di].rules {
            let mut s = Subst::new();
            for (t, v) in rd.head.args.iter().zip(&a.args) {
                if let Term::Var(x) = t {
                    s.insert(x.clone(), v.clone());
                }
            }
            match &rd.body {
                RuleNegation::Disjunction(lits) => match self.disjunction(lits, &s)? {
                    None => {}
                    Some(alts) if alts.is_empty() => return Ok(None),
                    Some(alts) => conj.push(Goal::Or(alts)),
                },
                RuleNegation::Forall(fa) => match self.forall_goals(fa, &s)? {
                    None => return Ok(None),
                    Some(gs) => conj.extend(gs),
                },
            }
        }
        Ok(Some(conj))
    }

    /// True if `alt` is one literal that succeeds whatever else is chosen.
    fn settled(&self, alt: &[Goal], ctx: &EvalContext, ancestors: &[Ancestor]) -> bool {
        match alt {
            [Goal::Not(a)] => {
                ctx.chs.contains(&GroundLit::Neg(a.clone()))
                    || (!ctx.chs.contains(&GroundLit::Pos(a.clone())) && self.never_holds(a))
            }
            [Goal::Atom(a)] => {
                ctx.chs.contains(&GroundLit::Pos(a.clone())) && !ancestors.contains(&Ancestor::Pos(a.clone()))
            }
            _ => false,
        }
    }

    /// No rule instance of `a` survives static evaluation.
    fn never_holds(&self, a: &GroundAtom) -> bool {
        if let Some(&b) = self.no_instances.borrow().get(a) {
            return b;
        }
        let b = !self.rules.contains_key(&a.key()) || self.rule_instances(a).is_ok_and(|r| r.is_empty());
        self.no_instances.borrow_mut().insert(a.clone(), b);
        b
    }

    fn run(&self, goals: Vec<Goal>, ctx: &mut EvalContext) -> Result<bool, EvalError> {
        let budget = if ctx.budget == 0 { self.budget } else { ctx.budget };
        let step_limit = if ctx.step_limit == 0 { DEFAULT_STEP_LIMIT } else { ctx.step_limit };
        let mut steps = 0usize;
        let mut undo: Vec<Undo> = Vec::new();
        let mut ancestors: Vec<Ancestor> = Vec::new();
        let mut choices: Vec<ChoicePoint> = Vec::new();
        let mut cont = push_all(goals, Rc::new(Cont::Nil));

        macro_rules! trace {
            ($goal:expr, $out:expr) => {
                ctx.trail.push(TraceEvent {
                    depth: ancestors.len(),
                    goal: $goal,
                    outcome: $out,
                })
            };
        }

        loop {
            let mut failed = false;
            match &*cont.clone() {
                Cont::Nil => return Ok(true),
                Cont::Cons(goal, rest) => {
                    let rest = rest.clone();
                    match goal {
                        Goal::Exit => {
                            let a = ancestors.pop().expect("exit without ancestor");
                            if let Ancestor::Pos(atom) = &a {
                                trace!(atom.to_string(), Outcome::Exit);
                            }
                            undo.push(Undo::Pop(a));
                            cont = rest;
                        }
                        Goal::Atom(a) => {
                            let pos = GroundLit::Pos(a.clone());
                            if ctx.chs.contains(&pos) {
                                let looped = ancestors
                                    .iter()
                                    .rev()
                                    .take_while(|x| **x != Ancestor::Neg)
                                    .any(|x| *x == Ancestor::Pos(a.clone()));
                                if looped {
                                    trace!(a.to_string(), Outcome::PositiveLoop);
                                    failed = true;
                                } else {
                                    trace!(a.to_string(), Outcome::Hypothesis);
                                    cont = rest;
                                }
                            } else if ctx.chs.contains(&complement(&pos)) {
                                trace!(a.to_string(), Outcome::Inconsistent);
                                failed = true;
                            } else {
                                trace!(a.to_string(), Outcome::Call);
                                if ancestors.len() >= budget {
                                    return Err(EvalError::BudgetExceeded(budget));
                                }
                                steps += 1;
                                if steps > step_limit {
                                    return Err(EvalError::StepLimit(step_limit));
                                }
                                let alts = self.rule_instances(a)?;
                                if alts.is_empty() {
                                    trace!(a.to_string(), Outcome::Fail);
                                    failed = true;
                                } else {
                                    ctx.insert(pos.clone());
                                    undo.push(Undo::Chs(pos));
                                    ancestors.push(Ancestor::Pos(a.clone()));
                                    undo.push(Undo::Push);
                                    let after = Rc::new(Cont::Cons(Goal::Exit, rest));
                                    let mut alts = alts.into_iter();
                                    let first = alts.next().unwrap();
                                    choices.push(ChoicePoint {
                                        mark: undo.len(),
                                        depth: ancestors.len(),
                                        alts,
                                        rest: after.clone(),
                                    });
                                    cont = push_all(first, after);
                                }
                            }
                        }
                        Goal::Not(a) => {
                            let neg = GroundLit::Neg(a.clone());
                            let shown = format!("not {a}");
                            if ctx.chs.contains(&neg) {
                                trace!(shown, Outcome::Hypothesis);
                                cont = rest;
                            } else if ctx.chs.contains(&complement(&neg)) {
                                trace!(shown, Outcome::Inconsistent);
                                failed = true;
                            } else {
                                trace!(shown.clone(), Outcome::Call);
                                if ancestors.len() >= budget {
                                    return Err(EvalError::BudgetExceeded(budget));
                                }
                                steps += 1;
                                if steps > step_limit {
                                    return Err(EvalError::StepLimit(step_limit));
                                }
                                match self.dual_goals(a)? {
                                    None => {
                                        trace!(shown, Outcome::Fail);
                                        failed = true;
                                    }
                                    Some(conj) => {
                                        ctx.insert(neg.clone());
                                        undo.push(Undo::Chs(neg));
                                        ancestors.push(Ancestor::Neg);
                                        undo.push(Undo::Push);
                                        let after = Rc::new(Cont::Cons(Goal::Exit, rest));
                                        cont = push_all(conj, after);
                                    }
                                }
                            }
                        }
                        Goal::Or(alts) => {
                            // A disjunct that holds without new commitments
                            // makes the others redundant.
                            if let Some(i) = alts.iter().position(|alt| self.settled(alt, ctx, &ancestors)) {
                                cont = push_all(alts[i].clone(), rest);
                                continue;
                            }
                            let mut alts = alts.clone().into_iter();
                            match alts.next() {
                                None => failed = true,
                                Some(first) => {
                                    choices.push(ChoicePoint {
                                        mark: undo.len(),
                                        depth: ancestors.len(),
                                        alts,
                                        rest: rest.clone(),
                                    });
                                    cont = push_all(first, rest);
                                }
                            }
                        }
                    }
                }
            }
            if failed {
                loop {
                    let Some(cp) = choices.last_mut() else {
                        rollback(&mut undo, 0, ctx, &mut ancestors);
                        return Ok(false);
                    };
                    rollback(&mut undo, cp.mark, ctx, &mut ancestors);
                    debug_assert_eq!(ancestors.len(), cp.depth);
                    if let Some(next) = cp.alts.next() {
                        let rest = cp.rest.clone();
                        if let Some(Ancestor::Pos(a)) = ancestors.last() {
                            ctx.trail.push(TraceEvent {
                                depth: ancestors.len(),
                                goal: a.to_string(),
                                outcome: Outcome::Redo,
                            });
                        }
                        cont = push_all(next, rest);
                        break;
                    }
                    choices.pop();
                }
            }
        }
    }
}

fn rollback(undo: &mut Vec<Undo>, mark: usize, ctx: &mut EvalContext, ancestors: &mut Vec<Ancestor>) {
    while undo.len() > mark {
        match undo.pop().unwrap() {
            Undo::Chs(l) => {
                ctx.chs.remove(&l);
            }
            Undo::Push => {
                ancestors.pop();
            }
            Undo::Pop(a) => ancestors.push(a),
        }
    }
}

/// Nested enumeration of `vars` over `columns`, left to right.
fn for_each_assignment(vars: &[String], columns: &[Vec<Constant>], s: &mut Subst, f: &mut dyn FnMut(&Subst)) {
    match vars.split_first() {
        None => f(s),
        Some((v, rest)) => {
            for c in &columns[0] {
                s.insert(v.clone(), c.clone());
                for_each_assignment(rest, &columns[1..], s, f);
            }
            s.remove(v);
        }
    }
}

/// Size of the Herbrand base over the program's constants and domains.
fn herbrand_estimate(c: &CompletionProgram, d: &DomainMap) -> usize {
    let mut consts: BTreeSet<Constant> = d.universe().into_iter().collect();
    consts.extend(c.original.constants());
    let n = consts.len().max(1);
    c.original
        .predicates()
        .iter()
        .map(|p| n.saturating_pow(p.arity as u32))
        .fold(0usize, usize::saturating_add)
}

/// Proves a ground literal. On success the CHS of `ctx` is the partial model.
pub fn solve_goal(
    c: &CompletionProgram,
    d: &DomainMap,
    goal: &Literal,
    ctx: &mut EvalContext,
) -> Result<Option<PartialModel>, EvalError> {
    Evaluator::new(c, d).solve(goal, ctx)
}

impl Evaluator<'_> {
    pub fn solve(&self, goal: &Literal, ctx: &mut EvalContext) -> Result<Option<PartialModel>, EvalError> {
        let goals = match self.classify(goal, &Subst::new())? {
            Static::True => Vec::new(),
            Static::False => return Ok(None),
            Static::Goal(g) => vec![g],
        };
        let mut goals = goals;
        goals.extend(
            self.nmr
                .iter()
                .map(|a| Goal::Or(vec![vec![Goal::Atom(a.clone())], vec![Goal::Not(a.clone())]])),
        );
        Ok(self.run(goals, ctx)?.then(|| ctx.partial_model()))
    }

    /// Proves `fa` with its free variables bound by `s`.
    pub fn expand_forall(&self, fa: &ForallGoal, s: &Subst, ctx: &mut EvalContext) -> Result<bool, EvalError> {
        match self.forall_goals(fa, s)? {
            None => Ok(false),
            Some(goals) => self.run(goals, ctx),
        }
    }

    /// Values for each argument position of `pred` in derived atoms.
    fn position_domains(&self, pred: &PredKey) -> Option<Vec<Vec<Constant>>> {
        if self.d.is_domain(pred) {
            return Some((0..pred.arity).map(|i| self.d.column(pred, i)).collect());
        }
        let p = &self.c.original;
        let ris: Vec<usize> = p.rules_for(pred).collect();
        if ris.is_empty() {
            return None;
        }
        let mut out: Vec<Vec<Constant>> = vec![Vec::new(); pred.arity];
        for ri in ris {
            let gens = self
                .d
                .rule_generators(ri)
                .cloned()
                .unwrap_or_else(|| crate::analysis::generators_of(&p.rules[ri], |k| self.d.is_domain(k)));
            let srcs = head_sources(&p.rules[ri], &gens)?;
            for (i, src) in srcs.iter().enumerate() {
                let src = match src {
                    ArgSource::SameAs(j) => &srcs[*j],
                    s => s,
                };
                for v in self.d.source_values(src) {
                    if !out[i].contains(&v) {
                        out[i].push(v);
                    }
                }
            }
        }
        Some(out)
    }

    /// Every ground instance of `q` with its outcome, in enumeration order.
    pub fn query_attempts(&self, q: &Literal) -> Result<Vec<Attempt>, EvalError> {
        let atom = q.atom().ok_or(EvalError::ComparisonQuery)?;
        let key = atom.key();
        let vars = query_vars(q);
        let columns: Vec<Vec<Constant>> = if vars.is_empty() {
            Vec::new()
        } else {
            let doms = self
                .position_domains(&key)
                .ok_or_else(|| EvalError::UnsafeQueryVariable(vars[0].clone(), key.clone()))?;
            vars.iter()
                .map(|v| {
                    let i = atom.args.iter().position(|t| t.as_var() == Some(v)).unwrap();
                    doms[i].clone()
                })
                .collect()
        };
        let mut substs = Vec::new();
        for_each_assignment(&vars, &columns, &mut Subst::new(), &mut |s| substs.push(s.clone()));
        let mut out = Vec::new();
        for s in substs {
            let ga = atom.ground(&s).expect("all query variables bound");
            let goal = match q {
                Literal::Neg(_) => Literal::Neg(crate::syntax::Atom::new(
                    ga.predicate.clone(),
                    ga.args.iter().cloned().map(Term::Const).collect(),
                )),
                _ => Literal::Pos(crate::syntax::Atom::new(
                    ga.predicate.clone(),
                    ga.args.iter().cloned().map(Term::Const).collect(),
                )),
            };
            let mut ctx = EvalContext::default();
            let model = self.solve(&goal, &mut ctx)?;
            out.push(Attempt {
                subst: s,
                goal,
                model,
                trail: ctx.trail,
            });
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Attempt {
    pub subst: Subst,
    pub goal: Literal,
    pub model: Option<PartialModel>,
    pub trail: Vec<TraceEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    /// Query variables in order of first occurrence.
    pub bindings: Vec<(String, Constant)>,
    pub model: PartialModel,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bindings.is_empty() {
            return write!(f, "yes  model: {}", self.model);
        }
        let binds: Vec<String> = self.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}  model: {}", binds.join(", "), self.model)
    }
}

/// All successful ground instances of `q`.
pub fn query(c: &CompletionProgram, d: &DomainMap, q: &Literal) -> Result<Vec<Answer>, EvalError> {
    let vars = query_vars(q);
    Ok(Evaluator::new(c, d)
        .query_attempts(q)?
        .into_iter()
        .filter_map(|a| {
            let bindings = vars.iter().map(|v| (v.clone(), a.subst[v].clone())).collect();
            a.model.map(|model| Answer { bindings, model })
        })
        .collect())
}

/// Variables of the query in order of first occurrence.
pub fn query_vars(q: &Literal) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in q.vars() {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    }
    out
}
