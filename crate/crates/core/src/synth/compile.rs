use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{AtomSpace, Cond, Decision, Derived, ImpProgram, Proc, Search, Stmt, TableDecl, Tier};
use crate::analysis::{dependency_graph, generators_of, head_sources, ArgSource, DomainMap};
use crate::completion::{CompletionProgram, RuleNegation};
use crate::syntax::{Literal, PredKey, Program, Term};

const KEYWORDS: &[&str] = &[
    "accept", "and", "def", "else", "emit", "false", "for", "if", "in", "known", "let", "not",
    "proc", "prune", "require", "return", "search", "table", "true", "decided",
];

fn local_name(var: &str) -> String {
    let mut s = var.to_lowercase();
    if KEYWORDS.contains(&s.as_str()) {
        s.push('_');
    }
    s
}

fn fresh(base: String, used: &mut BTreeSet<String>) -> String {
    let mut s = base;
    while used.contains(&s) {
        s.push('_');
    }
    used.insert(s.clone());
    s
}

type Loop = (PredKey, Vec<Option<String>>);

fn nest(loops: Vec<Loop>, inner: Vec<Stmt>) -> Vec<Stmt> {
    loops.into_iter().rev().fold(inner, |body, (table, vars)| {
        vec![Stmt::ForEach { vars, table, body }]
    })
}

fn and(cs: Vec<Cond>) -> Cond {
    Cond::And(cs)
}

fn ret(b: bool) -> Stmt {
    Stmt::Return(Cond::Const(b))
}

fn when(c: Cond, then: Vec<Stmt>) -> Stmt {
    Stmt::If {
        cond: c,
        then,
        els: Vec::new(),
    }
}

pub(super) struct Compiler<'a> {
    p: &'a Program,
    c: &'a CompletionProgram,
    d: &'a DomainMap,
    choice: BTreeSet<PredKey>,
    tainted: BTreeSet<PredKey>,
    base: BTreeMap<PredKey, String>,
    tier_two: bool,
}

impl<'a> Compiler<'a> {
    pub fn new(p: &'a Program, c: &'a CompletionProgram, d: &'a DomainMap, choice: &[PredKey]) -> Self {
        let preds = p.predicates();
        let derived: Vec<&PredKey> = preds.iter().filter(|k| !d.is_domain(k)).collect();
        let base = derived
            .iter()
            .map(|k| {
                let shared = derived.iter().any(|o| o.name == k.name && o.arity != k.arity);
                let name = if shared {
                    format!("{}_{}", k.name, k.arity)
                } else {
                    k.name.clone()
                };
                ((*k).clone(), name)
            })
            .collect();
        let choice: BTreeSet<PredKey> = choice.iter().cloned().collect();
        let graph = dependency_graph(p);
        let mut tainted: BTreeSet<PredKey> = BTreeSet::new();
        loop {
            let before = tainted.len();
            for e in &graph.edges {
                if !choice.contains(&e.from) && (choice.contains(&e.to) || tainted.contains(&e.to)) {
                    tainted.insert(e.from.clone());
                }
            }
            if tainted.len() == before {
                break;
            }
        }
        Compiler {
            p,
            c,
            d,
            tier_two: !choice.is_empty(),
            choice,
            tainted,
            base,
        }
    }

    fn derived_preds(&self) -> Vec<PredKey> {
        self.p
            .predicates()
            .into_iter()
            .filter(|k| !self.d.is_domain(k))
            .collect()
    }

    fn name(&self, prefix: &str, pred: &PredKey) -> String {
        format!("{prefix}{}", self.base[pred])
    }

    fn tables(&self) -> Vec<TableDecl> {
        let preds = self.d.predicates();
        preds
            .iter()
            .map(|k| {
                let shared = preds.iter().any(|o| o.name == k.name && o.arity != k.arity);
                TableDecl {
                    pred: k.clone(),
                    name: if shared {
                        format!("{}_{}", k.name, k.arity)
                    } else {
                        k.name.clone()
                    },
                    rows: self.d.tuples(k).to_vec(),
                }
            })
            .collect()
    }

    /// Parameter names, taken from the head variables when the rules agree.
    fn params(&self, pred: &PredKey) -> Vec<String> {
        let rules: Vec<usize> = self.p.rules_for(pred).collect();
        let mut used = BTreeSet::new();
        (0..pred.arity)
            .map(|i| {
                let mut agreed: Option<&str> = None;
                let mut ok = !rules.is_empty();
                for &ri in &rules {
                    let args = &self.p.rules[ri].head.as_ref().unwrap().args;
                    match &args[i] {
                        Term::Var(v) if args.iter().filter(|t| *t == &args[i]).count() == 1 => {
                            if agreed.is_some_and(|a| a != v) {
                                ok = false;
                            }
                            agreed = Some(v);
                        }
                        _ => ok = false,
                    }
                }
                let base = match agreed {
                    Some(v) if ok => local_name(v),
                    _ => format!("v{}", i + 1),
                };
                fresh(base, &mut used)
            })
            .collect()
    }

    /// Local names for a normalized rule: head variables map to the
    /// parameters, `vars` get fresh lowercase names.
    fn rule_names(&self, ri: usize, params: &[String], vars: &[String]) -> HashMap<String, String> {
        let rule = &self.c.normalized.rules[ri];
        let mut used: BTreeSet<String> = params.iter().cloned().collect();
        let mut out = HashMap::new();
        for (t, p) in rule.head.as_ref().unwrap().args.iter().zip(params) {
            if let Term::Var(v) = t {
                out.insert(v.clone(), p.clone());
            }
        }
        for v in vars {
            out.insert(v.clone(), fresh(local_name(v), &mut used));
        }
        out
    }

    /// One loop per generating literal, in body order.
    fn loops(&self, ri: usize, vars: &[String], names: &HashMap<String, String>) -> Vec<Loop> {
        let gens = &self.c.generators[ri];
        let mut by_lit: BTreeMap<usize, Loop> = BTreeMap::new();
        for v in vars {
            let g = gens
                .get(v)
                .unwrap_or_else(|| panic!("variable {v} of a synthesizable rule has no generator"));
            by_lit
                .entry(g.literal)
                .or_insert_with(|| (g.predicate.clone(), vec![None; g.predicate.arity]))
                .1[g.position] = Some(names[v].clone());
        }
        by_lit.into_values().collect()
    }

    fn term(t: &Term, names: &HashMap<String, String>) -> Term {
        match t {
            Term::Var(v) => Term::Var(names[v].clone()),
            c => c.clone(),
        }
    }

    fn args(a: &crate::syntax::Atom, names: &HashMap<String, String>) -> Vec<Term> {
        a.args.iter().map(|t| Self::term(t, names)).collect()
    }

    fn lit(&self, l: &Literal, names: &HashMap<String, String>) -> Cond {
        match l {
            Literal::Cmp { left, op, right } => Cond::Cmp {
                left: Self::term(left, names),
                op: *op,
                right: Self::term(right, names),
            },
            Literal::Pos(a) | Literal::Neg(a) => {
                let key = a.key();
                let args = Self::args(a, names);
                let positive = matches!(l, Literal::Pos(_));
                let base = if self.d.is_domain(&key) {
                    Cond::InTable { table: key, args }
                } else if self.tier_two && self.choice.contains(&key) {
                    Cond::Decided { pred: key, args }
                } else if positive || self.tainted.contains(&key) {
                    Cond::Call {
                        proc: self.name("check_", &key),
                        args,
                    }
                } else {
                    return Cond::Call {
                        proc: self.name("check_not_", &key),
                        args,
                    };
                };
                if positive {
                    base
                } else {
                    Cond::negate(base)
                }
            }
        }
    }

    fn proc(&self, name: String, params: Vec<String>, body: Vec<Stmt>) -> Proc {
        Proc {
            name,
            requires: vec![None; params.len()],
            outside: false,
            params,
            body,
        }
    }

    /// `check_p`: some rule instance has a true body.
    fn positive(&self, pred: &PredKey, name: String) -> Proc {
        let params = self.params(pred);
        let mut body = Vec::new();
        for ri in self.c.normalized.rules_for(pred) {
            let rule = &self.c.normalized.rules[ri];
            let ys = rule.body_only_vars();
            let names = self.rule_names(ri, &params, &ys);
            let cond = and(rule.body.iter().map(|l| self.lit(l, &names)).collect());
            body.extend(nest(self.loops(ri, &ys, &names), vec![when(cond, vec![ret(true)])]));
        }
        body.push(ret(false));
        self.proc(name, params, body)
    }

    /// `check_not_p`: every per-rule negation holds.
    fn dual(&self, pred: &PredKey) -> Proc {
        let params = self.params(pred);
        let mut body = Vec::new();
        let dual = self.c.dual(pred).expect("every predicate has a dual");
        for rd in &dual.rules {
            match &rd.body {
                RuleNegation::Disjunction(lits) => {
                    let names = self.rule_names(rd.rule, &params, &[]);
                    let all_false = and(lits.iter().map(|l| Cond::negate(self.lit(l, &names))).collect());
                    body.push(when(all_false, vec![ret(false)]));
                }
                RuleNegation::Forall(fa) => {
                    let ys: Vec<String> = fa.bound.iter().map(|b| b.name.clone()).collect();
                    let names = self.rule_names(rd.rule, &params, &ys);
                    let mut conds: Vec<Cond> = fa
                        .guard
                        .iter()
                        .map(|g| Cond::InTable {
                            table: g.key(),
                            args: Self::args(g, &names),
                        })
                        .collect();
                    conds.extend(fa.disjuncts.iter().map(|l| Cond::negate(self.lit(l, &names))));
                    body.extend(nest(
                        self.loops(rd.rule, &ys, &names),
                        vec![when(and(conds), vec![ret(false)])],
                    ));
                }
            }
        }
        body.push(ret(true));
        self.proc(self.name("check_not_", pred), params, body)
    }

    /// `ready_p`: every search atom that a rule instance of `p` reads is decided.
    fn ready(&self, pred: &PredKey) -> Proc {
        let params = self.params(pred);
        let mut body = Vec::new();
        for ri in self.c.normalized.rules_for(pred) {
            let rule = &self.c.normalized.rules[ri];
            let ys = rule.body_only_vars();
            let names = self.rule_names(ri, &params, &ys);
            let mut relevant = Vec::new();
            let mut deps = Vec::new();
            for l in &rule.body {
                match l {
                    Literal::Cmp { .. } => relevant.push(self.lit(l, &names)),
                    Literal::Pos(a) | Literal::Neg(a) => {
                        let key = a.key();
                        let args = Self::args(a, &names);
                        if self.d.is_domain(&key) {
                            relevant.push(self.lit(l, &names));
                        } else if self.choice.contains(&key) {
                            deps.push(Cond::Known { pred: key, args });
                        } else if self.tainted.contains(&key) {
                            deps.push(Cond::Call {
                                proc: self.name("ready_", &key),
                                args,
                            });
                        }
                    }
                }
            }
            if deps.is_empty() {
                continue;
            }
            relevant.push(Cond::negate(and(deps)));
            body.extend(nest(self.loops(ri, &ys, &names), vec![when(and(relevant), vec![ret(false)])]));
        }
        body.push(ret(true));
        self.proc(self.name("ready_", pred), params, body)
    }

    fn space(&self, pred: &PredKey) -> AtomSpace {
        let sources = self
            .p
            .rules_for(pred)
            .map(|ri| {
                let rule = &self.p.rules[ri];
                let gens = self
                    .d
                    .rule_generators(ri)
                    .cloned()
                    .unwrap_or_else(|| generators_of(rule, |k| self.d.is_domain(k)));
                head_sources(rule, &gens).expect("head variables of a safe rule are generated")
            })
            .collect();
        AtomSpace {
            pred: pred.clone(),
            sources,
        }
    }

    /// Loops enumerating the atoms of one source list, and the atom's arguments.
    fn space_loops(sources: &[ArgSource]) -> (Vec<Loop>, Vec<Term>) {
        let mut loops = Vec::new();
        let mut args: Vec<Term> = Vec::new();
        for (i, s) in sources.iter().enumerate() {
            let t = match s {
                ArgSource::Column { predicate, position } => {
                    let v = format!("a{}", i + 1);
                    let mut pat = vec![None; predicate.arity];
                    pat[*position] = Some(v.clone());
                    loops.push((predicate.clone(), pat));
                    Term::Var(v)
                }
                ArgSource::Const(c) => Term::Const(c.clone()),
                ArgSource::SameAs(j) => args[*j].clone(),
            };
            args.push(t);
        }
        (loops, args)
    }

    fn models_proc(&self, body: Vec<Stmt>) -> Proc {
        let mut body = body;
        body.push(ret(true));
        self.proc("models".into(), Vec::new(), body)
    }

    fn derived(&self, preds: impl Iterator<Item = PredKey>) -> Vec<Derived> {
        preds
            .filter(|k| self.p.rules_for(k).next().is_some())
            .map(|k| Derived {
                check: self.name("check_", &k),
                space: self.space(&k),
            })
            .collect()
    }

    pub fn tier_one(&self) -> ImpProgram {
        let mut procs = Vec::new();
        let mut decisions = Vec::new();
        for k in self.derived_preds() {
            procs.push(self.positive(&k, self.name("check_", &k)));
            procs.push(self.dual(&k));
            decisions.push(Decision {
                pred: k.clone(),
                holds: self.name("check_", &k),
                fails: self.name("check_not_", &k),
            });
        }
        procs.push(self.models_proc(vec![Stmt::EmitModel]));
        ImpProgram {
            tier: Tier::One,
            tables: self.tables(),
            procs,
            decisions,
            derived: self.derived(self.derived_preds().into_iter()),
            models: "models".into(),
        }
    }

    pub fn tier_two(&self) -> ImpProgram {
        let mut procs = Vec::new();
        let mut decisions = Vec::new();
        for k in self.derived_preds() {
            if self.choice.contains(&k) {
                procs.push(self.positive(&k, self.name("support_", &k)));
                procs.push(self.ready(&k));
            } else if self.tainted.contains(&k) {
                procs.push(self.positive(&k, self.name("check_", &k)));
                procs.push(self.ready(&k));
            } else {
                procs.push(self.positive(&k, self.name("check_", &k)));
                procs.push(self.dual(&k));
                decisions.push(Decision {
                    pred: k.clone(),
                    holds: self.name("check_", &k),
                    fails: self.name("check_not_", &k),
                });
            }
        }

        let candidates: Vec<AtomSpace> = self.choice.iter().map(|k| self.space(k)).collect();
        let mut prune = Vec::new();
        let mut accept = Vec::new();
        for space in &candidates {
            let k = &space.pred;
            for sources in &space.sources {
                let (loops, args) = Self::space_loops(sources);
                let value = Cond::Decided {
                    pred: k.clone(),
                    args: args.clone(),
                };
                let known = Cond::Known {
                    pred: k.clone(),
                    args: args.clone(),
                };
                let support = Cond::Call {
                    proc: self.name("support_", k),
                    args: args.clone(),
                };
                let ready = Cond::Call {
                    proc: self.name("ready_", k),
                    args: args.clone(),
                };
                let mismatch = |extra: Vec<Cond>| {
                    vec![
                        when(
                            and(extra.iter().cloned().chain([value.clone(), Cond::negate(support.clone())]).collect()),
                            vec![ret(false)],
                        ),
                        when(
                            and(extra.into_iter().chain([Cond::negate(value.clone()), support.clone()]).collect()),
                            vec![ret(false)],
                        ),
                    ]
                };
                prune.extend(nest(loops.clone(), mismatch(vec![known, ready])));
                accept.extend(nest(loops, mismatch(Vec::new())));
            }
        }
        prune.push(ret(true));
        accept.push(ret(true));
        procs.push(self.proc("prune".into(), Vec::new(), prune));
        procs.push(self.proc("accept".into(), Vec::new(), accept));
        procs.push(self.models_proc(vec![Stmt::Search(Search {
            candidates,
            prune: "prune".into(),
            accept: "accept".into(),
            on_accept: vec![Stmt::EmitModel],
        })]));

        ImpProgram {
            tier: Tier::Two,
            tables: self.tables(),
            procs,
            decisions,
            derived: self.derived(self.derived_preds().into_iter().filter(|k| !self.choice.contains(k))),
            models: "models".into(),
        }
    }
}
