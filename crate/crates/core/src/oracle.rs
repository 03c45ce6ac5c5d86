//! Reference semantics: grounding over the finite domains and stable models
//! via the Gelfond–Lifschitz reduct.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{dependency_graph, generators_of, DepGraph, DomainMap, Generator};
use crate::syntax::{CmpOp, Constant, GroundAtom, Literal, PredKey, Program, Subst, Term};

pub type Interpretation = BTreeSet<GroundAtom>;

pub const DEFAULT_GROUND_CAP: usize = 1_000_000;
pub const DEFAULT_SUBSET_CAP: usize = 22;
/// log2 of the choice-mode candidate cap.
pub const DEFAULT_CHOICE_CAP_BITS: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("grounding produced {count} rules, above the cap of {cap}")]
    GroundCap { count: usize, cap: usize },
    #[error("variable {var} at line {line} has no domain generator")]
    Unsafe { line: usize, var: String },
    #[error("subset mode needs at most {cap} candidate atoms, found {atoms}")]
    SubsetCap { atoms: usize, cap: usize },
    #[error("choice mode needs at most 2^{cap} candidates, found 2^{bits}")]
    ChoiceCap { bits: usize, cap: usize },
    #[error("choice mode is inapplicable: {0}")]
    ModeInapplicable(String),
    #[error("perfect model is undefined: negation inside the component of {0}")]
    NotStratified(PredKey),
    #[error("the program has no answer set: a constraint is violated")]
    ConstraintViolated,
}

/// Ground rule over atom ids; `head = None` for constraints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroundRule {
    pub head: Option<usize>,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct GroundProgram {
    /// Every atom mentioned by some ground rule, by id.
    pub atoms: Vec<GroundAtom>,
    index: HashMap<GroundAtom, usize>,
    pub rules: Vec<GroundRule>,
    /// Atom ids that are domain facts.
    pub domain_facts: BTreeSet<usize>,
    pub domain_preds: BTreeSet<PredKey>,
    /// Predicate dependency graph of the source program.
    pub graph: DepGraph,
}

impl GroundProgram {
    pub fn id(&self, a: &GroundAtom) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn herbrand_base(&self) -> &[GroundAtom] {
        &self.atoms
    }

    fn intern(&mut self, a: GroundAtom) -> usize {
        if let Some(&i) = self.index.get(&a) {
            return i;
        }
        let i = self.atoms.len();
        self.index.insert(a.clone(), i);
        self.atoms.push(a);
        i
    }

    fn to_bits(&self, i: &Interpretation) -> Option<Vec<bool>> {
        let mut bits = vec![false; self.atoms.len()];
        for a in i {
            bits[self.id(a)?] = true;
        }
        Some(bits)
    }

    fn interpretation_of(&self, bits: &[bool]) -> Interpretation {
        bits.iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| self.atoms[i].clone())
            .collect()
    }

    fn with_rules(&self, rules: Vec<GroundRule>) -> GroundProgram {
        GroundProgram {
            atoms: self.atoms.clone(),
            index: self.index.clone(),
            rules,
            domain_facts: self.domain_facts.clone(),
            domain_preds: self.domain_preds.clone(),
            graph: self.graph.clone(),
        }
    }

    /// Non-domain atoms that head some ground rule, sorted.
    pub fn head_atoms(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .rules
            .iter()
            .filter_map(|r| r.head)
            .filter(|h| !self.domain_facts.contains(h))
            .collect();
        let mut v: Vec<usize> = set.into_iter().collect();
        v.sort_by(|a, b| self.atoms[*a].cmp(&self.atoms[*b]));
        v
    }
}

impl fmt::Display for GroundProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            if let Some(h) = r.head {
                write!(f, "{}", self.atoms[h])?;
                if !r.pos.is_empty() || !r.neg.is_empty() {
                    f.write_str(" ")?;
                }
            }
            let body: Vec<String> = r
                .pos
                .iter()
                .map(|&a| self.atoms[a].to_string())
                .chain(r.neg.iter().map(|&a| format!("not {}", self.atoms[a])))
                .collect();
            if !body.is_empty() {
                write!(f, ":- {}", body.join(", "))?;
            }
            writeln!(f, ".")?;
        }
        Ok(())
    }
}

fn rule_generators(p: &Program, d: &DomainMap, ri: usize) -> BTreeMap<String, Generator> {
    d.rule_generators(ri)
        .cloned()
        .unwrap_or_else(|| generators_of(&p.rules[ri], |k| d.is_domain(k)))
}

pub fn ground(p: &Program, d: &DomainMap) -> Result<GroundProgram, OracleError> {
    ground_with_cap(p, d, DEFAULT_GROUND_CAP)
}

/// Instantiates every rule with every substitution drawn from the generator
/// columns of its variables. False comparisons drop the instance; domain
/// literals stay in the body.
pub fn ground_with_cap(p: &Program, d: &DomainMap, cap: usize) -> Result<GroundProgram, OracleError> {
    let mut g = GroundProgram {
        atoms: Vec::new(),
        index: HashMap::new(),
        rules: Vec::new(),
        domain_facts: BTreeSet::new(),
        domain_preds: d.predicates().iter().cloned().collect(),
        graph: dependency_graph(p),
    };
    for fact in d.facts() {
        let id = g.intern(fact);
        g.domain_facts.insert(id);
    }
    let mut seen: BTreeSet<GroundRule> = BTreeSet::new();
    let mut count = 0usize;
    for (ri, rule) in p.rules.iter().enumerate() {
        let gens = rule_generators(p, d, ri);
        let vars = rule.vars();
        let mut columns = Vec::with_capacity(vars.len());
        for v in &vars {
            let gen = gens.get(v).ok_or_else(|| OracleError::Unsafe {
                line: p.line(ri),
                var: v.clone(),
            })?;
            columns.push(d.column(&gen.predicate, gen.position));
        }
        // Check each comparison as soon as its last variable is bound.
        let mut checks: Vec<Vec<(&Term, CmpOp, &Term)>> = vec![Vec::new(); vars.len() + 1];
        for l in &rule.body {
            if let Literal::Cmp { left, op, right } = l {
                let depth = l
                    .vars()
                    .iter()
                    .map(|v| vars.iter().position(|u| u == v).unwrap() + 1)
                    .max()
                    .unwrap_or(0);
                checks[depth].push((left, *op, right));
            }
        }
        let mut out = Vec::new();
        let mut subst = Subst::new();
        enumerate(&vars, &columns, &checks, 0, &mut subst, &mut |s| {
            out.push(s.clone());
            count += 1;
            count <= cap
        });
        if count > cap {
            return Err(OracleError::GroundCap { count, cap });
        }
        for s in out {
            let head = rule.head.as_ref().map(|h| g.intern(h.ground(&s).unwrap()));
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for l in &rule.body {
                match l {
                    Literal::Pos(a) => pos.push(g.intern(a.ground(&s).unwrap())),
                    Literal::Neg(a) => neg.push(g.intern(a.ground(&s).unwrap())),
                    Literal::Cmp { .. } => {}
                }
            }
            let gr = GroundRule { head, pos, neg };
            if seen.insert(gr.clone()) {
                g.rules.push(gr);
            }
        }
    }
    Ok(g)
}

impl PartialOrd for GroundRule {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroundRule {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.head, &self.pos, &self.neg).cmp(&(&other.head, &other.pos, &other.neg))
    }
}

fn enumerate(
    vars: &[String],
    columns: &[Vec<Constant>],
    checks: &[Vec<(&Term, CmpOp, &Term)>],
    depth: usize,
    subst: &mut Subst,
    emit: &mut dyn FnMut(&Subst) -> bool,
) -> bool {
    for (l, op, r) in &checks[depth] {
        let (Some(a), Some(b)) = (l.resolve(subst), r.resolve(subst)) else {
            unreachable!("comparison scheduled before its variables are bound")
        };
        if !op.eval(&a, &b) {
            return true;
        }
    }
    if depth == vars.len() {
        return emit(subst);
    }
    for c in &columns[depth] {
        subst.insert(vars[depth].clone(), c.clone());
        if !enumerate(vars, columns, checks, depth + 1, subst, emit) {
            return false;
        }
    }
    subst.remove(&vars[depth]);
    true
}

/// Drops rules blocked by `i` and the negative literals of the rest.
/// Constraints are left out; `is_stable` checks them separately.
pub fn reduct(g: &GroundProgram, i: &Interpretation) -> GroundProgram {
    let rules = g
        .rules
        .iter()
        .filter(|r| r.head.is_some())
        .filter(|r| r.neg.iter().all(|&a| !i.contains(&g.atoms[a])))
        .map(|r| GroundRule {
            head: r.head,
            pos: r.pos.clone(),
            neg: Vec::new(),
        })
        .collect();
    g.with_rules(rules)
}

/// Least model of a negation-free program.
pub fn least_model(g: &GroundProgram) -> Interpretation {
    debug_assert!(g.rules.iter().all(|r| r.neg.is_empty()));
    g.interpretation_of(&fixpoint(g, g.rules.iter().filter(|r| r.head.is_some()), vec![false; g.atoms.len()]))
}

/// Closes `bits` under the positive bodies of `rules` (negative literals are
/// ignored; callers pre-filter).
fn fixpoint<'a>(
    g: &GroundProgram,
    rules: impl Iterator<Item = &'a GroundRule>,
    mut bits: Vec<bool>,
) -> Vec<bool> {
    let rules: Vec<&GroundRule> = rules.collect();
    let mut watch: Vec<Vec<usize>> = vec![Vec::new(); g.atoms.len()];
    let mut missing = vec![0usize; rules.len()];
    let mut queue = Vec::new();
    for (ri, r) in rules.iter().enumerate() {
        for &a in &r.pos {
            if !bits[a] {
                missing[ri] += 1;
                watch[a].push(ri);
            }
        }
        if missing[ri] == 0 {
            queue.push(ri);
        }
    }
    while let Some(ri) = queue.pop() {
        let h = rules[ri].head.expect("constraints are filtered out");
        if bits[h] {
            continue;
        }
        bits[h] = true;
        for &rj in &watch[h] {
            missing[rj] -= 1;
            if missing[rj] == 0 {
                queue.push(rj);
            }
        }
    }
    bits
}

fn violates_constraint(g: &GroundProgram, bits: &[bool]) -> bool {
    g.rules.iter().any(|r| {
        r.head.is_none() && r.pos.iter().all(|&a| bits[a]) && r.neg.iter().all(|&a| !bits[a])
    })
}

fn is_stable_bits(g: &GroundProgram, bits: &[bool]) -> bool {
    let model = fixpoint(
        g,
        g.rules
            .iter()
            .filter(|r| r.head.is_some() && r.neg.iter().all(|&a| !bits[a])),
        vec![false; g.atoms.len()],
    );
    model == bits && !violates_constraint(g, bits)
}

pub fn is_stable(g: &GroundProgram, i: &Interpretation) -> bool {
    match g.to_bits(i) {
        Some(bits) => is_stable_bits(g, &bits),
        None => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Subset,
    Choice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub subset_atoms: usize,
    pub choice_bits: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            subset_atoms: DEFAULT_SUBSET_CAP,
            choice_bits: DEFAULT_CHOICE_CAP_BITS,
        }
    }
}

pub fn answer_sets(g: &GroundProgram, mode: Mode) -> Result<Vec<Interpretation>, OracleError> {
    answer_sets_with(g, mode, Caps::default())
}

/// All stable models, sorted.
pub fn answer_sets_with(g: &GroundProgram, mode: Mode, caps: Caps) -> Result<Vec<Interpretation>, OracleError> {
    let models = match mode {
        Mode::Subset => subset_mode(g, caps.subset_atoms)?,
        Mode::Choice => choice_mode(g, caps.choice_bits)?,
    };
    let mut out: Vec<Interpretation> = models.iter().map(|b| g.interpretation_of(b)).collect();
    out.sort();
    out.dedup();
    for m in &out {
        assert!(is_stable(g, m), "oracle returned a non-stable model");
    }
    Ok(out)
}

fn base_bits(g: &GroundProgram) -> Vec<bool> {
    let mut bits = vec![false; g.atoms.len()];
    for &a in &g.domain_facts {
        bits[a] = true;
    }
    bits
}

fn subset_mode(g: &GroundProgram, cap: usize) -> Result<Vec<Vec<bool>>, OracleError> {
    let cands = g.head_atoms();
    if cands.len() > cap {
        return Err(OracleError::SubsetCap {
            atoms: cands.len(),
            cap,
        });
    }
    let base = base_bits(g);
    Ok((0u64..1 << cands.len())
        .into_par_iter()
        .filter_map(|mask| {
            let mut bits = base.clone();
            for (k, &a) in cands.iter().enumerate() {
                bits[a] = mask >> k & 1 == 1;
            }
            is_stable_bits(g, &bits).then_some(bits)
        })
        .collect())
}

struct Component {
    rules: Vec<usize>,
    /// Atoms of the component that occur negatively in its own rules.
    guesses: Vec<usize>,
}

fn choice_mode(g: &GroundProgram, cap_bits: usize) -> Result<Vec<Vec<bool>>, OracleError> {
    if let Some(s) = g.graph.sccs.iter().find(|s| s.has_positive_internal_cycle) {
        let names: Vec<String> = s.preds.iter().map(|p| p.to_string()).collect();
        return Err(OracleError::ModeInapplicable(format!(
            "positive cycle through {}",
            names.join(", ")
        )));
    }
    let pred_scc: Vec<Option<usize>> = g
        .atoms
        .iter()
        .map(|a| g.graph.scc_of(&a.key()))
        .collect();
    let mut comps: Vec<Component> = g
        .graph
        .sccs
        .iter()
        .map(|_| Component {
            rules: Vec::new(),
            guesses: Vec::new(),
        })
        .collect();
    for (ri, r) in g.rules.iter().enumerate() {
        let Some(h) = r.head else { continue };
        if g.domain_facts.contains(&h) && r.pos.is_empty() && r.neg.is_empty() {
            continue;
        }
        let Some(s) = pred_scc[h] else { continue };
        comps[s].rules.push(ri);
        for &a in &r.neg {
            if pred_scc[a] == Some(s) && !comps[s].guesses.contains(&a) {
                comps[s].guesses.push(a);
            }
        }
    }
    for c in &mut comps {
        c.guesses.sort_by(|a, b| g.atoms[*a].cmp(&g.atoms[*b]));
    }
    let bits: usize = comps.iter().map(|c| c.guesses.len()).sum();
    if bits > cap_bits {
        return Err(OracleError::ChoiceCap { bits, cap: cap_bits });
    }
    let mut out = Vec::new();
    extend(g, &comps, 0, base_bits(g), &mut out);
    Ok(out)
}

/// Fixes component `k` under every consistent guess and recurses.
fn extend(g: &GroundProgram, comps: &[Component], k: usize, bits: Vec<bool>, out: &mut Vec<Vec<bool>>) {
    if k == comps.len() {
        if is_stable_bits(g, &bits) {
            out.push(bits);
        }
        return;
    }
    let c = &comps[k];
    for mask in 0u64..1 << c.guesses.len() {
        let mut assumed = bits.clone();
        for (j, &a) in c.guesses.iter().enumerate() {
            assumed[a] = mask >> j & 1 == 1;
        }
        let rules = c
            .rules
            .iter()
            .map(|&ri| &g.rules[ri])
            .filter(|r| r.neg.iter().all(|&a| !assumed[a]));
        let next = fixpoint(g, rules, bits.clone());
        if c.guesses.iter().all(|&a| next[a] == assumed[a]) {
            extend(g, comps, k + 1, next, out);
        }
    }
}

/// The unique stable model of a stratified program, component by component.
pub fn perfect_model(g: &GroundProgram) -> Result<Interpretation, OracleError> {
    if let Some(s) = g.graph.sccs.iter().find(|s| s.has_negative_internal_edge) {
        return Err(OracleError::NotStratified(s.preds[0].clone()));
    }
    let mut by_scc: Vec<Vec<&GroundRule>> = vec![Vec::new(); g.graph.sccs.len()];
    for r in &g.rules {
        if let Some(h) = r.head {
            if let Some(s) = g.graph.scc_of(&g.atoms[h].key()) {
                by_scc[s].push(r);
            }
        }
    }
    let mut bits = base_bits(g);
    for rules in by_scc {
        let enabled: Vec<&GroundRule> = rules
            .into_iter()
            .filter(|r| r.neg.iter().all(|&a| !bits[a]))
            .collect();
        bits = fixpoint(g, enabled.into_iter(), bits);
    }
    if violates_constraint(g, &bits) {
        return Err(OracleError::ConstraintViolated);
    }
    Ok(g.interpretation_of(&bits))
}

/// Removes the domain facts of `g` from a model, for display.
pub fn without_domain_facts(g: &GroundProgram, i: &Interpretation) -> Interpretation {
    i.iter()
        .filter(|a| !g.domain_preds.contains(&a.key()))
        .cloned()
        .collect()
}

/// `{a, b, c}` with atoms in canonical order.
pub fn format_model<'a>(atoms: impl IntoIterator<Item = &'a GroundAtom>) -> String {
    let parts: Vec<String> = atoms.into_iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", parts.join(", "))
}
