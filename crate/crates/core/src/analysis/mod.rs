//! Static checks that decide what the rest of the pipeline may do with a
//! program: variable safety, finite domains, the predicate dependency graph,
//! and the resulting [`ProgramClass`].

mod graph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::syntax::{Constant, GroundAtom, Literal, PredKey, Program, Rule, Term};

pub use graph::{dependency_graph, DepGraph, Edge, Scc, Sign};

/// The body literal that supplies the values of a variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Generator {
    pub predicate: PredKey,
    pub position: usize,
    /// Index of the generating literal in the rule body.
    pub literal: usize,
}

/// Where the values of one head argument come from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ArgSource {
    Column { predicate: PredKey, position: usize },
    Const(Constant),
    /// Repeats an earlier argument (`e(X, X)`).
    SameAs(usize),
}

/// Facts of the domain predicates plus, per rule, the generator of each
/// variable.
#[derive(Clone, Debug, Default)]
pub struct DomainMap {
    tables: BTreeMap<PredKey, Vec<Vec<Constant>>>,
    order: Vec<PredKey>,
    derived_columns: BTreeMap<(PredKey, usize), Vec<Constant>>,
    generators: Vec<BTreeMap<String, Generator>>,
}

impl DomainMap {
    /// A fact base without per-rule information, e.g. to run a synthesized
    /// program on new inputs.
    pub fn from_tables(tables: impl IntoIterator<Item = (PredKey, Vec<Vec<Constant>>)>) -> Self {
        let mut map = DomainMap::default();
        for (k, rows) in tables {
            let mut dedup: Vec<Vec<Constant>> = Vec::new();
            for r in rows {
                assert_eq!(r.len(), k.arity, "row arity must match {k}");
                if !dedup.contains(&r) {
                    dedup.push(r);
                }
            }
            map.order.push(k.clone());
            map.tables.insert(k, dedup);
        }
        map
    }

    /// Domain predicates in order of first occurrence.
    pub fn predicates(&self) -> &[PredKey] {
        &self.order
    }

    pub fn is_domain(&self, pred: &PredKey) -> bool {
        self.tables.contains_key(pred)
    }

    pub fn tuples(&self, pred: &PredKey) -> &[Vec<Constant>] {
        self.tables.get(pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.tables
            .get(&atom.key())
            .is_some_and(|rows| rows.contains(&atom.args))
    }

    /// Distinct values at `position` of `pred`, in order of first occurrence.
    /// Works for domain predicates and for derived predicates used as
    /// constraint generators.
    pub fn column(&self, pred: &PredKey, position: usize) -> Vec<Constant> {
        if let Some(rows) = self.tables.get(pred) {
            let mut out: Vec<Constant> = Vec::new();
            for r in rows {
                if !out.contains(&r[position]) {
                    out.push(r[position].clone());
                }
            }
            return out;
        }
        self.derived_columns
            .get(&(pred.clone(), position))
            .cloned()
            .unwrap_or_default()
    }

    pub fn generator(&self, rule: usize, var: &str) -> Option<&Generator> {
        self.generators.get(rule).and_then(|g| g.get(var))
    }

    pub fn rule_generators(&self, rule: usize) -> Option<&BTreeMap<String, Generator>> {
        self.generators.get(rule)
    }

    /// Values of a head argument source; `SameAs` has no values of its own.
    pub fn source_values(&self, src: &ArgSource) -> Vec<Constant> {
        match src {
            ArgSource::Column {
                predicate,
                position,
            } => self.column(predicate, *position),
            ArgSource::Const(c) => vec![c.clone()],
            ArgSource::SameAs(_) => Vec::new(),
        }
    }

    /// All constants of all tables, sorted.
    pub fn universe(&self) -> Vec<Constant> {
        let set: BTreeSet<&Constant> = self.tables.values().flatten().flatten().collect();
        set.into_iter().cloned().collect()
    }

    /// Every tuple of every domain predicate, as ground atoms.
    pub fn facts(&self) -> impl Iterator<Item = GroundAtom> + '_ {
        self.order.iter().flat_map(move |k| {
            self.tables[k]
                .iter()
                .map(move |r| GroundAtom::new(k.name.clone(), r.clone()))
        })
    }
}

/// Predicates defined by ground facts only (and by at least one).
pub fn domain_predicates(p: &Program) -> BTreeSet<PredKey> {
    let mut defined: BTreeMap<PredKey, bool> = BTreeMap::new();
    for r in &p.rules {
        if let Some(h) = &r.head {
            let ok = r.body.is_empty() && h.is_ground();
            *defined.entry(h.key()).or_insert(true) &= ok;
        }
    }
    defined
        .into_iter()
        .filter_map(|(k, ok)| ok.then_some(k))
        .collect()
}

/// First positive literal over a domain predicate for every variable that has one.
pub fn generators_of(
    rule: &Rule,
    is_domain: impl Fn(&PredKey) -> bool,
) -> BTreeMap<String, Generator> {
    let mut out = BTreeMap::new();
    for (li, l) in rule.body.iter().enumerate() {
        let Literal::Pos(a) = l else { continue };
        let key = a.key();
        if !is_domain(&key) {
            continue;
        }
        for (pos, t) in a.args.iter().enumerate() {
            if let Term::Var(v) = t {
                out.entry(v.clone()).or_insert_with(|| Generator {
                    predicate: key.clone(),
                    position: pos,
                    literal: li,
                });
            }
        }
    }
    out
}

/// Sources of the head arguments of `rule`, or `None` when some head
/// variable has no generator.
pub fn head_sources(rule: &Rule, gens: &BTreeMap<String, Generator>) -> Option<Vec<ArgSource>> {
    let head = rule.head.as_ref()?;
    let mut out = Vec::with_capacity(head.args.len());
    for (i, t) in head.args.iter().enumerate() {
        let src = match t {
            Term::Const(c) => ArgSource::Const(c.clone()),
            Term::Var(v) => {
                if let Some(j) = head.args[..i].iter().position(|u| u == t) {
                    ArgSource::SameAs(j)
                } else {
                    let g = gens.get(v)?;
                    ArgSource::Column {
                        predicate: g.predicate.clone(),
                        position: g.position,
                    }
                }
            }
        };
        out.push(src);
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SafetyViolation {
    /// The variable occurs in no positive body literal.
    UnsafeVariable { rule: usize, line: usize, var: String },
    /// The variable's positive occurrences are all over derived predicates.
    UnderivableDomain {
        rule: usize,
        line: usize,
        var: String,
        predicate: PredKey,
    },
    NonGroundFact { rule: usize, line: usize },
}

impl fmt::Display for SafetyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SafetyViolation::UnsafeVariable { line, var, .. } => {
                write!(f, "unsafe variable {var} at line {line}")
            }
            SafetyViolation::UnderivableDomain {
                line,
                var,
                predicate,
                ..
            } => write!(
                f,
                "infinite/underivable domain for variable {var} at line {line}: \
                 only generated by derived predicate {predicate}"
            ),
            SafetyViolation::NonGroundFact { line, .. } => {
                write!(f, "non-ground fact at line {line}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SafetyReport {
    pub violations: Vec<SafetyViolation>,
}

impl SafetyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Columns of derived predicates whose every rule has generated head
/// arguments. Constraints may draw variables from these.
fn derived_columns(
    p: &Program,
    domain: &BTreeSet<PredKey>,
    gens: &[BTreeMap<String, Generator>],
    tables: &BTreeMap<PredKey, Vec<Vec<Constant>>>,
) -> BTreeMap<(PredKey, usize), Vec<Constant>> {
    let mut out = BTreeMap::new();
    for key in p.predicates() {
        if domain.contains(&key) {
            continue;
        }
        let rules: Vec<usize> = p.rules_for(&key).collect();
        let sources: Option<Vec<Vec<ArgSource>>> = rules
            .iter()
            .map(|&i| head_sources(&p.rules[i], &gens[i]))
            .collect();
        let Some(sources) = sources else { continue };
        for pos in 0..key.arity {
            let mut vals: Vec<Constant> = Vec::new();
            for srcs in &sources {
                let mut src = &srcs[pos];
                while let ArgSource::SameAs(j) = src {
                    src = &srcs[*j];
                }
                let more = match src {
                    ArgSource::Const(c) => vec![c.clone()],
                    ArgSource::Column {
                        predicate,
                        position,
                    } => tables[predicate].iter().map(|r| r[*position].clone()).collect(),
                    ArgSource::SameAs(_) => unreachable!(),
                };
                for v in more {
                    if !vals.contains(&v) {
                        vals.push(v);
                    }
                }
            }
            out.insert((key.clone(), pos), vals);
        }
    }
    out
}

/// Builds the domain map without failing; variables lacking a generator are
/// simply absent from the per-rule generator maps.
fn build_domains(p: &Program) -> DomainMap {
    let domain = domain_predicates(p);
    let mut tables: BTreeMap<PredKey, Vec<Vec<Constant>>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in &p.rules {
        let Some(h) = &r.head else { continue };
        let key = h.key();
        if !domain.contains(&key) {
            continue;
        }
        let row: Vec<Constant> = h
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(_) => unreachable!("domain facts are ground"),
            })
            .collect();
        let rows = tables.entry(key.clone()).or_insert_with(|| {
            order.push(key.clone());
            Vec::new()
        });
        if !rows.contains(&row) {
            rows.push(row);
        }
    }

    let mut generators: Vec<BTreeMap<String, Generator>> = p
        .rules
        .iter()
        .map(|r| generators_of(r, |k| domain.contains(k)))
        .collect();
    let derived = derived_columns(p, &domain, &generators, &tables);

    // Constraints may take a variable from a derived predicate.
    for (ri, r) in p.rules.iter().enumerate() {
        if !r.is_constraint() {
            continue;
        }
        for (li, l) in r.body.iter().enumerate() {
            let Literal::Pos(a) = l else { continue };
            let key = a.key();
            for (pos, t) in a.args.iter().enumerate() {
                if let Term::Var(v) = t {
                    if derived.contains_key(&(key.clone(), pos)) {
                        generators[ri].entry(v.clone()).or_insert_with(|| Generator {
                            predicate: key.clone(),
                            position: pos,
                            literal: li,
                        });
                    }
                }
            }
        }
    }

    DomainMap {
        tables,
        order,
        derived_columns: derived,
        generators,
    }
}

fn safety_of(p: &Program, domains: &DomainMap) -> SafetyReport {
    let mut violations = Vec::new();
    for (ri, r) in p.rules.iter().enumerate() {
        let line = p.line(ri);
        if r.is_fact() {
            if !r.head.as_ref().is_some_and(|h| h.is_ground()) {
                violations.push(SafetyViolation::NonGroundFact { rule: ri, line });
            }
            continue;
        }
        for v in r.vars() {
            if domains.generator(ri, &v).is_some() {
                continue;
            }
            let derived = r.body.iter().find_map(|l| match l {
                Literal::Pos(a) if a.vars().any(|u| u == v) => Some(a.key()),
                _ => None,
            });
            violations.push(match derived {
                Some(predicate) => SafetyViolation::UnderivableDomain {
                    rule: ri,
                    line,
                    var: v,
                    predicate,
                },
                None => SafetyViolation::UnsafeVariable { rule: ri, line, var: v },
            });
        }
    }
    SafetyReport { violations }
}

/// A variable is safe when a positive domain literal of its rule generates
/// it. Constraints may also draw from the head domains of derived predicates.
pub fn check_safety(p: &Program) -> SafetyReport {
    safety_of(p, &build_domains(p))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("{0}")]
    Unsafe(SafetyViolation),
    #[error("{0}")]
    Underivable(SafetyViolation),
}

pub fn extract_domains(p: &Program) -> Result<DomainMap, DomainError> {
    let domains = build_domains(p);
    if let Some(v) = safety_of(p, &domains).violations.into_iter().next() {
        return Err(match v {
            SafetyViolation::UnderivableDomain { .. } => DomainError::Underivable(v),
            _ => DomainError::Unsafe(v),
        });
    }
    Ok(domains)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    HeadlessRule { line: usize },
    PositiveCycle { preds: Vec<PredKey> },
    Safety(SafetyViolation),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::HeadlessRule { line } => write!(f, "head-less rule at line {line}"),
            RejectReason::PositiveCycle { preds } => {
                f.write_str("positive cycle through ")?;
                for (i, p) in preds.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
            RejectReason::Safety(v) => v.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ProgramClass {
    /// Acyclic dependency graph: one answer set, decided predicate by predicate.
    Hierarchical,
    /// Cycles exist, all through negation, and there are no constraints.
    TightChoice { choice_sccs: Vec<Vec<PredKey>> },
    Rejected(Vec<RejectReason>),
}

impl ProgramClass {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramClass::Hierarchical => "hierarchical",
            ProgramClass::TightChoice { .. } => "tight-choice",
            ProgramClass::Rejected(_) => "rejected",
        }
    }

    pub fn is_rejected(&self) -> bool {
        matches!(self, ProgramClass::Rejected(_))
    }
}

pub fn classify(p: &Program, g: &DepGraph, safety: &SafetyReport) -> ProgramClass {
    let mut reasons: Vec<RejectReason> = p
        .rules
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_constraint())
        .map(|(i, _)| RejectReason::HeadlessRule { line: p.line(i) })
        .collect();
    reasons.extend(
        g.sccs
            .iter()
            .filter(|s| s.has_positive_internal_cycle)
            .map(|s| RejectReason::PositiveCycle {
                preds: s.preds.clone(),
            }),
    );
    reasons.extend(safety.violations.iter().cloned().map(RejectReason::Safety));
    if !reasons.is_empty() {
        return ProgramClass::Rejected(reasons);
    }
    if g.is_acyclic() {
        ProgramClass::Hierarchical
    } else {
        ProgramClass::TightChoice {
            choice_sccs: g
                .choice_sccs()
                .into_iter()
                .map(|i| g.sccs[i].preds.clone())
                .collect(),
        }
    }
}

/// Everything the later stages need to know about a program.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub safety: SafetyReport,
    pub domains: DomainMap,
    pub graph: DepGraph,
    pub class: ProgramClass,
}

pub fn analyze(p: &Program) -> Analysis {
    let domains = build_domains(p);
    let safety = safety_of(p, &domains);
    let graph = dependency_graph(p);
    let class = classify(p, &graph, &safety);
    Analysis {
        safety,
        domains,
        graph,
        class,
    }
}
