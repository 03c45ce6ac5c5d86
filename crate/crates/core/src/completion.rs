//! Dual rules: a constructive definition of `not p` for every predicate `p`.
//!
//! For `p` with rules `R1..Rn` the dual is `not_p(V̄) :- not_r1(V̄), ..., not_rn(V̄)`.
//! A rule without body-only variables negates to a disjunction with one
//! clause per body literal. A rule with body-only variables `Ȳ` negates to
//! `forall(Ȳ, nb(V̄, Ȳ))`: for every assignment of `Ȳ` drawn from the
//! generator columns that satisfies the rule's positive domain literals
//! (the guard), one of the remaining literals must fail.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{generators_of, DomainMap, Generator};
use crate::syntax::{
    Atom, CmpOp, Literal, PredKey, Program, Rule, Term, RESERVED_PREFIX,
};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("program already contains generated predicate `{0}`; duals are not re-dualized")]
    AlreadyDualized(String),
    #[error("variable {var} in rule for {pred} has no domain generator")]
    MissingGenerator { pred: PredKey, var: String },
}

/// Renames head arguments to distinct fresh variables. Constants and
/// repeated variables become `=` comparisons at the front of the body.
pub fn normalize_heads(p: &Program) -> Program {
    let rules = p.rules.iter().map(normalize_rule).collect();
    Program {
        rules,
        lines: p.lines.clone(),
    }
}

fn fresh_names(taken: &[String], n: usize) -> Vec<String> {
    (1..)
        .map(|i| format!("V{i}"))
        .filter(|v| !taken.contains(v))
        .take(n)
        .collect()
}

fn normalize_rule(r: &Rule) -> Rule {
    let Some(head) = &r.head else {
        return r.clone();
    };
    let fresh = fresh_names(&r.vars(), head.args.len());
    let mut renames: BTreeMap<String, String> = BTreeMap::new();
    let mut eqs = Vec::new();
    for (i, t) in head.args.iter().enumerate() {
        let v = Term::Var(fresh[i].clone());
        match t {
            Term::Const(_) => eqs.push(Literal::cmp(v, CmpOp::Eq, t.clone())),
            Term::Var(x) => {
                if head.args.iter().filter(|u| *u == t).count() > 1 {
                    eqs.push(Literal::cmp(v, CmpOp::Eq, t.clone()));
                } else {
                    renames.insert(x.clone(), fresh[i].clone());
                }
            }
        }
    }
    let rename = |t: &Term| match t {
        Term::Var(x) => Term::Var(renames.get(x).cloned().unwrap_or_else(|| x.clone())),
        c => c.clone(),
    };
    let rename_atom = |a: &Atom| Atom::new(a.predicate.clone(), a.args.iter().map(rename).collect());
    let body = eqs
        .into_iter()
        .chain(r.body.iter().map(|l| match l {
            Literal::Pos(a) => Literal::Pos(rename_atom(a)),
            Literal::Neg(a) => Literal::Neg(rename_atom(a)),
            Literal::Cmp { left, op, right } => Literal::cmp(rename(left), *op, rename(right)),
        }))
        .collect();
    let head = Atom::new(
        head.predicate.clone(),
        fresh.into_iter().map(Term::Var).collect(),
    );
    Rule::new(Some(head), body)
}

/// Complement of a literal: sign flip for atoms, operator flip for comparisons.
pub fn negate_literal(l: &Literal) -> Literal {
    l.negate()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundVar {
    pub name: String,
    pub generator: Generator,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForallGoal {
    pub bound: Vec<BoundVar>,
    /// Positive domain literals of the source rule. Assignments that falsify
    /// the guard are not constrained.
    pub guard: Vec<Atom>,
    /// `__nb<i>_<p>(V̄, Ȳ)`, defined by one clause per disjunct.
    pub helper: Atom,
    /// Negations of the rule's non-domain literals.
    pub disjuncts: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleNegation {
    /// One clause per negated body literal.
    Disjunction(Vec<Literal>),
    Forall(ForallGoal),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDual {
    /// Index into the normalized program.
    pub rule: usize,
    /// `__nr<i>_<p>(V̄)` over the normalized rule's head variables.
    pub head: Atom,
    pub body: RuleNegation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dual {
    pub pred: PredKey,
    /// `__not_<p>(V1, ..., Vk)`.
    pub head: Atom,
    pub rules: Vec<RuleDual>,
}

/// Generated names for one predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualNames {
    pub dual: PredKey,
    pub rules: Vec<PredKey>,
    pub helpers: Vec<PredKey>,
}

#[derive(Clone, Debug)]
pub struct CompletionProgram {
    pub original: Program,
    pub normalized: Program,
    /// Generators of each normalized rule.
    pub generators: Vec<BTreeMap<String, Generator>>,
    pub duals: Vec<Dual>,
    pub name_map: BTreeMap<PredKey, DualNames>,
}

pub fn dual_name(p: &str) -> String {
    format!("{RESERVED_PREFIX}not_{p}")
}

pub fn dualize(p: &Program, d: &DomainMap) -> Result<CompletionProgram, CompletionError> {
    if let Some(k) = p
        .predicates()
        .into_iter()
        .find(|k| k.name.starts_with(RESERVED_PREFIX))
    {
        return Err(CompletionError::AlreadyDualized(k.name));
    }
    let normalized = normalize_heads(p);
    let generators: Vec<BTreeMap<String, Generator>> = normalized
        .rules
        .iter()
        .map(|r| generators_of(r, |k| d.is_domain(k)))
        .collect();

    let mut duals = Vec::new();
    let mut name_map = BTreeMap::new();
    for pred in p.predicates() {
        let canon: Vec<Term> = fresh_names(&[], pred.arity)
            .into_iter()
            .map(Term::Var)
            .collect();
        let head = Atom::new(dual_name(&pred.name), canon);
        let mut names = DualNames {
            dual: head.key(),
            rules: Vec::new(),
            helpers: Vec::new(),
        };
        let mut rules = Vec::new();
        for (i, ri) in normalized.rules_for(&pred).enumerate() {
            let rule = &normalized.rules[ri];
            let n = i + 1;
            let head_args = rule.head.as_ref().expect("rules_for yields headed rules").args.clone();
            let nr = Atom::new(format!("{RESERVED_PREFIX}nr{n}_{}", pred.name), head_args.clone());
            names.rules.push(nr.key());
            let ys = rule.body_only_vars();
            let body = if ys.is_empty() {
                RuleNegation::Disjunction(rule.body.iter().map(negate_literal).collect())
            } else {
                let gens = &generators[ri];
                let bound = ys
                    .iter()
                    .map(|y| {
                        gens.get(y)
                            .map(|g| BoundVar {
                                name: y.clone(),
                                generator: g.clone(),
                            })
                            .ok_or_else(|| CompletionError::MissingGenerator {
                                pred: pred.clone(),
                                var: y.clone(),
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let (guard, rest): (Vec<&Literal>, Vec<&Literal>) = rule
                    .body
                    .iter()
                    .partition(|l| matches!(l, Literal::Pos(a) if d.is_domain(&a.key())));
                let helper_args = head_args
                    .iter()
                    .cloned()
                    .chain(ys.iter().map(|y| Term::Var(y.clone())))
                    .collect();
                let helper = Atom::new(format!("{RESERVED_PREFIX}nb{n}_{}", pred.name), helper_args);
                names.helpers.push(helper.key());
                RuleNegation::Forall(ForallGoal {
                    bound,
                    guard: guard.into_iter().filter_map(|l| l.atom().cloned()).collect(),
                    helper,
                    disjuncts: rest.into_iter().map(negate_literal).collect(),
                })
            };
            rules.push(RuleDual {
                rule: ri,
                head: nr,
                body,
            });
        }
        name_map.insert(pred.clone(), names);
        duals.push(Dual { pred, head, rules });
    }

    Ok(CompletionProgram {
        original: p.clone(),
        normalized,
        generators,
        duals,
        name_map,
    })
}

/// A body element of a generated clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClauseItem {
    Lit(Literal),
    Forall { vars: Vec<String>, goal: Atom },
}

impl fmt::Display for ClauseItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClauseItem::Lit(l) => l.fmt(f),
            ClauseItem::Forall { vars, goal } => {
                f.write_str("forall(")?;
                for v in vars {
                    write!(f, "{v}, ")?;
                }
                write!(f, "{goal})")
            }
        }
    }
}

/// A generated clause in the input grammar extended with `forall`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub head: Atom,
    pub body: Vec<ClauseItem>,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.head.fmt(f)?;
        for (i, b) in self.body.iter().enumerate() {
            f.write_str(if i == 0 { " :- " } else { ", " })?;
            b.fmt(f)?;
        }
        f.write_str(".")
    }
}

impl Dual {
    /// The dual head clause, then per rule its negation clauses, then the
    /// forall helper clauses.
    pub fn clauses(&self) -> Vec<Clause> {
        let mut out = vec![Clause {
            head: self.head.clone(),
            body: self
                .rules
                .iter()
                .map(|r| {
                    let mut a = r.head.clone();
                    a.args = self.head.args.clone();
                    ClauseItem::Lit(Literal::Pos(a))
                })
                .collect(),
        }];
        for r in &self.rules {
            match &r.body {
                RuleNegation::Disjunction(lits) => out.extend(lits.iter().map(|l| Clause {
                    head: r.head.clone(),
                    body: vec![ClauseItem::Lit(l.clone())],
                })),
                RuleNegation::Forall(fa) => {
                    out.push(Clause {
                        head: r.head.clone(),
                        body: vec![ClauseItem::Forall {
                            vars: fa.bound.iter().map(|b| b.name.clone()).collect(),
                            goal: fa.helper.clone(),
                        }],
                    });
                    out.extend(fa.disjuncts.iter().map(|l| Clause {
                        head: fa.helper.clone(),
                        body: fa
                            .guard
                            .iter()
                            .map(|g| ClauseItem::Lit(Literal::Pos(g.clone())))
                            .chain(std::iter::once(ClauseItem::Lit(l.clone())))
                            .collect(),
                    }));
                }
            }
        }
        out
    }
}

/// Structured form of one dual, for JSON output.
#[derive(Clone, Debug, Serialize)]
pub struct DualView {
    pub predicate: String,
    pub head: String,
    pub clauses: Vec<String>,
    pub foralls: Vec<ForallView>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForallView {
    pub clause: String,
    pub vars: Vec<String>,
    pub domains: Vec<String>,
    pub guard: Vec<String>,
    pub goal: String,
    pub disjuncts: Vec<String>,
}

impl CompletionProgram {
    pub fn dual(&self, pred: &PredKey) -> Option<&Dual> {
        self.duals.iter().find(|d| &d.pred == pred)
    }

    pub fn views(&self) -> Vec<DualView> {
        self.duals
            .iter()
            .map(|d| DualView {
                predicate: d.pred.to_string(),
                head: d.head.to_string(),
                clauses: d.clauses().iter().map(|c| c.to_string()).collect(),
                foralls: d
                    .rules
                    .iter()
                    .filter_map(|r| match &r.body {
                        RuleNegation::Forall(fa) => Some(ForallView {
                            clause: r.head.to_string(),
                            vars: fa.bound.iter().map(|b| b.name.clone()).collect(),
                            domains: fa
                                .bound
                                .iter()
                                .map(|b| format!("{}[{}]", b.generator.predicate, b.generator.position))
                                .collect(),
                            guard: fa.guard.iter().map(|g| g.to_string()).collect(),
                            goal: fa.helper.to_string(),
                            disjuncts: fa.disjuncts.iter().map(|l| l.to_string()).collect(),
                        }),
                        RuleNegation::Disjunction(_) => None,
                    })
                    .collect(),
            })
            .collect()
    }
}

impl fmt::Display for CompletionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.original)?;
        for d in &self.duals {
            writeln!(f, "\n% dual of {}", d.pred)?;
            for c in d.clauses() {
                writeln!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::extract_domains;
    use crate::syntax::parse_program;

    fn norm(src: &str) -> String {
        normalize_heads(&parse_program(src).unwrap()).to_string()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(norm("p(a) :- q."), "p(V1) :- V1 = a, q.\n");
        assert_eq!(norm("e(X,X) :- d(X)."), "e(V1, V2) :- V1 = X, V2 = X, d(X).\n");
        assert_eq!(
            norm("max(X) :- num(X), not smaller(X)."),
            "max(V1) :- num(V1), not smaller(V1).\n"
        );
        assert_eq!(norm("p(X) :- d(X), d(V1)."), "p(V2) :- d(V2), d(V1).\n");
        assert_eq!(norm(":- p, q."), ":- p, q.\n");
    }

    #[test]
    fn negation_examples() {
        let p = parse_program("x :- not s, r, X < Y.").unwrap();
        let b = &p.rules[0].body;
        assert_eq!(negate_literal(&b[0]).to_string(), "s");
        assert_eq!(negate_literal(&b[1]).to_string(), "not r");
        assert_eq!(negate_literal(&b[2]).to_string(), "X >= Y");
    }

    fn dual_text(src: &str, pred: PredKey) -> Vec<String> {
        let p = parse_program(src).unwrap();
        let c = dualize(&p, &extract_domains(&p).unwrap()).unwrap();
        c.dual(&pred).unwrap().clauses().iter().map(|c| c.to_string()).collect()
    }

    #[test]
    fn propositional_dual() {
        assert_eq!(
            dual_text("p :- not q.\np :- r, not s.", PredKey::new("p", 0)),
            [
                "__not_p :- __nr1_p, __nr2_p.",
                "__nr1_p :- q.",
                "__nr2_p :- not r.",
                "__nr2_p :- s.",
            ]
        );
    }

    #[test]
    fn forall_dual_for_smaller() {
        assert_eq!(
            dual_text(
                "smaller(X) :- num(X), num(Y), X < Y.\nnum(3). num(7). num(5).",
                PredKey::new("smaller", 1)
            ),
            [
                "__not_smaller(V1) :- __nr1_smaller(V1).",
                "__nr1_smaller(V1) :- forall(Y, __nb1_smaller(V1, Y)).",
                "__nb1_smaller(V1, Y) :- num(V1), num(Y), V1 >= Y.",
            ]
        );
    }

    #[test]
    fn undefined_predicate_dual_is_unconditional() {
        let clauses = dual_text("p(X) :- d(X), not u(X).\nd(1).", PredKey::new("u", 1));
        assert_eq!(clauses, ["__not_u(V1)."]);
    }

    #[test]
    fn dualizing_twice_is_rejected() {
        let p = parse_program("p :- not q.").unwrap();
        let c = dualize(&p, &DomainMap::default()).unwrap();
        // Feed the generated clauses back in as a program.
        let mut rules = p.rules.clone();
        for d in &c.duals {
            rules.push(Rule::fact(d.head.clone()));
        }
        let err = dualize(&Program::new(rules), &DomainMap::default()).unwrap_err();
        assert!(matches!(err, CompletionError::AlreadyDualized(_)));
    }

    #[test]
    fn name_map_is_injective() {
        let p = parse_program(
            "color(X, C) :- node(X), color(C), not other(X, C).\n\
             other(X, C) :- node(X), color(C), color(D), C != D, color(X, D).\n\
             node(a). color(r). color(g).",
        )
        .unwrap();
        let c = dualize(&p, &extract_domains(&p).unwrap()).unwrap();
        let duals: std::collections::BTreeSet<&PredKey> =
            c.name_map.values().map(|n| &n.dual).collect();
        assert_eq!(duals.len(), c.name_map.len());
        assert_eq!(c.name_map.len(), p.predicates().len());
    }
}
