//! Random program generation and differential testing of the synthesizer
//! against the oracle.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, ProgramClass};
use crate::completion::dualize;
use crate::oracle::{self, Interpretation, Mode, OracleError};
use crate::syntax::{parse_program, Program};
use crate::synth::{interpret, synthesize_raw, simplify_with, InterpError, InterpResult, Invocation, Mutation};

/// Subset mode is used as a second opinion up to this many head atoms.
pub const CROSS_CHECK_ATOMS: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct DiffConfig {
    pub seed: u64,
    pub cases: usize,
    pub max_constants: usize,
    pub max_predicates: usize,
    pub max_arity: usize,
    pub max_rules: usize,
    pub max_body: usize,
    pub negation_probability: f64,
    /// Simplifier defect to inject; `Mutation::None` in normal runs.
    pub mutation: Mutation,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            seed: 1,
            cases: 100,
            max_constants: 4,
            max_predicates: 3,
            max_arity: 2,
            max_rules: 6,
            max_body: 3,
            negation_probability: 0.4,
            mutation: Mutation::None,
        }
    }
}

impl DiffConfig {
    pub fn validate(&self) -> Result<(), String> {
        let counts = [
            ("cases", self.cases),
            ("max_constants", self.max_constants),
            ("max_predicates", self.max_predicates),
            ("max_rules", self.max_rules),
            ("max_body", self.max_body),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(format!("{name} must be at least 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.negation_probability) {
            return Err(format!("negation_probability {} is outside [0, 1]", self.negation_probability));
        }
        Ok(())
    }
}

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];
const SYMBOLS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Source text of a random safe program without head-less rules.
///
/// Domain facts come first. Every rule variable gets a domain generator, and
/// a positive body literal only refers to a predicate declared earlier, so
/// the generated programs have no positive cycles.
pub fn gen_random_source(seed: u64, cfg: &DiffConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_consts = rng.random_range(1..=cfg.max_constants);
    let symbolic = rng.random_bool(0.3);
    let consts: Vec<String> = (0..n_consts)
        .map(|i| {
            if symbolic {
                SYMBOLS[i % SYMBOLS.len()].to_string()
            } else {
                (i + 1).to_string()
            }
        })
        .collect();

    let mut out = String::new();
    let mut dom: Vec<String> = consts.iter().filter(|_| rng.random_bool(0.8)).cloned().collect();
    if dom.is_empty() {
        dom.push(consts[0].clone());
    }
    for c in &dom {
        write!(out, "d({c}). ").unwrap();
    }
    let mut has_e = false;
    if cfg.max_arity >= 2 && rng.random_bool(0.5) {
        for a in &consts {
            for b in &consts {
                if rng.random_bool(0.35) {
                    write!(out, "e({a}, {b}). ").unwrap();
                    has_e = true;
                }
            }
        }
    }
    out.push('\n');

    let n_preds = rng.random_range(1..=cfg.max_predicates);
    let preds: Vec<(String, usize)> = (0..n_preds)
        .map(|i| (format!("p{i}"), rng.random_range(0..=cfg.max_arity)))
        .collect();
    let n_rules = rng.random_range(1..=cfg.max_rules);
    for _ in 0..n_rules {
        let h = rng.random_range(0..n_preds);
        let (hname, harity) = &preds[h];
        let mut used: Vec<&str> = Vec::new();
        let pick_term = |rng: &mut ChaCha8Rng, used: &mut Vec<&'static str>| -> String {
            if rng.random_bool(0.15) {
                consts.choose(rng).unwrap().clone()
            } else {
                let v = *VARS[..3].choose(rng).unwrap();
                if !used.contains(&v) {
                    used.push(v);
                }
                v.to_string()
            }
        };
        let head_args: Vec<String> = (0..*harity).map(|_| pick_term(&mut rng, &mut used)).collect();
        let mut body: Vec<String> = Vec::new();
        let n_body = rng.random_range(0..=cfg.max_body);
        for _ in 0..n_body {
            if rng.random_bool(0.15) {
                let l = pick_term(&mut rng, &mut used);
                let r = pick_term(&mut rng, &mut used);
                let op = *["<", ">", "=<", ">=", "=", "!="].choose(&mut rng).unwrap();
                body.push(format!("{l} {op} {r}"));
                continue;
            }
            let negative = rng.random_bool(cfg.negation_probability);
            let candidates: Vec<usize> = if negative { (0..n_preds).collect() } else { (0..h).collect() };
            let Some(&q) = candidates.choose(&mut rng) else {
                continue;
            };
            let (qname, qarity) = &preds[q];
            let args: Vec<String> = (0..*qarity).map(|_| pick_term(&mut rng, &mut used)).collect();
            let atom = if args.is_empty() {
                qname.clone()
            } else {
                format!("{qname}({})", args.join(", "))
            };
            body.push(if negative { format!("not {atom}") } else { atom });
        }
        // Generators go first, one per variable, sometimes a binary one.
        let mut gens: Vec<String> = Vec::new();
        let mut covered: BTreeSet<&str> = BTreeSet::new();
        for (i, v) in used.iter().enumerate() {
            if covered.contains(v) {
                continue;
            }
            if has_e && rng.random_bool(0.3) {
                if let Some(w) = used[i + 1..].iter().find(|w| !covered.contains(*w)) {
                    gens.push(format!("e({v}, {w})"));
                    covered.insert(v);
                    covered.insert(w);
                    continue;
                }
            }
            gens.push(format!("d({v})"));
            covered.insert(v);
        }
        gens.extend(body);
        let head = if head_args.is_empty() {
            hname.clone()
        } else {
            format!("{hname}({})", head_args.join(", "))
        };
        if gens.is_empty() {
            writeln!(out, "{head}.").unwrap();
        } else {
            writeln!(out, "{head} :- {}.", gens.join(", ")).unwrap();
        }
    }
    out
}

pub fn gen_random_program(seed: u64, cfg: &DiffConfig) -> Program {
    parse_program(&gen_random_source(seed, cfg)).expect("generated programs parse")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Agree,
    Disagree { oracle: Vec<String>, synth: Vec<String> },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseReport {
    pub case: usize,
    pub seed: u64,
    pub program: String,
    pub class: String,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiffReport {
    pub cases: Vec<CaseReport>,
    pub agree: usize,
    pub disagree: usize,
    pub skipped: usize,
    pub first_disagreement: Option<CaseReport>,
}

fn render(models: &[Interpretation]) -> Vec<String> {
    models.iter().map(oracle::format_model).collect()
}

fn skip(reason: impl Into<String>) -> Outcome {
    Outcome::Skipped { reason: reason.into() }
}

/// Compares the synthesized program's models with the oracle's on one
/// program; both sides are projected to non-domain atoms.
pub fn diff_program(p: &Program, mutation: Mutation) -> (String, Outcome) {
    let a = analyze(p);
    let class = a.class.name().to_string();
    if let ProgramClass::Rejected(reasons) = &a.class {
        let why: Vec<String> = reasons.iter().map(|r| r.to_string()).collect();
        return (class, skip(format!("rejected: {}", why.join("; "))));
    }
    let d = &a.domains;
    let g = match oracle::ground(p, d) {
        Ok(g) => g,
        Err(e) => return (class, skip(format!("cap: {e}"))),
    };
    let mut expected = match oracle::answer_sets(&g, Mode::Choice) {
        Ok(m) => m,
        Err(e @ (OracleError::ChoiceCap { .. } | OracleError::GroundCap { .. })) => {
            return (class, skip(format!("cap: {e}")))
        }
        Err(e) => return (class, skip(format!("oracle: {e}"))),
    };
    if g.head_atoms().len() <= CROSS_CHECK_ATOMS {
        match oracle::answer_sets(&g, Mode::Subset) {
            Ok(s) if s == expected => {}
            Ok(s) => {
                return (
                    class,
                    Outcome::Disagree {
                        oracle: render(&expected),
                        synth: render(&s).into_iter().map(|m| format!("subset mode: {m}")).collect(),
                    },
                )
            }
            Err(e) => return (class, skip(format!("cap: {e}"))),
        }
    }
    for m in &mut expected {
        *m = oracle::without_domain_facts(&g, m);
    }
    expected.sort();
    let c = match dualize(p, d) {
        Ok(c) => c,
        Err(e) => return (class, skip(format!("completion: {e}"))),
    };
    let ip = match synthesize_raw(p, &a.class, &c, d) {
        Ok(ip) => simplify_with(ip, mutation),
        Err(e) => return (class, skip(e.to_string())),
    };
    let mut got = match interpret(&ip, d, &Invocation::Models) {
        Ok(InterpResult::Models(m)) => m,
        Ok(InterpResult::Bool(_)) => unreachable!("model enumeration returns models"),
        Err(e @ InterpError::Budget(_)) => return (class, skip(format!("cap: {e}"))),
        Err(e) => return (class, skip(format!("interpreter: {e}"))),
    };
    got.sort();
    got.dedup();
    let outcome = if got == expected {
        Outcome::Agree
    } else {
        Outcome::Disagree {
            oracle: render(&expected),
            synth: render(&got),
        }
    };
    (class, outcome)
}

/// Runs `cfg.cases` generated programs, case `i` seeded with `seed + i`.
pub fn difftest(cfg: &DiffConfig) -> DiffReport {
    let cases: Vec<CaseReport> = (0..cfg.cases)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let program = gen_random_source(seed, cfg);
            let (class, outcome) = match parse_program(&program) {
                Ok(p) => diff_program(&p, cfg.mutation),
                Err(e) => ("unparsed".to_string(), skip(format!("parse: {e}"))),
            };
            CaseReport {
                case: i,
                seed,
                program,
                class,
                outcome,
            }
        })
        .collect();
    let count = |f: fn(&Outcome) -> bool| cases.iter().filter(|c| f(&c.outcome)).count();
    DiffReport {
        agree: count(|o| matches!(o, Outcome::Agree)),
        disagree: count(|o| matches!(o, Outcome::Disagree { .. })),
        skipped: count(|o| matches!(o, Outcome::Skipped { .. })),
        first_disagreement: cases
            .iter()
            .find(|c| matches!(c.outcome, Outcome::Disagree { .. }))
            .cloned(),
        cases,
    }
}
