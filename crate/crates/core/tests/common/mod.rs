#![allow(dead_code)]

pub mod grammar;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use aspsynth_core::analysis::{analyze, Analysis};
use aspsynth_core::completion::{dualize, CompletionProgram};
use aspsynth_core::oracle::{self, GroundProgram, Interpretation, Mode};
use aspsynth_core::syntax::{parse_program, Constant, GroundAtom, PredKey, Program};
use aspsynth_core::synth::{self, ImpProgram, InterpResult, Invocation};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every corpus program, sorted by file name.
pub fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "lp"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let name = f.file_stem().unwrap().to_string_lossy().into_owned();
            let text = std::fs::read_to_string(&f).unwrap();
            let p = parse_program(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, p)
        })
        .collect()
}

pub fn corpus_program(name: &str) -> Program {
    let text = std::fs::read_to_string(corpus_dir().join(format!("{name}.lp"))).unwrap();
    parse_program(&text).unwrap()
}

pub struct Pipeline {
    pub program: Program,
    pub analysis: Analysis,
    pub completion: CompletionProgram,
}

impl Pipeline {
    pub fn new(p: Program) -> Self {
        let analysis = analyze(&p);
        let completion = dualize(&p, &analysis.domains).expect("dualize");
        Pipeline {
            program: p,
            analysis,
            completion,
        }
    }

    pub fn parse(src: &str) -> Self {
        Pipeline::new(parse_program(src).unwrap())
    }

    pub fn synth(&self) -> ImpProgram {
        synth::synthesize(&self.program, &self.analysis.class, &self.completion, &self.analysis.domains)
            .expect("synthesize")
    }

    pub fn synth_raw(&self) -> ImpProgram {
        synth::synthesize_raw(&self.program, &self.analysis.class, &self.completion, &self.analysis.domains)
            .expect("synthesize")
    }

    pub fn ground(&self) -> GroundProgram {
        oracle::ground(&self.program, &self.analysis.domains).expect("ground")
    }

    pub fn call(&self, ip: &ImpProgram, proc: &str, args: &[Constant]) -> bool {
        match synth::interpret(
            ip,
            &self.analysis.domains,
            &Invocation::Call {
                proc: proc.to_string(),
                args: args.to_vec(),
            },
        )
        .expect("interpret")
        {
            InterpResult::Bool(b) => b,
            InterpResult::Models(_) => unreachable!(),
        }
    }

    /// Models emitted by the synthesized program, sorted.
    pub fn synth_models(&self, ip: &ImpProgram) -> Vec<Interpretation> {
        match synth::interpret(ip, &self.analysis.domains, &Invocation::Models).expect("interpret") {
            InterpResult::Models(mut m) => {
                m.sort();
                m
            }
            InterpResult::Bool(_) => unreachable!(),
        }
    }

    /// Oracle answer sets without domain facts, sorted.
    pub fn oracle_models(&self, mode: Mode) -> Vec<Interpretation> {
        let g = self.ground();
        let mut m: Vec<Interpretation> = oracle::answer_sets(&g, mode)
            .expect("answer sets")
            .iter()
            .map(|m| oracle::without_domain_facts(&g, m))
            .collect();
        m.sort();
        m
    }

    /// Predicates with rules, in first-occurrence order.
    pub fn derived(&self) -> Vec<PredKey> {
        self.program
            .predicates()
            .into_iter()
            .filter(|k| !self.analysis.domains.is_domain(k) && self.program.rules_for(k).next().is_some())
            .collect()
    }

    /// Every ground atom of `pred` over the constants of the program.
    pub fn ground_atoms(&self, pred: &PredKey) -> Vec<GroundAtom> {
        let mut universe: BTreeSet<Constant> = self.analysis.domains.universe().into_iter().collect();
        universe.extend(self.program.constants());
        let universe: Vec<Constant> = universe.into_iter().collect();
        tuples(&universe, pred.arity)
            .into_iter()
            .map(|args| GroundAtom::new(pred.name.clone(), args))
            .collect()
    }
}

pub fn tuples(values: &[Constant], arity: usize) -> Vec<Vec<Constant>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                values.iter().map(move |v| {
                    let mut t = t.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// Strips trailing comments and blank lines, and trims line ends.
pub fn normalize_text(s: &str) -> String {
    s.lines()
        .map(|l| l.split('#').next().unwrap().trim_end())
        .filter(|l| !l.trim().is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}
