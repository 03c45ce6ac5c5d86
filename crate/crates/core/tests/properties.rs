mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use aspsynth_core::analysis::{analyze, ProgramClass};
use aspsynth_core::evaluator::{query, EvalError};
use aspsynth_core::fuzz::{gen_random_program, gen_random_source, DiffConfig};
use aspsynth_core::oracle::{self, Mode};
use aspsynth_core::syntax::{parse_program, Atom, Literal, Term};
use aspsynth_core::synth::{emit_text, simplify, Style};
use common::Pipeline;

fn small() -> DiffConfig {
    DiffConfig {
        max_constants: 3,
        max_rules: 4,
        ..DiffConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_round_trips(seed in any::<u64>()) {
        let p = gen_random_program(seed, &DiffConfig::default());
        let again = parse_program(&p.to_string()).unwrap();
        prop_assert_eq!(&p.rules, &again.rules);
        prop_assert_eq!(p.to_string(), again.to_string());
    }

    #[test]
    fn pipeline_is_deterministic(seed in any::<u64>()) {
        let src = gen_random_source(seed, &DiffConfig::default());
        let a = Pipeline::parse(&src);
        let b = Pipeline::parse(&src);
        prop_assert_eq!(&a.analysis.class, &b.analysis.class);
        prop_assert_eq!(a.completion.to_string(), b.completion.to_string());
        prop_assert_eq!(emit_text(&a.synth(), Style::Plain), emit_text(&b.synth(), Style::Plain));
    }

    #[test]
    fn answer_sets_are_stable_and_modes_agree(seed in any::<u64>()) {
        let pl = Pipeline::new(gen_random_program(seed, &small()));
        let g = pl.ground();
        let choice = oracle::answer_sets(&g, Mode::Choice).unwrap();
        for m in &choice {
            prop_assert!(oracle::is_stable(&g, m));
        }
        if g.head_atoms().len() <= 16 {
            prop_assert_eq!(&oracle::answer_sets(&g, Mode::Subset).unwrap(), &choice);
        }
        if pl.analysis.class == ProgramClass::Hierarchical {
            prop_assert_eq!(choice, vec![oracle::perfect_model(&g).unwrap()]);
        }
    }

    #[test]
    fn domain_facts_are_in_every_answer_set(seed in any::<u64>()) {
        let pl = Pipeline::new(gen_random_program(seed, &small()));
        let g = pl.ground();
        let facts: BTreeSet<_> = pl.analysis.domains.facts().collect();
        for m in oracle::answer_sets(&g, Mode::Choice).unwrap() {
            prop_assert!(facts.is_subset(&m));
        }
    }

    #[test]
    fn simplify_preserves_tier_one_procedures(seed in any::<u64>()) {
        let pl = Pipeline::new(gen_random_program(seed, &small()));
        prop_assume!(pl.analysis.class == ProgramClass::Hierarchical);
        let raw = pl.synth_raw();
        let simple = simplify(raw.clone());
        let mut universe = pl.analysis.domains.universe();
        universe.extend(pl.program.constants());
        universe.sort();
        universe.dedup();
        for proc in &raw.procs {
            if simple.proc(&proc.name).is_none() {
                continue;
            }
            for args in common::tuples(&universe, proc.params.len()) {
                prop_assert_eq!(pl.call(&raw, &proc.name, &args), pl.call(&simple, &proc.name, &args));
            }
        }
    }

    #[test]
    fn tier_one_decides_the_perfect_model(seed in any::<u64>()) {
        let pl = Pipeline::new(gen_random_program(seed, &small()));
        prop_assume!(pl.analysis.class == ProgramClass::Hierarchical);
        let ip = pl.synth();
        let pm = oracle::perfect_model(&pl.ground()).unwrap();
        for pred in pl.derived() {
            let dec = ip.decision(&pred).unwrap();
            for a in pl.ground_atoms(&pred) {
                let holds = pl.call(&ip, &dec.holds, &a.args);
                prop_assert_eq!(holds, pm.contains(&a), "{}", a);
                prop_assert_eq!(pl.call(&ip, &dec.fails, &a.args), !holds);
            }
        }
    }

    /// Partial models are consistent and extend to an answer set; on
    /// hierarchical programs a query succeeds exactly for perfect-model atoms.
    #[test]
    fn evaluator_partial_models_extend(seed in any::<u64>()) {
        let pl = Pipeline::new(gen_random_program(seed, &small()));
        let g = pl.ground();
        let models = oracle::answer_sets(&g, Mode::Choice).unwrap();
        for pred in pl.derived() {
            let vars: Vec<Term> = (0..pred.arity).map(|i| Term::var(format!("Q{i}"))).collect();
            let atom = Atom::new(pred.name.clone(), vars);
            for lit in [Literal::Pos(atom.clone()), Literal::Neg(atom)] {
                let answers = match query(&pl.completion, &pl.analysis.domains, &lit) {
                    Ok(a) => a,
                    // Backtracking is exponential on rare programs without answer sets.
                    Err(EvalError::StepLimit(_)) if pl.analysis.class != ProgramClass::Hierarchical => continue,
                    Err(e) => panic!("{lit}: {e}"),
                };
                for ans in &answers {
                    prop_assert!(ans.model.is_consistent());
                    prop_assert!(models.iter().any(|m| ans.model.embeds_in(m)), "{} {}", lit, ans);
                }
                if pl.analysis.class == ProgramClass::Hierarchical {
                    let pm = &models[0];
                    let proved: BTreeSet<_> = answers
                        .iter()
                        .map(|a| {
                            let s = a.bindings.iter().cloned().collect();
                            lit.atom().unwrap().ground(&s).unwrap()
                        })
                        .collect();
                    let expected: BTreeSet<_> = pl
                        .ground_atoms(&pred)
                        .into_iter()
                        .filter(|a| matches!(lit, Literal::Pos(_)) == pm.contains(a))
                        .filter(|a| proved.contains(a) || g.id(a).is_some() || matches!(lit, Literal::Pos(_)))
                        .collect();
                    if matches!(lit, Literal::Pos(_)) {
                        prop_assert_eq!(&proved, &expected);
                    } else {
                        prop_assert!(proved.is_subset(&expected));
                    }
                }
            }
        }
    }

    #[test]
    fn analysis_is_a_function_of_the_text(seed in any::<u64>()) {
        let src = gen_random_source(seed, &DiffConfig::default());
        let p = parse_program(&src).unwrap();
        let q = parse_program(&p.to_string()).unwrap();
        prop_assert_eq!(analyze(&p).class, analyze(&q).class);
    }
}
