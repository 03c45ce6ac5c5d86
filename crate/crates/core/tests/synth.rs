mod common;

use aspsynth_core::analysis::ProgramClass;
use aspsynth_core::completion::RuleNegation;
use aspsynth_core::evaluator::{EvalContext, Evaluator};
use aspsynth_core::oracle::{self, Mode};
use aspsynth_core::syntax::{Constant, GroundAtom, Literal, Subst, Term};
use aspsynth_core::synth::{
    emit_proc, emit_text, interpret, interpret_with, simplify, Cond, ImpProgram, InterpError, InterpResult,
    Invocation, Proc, Stmt, Style, SynthError, Tier,
};
use common::{corpus, corpus_program, grammar, normalize_text, Pipeline};

const MAX_LISTING: &str = "def max(x):
    for y in num:
        if x < y:
            return False
    return True";

#[test]
fn max_listing_python_style() {
    let pl = Pipeline::new(corpus_program("max"));
    let ip = pl.synth();
    let text = emit_proc(&ip, "check_max", Style::Python).unwrap();
    assert!(text.starts_with("def max(x):"));
    assert_eq!(normalize_text(&text), MAX_LISTING);
    let not_smaller = emit_proc(&ip, "check_not_smaller", Style::Python).unwrap();
    assert_eq!(normalize_text(&not_smaller), MAX_LISTING.replace("def max", "def not_smaller"));
}

#[test]
fn max_invocations() {
    let pl = Pipeline::new(corpus_program("max"));
    let ip = pl.synth();
    let expect = [(3, false), (5, false), (7, true), (4, false)];
    for (x, want) in expect {
        assert_eq!(pl.call(&ip, "check_max", &[Constant::Int(x)]), want, "max({x})");
    }
    assert!(pl.call(&ip, "check_smaller", &[Constant::Int(3)]));
    assert!(!pl.call(&ip, "check_smaller", &[Constant::Int(7)]));
}

#[test]
fn compile_positive_smaller_before_simplify() {
    let pl = Pipeline::new(corpus_program("max"));
    let raw = pl.synth_raw();
    let text = emit_proc(&raw, "check_smaller", Style::Plain).unwrap();
    assert_eq!(
        normalize_text(&text),
        "proc check_smaller(x):
    for y in num:
        if x in num and y in num and x < y:
            return true
    return false"
    );
}

#[test]
fn simplify_is_semantics_preserving_on_tier_one_corpus() {
    for (name, p) in corpus() {
        let pl = Pipeline::new(p);
        if pl.analysis.class != ProgramClass::Hierarchical {
            continue;
        }
        let raw = pl.synth_raw();
        let simple = simplify(raw.clone());
        for proc in &raw.procs {
            if simple.proc(&proc.name).is_none() {
                continue;
            }
            let universe = {
                let mut u = pl.analysis.domains.universe();
                u.extend(pl.program.constants());
                u.sort();
                u.dedup();
                u
            };
            for args in common::tuples(&universe, proc.params.len()) {
                assert_eq!(
                    pl.call(&raw, &proc.name, &args),
                    pl.call(&simple, &proc.name, &args),
                    "{name}: {}({args:?})",
                    proc.name
                );
            }
        }
    }
}

#[test]
fn simplify_preserves_models_on_tier_two_corpus() {
    for (name, p) in corpus() {
        let pl = Pipeline::new(p);
        if !matches!(pl.analysis.class, ProgramClass::TightChoice { .. }) {
            continue;
        }
        assert_eq!(pl.synth_models(&pl.synth_raw()), pl.synth_models(&pl.synth()), "{name}");
    }
}

#[test]
fn even_loop_search() {
    let pl = Pipeline::new(corpus_program("even_loop"));
    let ip = pl.synth();
    assert_eq!(ip.tier, Tier::Two);
    let models = pl.synth_models(&ip);
    let p = GroundAtom::new("p", vec![]);
    let q = GroundAtom::new("q", vec![]);
    assert_eq!(models, vec![[p].into_iter().collect(), [q].into_iter().collect()]);
}

#[test]
fn folded_coloring_gives_six_colorings() {
    let pl = Pipeline::new(corpus_program("coloring"));
    let ip = pl.synth();
    ip.validate().unwrap();
    let models = pl.synth_models(&ip);
    assert_eq!(models, pl.oracle_models(Mode::Choice));
    assert_eq!(models.len(), 6);
    for m in &models {
        let colors: Vec<&GroundAtom> = m.iter().filter(|a| a.predicate == "color").collect();
        assert_eq!(colors.len(), 3);
    }
}

#[test]
fn constraint_coloring_is_refused() {
    let pl = Pipeline::new(corpus_program("coloring_constraints"));
    let err = aspsynth_core::synth::synthesize(&pl.program, &pl.analysis.class, &pl.completion, &pl.analysis.domains)
        .unwrap_err();
    let SynthError::Rejected(reasons) = &err;
    assert_eq!(reasons.len(), 1);
    assert!(err.to_string().contains("head-less rule"), "{err}");
}

#[test]
fn positive_recursion_is_refused() {
    let pl = Pipeline::new(corpus_program("transitive_closure"));
    let err = aspsynth_core::synth::synthesize(&pl.program, &pl.analysis.class, &pl.completion, &pl.analysis.domains)
        .unwrap_err();
    assert!(err.to_string().contains("positive cycle"), "{err}");
}

#[test]
fn every_synthesized_corpus_program_validates_and_parses() {
    let mut checked = 0;
    for (name, p) in corpus() {
        let pl = Pipeline::new(p);
        if pl.analysis.class.is_rejected() {
            continue;
        }
        for ip in [pl.synth_raw(), pl.synth()] {
            ip.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let text = emit_text(&ip, Style::Plain);
            grammar::validate(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        }
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn coloring_text_parses_under_grammar() {
    let ip = Pipeline::new(corpus_program("coloring")).synth();
    let text = emit_text(&ip, Style::Plain);
    assert!(text.contains("search "));
    grammar::validate(&text).unwrap();
}

#[test]
fn grammar_validator_rejects_malformed_text() {
    let good = "table num: [(3), (7)]\n\nproc check_max(x):\n    if not (x in num):\n        return false\n    for y in num:\n        if x < y and not f(y) and (x, y) in e:\n            return false\n        else:\n            let b = g(x)\n    return true\n";
    grammar::validate(good).unwrap();
    assert!(grammar::validate("proc f(x):\nreturn true\n").is_err());
    assert!(grammar::validate("proc f(x):\n    return x <\n").is_err());
    assert!(grammar::validate("proc f(x):\n      return true\n").is_err());
    assert!(grammar::validate("proc f(x):\n    else:\n        return true\n").is_err());
    assert!(grammar::validate("def f(x):\n    return True\n").is_err());
}

#[test]
fn empty_program_emits_nothing() {
    let ip = ImpProgram {
        tier: Tier::One,
        tables: vec![],
        procs: vec![],
        decisions: vec![],
        derived: vec![],
        models: String::new(),
    };
    assert_eq!(emit_text(&ip, Style::Plain), "");
    assert_eq!(emit_text(&ip, Style::Python), "");
}

#[test]
fn empty_source_synthesizes_one_empty_model() {
    let pl = Pipeline::parse("");
    let ip = pl.synth();
    assert_eq!(pl.synth_models(&ip), vec![Default::default()]);
}

#[test]
fn python_style_keywords() {
    let ip = Pipeline::new(corpus_program("even_loop")).synth();
    let text = emit_text(&ip, Style::Python);
    assert!(text.contains("def models():"));
    assert!(text.contains("return True"));
    assert!(!text.contains("proc "));
    assert!(!text.contains("return true"));
}

#[test]
fn double_negation_folds() {
    let proc = Proc {
        name: "f".into(),
        params: vec!["x".into()],
        requires: vec![None],
        outside: false,
        body: vec![
            Stmt::If {
                cond: Cond::negate(Cond::negate(Cond::Cmp {
                    left: Term::var("x"),
                    op: aspsynth_core::syntax::CmpOp::Lt,
                    right: Term::int(3),
                })),
                then: vec![Stmt::Return(Cond::Const(true))],
                els: vec![],
            },
            Stmt::Return(Cond::Const(false)),
        ],
    };
    let ip = ImpProgram {
        tier: Tier::One,
        tables: vec![],
        procs: vec![proc],
        decisions: vec![],
        derived: vec![],
        models: "f".into(),
    };
    let s = simplify(ip);
    assert_eq!(normalize_text(&emit_text(&s, Style::Plain)), "proc f(x):\n    return x < 3");
}

#[test]
fn undefined_predicate_dual_is_true() {
    let pl = Pipeline::parse("d(1). d(2).\np(X) :- d(X), not u(X).");
    let ip = pl.synth();
    for x in [1, 2] {
        assert!(pl.call(&ip, "check_p", &[Constant::Int(x)]));
    }
    assert!(!pl.call(&ip, "check_p", &[Constant::Int(3)]));
}

#[test]
fn interpreter_errors() {
    let pl = Pipeline::new(corpus_program("max"));
    let ip = pl.synth();
    let d = &pl.analysis.domains;
    let call = |proc: &str, args: Vec<Constant>| interpret(&ip, d, &Invocation::Call { proc: proc.into(), args });
    assert!(matches!(call("nope", vec![]), Err(InterpError::MissingProc(_))));
    assert!(matches!(call("check_max", vec![]), Err(InterpError::Arity { .. })));
    // A constant outside every table is simply not in the domain.
    assert_eq!(call("check_max", vec![Constant::sym("zz")]), Ok(InterpResult::Bool(false)));

    let pl = Pipeline::new(corpus_program("coloring"));
    let ip = pl.synth();
    let r = interpret_with(&ip, &pl.analysis.domains, &Invocation::Models, 3);
    assert!(matches!(r, Err(InterpError::Budget(3))));
}

/// Tier-1 soundness: decision procedures agree with the perfect model and
/// are complementary, over every ground atom of the program's constants.
#[test]
fn tier_one_matches_perfect_model() {
    for (name, p) in corpus() {
        let pl = Pipeline::new(p);
        if pl.analysis.class != ProgramClass::Hierarchical {
            continue;
        }
        let ip = pl.synth();
        let g = pl.ground();
        let pm = oracle::perfect_model(&g).unwrap();
        for pred in pl.derived() {
            let dec = ip.decision(&pred).unwrap_or_else(|| panic!("{name}: no decision for {pred}"));
            for a in pl.ground_atoms(&pred) {
                let holds = pl.call(&ip, &dec.holds, &a.args);
                let fails = pl.call(&ip, &dec.fails, &a.args);
                assert_eq!(holds, pm.contains(&a), "{name}: {a}");
                assert_eq!(fails, !holds, "{name}: not {a}");
            }
        }
    }
}

/// A compiled forall agrees with the evaluator's expansion of the same
/// forall, and both agree with the explicit conjunction over the domain.
#[test]
fn forall_loops_match_explicit_expansion() {
    let mut foralls = 0;
    for (name, p) in corpus() {
        let pl = Pipeline::new(p);
        if pl.analysis.class != ProgramClass::Hierarchical {
            continue;
        }
        let d = &pl.analysis.domains;
        let pm = oracle::perfect_model(&pl.ground()).unwrap();
        let ev = Evaluator::new(&pl.completion, d);
        let universe = d.universe();
        for dual in &pl.completion.duals {
            for rd in &dual.rules {
                let RuleNegation::Forall(fa) = &rd.body else { continue };
                foralls += 1;
                let free: Vec<String> = rd.head.args.iter().filter_map(|t| t.as_var().map(String::from)).collect();
                for vals in common::tuples(&universe, free.len()) {
                    let s: Subst = free.iter().cloned().zip(vals.iter().cloned()).collect();
                    let mut ctx = EvalContext::default();
                    let by_evaluator = ev.expand_forall(fa, &s, &mut ctx).unwrap();
                    let explicit = explicit_forall(fa, &s, d, &pm);
                    assert_eq!(by_evaluator, explicit, "{name}: {} under {s:?}", fa.helper);
                }
            }
        }
        // The compiled check_not procedure is the conjunction of its rule
        // negations, each a loop for forall rules.
        let ip = pl.synth();
        for pred in pl.derived() {
            let dec = ip.decision(&pred).unwrap();
            for a in pl.ground_atoms(&pred) {
                let mut ctx = EvalContext::default();
                let goal = Literal::Neg(aspsynth_core::syntax::Atom::new(
                    a.predicate.clone(),
                    a.args.iter().cloned().map(Term::Const).collect(),
                ));
                let by_evaluator = ev.solve(&goal, &mut ctx).unwrap().is_some();
                assert_eq!(pl.call(&ip, &dec.fails, &a.args), by_evaluator, "{name}: not {a}");
            }
        }
    }
    assert!(foralls >= 5, "only {foralls} forall goals in the corpus");
}

fn explicit_forall(
    fa: &aspsynth_core::completion::ForallGoal,
    s: &Subst,
    d: &aspsynth_core::analysis::DomainMap,
    pm: &oracle::Interpretation,
) -> bool {
    let names: Vec<String> = fa.bound.iter().map(|b| b.name.clone()).collect();
    let columns: Vec<Vec<Constant>> = fa
        .bound
        .iter()
        .map(|b| d.column(&b.generator.predicate, b.generator.position))
        .collect();
    let mut combos = vec![s.clone()];
    for (n, col) in names.iter().zip(&columns) {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                col.iter().map(move |v| {
                    let mut c = c.clone();
                    c.insert(n.clone(), v.clone());
                    c
                })
            })
            .collect();
    }
    combos.iter().all(|c| {
        let guard = fa.guard.iter().all(|g| d.contains(&g.ground(c).unwrap()));
        !guard
            || fa.disjuncts.iter().any(|l| match l {
                Literal::Pos(a) => pm.contains(&a.ground(c).unwrap()),
                Literal::Neg(a) => !pm.contains(&a.ground(c).unwrap()),
                Literal::Cmp { left, op, right } => op.eval(&left.resolve(c).unwrap(), &right.resolve(c).unwrap()),
            })
    })
}

/// Tier-2 equivalence and the tightness argument: on every tight corpus
/// program the supported models found by the search are the stable models.
#[test]
fn tier_two_matches_stable_models() {
    let mut checked = 0;
    for (name, p) in corpus() {
        let pl = Pipeline::new(p);
        if !matches!(pl.analysis.class, ProgramClass::TightChoice { .. }) {
            continue;
        }
        let ip = pl.synth();
        assert_eq!(pl.synth_models(&ip), pl.oracle_models(Mode::Choice), "{name}");
        checked += 1;
    }
    assert!(checked >= 6);
}

#[test]
fn synthesized_program_runs_on_other_fact_bases() {
    let pl = Pipeline::new(corpus_program("max"));
    let ip = pl.synth();
    let other = Pipeline::parse("num(10). num(2). num(40). num(8).\nmax(X) :- num(X), not smaller(X).\nsmaller(X) :- num(X), num(Y), X < Y.");
    let call = |x: i64| match interpret(
        &ip,
        &other.analysis.domains,
        &Invocation::Call {
            proc: "check_max".into(),
            args: vec![Constant::Int(x)],
        },
    )
    .unwrap()
    {
        InterpResult::Bool(b) => b,
        InterpResult::Models(_) => unreachable!(),
    };
    assert!(call(40));
    assert!(!call(10));
    assert!(!call(7));
}

#[test]
fn models_are_deterministic() {
    let pl = Pipeline::new(corpus_program("coloring_path"));
    let ip = pl.synth();
    let run = || match interpret(&ip, &pl.analysis.domains, &Invocation::Models).unwrap() {
        InterpResult::Models(m) => m,
        InterpResult::Bool(_) => unreachable!(),
    };
    assert_eq!(run(), run());
    assert_eq!(emit_text(&ip, Style::Plain), emit_text(&pl.synth(), Style::Plain));
}

#[test]
fn symbolic_constants_in_heads() {
    let pl = Pipeline::new(corpus_program("stratified_chain"));
    let ip = pl.synth();
    assert!(pl.call(&ip, "check_flag", &[Constant::sym("yes")]));
    assert!(pl.call(&ip, "check_flag", &[Constant::sym("no")]));
    assert!(!pl.call(&ip, "check_flag", &[Constant::sym("maybe")]));
}
