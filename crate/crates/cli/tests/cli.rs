use std::path::PathBuf;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(format!("{name}.lp"))
        .to_string_lossy()
        .into_owned()
}

/// Runs the CLI in-process; returns exit code, stdout and stderr.
fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("aspsynth").chain(args.iter().copied());
    let code = aspsynth::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn check_reports_class() {
    let (code, out, _) = run(&["check", &corpus("max")]);
    assert_eq!((code, out.as_str()), (0, "class: hierarchical\n"));
    let (code, out, _) = run(&["check", &corpus("coloring")]);
    assert_eq!(code, 0);
    assert_eq!(out, "class: tight-choice\nchoice: another_color/2, color/2, conflict/2\n");
}

#[test]
fn rejections_exit_two() {
    let (code, out, _) = run(&["check", &corpus("coloring_constraints")]);
    assert_eq!(code, 2);
    assert!(out.contains("reject: head-less rule at line 6"), "{out}");
    let (code, out, err) = run(&["synth", &corpus("coloring_constraints")]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("head-less rule"), "{err}");
    let (code, _, err) = run(&["dual", &corpus("unsafe")]);
    assert_eq!(code, 2);
    assert!(err.contains("unsafe variable X"), "{err}");
}

#[test]
fn dual_prints_generated_rules() {
    let (code, out, _) = run(&["dual", &corpus("dual_example")]);
    assert_eq!(code, 0);
    for line in ["__not_p :- __nr1_p, __nr2_p.", "__nr1_p :- q.", "__nr2_p :- not r.", "__nr2_p :- s."] {
        assert!(out.lines().any(|l| l == line), "missing {line}\n{out}");
    }
    let (code, out, _) = run(&["dual", &corpus("dual_example"), "--json"]);
    assert_eq!(code, 0);
    serde_json::from_str::<serde_json::Value>(&out).unwrap();
}

#[test]
fn solve_lists_answer_sets() {
    let (code, out, _) = run(&["solve", &corpus("max")]);
    assert_eq!((code, out.as_str()), (0, "{max(7), smaller(3), smaller(5)}\n"));
    let (_, out, _) = run(&["solve", &corpus("even_loop"), "--mode", "subset"]);
    assert_eq!(out, "{p}\n{q}\n");
    let (code, out, err) = run(&["solve", &corpus("odd_loop")]);
    assert_eq!((code, out.as_str(), err.as_str()), (0, "", "no answer set\n"));
    let (_, out, _) = run(&["solve", &corpus("max"), "--include-domain-facts"]);
    assert!(out.contains("num(7)"), "{out}");
}

#[test]
fn solve_mode_errors_are_faults() {
    let (code, _, err) = run(&["solve", &corpus("transitive_closure"), "--mode", "choice"]);
    assert_eq!(code, 1);
    assert!(err.contains("positive cycle"), "{err}");
}

#[test]
fn query_prints_bindings_and_models() {
    let (code, out, _) = run(&["query", &corpus("max"), "-q", "max(X)"]);
    assert_eq!((code, out.as_str()), (0, "X=7  model: {max(7), not smaller(7)}\n"));
    let (_, out, _) = run(&["query", &corpus("max"), "-q", "max(3)"]);
    assert_eq!(out, "no\n");
    let (_, out, _) = run(&["query", &corpus("even_loop"), "-q", "p"]);
    assert_eq!(out, "yes  model: {p, not q}\n");
    let (_, out, _) = run(&["query", &corpus("even_loop"), "-q", "p", "--trace"]);
    assert!(out.starts_with("% p\n"), "{out}");
    assert!(out.ends_with("yes  model: {p, not q}\n"), "{out}");
}

#[test]
fn synth_writes_plain_and_python_styles() {
    let (code, out, _) = run(&["synth", &corpus("max")]);
    assert_eq!(code, 0);
    assert!(out.contains("proc check_max(x):"), "{out}");
    let (_, out, _) = run(&["synth", &corpus("max"), "--style", "python"]);
    assert!(out.contains("def max(x):"), "{out}");
    assert!(out.contains("        if x < y:\n            return False\n    return True"), "{out}");

    let path = std::env::temp_dir().join(format!("aspsynth-cli-{}.txt", std::process::id()));
    let (code, out, _) = run(&["synth", &corpus("max"), "-o", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(written.contains("proc check_max(x):"));
}

#[test]
fn run_invokes_procedures() {
    let (code, out, _) = run(&["run", &corpus("max"), "--invoke", "check_max(7)"]);
    assert_eq!((code, out.as_str()), (0, "true\n"));
    let (_, out, _) = run(&["run", &corpus("max"), "--invoke", "check_max(5)"]);
    assert_eq!(out, "false\n");
    let (code, _, err) = run(&["run", &corpus("max"), "--invoke", "nope(7)"]);
    assert_eq!(code, 1);
    assert!(err.contains("no procedure named nope"), "{err}");
}

#[test]
fn models_enumerates_search_results() {
    let (code, out, _) = run(&["models", &corpus("even_loop")]);
    assert_eq!(code, 0);
    let mut lines: Vec<&str> = out.lines().collect();
    lines.sort();
    assert_eq!(lines, ["{p}", "{q}"]);
    let (_, out, _) = run(&["models", &corpus("coloring")]);
    assert_eq!(out.lines().count(), 6);
}

#[test]
fn difftest_summary_and_json() {
    let (code, out, _) = run(&["difftest", "--seed", "3", "--cases", "5"]);
    assert_eq!((code, out.as_str()), (0, "cases: 5  agree: 5  disagree: 0  skipped: 0\n"));
    let (code, out, _) = run(&["difftest", "--cases", "2", "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["cases"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_and_io_errors() {
    let (code, _, err) = run(&["frobnicate"]);
    assert_eq!(code, 1);
    assert!(err.contains("unrecognized subcommand"), "{err}");
    let (code, _, err) = run(&["check", "/nonexistent/file.lp"]);
    assert_eq!(code, 1);
    assert!(err.contains("cannot read"), "{err}");
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("Usage"));
}
