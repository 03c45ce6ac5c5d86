//! The `aspsynth` command line, as a library so tests can drive it.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use aspsynth_core::analysis::{analyze, Analysis, ProgramClass, RejectReason};
use aspsynth_core::completion::{dualize, CompletionProgram};
use aspsynth_core::evaluator::{query_vars, Evaluator};
use aspsynth_core::fuzz::{difftest, DiffConfig, Outcome};
use aspsynth_core::oracle::{self, format_model, Caps, Mode};
use aspsynth_core::syntax::{parse_program, parse_query, Constant, Literal, Program, Term};
use aspsynth_core::synth::{self, emit_text, interpret, ImpProgram, InterpResult, Invocation, Style};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAULT: i32 = 1;
pub const EXIT_REJECTED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "aspsynth", version, about = "Synthesize imperative programs from finite-domain ASP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the program class, or the reasons it is rejected.
    Check { file: PathBuf },
    /// Print the dual rules.
    Dual {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate answer sets with the reference solver.
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = SolveMode::Auto)]
        mode: SolveMode,
        #[arg(long)]
        max_models: Option<usize>,
        #[arg(long)]
        include_domain_facts: bool,
    },
    /// Prove a literal goal-directedly and print the partial models.
    Query {
        file: PathBuf,
        #[arg(short, long)]
        q: String,
        #[arg(long)]
        trace: bool,
    },
    /// Emit the synthesized imperative program.
    Synth {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = StyleArg::Plain)]
        style: StyleArg,
        /// Skip the simplifier.
        #[arg(long)]
        raw: bool,
    },
    /// Run one synthesized procedure, e.g. `--invoke "check_max(7)"`.
    Run {
        file: PathBuf,
        #[arg(long)]
        invoke: String,
    },
    /// Enumerate models by running the synthesized program.
    Models { file: PathBuf },
    /// Compare synthesized programs with the reference solver on random programs.
    Difftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolveMode {
    /// Choice mode when the program has no positive cycle, subset mode otherwise.
    Auto,
    Subset,
    Choice,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StyleArg {
    Plain,
    Python,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAULT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_FAULT
        }
    }
}

fn load(file: &Path) -> Result<Program> {
    let text = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    parse_program(&text).with_context(|| format!("{}", file.display()))
}

fn reject_lines(reasons: &[RejectReason], w: &mut dyn Write) -> Result<()> {
    for r in reasons {
        writeln!(w, "reject: {r}")?;
    }
    Ok(())
}

/// Reasons that make grounding impossible; other rejections only block
/// synthesis.
fn unsafe_reasons(a: &Analysis) -> Vec<RejectReason> {
    match &a.class {
        ProgramClass::Rejected(rs) => rs
            .iter()
            .filter(|r| matches!(r, RejectReason::Safety(_)))
            .cloned()
            .collect(),
        _ => Vec::new(),
    }
}

fn completion(p: &Program, a: &Analysis) -> Result<CompletionProgram> {
    dualize(p, &a.domains).map_err(|e| anyhow!("{e}"))
}

fn synthesize(p: &Program, a: &Analysis, raw: bool) -> Result<ImpProgram> {
    let c = completion(p, a)?;
    let ip = if raw {
        synth::synthesize_raw(p, &a.class, &c, &a.domains)
    } else {
        synth::synthesize(p, &a.class, &c, &a.domains)
    };
    Ok(ip?)
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Check { file } => {
            let a = analyze(&load(&file)?);
            writeln!(out, "class: {}", a.class.name())?;
            match &a.class {
                ProgramClass::Rejected(rs) => {
                    reject_lines(rs, out)?;
                    return Ok(EXIT_REJECTED);
                }
                ProgramClass::TightChoice { choice_sccs } => {
                    for scc in choice_sccs {
                        let names: Vec<String> = scc.iter().map(|k| k.to_string()).collect();
                        writeln!(out, "choice: {}", names.join(", "))?;
                    }
                }
                ProgramClass::Hierarchical => {}
            }
            Ok(EXIT_OK)
        }
        Command::Dual { file, json } => {
            let p = load(&file)?;
            let a = analyze(&p);
            let bad = unsafe_reasons(&a);
            if !bad.is_empty() {
                reject_lines(&bad, err)?;
                return Ok(EXIT_REJECTED);
            }
            let c = completion(&p, &a)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&c.views())?)?;
            } else {
                write!(out, "{c}")?;
            }
            Ok(EXIT_OK)
        }
        Command::Solve {
            file,
            mode,
            max_models,
            include_domain_facts,
        } => {
            let p = load(&file)?;
            let a = analyze(&p);
            let bad = unsafe_reasons(&a);
            if !bad.is_empty() {
                reject_lines(&bad, err)?;
                return Ok(EXIT_REJECTED);
            }
            let g = oracle::ground(&p, &a.domains)?;
            let mode = match mode {
                SolveMode::Subset => Mode::Subset,
                SolveMode::Choice => Mode::Choice,
                SolveMode::Auto if g.graph.has_positive_cycle() => Mode::Subset,
                SolveMode::Auto => Mode::Choice,
            };
            let models = oracle::answer_sets_with(&g, mode, Caps::default())?;
            if models.is_empty() {
                writeln!(err, "no answer set")?;
            }
            for m in models.iter().take(max_models.unwrap_or(usize::MAX)) {
                let shown = if include_domain_facts {
                    m.clone()
                } else {
                    oracle::without_domain_facts(&g, m)
                };
                writeln!(out, "{}", format_model(&shown))?;
            }
            Ok(EXIT_OK)
        }
        Command::Query { file, q, trace } => {
            let p = load(&file)?;
            let a = analyze(&p);
            let bad = unsafe_reasons(&a);
            if !bad.is_empty() {
                reject_lines(&bad, err)?;
                return Ok(EXIT_REJECTED);
            }
            let goal = parse_query(&q).with_context(|| format!("query `{q}`"))?;
            let c = completion(&p, &a)?;
            let ev = Evaluator::new(&c, &a.domains);
            let vars = query_vars(&goal);
            let mut found = false;
            for at in ev.query_attempts(&goal)? {
                if trace {
                    writeln!(out, "% {}", at.goal)?;
                    for e in &at.trail {
                        writeln!(out, "{e}")?;
                    }
                }
                if let Some(m) = at.model {
                    found = true;
                    let binds: Vec<String> = vars.iter().map(|v| format!("{v}={}", at.subst[v])).collect();
                    if binds.is_empty() {
                        writeln!(out, "yes  model: {m}")?;
                    } else {
                        writeln!(out, "{}  model: {m}", binds.join(", "))?;
                    }
                }
            }
            if !found {
                writeln!(out, "no")?;
            }
            Ok(EXIT_OK)
        }
        Command::Synth {
            file,
            output,
            style,
            raw,
        } => {
            let p = load(&file)?;
            let a = analyze(&p);
            if let ProgramClass::Rejected(rs) = &a.class {
                reject_lines(rs, err)?;
                return Ok(EXIT_REJECTED);
            }
            let ip = synthesize(&p, &a, raw)?;
            let style = match style {
                StyleArg::Plain => Style::Plain,
                StyleArg::Python => Style::Python,
            };
            let text = emit_text(&ip, style);
            match output {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(EXIT_OK)
        }
        Command::Run { file, invoke } => {
            let p = load(&file)?;
            let a = analyze(&p);
            if let ProgramClass::Rejected(rs) = &a.class {
                reject_lines(rs, err)?;
                return Ok(EXIT_REJECTED);
            }
            let (proc, args) = parse_invocation(&invoke)?;
            let ip = synthesize(&p, &a, false)?;
            match interpret(&ip, &a.domains, &Invocation::Call { proc, args })? {
                InterpResult::Bool(b) => writeln!(out, "{b}")?,
                InterpResult::Models(_) => unreachable!("a call returns a boolean"),
            }
            Ok(EXIT_OK)
        }
        Command::Models { file } => {
            let p = load(&file)?;
            let a = analyze(&p);
            if let ProgramClass::Rejected(rs) = &a.class {
                reject_lines(rs, err)?;
                return Ok(EXIT_REJECTED);
            }
            let ip = synthesize(&p, &a, false)?;
            match interpret(&ip, &a.domains, &Invocation::Models)? {
                InterpResult::Models(ms) => {
                    if ms.is_empty() {
                        writeln!(err, "no model")?;
                    }
                    for m in &ms {
                        writeln!(out, "{}", format_model(m))?;
                    }
                }
                InterpResult::Bool(_) => unreachable!("enumeration returns models"),
            }
            Ok(EXIT_OK)
        }
        Command::Difftest { seed, cases, json } => {
            let cfg = DiffConfig {
                seed,
                cases,
                ..DiffConfig::default()
            };
            cfg.validate().map_err(|e| anyhow!(e))?;
            let report = difftest(&cfg);
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                writeln!(
                    out,
                    "cases: {}  agree: {}  disagree: {}  skipped: {}",
                    cases, report.agree, report.disagree, report.skipped
                )?;
                if let Some(d) = &report.first_disagreement {
                    writeln!(out, "first disagreement: case {} (seed {})", d.case, d.seed)?;
                    write!(out, "{}", d.program)?;
                    if let Outcome::Disagree { oracle, synth } = &d.outcome {
                        writeln!(out, "oracle: {}", oracle.join(" "))?;
                        writeln!(out, "synth:  {}", synth.join(" "))?;
                    }
                }
            }
            Ok(if report.disagree == 0 { EXIT_OK } else { EXIT_FAULT })
        }
    }
}

/// `name(c1, ..., cn)` or `name` with ground arguments.
fn parse_invocation(text: &str) -> Result<(String, Vec<Constant>)> {
    let lit = parse_query(text).with_context(|| format!("invocation `{text}`"))?;
    let Literal::Pos(atom) = lit else {
        bail!("invocation `{text}` must be a procedure call");
    };
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => Err(anyhow!("invocation argument {v} is not a constant")),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((atom.predicate, args))
}
