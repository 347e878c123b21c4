//! Command-line surface over the workbench library.
//!
//! Every subcommand reads formula text in the library grammar, prints a
//! deterministic report (text or JSON), and exits with 0 when every
//! verdict is determined and passing, 1 on failure or error, and 2 when
//! the only obstacle is an undetermined verdict under the budget.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use folkit::definability::{
    apply_automorphism, back_and_forth, definable_with_params, disagreement_pair,
};
use folkit::forcing::{run_construction, verify_status, MeetStatus, Requirement};
use folkit::henkin::{henkin_extend, term_model, PresburgerOracle};
use folkit::hierarchy::{eval_level, language_level, truth_chain};
use folkit::presburger::{self, builtin_set, definable_set_period, eliminate, periodicity_refute};
use folkit::semantics::{
    eval_finite, eval_nat, tarski_demonstrate, Budget, FiniteAssignment, FiniteStructure,
    NatAssignment,
};
use folkit::suite::{run_suite, RigMode};
use folkit::syntax::{parse_formula, Signature};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_UNDETERMINED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "folkit",
    version,
    about = "First-order logic workbench: evaluation, coding, decision procedures, model tools"
)]
struct Cli {
    /// Output format shared by all subcommands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Budget flags; unset flags fall back to FOLKIT_WITNESS_BOUND and
/// FOLKIT_DEPTH_BOUND, then to the library defaults.
#[derive(Args)]
struct BudgetOpts {
    /// Largest quantifier witness sampled over the naturals.
    #[arg(long)]
    witness_bound: Option<u64>,
    /// Quantifier/truth-dereference nesting limit.
    #[arg(long)]
    depth_bound: Option<usize>,
}

impl BudgetOpts {
    fn budget(&self) -> Result<Budget> {
        let defaults = Budget::default();
        let witness_bound = match self.witness_bound {
            Some(v) => v,
            None => env_parsed("FOLKIT_WITNESS_BOUND")?.unwrap_or(defaults.witness_bound),
        };
        let depth_bound = match self.depth_bound {
            Some(v) => v,
            None => env_parsed("FOLKIT_DEPTH_BOUND")?.unwrap_or(defaults.depth_bound),
        };
        if witness_bound == 0 || depth_bound == 0 {
            bail!("budget bounds must be positive");
        }
        Ok(Budget::new(witness_bound, depth_bound))
    }
}

fn env_parsed<T: FromStr>(name: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match std::env::var(name) {
        Ok(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| anyhow!("invalid {name}={raw}: {e}")),
        Err(_) => Ok(None),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a sentence over the naturals (default) or a structure file.
    Eval {
        formula: String,
        /// JSON structure file; evaluation is then exact.
        #[arg(long)]
        structure: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetOpts,
    },
    /// Run the truth-undefinability demonstration for a one-variable predicate.
    Liar {
        predicate: String,
        #[command(flatten)]
        budget: BudgetOpts,
    },
    /// Linear integer arithmetic: decide, eliminate, period, refute.
    Presburger {
        #[command(subcommand)]
        cmd: PresburgerCmd,
    },
    /// Evaluate a sentence at a hierarchy level, optionally chasing its
    /// truth-predicate ascent to a higher level.
    Hierarchy {
        sentence: String,
        #[arg(long, default_value_t = 0)]
        level: usize,
        /// Also evaluate the ascended sentences at each level up to this one.
        #[arg(long)]
        top: Option<usize>,
        #[command(flatten)]
        budget: BudgetOpts,
    },
    /// Test a subset for automorphism-definability and print the moving
    /// witness when it fails: same structure, different predicate.
    Disagree {
        #[arg(long)]
        structure: PathBuf,
        /// Comma-separated elements of the candidate set, e.g. "0,2".
        #[arg(long, default_value = "")]
        set: String,
        /// Comma-separated fixed parameters, e.g. "1,3".
        #[arg(long, default_value = "")]
        params: String,
    },
    /// Search for an isomorphism between two structure files.
    Backforth { left: PathBuf, right: PathBuf },
    /// Build a Henkin completion of linear arithmetic and inspect its
    /// term model.
    Henkin {
        /// Rounds of witness introduction.
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// Size cap for enumerated sentences.
        #[arg(long, default_value_t = 6)]
        size_cap: usize,
        /// Closed quantifier-free sentence to evaluate over the quotient.
        #[arg(long)]
        eval: Option<String>,
    },
    /// Meet requirements by finite extension and report each status.
    Force {
        /// Length bound for the finished condition.
        #[arg(long, default_value_t = 24)]
        bound: usize,
        /// Requirements as label=expr, e.g. "has-101=contains 101".
        requirements: Vec<String>,
    },
    /// Run the acceptance criteria over seeded corpora.
    Suite {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Run only criteria whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
        /// Sabotage switch for negative-control runs (none | flip-truth-bit).
        #[arg(long, default_value = "none", value_parser = RigMode::from_str)]
        rig: RigMode,
    },
}

#[derive(Subcommand)]
enum PresburgerCmd {
    /// Decide a closed sentence.
    Decide { sentence: String },
    /// Print an equivalent quantifier-free form.
    Eliminate { formula: String },
    /// Eventual-periodicity certificate for a one-free-variable formula.
    Period { formula: String },
    /// Sweep candidate periods for a named set (squares, evens, primes,
    /// powers), recording the last violation of each.
    Refute {
        set: String,
        #[arg(long, default_value_t = 10_000)]
        bound: u64,
        #[arg(long, default_value_t = 100)]
        max_period: u64,
    },
}

struct Out {
    format: Format,
}

impl Out {
    fn emit(&self, command: &str, text: &str, report: Value) {
        match self.format {
            Format::Text => println!("{text}"),
            Format::Json => {
                let doc = json!({ "command": command, "report": report });
                println!(
                    "{}",
                    serde_json::to_string_pretty(&doc).expect("report serializes")
                );
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Out { format: cli.format };
    match run(cli.command, &out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn run(command: Command, out: &Out) -> Result<u8> {
    match command {
        Command::Eval {
            formula,
            structure,
            budget,
        } => cmd_eval(out, &formula, structure.as_deref(), &budget),
        Command::Liar { predicate, budget } => cmd_liar(out, &predicate, &budget),
        Command::Presburger { cmd } => cmd_presburger(out, cmd),
        Command::Hierarchy {
            sentence,
            level,
            top,
            budget,
        } => cmd_hierarchy(out, &sentence, level, top, &budget),
        Command::Disagree {
            structure,
            set,
            params,
        } => cmd_disagree(out, &structure, &set, &params),
        Command::Backforth { left, right } => cmd_backforth(out, &left, &right),
        Command::Henkin {
            depth,
            size_cap,
            eval,
        } => cmd_henkin(out, depth, size_cap, eval.as_deref()),
        Command::Force {
            bound,
            requirements,
        } => cmd_force(out, bound, &requirements),
        Command::Suite { seed, filter, rig } => cmd_suite(out, seed, filter.as_deref(), rig),
    }
}

fn load_structure(path: &Path) -> Result<FiniteStructure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing structure file {}", path.display()))
}

fn parse_elements(text: &str) -> Result<Vec<usize>> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|e| anyhow!("bad element `{p}`: {e}"))
        })
        .collect()
}

fn clip(text: &str, max_chars: usize) -> String {
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let head: String = text.chars().take(max_chars).collect();
    format!("{head}...")
}

fn cmd_eval(out: &Out, formula: &str, structure: Option<&Path>, budget: &BudgetOpts) -> Result<u8> {
    match structure {
        Some(path) => {
            let s = load_structure(path)?;
            let phi = parse_formula(formula, s.signature())?;
            let verdict = eval_finite(&s, &phi, &FiniteAssignment::new())?;
            out.emit(
                "eval",
                &verdict.to_string(),
                json!({
                    "formula": phi.to_string(),
                    "world": format!("structure:{}", path.display()),
                    "verdict": verdict.to_string(),
                }),
            );
            Ok(EXIT_PASS)
        }
        None => {
            let budget = budget.budget()?;
            let sig = Signature::arithmetic();
            let phi = parse_formula(formula, &sig)?;
            let verdict = eval_nat(&phi, &NatAssignment::new(), &sig, budget)?;
            out.emit(
                "eval",
                &verdict.to_string(),
                json!({
                    "formula": phi.to_string(),
                    "world": "naturals",
                    "witness_bound": budget.witness_bound,
                    "depth_bound": budget.depth_bound,
                    "verdict": verdict.to_string(),
                }),
            );
            Ok(if verdict.determined().is_some() {
                EXIT_PASS
            } else {
                EXIT_UNDETERMINED
            })
        }
    }
}

fn cmd_liar(out: &Out, predicate: &str, budget: &BudgetOpts) -> Result<u8> {
    let budget = budget.budget()?;
    let sig = Signature::arithmetic().with_sub();
    let phi = parse_formula(predicate, &sig)?;
    let report = tarski_demonstrate(&phi, &sig, budget)?;
    let text = format!(
        "candidate: {}\nliar code: {} digits\nliar sentence: {}\ncandidate(code): {}\n{}",
        report.candidate,
        report.code_digits,
        report.liar_verdict,
        report.applied_verdict,
        report.conclusion,
    );
    let exit = if report.disagreement_exhibited() {
        EXIT_PASS
    } else if report.liar_verdict.determined().is_none()
        || report.applied_verdict.determined().is_none()
    {
        EXIT_UNDETERMINED
    } else {
        EXIT_FAIL
    };
    out.emit("liar", &text, serde_json::to_value(&report)?);
    Ok(exit)
}

fn cmd_presburger(out: &Out, cmd: PresburgerCmd) -> Result<u8> {
    let sig = Signature::presburger();
    match cmd {
        PresburgerCmd::Decide { sentence } => {
            let phi = parse_formula(&sentence, &sig)?;
            let verdict = presburger::decide(&phi)?;
            out.emit(
                "presburger.decide",
                &verdict.to_string(),
                json!({ "sentence": phi.to_string(), "verdict": verdict }),
            );
            Ok(EXIT_PASS)
        }
        PresburgerCmd::Eliminate { formula } => {
            let phi = parse_formula(&formula, &sig)?;
            let qf = eliminate(&phi)?;
            out.emit(
                "presburger.eliminate",
                &qf.to_string(),
                json!({ "formula": phi.to_string(), "eliminated": qf.to_string() }),
            );
            Ok(EXIT_PASS)
        }
        PresburgerCmd::Period { formula } => {
            let phi = parse_formula(&formula, &sig)?;
            let cert = definable_set_period(&phi)?;
            let residues: Vec<u64> = cert.residues_in.iter().copied().collect();
            let text = format!(
                "period: {}\nthreshold: {}\nresidues in the set: {residues:?}",
                cert.period, cert.threshold,
            );
            out.emit("presburger.period", &text, serde_json::to_value(&cert)?);
            Ok(EXIT_PASS)
        }
        PresburgerCmd::Refute {
            set,
            bound,
            max_period,
        } => {
            let member = builtin_set(&set)
                .ok_or_else(|| anyhow!("unknown set `{set}` (squares, evens, primes, powers)"))?;
            let report = periodicity_refute(&set, member, bound, max_period);
            let refuted = report
                .rows
                .iter()
                .filter(|r| r.last_violation.is_some())
                .count();
            let text = format!(
                "set: {}\nperiods swept: {} ({refuted} refuted)\n{}",
                report.set,
                report.rows.len(),
                report.verdict,
            );
            out.emit("presburger.refute", &text, serde_json::to_value(&report)?);
            Ok(EXIT_PASS)
        }
    }
}

fn cmd_hierarchy(
    out: &Out,
    sentence: &str,
    level: usize,
    top: Option<usize>,
    budget: &BudgetOpts,
) -> Result<u8> {
    let budget = budget.budget()?;
    let top = top.unwrap_or(level);
    if top < level {
        bail!("--top {top} is below --level {level}");
    }
    let phi = parse_formula(sentence, &language_level(level))?;
    let chain = truth_chain(&phi, level, top)?;
    let empty = NatAssignment::new();
    let mut lines = Vec::new();
    let mut entries = Vec::new();
    let mut all_determined = true;
    for (i, ascended) in chain.iter().enumerate() {
        let k = level + i;
        let verdict = eval_level(ascended, &empty, k, budget)?;
        all_determined &= verdict.determined().is_some();
        lines.push(format!(
            "level {k}: {verdict}  {}",
            clip(&ascended.to_string(), 96)
        ));
        entries.push(json!({
            "level": k,
            "sentence": ascended.to_string(),
            "verdict": verdict.to_string(),
        }));
    }
    out.emit("hierarchy", &lines.join("\n"), json!({ "chain": entries }));
    Ok(if all_determined {
        EXIT_PASS
    } else {
        EXIT_UNDETERMINED
    })
}

fn cmd_disagree(out: &Out, structure: &Path, set: &str, params: &str) -> Result<u8> {
    let s = load_structure(structure)?;
    let set: BTreeSet<usize> = parse_elements(set)?.into_iter().collect();
    let params = parse_elements(params)?;
    let definable = definable_with_params(&set, &s, &params)?;
    let witness = disagreement_pair(&s, &set, &params)?;
    let set_elems: Vec<usize> = set.iter().copied().collect();
    let mut text = format!("set {set_elems:?} definable with params {params:?}: {definable}");
    let witness_json = match &witness {
        Some(w) => {
            let image: Vec<usize> = apply_automorphism(&set, &w.pi).into_iter().collect();
            text.push_str(&format!(
                "\nautomorphism: {:?}\nmoves outside element {} onto member {}\nset:   {set_elems:?}\nimage: {image:?}",
                w.pi.as_slice(),
                w.t,
                w.s,
            ));
            json!({ "witness": w, "image": image })
        }
        None => json!({ "witness": null }),
    };
    out.emit(
        "disagree",
        &text,
        json!({
            "structure": structure.display().to_string(),
            "set": set_elems,
            "params": params,
            "definable": definable,
            "disagreement": witness_json,
        }),
    );
    Ok(EXIT_PASS)
}

fn cmd_backforth(out: &Out, left: &Path, right: &Path) -> Result<u8> {
    let a = load_structure(left)?;
    let b = load_structure(right)?;
    let map = back_and_forth(&a, &b)?;
    let (text, map_json) = match &map {
        Some(pi) => (
            format!("isomorphic\nmap: {:?}", pi.as_slice()),
            json!(pi.as_slice()),
        ),
        None => ("not isomorphic".to_string(), Value::Null),
    };
    out.emit(
        "backforth",
        &text,
        json!({ "isomorphic": map.is_some(), "map": map_json }),
    );
    Ok(EXIT_PASS)
}

fn cmd_henkin(out: &Out, depth: usize, size_cap: usize, eval: Option<&str>) -> Result<u8> {
    let oracle = PresburgerOracle::new();
    let state = henkin_extend(&oracle, depth, size_cap)?;
    let model = term_model(&state, &oracle)?;
    let valued = model.classes.iter().filter(|c| c.value.is_some()).count();
    let mut text = format!(
        "considered {} sentences, accepted {}, witnesses {}\ncompleteness: {}\nwitness property: {}\nterm classes: {} ({valued} with numeric values)",
        state.considered().len(),
        state.accepted().len(),
        state.witnesses().len(),
        state.completeness_holds(),
        state.witness_property_holds(),
        model.classes.len(),
    );
    let mut exit = EXIT_PASS;
    let eval_json = match eval {
        Some(sentence) => {
            let phi = parse_formula(sentence, state.base_signature())?;
            match model.eval_closed(&phi) {
                Some(v) => {
                    text.push_str(&format!("\neval {phi}: {v}"));
                    json!({ "sentence": phi.to_string(), "verdict": v })
                }
                None => {
                    text.push_str(&format!("\neval {phi}: outside the quotient carrier"));
                    exit = EXIT_UNDETERMINED;
                    json!({ "sentence": phi.to_string(), "verdict": null })
                }
            }
        }
        None => Value::Null,
    };
    out.emit(
        "henkin",
        &text,
        json!({
            "depth": depth,
            "size_cap": size_cap,
            "considered": state.considered().len(),
            "accepted": state.accepted().len(),
            "witnesses": state.witnesses().len(),
            "completeness": state.completeness_holds(),
            "witness_property": state.witness_property_holds(),
            "classes": model.classes.len(),
            "classes_with_values": valued,
            "eval": eval_json,
        }),
    );
    Ok(exit)
}

fn cmd_force(out: &Out, bound: usize, requirements: &[String]) -> Result<u8> {
    if requirements.is_empty() {
        bail!("give at least one label=expr requirement");
    }
    let reqs: Vec<Requirement> = requirements
        .iter()
        .map(|raw| {
            let (label, expr) = raw
                .split_once('=')
                .ok_or_else(|| anyhow!("requirement `{raw}` must have the form label=expr"))?;
            Requirement::parse(label.trim(), expr.trim())
                .map_err(|e| anyhow!("requirement `{raw}`: {e}"))
        })
        .collect::<Result<_>>()?;
    let (condition, statuses) = run_construction(&reqs, bound)?;
    let shown = if condition.is_empty() {
        "(empty)".to_string()
    } else {
        condition.to_string()
    };
    let mut lines = vec![format!("condition: {shown}")];
    let mut entries = Vec::new();
    let mut exit = EXIT_PASS;
    for (r, status) in reqs.iter().zip(&statuses) {
        let verified = verify_status(&condition, r, status, bound);
        let described = match status {
            MeetStatus::Met { prefix_len } => format!("met at prefix {prefix_len}"),
            MeetStatus::Sealed { prefix_len } => format!("sealed at prefix {prefix_len}"),
            MeetStatus::Exhausted { explored } => {
                exit = EXIT_UNDETERMINED;
                format!("exhausted after {explored} nodes")
            }
        };
        if !verified {
            exit = EXIT_FAIL;
        }
        lines.push(format!(
            "{}: {described}{}",
            r.label,
            if verified {
                ""
            } else {
                " (re-verification FAILED)"
            },
        ));
        entries.push(json!({
            "requirement": r,
            "status": status,
            "verified": verified,
        }));
    }
    out.emit(
        "force",
        &lines.join("\n"),
        json!({
            "bound": bound,
            "condition": condition.to_string(),
            "requirements": entries,
        }),
    );
    Ok(exit)
}

fn cmd_suite(out: &Out, seed: u64, filter: Option<&str>, rig: RigMode) -> Result<u8> {
    let report = run_suite(seed, rig, filter);
    if report.criteria.is_empty() {
        bail!("filter matched no criteria");
    }
    out.emit("suite", &report.to_string(), serde_json::to_value(&report)?);
    Ok(if report.all_passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    })
}
