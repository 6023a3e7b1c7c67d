//! Command-line front door: parse, model-check, decide satisfiability,
//! translate, close frames, print axiom schemas, and cross-check translations.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use mumod_core::kripke::{close_frame, model_check, KripkeModel};
use mumod_core::oracle::{
    bounded_sat, cross_check_translation, generate_corpus, CorpusFilter, OracleResult,
    SearchBudget,
};
use mumod_core::syntax::{build_axiom, parse, render};
use mumod_core::tableau::{run_tableau, verify_proof, TableauBounds, Verdict};
use mumod_core::translations::{LabelRange, TranslationKind, TranslationRequest};
use mumod_core::{AgentSet, Arena, FrameCondition, LogicSpec, NameId};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_SAT: u8 = 0;
const EXIT_UNSAT: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "mumod", version, about = "Multi-agent modal mu-calculus workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and echo its normalized rendering.
    Parse {
        /// Formula text, e.g. "(p & <a>p) & mu X.(!p | [a]X)".
        #[arg(long)]
        formula: String,
        /// Comma-separated agent names the formula may use.
        #[arg(long, default_value = "a,b")]
        agents: String,
    },
    /// Check a formula at one state of a model.
    Mc {
        /// Path to a model JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Formula text over the model's agents.
        #[arg(long)]
        formula: String,
        /// State name (or index) to check at; defaults to the designated state.
        #[arg(long)]
        state: Option<String>,
    },
    /// Decide satisfiability with the tableau or the bounded oracle.
    Sat {
        #[arg(long)]
        formula: String,
        /// Logic spec, e.g. "a:K; b:S5" or "a:{D,4}".
        #[arg(long)]
        logic: String,
        /// Decision engine.
        #[arg(long, default_value = "tableau", value_parser = ["tableau", "oracle"])]
        engine: String,
        /// Oracle state bound (oracle engine only).
        #[arg(long, default_value_t = 3)]
        max_states: usize,
        /// Least-fixpoint unfolding substitute (tableau engine only).
        #[arg(long)]
        kappa: Option<u32>,
        /// Write the witness model or closed proof as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite a formula by one of the satisfiability-preserving translations.
    Translate {
        /// Translation name: one-step, serial, reflexive, transitive, symmetric, embed.
        #[arg(long)]
        name: String,
        /// Comma-separated agents whose modalities are translated.
        #[arg(long)]
        agents: String,
        #[arg(long)]
        formula: String,
        /// Full agent set of the formula, when larger than --agents.
        #[arg(long)]
        all_agents: Option<String>,
        /// Replayed frame condition (one-step translation only): D, T, B, 4, or 5.
        #[arg(long)]
        condition: Option<String>,
        /// Use two label propositions instead of three (embed translation only).
        #[arg(long)]
        two_cycle: bool,
        /// Hold literals invariant through the transitive rewrite.
        #[arg(long)]
        literal_invariants: bool,
        /// Warn when the translation does not bridge these logics.
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Search for a model by brute-force enumeration up to a state bound.
    Oracle {
        #[arg(long)]
        formula: String,
        #[arg(long)]
        logic: String,
        #[arg(long, default_value_t = 3)]
        max_states: usize,
        /// Candidate models evaluated before giving up.
        #[arg(long, default_value_t = 2_000_000)]
        cap: u64,
        /// Skip candidates isomorphic to an earlier one.
        #[arg(long)]
        modulo_iso: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Close one agent's relation in a model under a frame condition.
    Closure {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        agent: String,
        /// Frame condition: D, T, B, 4, or 5.
        #[arg(long)]
        condition: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the axiom schema for a frame condition in NNF.
    Axioms {
        #[arg(long)]
        condition: String,
        #[arg(long, default_value = "a")]
        agent: String,
    },
    /// Cross-check a translation against the oracle over a generated corpus.
    Crosscheck {
        /// Translation name, as for `translate`.
        #[arg(long)]
        name: String,
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        /// Corpus size cap per formula.
        #[arg(long, default_value_t = 4)]
        size_cap: usize,
        /// Corpus size (at least; the exhaustive tier is always included).
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Corpus seed; the MUMOD_SEED environment variable overrides it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated proposition names for the corpus.
        #[arg(long, default_value = "p")]
        props: String,
        #[arg(long, default_value_t = 3)]
        budget_source: usize,
        #[arg(long, default_value_t = 3)]
        budget_target: usize,
        #[arg(long)]
        two_cycle: bool,
        /// Write the JSONL report to this path instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    let mut arena = Arena::new();
    match cli.command {
        Command::Parse { formula, agents } => {
            let agent_set = parse_agents(&mut arena, &agents)?;
            let f = parse(&mut arena, &agent_set, &formula).map_err(|e| e.to_string())?;
            println!("{}", render(&arena, f));
            Ok(EXIT_SAT)
        }
        Command::Mc { model, formula, state } => {
            let m = load_model(&mut arena, &model)?;
            let agent_set = AgentSet::from_ids(m.agents().to_vec()).map_err(|e| e.to_string())?;
            let f = parse(&mut arena, &agent_set, &formula).map_err(|e| e.to_string())?;
            let s = resolve_state(&m, state.as_deref())?;
            let holds = model_check(&m, &arena, s, f).map_err(|e| e.to_string())?;
            println!("{holds}");
            Ok(if holds { EXIT_SAT } else { EXIT_UNSAT })
        }
        Command::Sat { formula, logic, engine, max_states, kappa, out } => {
            let spec = LogicSpec::parse(&mut arena, &logic).map_err(|e| e.to_string())?;
            let f = parse(&mut arena, &spec.agent_set(), &formula).map_err(|e| e.to_string())?;
            if engine == "oracle" {
                let budget = SearchBudget::up_to(max_states);
                let result = bounded_sat(&arena, f, &spec, &budget).map_err(|e| e.to_string())?;
                return report_oracle(&arena, &result, out.as_deref());
            }
            let mut bounds = TableauBounds::for_formula(&arena, f);
            if let Some(k) = kappa {
                bounds.kappa_substitute = k;
            }
            let verdict = run_tableau(&arena, f, &spec, &bounds).map_err(|e| e.to_string())?;
            match verdict {
                Verdict::Sat { model, transcript } => {
                    let designated = model.designated().unwrap_or(0);
                    let holds = model_check(&model, &arena, designated, f)
                        .map_err(|e| e.to_string())?;
                    if !holds {
                        return Err("extracted witness failed the model check".to_string());
                    }
                    println!("sat");
                    let doc = serde_json::json!({
                        "verdict": "sat",
                        "model": model.to_json(&arena),
                        "transcript": transcript,
                    });
                    emit(&doc, out.as_deref(), "witness")?;
                    Ok(EXIT_SAT)
                }
                Verdict::Unsat { proof } => {
                    verify_proof(&proof)?;
                    println!("unsat");
                    let doc = serde_json::json!({
                        "verdict": "unsat",
                        "proof": proof.to_json(),
                    });
                    if let Some(path) = out.as_deref() {
                        emit(&doc, Some(path), "proof")?;
                    }
                    Ok(EXIT_UNSAT)
                }
                Verdict::Unknown { reason } => {
                    println!("unknown: {reason}");
                    Ok(EXIT_UNKNOWN)
                }
            }
        }
        Command::Translate {
            name,
            agents,
            formula,
            all_agents,
            condition,
            two_cycle,
            literal_invariants,
            source,
            target,
        } => {
            let kind = TranslationKind::from_name(&name)
                .ok_or_else(|| format!("unknown translation `{name}`"))?;
            let full = all_agents.as_deref().unwrap_or(&agents);
            let all = parse_agents(&mut arena, full)?;
            let translated = parse_names(&mut arena, &agents);
            let f = parse(&mut arena, &all, &formula).map_err(|e| e.to_string())?;
            let mut request = TranslationRequest::new(kind, translated, all);
            if let Some(c) = condition.as_deref() {
                request.condition = Some(parse_condition(c)?);
            }
            if two_cycle {
                request.label_range = LabelRange::TwoCycle;
            }
            request.literal_invariants = literal_invariants;
            if let (Some(src), Some(tgt)) = (source, target) {
                let src = LogicSpec::parse(&mut arena, &src).map_err(|e| e.to_string())?;
                let tgt = LogicSpec::parse(&mut arena, &tgt).map_err(|e| e.to_string())?;
                for warning in request.validate(&arena, &src, &tgt) {
                    eprintln!("warning: {warning}");
                }
            }
            let g = request.apply(&mut arena, f).map_err(|e| e.to_string())?;
            println!("{}", render(&arena, g));
            Ok(EXIT_SAT)
        }
        Command::Oracle { formula, logic, max_states, cap, modulo_iso, out } => {
            let spec = LogicSpec::parse(&mut arena, &logic).map_err(|e| e.to_string())?;
            let f = parse(&mut arena, &spec.agent_set(), &formula).map_err(|e| e.to_string())?;
            let mut budget = SearchBudget::up_to(max_states);
            budget.enumeration_cap = cap;
            budget.modulo_isomorphism = modulo_iso;
            let result = bounded_sat(&arena, f, &spec, &budget).map_err(|e| e.to_string())?;
            report_oracle(&arena, &result, out.as_deref())
        }
        Command::Closure { model, agent, condition, out } => {
            let m = load_model(&mut arena, &model)?;
            let cond = parse_condition(&condition)?;
            let id = arena
                .lookup_name(&agent)
                .filter(|id| m.agents().contains(id))
                .ok_or_else(|| format!("agent `{agent}` is not in the model"))?;
            let closed = close_frame(&m, id, cond);
            emit(&closed.to_json(&arena), out.as_deref(), "model")?;
            Ok(EXIT_SAT)
        }
        Command::Axioms { condition, agent } => {
            let cond = parse_condition(&condition)?;
            let a = arena.name(&agent);
            let p = arena.name("p");
            let schema = build_axiom(&mut arena, cond, a, p);
            println!("{}", render(&arena, schema));
            Ok(EXIT_SAT)
        }
        Command::Crosscheck {
            name,
            source,
            target,
            size_cap,
            count,
            seed,
            props,
            budget_source,
            budget_target,
            two_cycle,
            out,
        } => {
            let kind = TranslationKind::from_name(&name)
                .ok_or_else(|| format!("unknown translation `{name}`"))?;
            let src = LogicSpec::parse(&mut arena, &source).map_err(|e| e.to_string())?;
            let tgt = LogicSpec::parse(&mut arena, &target).map_err(|e| e.to_string())?;
            let agents: Vec<NameId> = src.agents().collect();
            let prop_ids = parse_names(&mut arena, &props);
            let seed = match std::env::var("MUMOD_SEED") {
                Ok(text) => text
                    .parse::<u64>()
                    .map_err(|_| format!("MUMOD_SEED must be an integer, got `{text}`"))?,
                Err(_) => seed,
            };
            // Translations defined on fragments get the matching corpus filter.
            let filter = match kind {
                TranslationKind::OneStep => CorpusFilter::RecursionFree,
                TranslationKind::Symmetric => CorpusFilter::MuFree,
                _ => CorpusFilter::Any,
            };
            let corpus = generate_corpus(&mut arena, &agents, &prop_ids, size_cap, seed, count, filter);
            let mut request = TranslationRequest::new(kind, agents, src.agent_set());
            if two_cycle {
                request.label_range = LabelRange::TwoCycle;
            }
            if kind == TranslationKind::OneStep {
                request.condition = src.agents().flat_map(|a| src.conditions(a)).next();
            }
            let report = cross_check_translation(
                &mut arena,
                &request,
                &src,
                &tgt,
                &corpus,
                &SearchBudget::up_to(budget_source),
                &SearchBudget::up_to(budget_target),
            )
            .map_err(|e| e.to_string())?;
            let (agree, disagree, inconclusive) = report.counts();
            match out {
                Some(path) => {
                    std::fs::write(&path, report.to_jsonl()).map_err(|e| e.to_string())?;
                    println!("report: {}", path.display());
                }
                None => print!("{}", report.to_jsonl()),
            }
            eprintln!(
                "{}: {} agree, {} disagree, {} inconclusive",
                report.translation, agree, disagree, inconclusive
            );
            Ok(if disagree == 0 { EXIT_SAT } else { EXIT_UNSAT })
        }
    }
}

/// Splits a comma-separated list into interned names.
fn parse_names(arena: &mut Arena, text: &str) -> Vec<NameId> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| arena.name(s))
        .collect()
}

fn parse_agents(arena: &mut Arena, text: &str) -> Result<AgentSet, String> {
    let ids = parse_names(arena, text);
    AgentSet::from_ids(ids).map_err(|e| e.to_string())
}

fn parse_condition(text: &str) -> Result<FrameCondition, String> {
    FrameCondition::from_letter(text)
        .ok_or_else(|| format!("unknown frame condition `{text}` (expected D, T, B, 4, or 5)"))
}

fn load_model(arena: &mut Arena, path: &std::path::Path) -> Result<KripkeModel, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    // Accept a bare model or a `sat --out` witness document.
    let model = value.get("model").unwrap_or(&value);
    KripkeModel::from_json(arena, model).map_err(|e| e.to_string())
}

fn resolve_state(model: &KripkeModel, state: Option<&str>) -> Result<usize, String> {
    let Some(text) = state else {
        return model
            .designated()
            .ok_or_else(|| "model has no designated state; pass --state".to_string());
    };
    if let Some(s) = (0..model.n_states()).find(|&s| model.state_name(s) == text) {
        return Ok(s);
    }
    match text.parse::<usize>() {
        Ok(s) if s < model.n_states() => Ok(s),
        _ => Err(format!("unknown state `{text}`")),
    }
}

/// Prints a JSON document, or writes it to `path` and prints `label: path`.
fn emit(doc: &serde_json::Value, path: Option<&std::path::Path>, label: &str) -> Result<(), String> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| e.to_string())?;
    match path {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| e.to_string())?;
            println!("{label}: {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn report_oracle(
    arena: &Arena,
    result: &OracleResult,
    out: Option<&std::path::Path>,
) -> Result<u8, String> {
    println!("{}", result.label());
    match result {
        OracleResult::Witness(model, _) => {
            emit(&model.to_json(arena), out, "witness")?;
            Ok(EXIT_SAT)
        }
        OracleResult::NoModelUpTo(_) => Ok(EXIT_UNSAT),
        OracleResult::BudgetExhausted { .. } => Ok(EXIT_UNKNOWN),
    }
}
