//! `storyplan`: extract events, build the event graph, plan storylines and
//! score them.
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 environment.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use storyplan::DegreeMode;

use commands::EvalMode;
use config::{existing, require_path, AdvisorOverrides, FileConfig, PlanOverrides};
use error::{CmdResult, Failure};

#[derive(Parser, Debug)]
#[command(name = "storyplan", version, about = "Event-graph storyline planning pipeline")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract one event line per story from a corpus and its parses.
    Extract(ExtractArgs),
    /// Build the event graph from an events file.
    BuildGraph(BuildArgs),
    /// Print node, edge and degree statistics of a graph as JSON.
    GraphStats(StatsArgs),
    /// Plan an event sequence for every story's leading context.
    Plan(PlanArgs),
    /// Score plans against references, or generated stories on their own.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct ExtractFlags {
    /// Dependency-label to role map (`label role` per line).
    #[arg(long)]
    label_map: Option<PathBuf>,
    /// Use lemmas instead of surface forms.
    #[arg(long)]
    lemma: bool,
    /// Prepend the leading context's event to each sequence.
    #[arg(long)]
    include_context: bool,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    parses: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    extract: ExtractFlags,
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Events file written by `extract`.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Number of highest-degree events to list.
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    /// Write the JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    parses: Option<PathBuf>,
    /// Plans file; provenance goes to `<out>.provenance.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rept_m: Option<u32>,
    #[arg(long)]
    l_min: Option<usize>,
    #[arg(long)]
    l_max: Option<usize>,
    /// edge_weight, node_in or node_total.
    #[arg(long)]
    degree_mode: Option<DegreeMode>,
    #[arg(long)]
    omega: Option<f64>,
    /// lexical or remote.
    #[arg(long)]
    advisor: Option<String>,
    /// Base URL of the advisor service.
    #[arg(long)]
    endpoint: Option<String>,
    /// Request timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Fail instead of falling back to the lexical advisor.
    #[arg(long)]
    no_fallback: bool,
    #[command(flatten)]
    extract: ExtractFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_enum, default_value_t = EvalMode::Events)]
    mode: EvalMode,
    /// Plans file (events) or story corpus JSONL (stories).
    #[arg(long)]
    hypotheses: Option<PathBuf>,
    /// Reference events file (events mode only).
    #[arg(long)]
    references: Option<PathBuf>,
    /// Report prefix: writes `.txt`, `.json` and, for stories, `.curve.tsv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn extract_options(flags: &ExtractFlags, file: &FileConfig) -> CmdResult<storyplan::ExtractOptions> {
    let label_map = flags.label_map.clone().or(file.paths.label_map.clone());
    let label_map = label_map.map(existing).transpose()?;
    commands::extract_options(
        label_map.as_deref(),
        flags.lemma || file.extract.lemma.unwrap_or(false),
        flags.include_context || file.extract.include_context.unwrap_or(false),
    )
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let paths = &file.paths;
    match cli.command {
        Command::Extract(a) => {
            let opts = extract_options(&a.extract, &file)?;
            let corpus = existing(require_path(&a.corpus, &paths.corpus, "corpus")?)?;
            let parses = existing(require_path(&a.parses, &paths.parses, "parses")?)?;
            let out = require_path(&a.out, &paths.events, "out")?;
            commands::extract(&corpus, &parses, &out, &opts)
        }
        Command::BuildGraph(a) => {
            let events = existing(require_path(&a.events, &paths.events, "events")?)?;
            let out = require_path(&a.out, &paths.graph, "out")?;
            commands::build(&events, &out)
        }
        Command::GraphStats(a) => {
            let graph = existing(require_path(&a.graph, &paths.graph, "graph")?)?;
            commands::stats(&graph, a.top_k, a.out.as_deref())
        }
        Command::Plan(a) => {
            let cfg = config::plan_config(
                &PlanOverrides {
                    seed: a.seed,
                    rept_m: a.rept_m,
                    l_min: a.l_min,
                    l_max: a.l_max,
                    degree_mode: a.degree_mode,
                    omega: a.omega,
                },
                &file.plan,
            )?;
            let choice = config::advisor_choice(
                &AdvisorOverrides {
                    kind: a.advisor.clone(),
                    endpoint: a.endpoint.clone(),
                    timeout: a.timeout,
                    no_fallback: a.no_fallback,
                },
                &file.advisor,
            )?;
            let opts = extract_options(&a.extract, &file)?;
            let graph = existing(require_path(&a.graph, &paths.graph, "graph")?)?;
            let corpus = existing(require_path(&a.corpus, &paths.corpus, "corpus")?)?;
            let parses = existing(require_path(&a.parses, &paths.parses, "parses")?)?;
            let out = require_path(&a.out, &paths.plans, "out")?;
            let inputs = commands::PlanInputs {
                graph: &graph,
                corpus: &corpus,
                parses: &parses,
                out: &out,
            };
            commands::run_plan(&inputs, &cfg, &choice, &opts)
        }
        Command::Eval(a) => {
            let hyp_default = match a.mode {
                EvalMode::Events => &paths.plans,
                EvalMode::Stories => &paths.corpus,
            };
            let hypotheses = existing(require_path(&a.hypotheses, hyp_default, "hypotheses")?)?;
            let references = match a.mode {
                EvalMode::Events => a.references.clone().or(paths.events.clone()),
                EvalMode::Stories => a.references.clone(),
            };
            let references = references.map(existing).transpose()?;
            let report = commands::evaluate(a.mode, &hypotheses, references.as_deref())?;
            print!("{}", report.to_table());
            match a.out.clone().or(paths.reports.clone()) {
                Some(prefix) => commands::write_report(&report, &prefix),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
