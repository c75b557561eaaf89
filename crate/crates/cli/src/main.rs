//! `condor`: reaction-condition recommendation from the command line.
//!
//! Configuration is a `key = value` file (`#` starts a comment line); see
//! `condor keys` for every accepted key. Unknown keys and out-of-range values
//! abort before any work.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use condor_core::debate::Choice;
use condor_core::pipeline::{
    read_queries, stored_cases, write_atomic, MemoryStore, Pipeline, PipelineConfig, PipelineError, Query,
    DEFAULT_KS,
};
use condor_core::trainkit::{toy_training_loop, write_curve, JudgmentEnv, ToyAction, ToyPolicy};

#[derive(Debug, Parser)]
#[command(name = "condor", version, about = "Reaction-condition recommendation with audited rationales")]
struct Cli {
    /// key = value configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Overrides `base`: a record stream (JSON lines) or a snapshot.
    #[arg(long, global = true, value_name = "PATH")]
    base: Option<PathBuf>,
    /// Run directory for the memory store.
    #[arg(long, global = true, value_name = "DIR", default_value = "condor-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Input {
    /// Reaction SMILES, `reactants>>products`.
    reaction: Option<String>,
    /// Base-format query records instead of an inline reaction.
    #[arg(long, value_name = "PATH", conflicts_with = "reaction")]
    queries: Option<PathBuf>,
    /// Id for an inline reaction.
    #[arg(long, default_value = "query")]
    id: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index the base and report counts.
    Ingest {
        /// Also write a snapshot here.
        #[arg(long, value_name = "PATH")]
        snapshot: Option<PathBuf>,
    },
    /// Reaction report: functional groups, equation, by-product, type.
    Report(Input),
    /// Candidate pool from multi-channel recall.
    Recall(Input),
    /// Knockout tournament over the recalled pool.
    Tournament(Input),
    /// Full pipeline to the final recommendation set.
    Recommend(Input),
    /// Per-slot top-k accuracy on a labeled test set.
    Eval {
        /// Labeled records in base format.
        #[arg(long, value_name = "PATH")]
        test: PathBuf,
        /// Stored recommendation documents; runs the pipeline when absent.
        #[arg(long, value_name = "DIR")]
        predictions: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
        k: Vec<usize>,
    },
    /// GRPO on the scripted judgment environment.
    TrainToy {
        /// JSON policy, read if present and written after training.
        #[arg(long, value_name = "PATH")]
        policy: PathBuf,
        /// Overrides `train.steps`.
        #[arg(long)]
        steps: Option<usize>,
        /// Tab-separated learning curve.
        #[arg(long, value_name = "PATH")]
        curve: Option<PathBuf>,
        /// Actions per transcript for a fresh policy.
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        /// Number of scripted tasks.
        #[arg(long, default_value_t = 4)]
        tasks: usize,
    },
    /// List accepted configuration keys.
    Keys,
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let mut c = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(b) = &cli.base {
        c.base = Some(b.clone());
    }
    Ok(c)
}

fn queries(input: &Input) -> Result<Vec<Query>> {
    match (&input.reaction, &input.queries) {
        (Some(r), None) => Ok(vec![Query::inline(&input.id, r)]),
        (None, Some(p)) => Ok(read_queries(p)?),
        _ => bail!("give a reaction or --queries"),
    }
}

fn print_json<T: serde::Serialize>(out: &mut impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load(config: &PipelineConfig) -> Result<Pipeline> {
    let (p, report) = Pipeline::load(config.clone())?;
    log::info!("base: {report}");
    Ok(p)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let store = MemoryStore::new(&cli.out);
    let config = config(cli)?;
    match &cli.command {
        Command::Keys => {
            for k in PipelineConfig::KEYS {
                writeln!(out, "{k}")?;
            }
        }
        Command::Ingest { snapshot } => {
            let (p, report) = Pipeline::load(config.clone())?;
            for (line, reason) in &report.skipped_lines {
                log::warn!("line {line}: {reason}");
            }
            if let Some(path) = snapshot {
                let mut buf = Vec::new();
                p.base.write_snapshot(&mut buf)?;
                write_atomic(path, &buf)?;
            }
            writeln!(out, "{report}")?;
        }
        Command::Report(input) => {
            let p = load(&config)?;
            for q in queries(input)? {
                let report = p.report(&q.parse()?);
                store.write_json(Some(&q.id), "report.json", &report)?;
                print_json(&mut out, &report)?;
            }
        }
        Command::Recall(input) => {
            let p = load(&config)?;
            for q in queries(input)? {
                let reaction = q.parse()?;
                let report = p.report(&reaction);
                let recall = p.recall(&reaction, &report)?;
                store.write_json(Some(&q.id), "pool.json", &recall)?;
                print_json(&mut out, &recall)?;
            }
        }
        Command::Tournament(input) => {
            let p = load(&config)?;
            for q in queries(input)? {
                let reaction = q.parse()?;
                let report = p.report(&reaction);
                let recall = p.recall(&reaction, &report)?;
                if recall.pool.is_empty() {
                    bail!("{}: recall produced an empty pool", q.id);
                }
                let result = p.tournament(&p.context(&reaction, &report), &recall.pool)?;
                store.write_json(Some(&q.id), "bracket.json", &result)?;
                print_json(&mut out, &result)?;
            }
        }
        Command::Recommend(input) => {
            let p = load(&config)?;
            let qs = queries(input)?;
            let mut failed = 0;
            for q in &qs {
                let run = p.run(q)?;
                store.persist_run(&run, &p.config)?;
                match (run.recommendations(&p.config), &run.selection) {
                    (Some(doc), _) if qs.len() == 1 => out.write_all(doc.to_json()?.as_bytes())?,
                    (Some(doc), _) => writeln!(out, "{}\t{} recommendations", q.id, doc.entries.len())?,
                    (None, Err(e)) => {
                        failed += 1;
                        eprintln!("{}: {e}", q.id);
                    }
                    (None, Ok(_)) => unreachable!("selection succeeded without a document"),
                }
            }
            if failed > 0 {
                out.flush()?;
                return Ok(ExitCode::from(2));
            }
        }
        Command::Eval { test, predictions, k } => {
            if k.is_empty() || k.contains(&0) {
                bail!("--k needs positive values");
            }
            let qs = read_queries(test)?;
            let p = load(&config)?;
            let cases = match predictions {
                Some(dir) => stored_cases(dir, &qs)?,
                None => p.live_cases(&qs)?,
            };
            let result = p.evaluate(&cases, k);
            store.write_json(None, "eval.json", &result)?;
            write!(out, "{}", result.table())?;
        }
        Command::TrainToy { policy, steps, curve, horizon, tasks } => {
            let mut settings = config.train_settings();
            if let Some(s) = steps {
                settings.steps = *s;
            }
            let start = read_policy(policy, *horizon)?;
            let reference = start.clone();
            let env = JudgmentEnv::constant(Choice::A, *tasks);
            let outcome = toy_training_loop(&start, &reference, &env, &settings)?;
            if let Some(path) = curve {
                let mut buf = Vec::new();
                write_curve(&mut buf, &outcome.curve)?;
                write_atomic(path, &buf)?;
            }
            if settings.steps > 0 {
                write_atomic(policy, (serde_json::to_string_pretty(&outcome.policy)? + "\n").as_bytes())?;
            }
            writeln!(out, "expected reward {:.4} after {} steps", env.expected_reward(&outcome.policy), settings.steps)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn read_policy(path: &Path, horizon: usize) -> Result<ToyPolicy> {
    if !path.exists() {
        return Ok(ToyPolicy::uniform(horizon, ToyAction::ALL.len()));
    }
    let f = File::open(path).with_context(|| path.display().to_string())?;
    serde_json::from_reader(io::BufReader::new(f)).with_context(|| format!("policy {}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<PipelineError>() {
                Some(PipelineError::NotEnoughValid { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
