use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use roomsynth::cdf::TaskType;
use roomsynth::pipeline::{cmd_eval, cmd_generate, cmd_merge, cmd_tasks, EvalOptions, GenerateOptions, TasksOptions};
use roomsynth::tasking::DEFAULT_TASKS_PER_TYPE;

#[derive(Parser, Debug)]
#[command(name = "roomsynth", version, about = "Seeded indoor-scene synthesis, task farming and scene evaluation")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate scenes from a scene description.
    Generate {
        cdf: PathBuf,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relation rule table replacing the builtin one.
        #[arg(long, env = "CSSG_RULES")]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write a top-view SVG per scene.
        #[arg(long)]
        render: bool,
    },
    /// Sample, execute and annotate tasks in a scene directory.
    Tasks {
        scenes: PathBuf,
        /// Comma-separated task types; all when omitted.
        #[arg(long, value_delimiter = ',')]
        types: Vec<String>,
        #[arg(long, default_value_t = 10)]
        per_type: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory, `<scenes>/tasks` by default.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a scene directory by oracle task success and reachability.
    Eval {
        scenes: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TASKS_PER_TYPE)]
        per_type: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory, `<scenes>/eval` by default.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Earlier metrics.json to compute deltas against.
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Merge scene descriptions into one.
    Merge {
        #[arg(required = true)]
        cdfs: Vec<PathBuf>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_types(names: &[String]) -> Result<Vec<TaskType>> {
    if names.is_empty() {
        return Ok(TaskType::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| TaskType::parse(n.trim()).ok_or_else(|| anyhow!("unknown task type {n:?}")))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let jobs = cli.jobs;
    match cli.command {
        Command::Generate {
            cdf,
            count,
            seed,
            rules,
            out,
            render,
        } => {
            let m = cmd_generate(&GenerateOptions {
                cdf,
                count,
                seed,
                rules,
                out: out.clone(),
                render,
                jobs,
            })?;
            eprintln!("wrote {} files to {}", m.files.len(), out.display());
        }
        Command::Tasks {
            scenes,
            types,
            per_type,
            seed,
            out,
        } => {
            let sum = cmd_tasks(&TasksOptions {
                scenes,
                out,
                types: parse_types(&types)?,
                per_type,
                seed,
                jobs,
            })?;
            print!("{}", roomsynth::eval::render_table(&sum.report, None));
        }
        Command::Eval {
            scenes,
            per_type,
            seed,
            out,
            baseline,
        } => {
            let (_, table) = cmd_eval(&EvalOptions {
                scenes,
                out,
                per_type,
                seed,
                baseline,
                jobs,
            })?;
            print!("{table}");
        }
        Command::Merge { cdfs, out } => {
            let text = cmd_merge(&cdfs, out.as_deref())?;
            if out.is_none() {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
