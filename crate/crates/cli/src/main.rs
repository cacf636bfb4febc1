//! `galley`: distill recipe videos, serve assistance sessions, and score them.

mod distill;
mod evaluate;
mod session;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "galley", version, about = "Conversational cooking assistance engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescriberKind {
    Mock,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Jsonl,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a transcript, frame manifest and audio track into a recipe knowledge file.
    Distill {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = galley_core::knowledge::DEFAULT_SCENE_THRESHOLD)]
        scene_threshold: f64,
        #[arg(long, default_value_t = galley_core::knowledge::DEFAULT_GAP_SECONDS)]
        gap_seconds: f64,
        #[arg(long, value_enum, default_value_t = DescriberKind::Mock)]
        describer: DescriberKind,
        /// Defaults to the output file stem.
        #[arg(long)]
        recipe_id: Option<String>,
        #[arg(long)]
        title: Option<String>,
        /// Write pipeline warnings here as JSON lines instead of stderr.
        #[arg(long)]
        warnings: Option<PathBuf>,
    },
    /// Run a live session over stdin/stdout or TCP.
    Serve {
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use mock adapters regardless of the config file.
        #[arg(long)]
        mock_all: bool,
        /// Listen on this address instead of stdin/stdout.
        #[arg(long)]
        listen: Option<String>,
        /// Reload the configured memory file and resume from idle.
        #[arg(long)]
        recover: bool,
    },
    /// Print a trace as a timeline; with a recipe, re-drive its utterances and compare.
    ReplayTrace {
        trace: PathBuf,
        #[arg(long)]
        recipe: Option<PathBuf>,
        /// Write the replayed trace here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mapping and response accuracy of annotated traces.
    Metrics {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Print a label sheet for a trace, or apply a filled-in one.
    Annotate {
        trace: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the dialogue transition table.
    Conformance {
        /// Also check the table against a fixture file.
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    /// Dump a session memory file.
    Export {
        memory: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Text)]
        format: ExportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scripted scenario runs.
    Harness {
        #[command(subcommand)]
        command: HarnessCommand,
    },
}

#[derive(Subcommand)]
enum HarnessCommand {
    /// Run every *.toml scenario in a directory.
    Run {
        dir: PathBuf,
        #[arg(long)]
        junit: Option<PathBuf>,
        /// Fail unless the scenarios cover every reachable transition.
        #[arg(long)]
        coverage: bool,
        /// Write each scenario's trace as <name>.jsonl here.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = match Cli::parse().command {
        Command::Distill {
            transcript,
            frames,
            audio,
            out,
            scene_threshold,
            gap_seconds,
            describer,
            recipe_id,
            title,
            warnings,
        } => distill::run(distill::Args {
            transcript,
            frames,
            audio,
            out,
            scene_threshold,
            gap_seconds,
            describer,
            recipe_id,
            title,
            warnings,
        }),
        Command::Serve { recipe, config, mock_all, listen, recover } => {
            session::serve(recipe, config, mock_all, listen, recover)
        }
        Command::ReplayTrace { trace, recipe, out } => session::replay_trace(&trace, recipe.as_deref(), out.as_deref()),
        Command::Metrics { traces, json } => evaluate::metrics(&traces, json),
        Command::Annotate { trace, labels, out } => evaluate::annotate(&trace, labels.as_deref(), out.as_deref()),
        Command::Conformance { fixture } => evaluate::conformance(fixture.as_deref()),
        Command::Export { memory, format, out } => session::export(&memory, format, out.as_deref()),
        Command::Harness { command: HarnessCommand::Run { dir, junit, coverage, traces } } => {
            evaluate::harness_run(&dir, junit.as_deref(), coverage, traces.as_deref())
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
