use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use galley_core::clock::{SimClock, WallClock};
use galley_core::knowledge::load_knowledge;
use galley_core::memory::MemoryStore;
use galley_core::session::{
    read_trace, serve_connection, serve_tcp, trace_to_jsonl, Adapters, Engine, SessionConfig, Stimulus, StimulusKind,
    TraceRecord,
};

use crate::ExportFormat;

const POLL: Duration = Duration::from_millis(50);

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn serve(recipe: Option<PathBuf>, config: Option<PathBuf>, mock_all: bool, listen: Option<String>, recover: bool) -> Result<bool> {
    let mut config = match &config {
        Some(path) => SessionConfig::load(path)?,
        None => SessionConfig::default(),
    };
    if recipe.is_some() {
        config.recipe = recipe;
    }
    let Some(recipe) = config.recipe.clone() else {
        bail!("no recipe: pass --recipe or set `recipe` in the config file");
    };
    let adapters = if mock_all { Adapters::mock() } else { config.adapters.build()? };
    let knowledge = load_knowledge(&recipe).with_context(|| format!("loading {}", recipe.display()))?;
    let mut engine = match (recover, config.memory_file.clone()) {
        (true, Some(memory_file)) if memory_file.exists() => {
            let resume_at = MemoryStore::load(&memory_file)?.last_timestamp();
            let clock = Arc::new(WallClock::starting_at(resume_at));
            Engine::recover(config, knowledge, adapters, clock, &memory_file)?
        }
        (true, None) => bail!("--recover needs `memory_file` in the config"),
        _ => Engine::start(config, knowledge, adapters, Arc::new(WallClock::new()))?,
    };
    match listen {
        Some(addr) => serve_tcp(&mut engine, addr.as_str())?,
        None => serve_connection(&mut engine, BufReader::new(std::io::stdin()), std::io::stdout(), POLL)?,
    }
    Ok(true)
}

fn describe(r: &TraceRecord) -> String {
    let mut line = format!("{:>9.3}s  #{:<4} {:<13}", r.at.as_secs_f64(), r.seq, format!("{:?}", r.stimulus));
    if let Some(e) = r.classified_event {
        write!(line, " {e}").unwrap();
    }
    write!(line, "  {} -> {}", r.from_state, r.to_state).unwrap();
    if r.rejected {
        line.push_str(" (rejected)");
    }
    if let Some(id) = r.response_id {
        write!(line, "  response {id}").unwrap();
    }
    if let Some(u) = &r.utterance {
        write!(line, "  {u:?}").unwrap();
    }
    if !r.flags.is_empty() {
        write!(line, "  [{}]", r.flags.join(", ")).unwrap();
    }
    line
}

/// Without a recipe: a readable timeline. With one: the trace's utterances
/// are sent again to a fresh mock session at their recorded times and each
/// routing decision is compared.
pub fn replay_trace(path: &Path, recipe: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let trace = read_trace(path)?;
    let Some(recipe) = recipe else {
        let text: String = trace.iter().map(|r| describe(r) + "\n").collect();
        write_or_print(out, &text)?;
        return Ok(true);
    };
    let config = SessionConfig { recipe: Some(recipe.into()), ..Default::default() };
    let knowledge = load_knowledge(recipe)?;
    let clock = SimClock::new();
    let mut engine = Engine::start(config, knowledge, Adapters::mock(), Arc::new(clock.clone()))?;
    let mut compared = 0;
    let mut diverged = 0;
    for original in trace.iter().filter(|r| r.stimulus == StimulusKind::Utterance) {
        clock.advance_to(original.at);
        engine.pump();
        engine.submit(Stimulus::utterance(original.utterance.clone().unwrap_or_default()));
        engine.pump();
        let replayed = engine.trace().iter().rev().find(|r| r.stimulus == StimulusKind::Utterance).expect("utterance recorded");
        compared += 1;
        let same = (replayed.classified_event, replayed.from_state, replayed.to_state, replayed.rejected)
            == (original.classified_event, original.from_state, original.to_state, original.rejected);
        if !same {
            diverged += 1;
            println!("diverged at #{}:\n  recorded {}\n  replayed {}", original.seq, describe(original), describe(replayed));
        }
    }
    if let Some(out) = out {
        std::fs::write(out, trace_to_jsonl(engine.trace())).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{compared} utterances replayed, {diverged} diverged");
    Ok(diverged == 0)
}

pub fn export(memory: &Path, format: ExportFormat, out: Option<&Path>) -> Result<bool> {
    let store = MemoryStore::load(memory)?;
    let text = match format {
        ExportFormat::Jsonl => store
            .records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect::<String>(),
        ExportFormat::Text => store
            .records()
            .iter()
            .map(|r| format!("{:>9.3}s  #{:<4} {:<12} {}\n", r.timestamp.as_secs_f64(), r.record_id, r.kind.to_string(), r.text))
            .collect(),
    };
    write_or_print(out, &text)?;
    Ok(true)
}
