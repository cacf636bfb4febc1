use std::path::PathBuf;

use anyhow::{Context, Result};
use galley_core::adapter::RemoteEndpoint;
use galley_core::knowledge::{distill, Describer, DistillConfig, DistillInputs, MockDescriber, RemoteDescriber};

use crate::DescriberKind;

/// Endpoint for the hosted describer.
pub const DESCRIBER_URL_VAR: &str = "GALLEY_DESCRIBER_URL";

pub struct Args {
    pub transcript: PathBuf,
    pub frames: PathBuf,
    pub audio: Option<PathBuf>,
    pub out: PathBuf,
    pub scene_threshold: f64,
    pub gap_seconds: f64,
    pub describer: DescriberKind,
    pub recipe_id: Option<String>,
    pub title: Option<String>,
    pub warnings: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<bool> {
    let stem = args.out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "recipe".into());
    let recipe_id = args.recipe_id.unwrap_or_else(|| stem.clone());
    let title = args.title.unwrap_or(stem);
    let inputs = DistillInputs::read(&args.transcript, &args.frames, args.audio.as_deref(), &recipe_id, &title)?;
    let describer: Box<dyn Describer> = match args.describer {
        DescriberKind::Mock => Box::new(MockDescriber::default()),
        DescriberKind::Remote => {
            let url = std::env::var(DESCRIBER_URL_VAR).with_context(|| format!("--describer remote needs {DESCRIBER_URL_VAR}"))?;
            Box::new(RemoteDescriber { endpoint: RemoteEndpoint::new(url) })
        }
    };
    let config = DistillConfig { gap_seconds: args.gap_seconds, scene_threshold: args.scene_threshold };
    let output = distill(&inputs, &config, describer.as_ref())?;
    std::fs::write(&args.out, &output.canonical).with_context(|| format!("writing {}", args.out.display()))?;
    let warnings = output.warnings_jsonl();
    match &args.warnings {
        Some(path) => std::fs::write(path, &warnings).with_context(|| format!("writing {}", path.display()))?,
        None => eprint!("{warnings}"),
    }
    println!(
        "{}: {} sentences, {} steps, {} ingredients, {} warnings",
        args.out.display(),
        output.knowledge.sentences.len(),
        output.knowledge.steps.len(),
        output.knowledge.ingredients.len(),
        output.warnings.len()
    );
    Ok(true)
}
