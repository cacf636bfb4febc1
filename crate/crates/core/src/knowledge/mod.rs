//! Recipe knowledge extraction.
//!
//! Turns an instructional video's word-timed transcript, frame stream and
//! audio track into a [`RecipeKnowledge`] file: one entry per spoken sentence
//! with its keyframes, a visual description and an audio-event description,
//! plus step and ingredient outlines.

mod compile;
mod describe;
mod inputs;
mod pipeline;
mod scenes;
mod segment;
mod types;

use std::path::Path;

pub use compile::{compile_knowledge, parse_knowledge, to_canonical, to_canonical_json, RecipeMeta};
pub use describe::{
    describe_audio, describe_visual, extract_outline, AudioTrack, AudioWindow, CannedDescriber, DescribeRequest,
    Describer, FailingDescriber, MockDescriber, RecipeOutline, RemoteDescriber,
};
pub use inputs::{
    image_descriptor, parse_frame_manifest, parse_transcript, read_audio, read_frame_manifest, read_transcript,
};
pub use pipeline::{distill, DistillConfig, DistillInputs, DistillOutput, PipelineWarning};
pub use scenes::{
    assign_keyframes, content_difference, detect_scenes, keyframes_for_interval, DEFAULT_SCENE_THRESHOLD,
};
pub use segment::{ends_sentence, segment_transcript, DEFAULT_GAP_SECONDS};
pub use types::{
    Frame, FrameRef, Ingredient, RecipeKnowledge, SceneCutList, SentenceUnit, Step, TimedTranscript, Word,
    SCHEMA_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("malformed frames: {0}")]
    MalformedFrames(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("describer unavailable: {0}")]
    DescriberUnavailable(String),
    #[error("sentence {0} has no keyframes")]
    NoKeyframes(usize),
    #[error("schema violation: {}", .0.join("; "))]
    SchemaViolation(Vec<String>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl KnowledgeError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        KnowledgeError::Io { path: path.display().to_string(), source }
    }
}

/// Reads and validates a knowledge file from disk.
pub fn load_knowledge(path: &Path) -> Result<RecipeKnowledge, KnowledgeError> {
    let text = std::fs::read_to_string(path).map_err(|e| KnowledgeError::io(path, e))?;
    parse_knowledge(&text)
}
