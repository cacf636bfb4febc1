//! Session lifecycle, adapter wiring, the streaming protocol, traces and
//! accuracy metrics.

mod config;
mod engine;
mod metrics;
mod protocol;
mod speech;
mod trace;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

pub use config::{validate_tts_speed, AdapterChoice, AdapterConfig, SessionConfig, ENDPOINT_VARS, TTS_SPEED_RANGE};
pub use engine::{Adapters, CommandVerb, Engine, EngineHandle, ServerMessage, Stimulus};
pub use metrics::{aggregate, compute_metrics, MetricsReport};
pub use protocol::{parse_client_message, serve_connection, serve_lines, serve_tcp, ClientMessage};
pub use speech::{FailingSpeaker, MockSpeaker, RemoteSpeaker, Speaker};
pub use trace::{annotate, label_template, parse_labels, parse_trace, read_trace, trace_to_jsonl, Label, StimulusKind, TraceRecord};

use crate::clock::Clock;
use crate::knowledge::{load_knowledge, KnowledgeError};
use crate::memory::MemoryError;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("session failed to start: {0}")]
    StartupFailure(KnowledgeError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("annotation missing for trace records {0:?}")]
    IncompleteAnnotation(Vec<u64>),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("session channel closed")]
    Closed,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl SessionError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        SessionError::Io { path: path.as_ref().to_path_buf(), source }
    }
}

/// Loads the configured recipe and starts a session in idle.
pub fn start_session(config: SessionConfig, adapters: Adapters, clock: Arc<dyn Clock>) -> Result<Engine, SessionError> {
    let path = config
        .recipe
        .clone()
        .ok_or_else(|| SessionError::InvalidConfig("no recipe file configured".into()))?;
    let knowledge = load_knowledge(&path).map_err(SessionError::StartupFailure)?;
    Engine::start(config, knowledge, adapters, clock)
}
