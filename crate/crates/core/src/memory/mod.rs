//! Session memory.
//!
//! Conversation turns, monitor observations and judgments, alerts and media
//! actions all land in one append-only [`MemoryStore`]. Retrieval ranks
//! records against a query, and [`assemble_context`] packs the budgeted
//! [`ContextBundle`] a response is generated from.

mod context;
mod record;
mod store;

use std::path::Path;

pub use context::{
    assemble_context, knowledge_for_state, sentence_cost, step_cost, ContextBundle, ContextConfig, ContextRequest,
};
pub use record::{MemoryRecord, RecordDraft, RecordKind, RecordLinks};
pub use store::{MemoryStore, Query, RecencyLexicalScorer, RecordScorer, DEFAULT_HALF_LIFE_SECS};

use crate::clock::SimTime;

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("record at {got} is earlier than the last stored record at {last}")]
    ClockViolation { last: SimTime, got: SimTime },
    #[error("{kind} record is missing its {link} link")]
    MissingLink { kind: RecordKind, link: &'static str },
    #[error("record {0} already exists with different content")]
    Conflict(u64),
    #[error("expected record id {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },
    #[error("context needs {needed} tokens for the query alone but the budget is {budget}")]
    BudgetTooSmall { needed: usize, budget: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("session file write failed: {0}")]
    Sink(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl MemoryError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        MemoryError::Io { path: path.display().to_string(), source }
    }
}
