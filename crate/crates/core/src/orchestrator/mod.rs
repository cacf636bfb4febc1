//! The interaction state machine.
//!
//! Stimuli are classified into [`EventKind`]s, the total [`transition`]
//! function moves between [`DialogueState`]s, and every state except idle
//! answers through its own prompt template and a generator adapter.

mod classify;
mod render;
mod state;
mod transition;

pub use classify::{
    classify_event, classify_or_fallback, parse_label, spoken_step, EventClassifier, FailingClassifier, Intent,
    KeywordClassifier, KeywordRule, Label, RemoteClassifier, RuleLabel, CLASSIFIER_RULES_V1,
};
pub use render::{
    evidence_for, fill_template, render_response, template, template_id, CannedGenerator, EchoGenerator,
    FailingGenerator, GenerationRequest, Generator, RemoteGenerator, ResponseEnvelope, APOLOGY, TEMPLATE_VERSION,
};
pub use state::{DialogueState, EventKind, EventPayload, InteractionEvent, ResetReason};
pub use transition::{
    parse_transition_table, render_transition_table, transition, Transition, TransitionTable, TRANSITION_FIXTURE_V1,
};

use crate::clock::{SimSpan, SimTime};

pub const DEFAULT_IDLE_TIMEOUT: SimSpan = SimSpan(5000);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrchestratorError {
    #[error("classification unavailable: {0}")]
    ClassificationUnavailable(String),
    #[error("generation unavailable: {0}")]
    GenerationUnavailable(String),
    #[error("no response is rendered in the idle state")]
    NoResponseInIdle,
    #[error("empty utterance")]
    EmptyUtterance,
}

/// Idle reset: fires once the session has been quiet for `idle_timeout`
/// outside the idle state.
pub fn handle_idle(
    now: SimTime,
    last_activity: SimTime,
    state: DialogueState,
    idle_timeout: SimSpan,
) -> Option<InteractionEvent> {
    (state != DialogueState::Idle && now.saturating_sub(last_activity) >= idle_timeout)
        .then(|| InteractionEvent::reset(ResetReason::IdleTimeout))
}
