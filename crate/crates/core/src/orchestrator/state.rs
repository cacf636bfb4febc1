use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Interaction states. The session starts in [`DialogueState::Idle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub enum DialogueState {
    #[default]
    #[serde(rename = "S0")]
    Idle,
    #[serde(rename = "S1")]
    FoodState,
    #[serde(rename = "S2")]
    StepGuide,
    #[serde(rename = "S3")]
    ProblemSolving,
    #[serde(rename = "S4")]
    GeneralVisual,
    #[serde(rename = "S5")]
    CorrectionReview,
    #[serde(rename = "S6")]
    DetailElaboration,
}

impl DialogueState {
    pub const ALL: [DialogueState; 7] = [
        DialogueState::Idle,
        DialogueState::FoodState,
        DialogueState::StepGuide,
        DialogueState::ProblemSolving,
        DialogueState::GeneralVisual,
        DialogueState::CorrectionReview,
        DialogueState::DetailElaboration,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn code(self) -> &'static str {
        ["S0", "S1", "S2", "S3", "S4", "S5", "S6"][self as usize]
    }

    pub fn label(self) -> &'static str {
        match self {
            DialogueState::Idle => "Idle",
            DialogueState::FoodState => "Food state",
            DialogueState::StepGuide => "Step guide",
            DialogueState::ProblemSolving => "Problem solving",
            DialogueState::GeneralVisual => "General visual",
            DialogueState::CorrectionReview => "Correction review",
            DialogueState::DetailElaboration => "Detail elaboration",
        }
    }

    /// States that render a response on entry (everything but idle).
    pub fn responds(self) -> bool {
        self != DialogueState::Idle
    }
}

impl fmt::Display for DialogueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for DialogueState {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        DialogueState::ALL
            .into_iter()
            .find(|st| st.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown state {s:?}"))
    }
}

/// The ten event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "E1")]
    FoodStateQuery,
    #[serde(rename = "E2")]
    StepQuery,
    #[serde(rename = "E3")]
    ProblemQuery,
    #[serde(rename = "E4")]
    GeneralVisualQuery,
    #[serde(rename = "E5")]
    MissedStepDetected,
    #[serde(rename = "E6")]
    IncorrectStepDetected,
    #[serde(rename = "E7")]
    FollowUpDetails,
    #[serde(rename = "E8")]
    FlagResponseWrong,
    #[serde(rename = "E9")]
    Reset,
    #[serde(rename = "E10")]
    MediaControl,
}

impl EventKind {
    pub const ALL: [EventKind; 10] = [
        EventKind::FoodStateQuery,
        EventKind::StepQuery,
        EventKind::ProblemQuery,
        EventKind::GeneralVisualQuery,
        EventKind::MissedStepDetected,
        EventKind::IncorrectStepDetected,
        EventKind::FollowUpDetails,
        EventKind::FlagResponseWrong,
        EventKind::Reset,
        EventKind::MediaControl,
    ];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn code(self) -> &'static str {
        ["E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9", "E10"][self as usize]
    }

    /// Raised by the monitor rather than by the user.
    pub fn is_alert(self) -> bool {
        matches!(self, EventKind::MissedStepDetected | EventKind::IncorrectStepDetected)
    }

    /// Follow-ups are excluded from mapping accuracy.
    pub fn is_follow_up(self) -> bool {
        matches!(self, EventKind::FollowUpDetails | EventKind::FlagResponseWrong)
    }

    /// First-turn queries that route as from idle in any state.
    pub fn is_top_level_query(self) -> bool {
        matches!(
            self,
            EventKind::FoodStateQuery | EventKind::StepQuery | EventKind::ProblemQuery | EventKind::GeneralVisualQuery
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for EventKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        EventKind::ALL
            .into_iter()
            .find(|e| e.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown event {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetReason {
    Satisfied,
    IdleTimeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "source", content = "id", rename_all = "snake_case")]
pub enum EventPayload {
    Utterance(u64),
    Judgment(u64),
    Reset(ResetReason),
}

/// An event together with what raised it. Construct through the typed
/// constructors so the payload always matches the kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InteractionEvent {
    kind: EventKind,
    payload: EventPayload,
}

impl InteractionEvent {
    /// User-initiated event. `Reset` from an utterance means the user said
    /// they were satisfied. Alert kinds are not accepted here.
    pub fn from_utterance(kind: EventKind, utterance_id: u64) -> Option<Self> {
        match kind {
            EventKind::MissedStepDetected | EventKind::IncorrectStepDetected => None,
            EventKind::Reset => Some(Self { kind, payload: EventPayload::Reset(ResetReason::Satisfied) }),
            _ => Some(Self { kind, payload: EventPayload::Utterance(utterance_id) }),
        }
    }

    pub fn missed_step(judgment_id: u64) -> Self {
        Self { kind: EventKind::MissedStepDetected, payload: EventPayload::Judgment(judgment_id) }
    }

    pub fn incorrect_step(judgment_id: u64) -> Self {
        Self { kind: EventKind::IncorrectStepDetected, payload: EventPayload::Judgment(judgment_id) }
    }

    pub fn reset(reason: ResetReason) -> Self {
        Self { kind: EventKind::Reset, payload: EventPayload::Reset(reason) }
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn payload(&self) -> EventPayload {
        self.payload
    }
}
