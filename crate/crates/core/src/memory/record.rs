use std::fmt;

use serde::{Deserialize, Serialize};

use crate::clock::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Utterance,
    Response,
    Observation,
    Judgment,
    Alert,
    MediaAction,
}

impl RecordKind {
    pub const ALL: [RecordKind; 6] = [
        RecordKind::Utterance,
        RecordKind::Response,
        RecordKind::Observation,
        RecordKind::Judgment,
        RecordKind::Alert,
        RecordKind::MediaAction,
    ];

    /// Conversation turns, as opposed to monitor output.
    pub fn is_turn(self) -> bool {
        matches!(self, RecordKind::Utterance | RecordKind::Response | RecordKind::Alert)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Utterance => "utterance",
            RecordKind::Response => "response",
            RecordKind::Observation => "observation",
            RecordKind::Judgment => "judgment",
            RecordKind::Alert => "alert",
            RecordKind::MediaAction => "media_action",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLinks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sentences: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment_id: Option<u64>,
}

/// One session history entry. Records are never modified once stored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub record_id: u64,
    pub kind: RecordKind,
    pub timestamp: SimTime,
    pub text: String,
    #[serde(default)]
    pub links: RecordLinks,
}

/// A record before the store assigns its id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDraft {
    pub kind: RecordKind,
    pub timestamp: SimTime,
    pub text: String,
    pub links: RecordLinks,
}

impl RecordDraft {
    pub fn new(kind: RecordKind, timestamp: SimTime, text: impl Into<String>) -> Self {
        Self { kind, timestamp, text: text.into(), links: RecordLinks::default() }
    }

    pub fn with_links(mut self, links: RecordLinks) -> Self {
        self.links = links;
        self
    }

    /// Name of the kind-specific link this draft lacks, if any.
    pub fn missing_link(&self) -> Option<&'static str> {
        let l = &self.links;
        match self.kind {
            RecordKind::Observation if l.tick_id.is_none() => Some("tick_id"),
            RecordKind::Response if l.response_id.is_none() => Some("response_id"),
            RecordKind::Judgment if l.judgment_id.is_none() => Some("judgment_id"),
            RecordKind::Judgment if l.tick_id.is_none() => Some("tick_id"),
            RecordKind::Alert if l.judgment_id.is_none() => Some("judgment_id"),
            _ => None,
        }
    }
}
