use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::clock::SimTime;
use crate::media::PlaybackStatus;
use crate::orchestrator::{DialogueState, EventKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StimulusKind {
    Startup,
    Utterance,
    Tick,
    Alert,
    IdleTimeout,
    Command,
    Frames,
    SkipDeclaration,
    Config,
}

/// One dispatched stimulus and what it did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub at: SimTime,
    pub stimulus: StimulusKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utterance_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub judgment_id: Option<u64>,
    pub classified_event: Option<EventKind>,
    /// Set only by annotation.
    #[serde(default)]
    pub ground_truth_event: Option<EventKind>,
    pub from_state: DialogueState,
    pub to_state: DialogueState,
    #[serde(default)]
    pub rejected: bool,
    pub response_id: Option<u64>,
    /// Set only by annotation.
    #[serde(default)]
    pub response_correct: Option<bool>,
    pub playback: PlaybackStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl TraceRecord {
    pub fn new(seq: u64, at: SimTime, stimulus: StimulusKind, state: DialogueState, playback: PlaybackStatus) -> Self {
        Self {
            seq,
            at,
            stimulus,
            utterance: None,
            utterance_id: None,
            judgment_id: None,
            classified_event: None,
            ground_truth_event: None,
            from_state: state,
            to_state: state,
            rejected: false,
            response_id: None,
            response_correct: None,
            playback,
            flags: Vec::new(),
        }
    }

    /// A non-empty user utterance: the unit the accuracy metrics count.
    pub fn is_user_query(&self) -> bool {
        self.stimulus == StimulusKind::Utterance && self.utterance.as_deref().is_some_and(|u| !u.trim().is_empty())
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }
}

pub fn trace_to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r).expect("trace records serialize")).unwrap();
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, SessionError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| SessionError::Parse(format!("trace line {}: {e}", n + 1))))
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, SessionError> {
    parse_trace(&std::fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?)
}

/// Human labels for one user query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub ground_truth: EventKind,
    pub response_correct: bool,
}

/// Parses an annotation file: `seq<TAB>event<TAB>correct` per line, where
/// `correct` is `y`/`n` (or `true`/`false`). Anything after a third tab is
/// a free-text note.
pub fn parse_labels(text: &str) -> Result<BTreeMap<u64, Label>, SessionError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: String| SessionError::Parse(format!("labels line {}: {m}", n + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(bad("expected seq, event, correct".into()));
        }
        let seq: u64 = cols[0].trim().parse().map_err(|_| bad(format!("bad seq {:?}", cols[0])))?;
        let ground_truth: EventKind = cols[1].parse().map_err(bad)?;
        let response_correct = match cols[2].trim().to_ascii_lowercase().as_str() {
            "y" | "yes" | "true" | "1" => true,
            "n" | "no" | "false" | "0" => false,
            other => return Err(bad(format!("bad correctness {other:?}"))),
        };
        if out.insert(seq, Label { ground_truth, response_correct }).is_some() {
            return Err(bad(format!("duplicate seq {seq}")));
        }
    }
    Ok(out)
}

/// A blank annotation sheet listing every user query in the trace.
pub fn label_template(records: &[TraceRecord]) -> String {
    let mut out = String::from("# seq\tground_truth_event\tresponse_correct(y/n)\t# utterance | classified\n");
    for r in records.iter().filter(|r| r.is_user_query()) {
        let classified = r.classified_event.map(|e| e.code()).unwrap_or("-");
        writeln!(out, "{}\t\t\t# {} | {classified}", r.seq, r.utterance.as_deref().unwrap_or("")).unwrap();
    }
    out
}

/// Applies labels to the user queries they name. Labels for records that
/// are not user queries are an error.
pub fn annotate(records: &[TraceRecord], labels: &BTreeMap<u64, Label>) -> Result<Vec<TraceRecord>, SessionError> {
    let mut out = records.to_vec();
    for (seq, label) in labels {
        let r = out
            .iter_mut()
            .find(|r| r.seq == *seq)
            .ok_or_else(|| SessionError::Parse(format!("label for unknown seq {seq}")))?;
        if !r.is_user_query() {
            return Err(SessionError::Parse(format!("seq {seq} is not a user query")));
        }
        r.ground_truth_event = Some(label.ground_truth);
        r.response_correct = Some(label.response_correct);
    }
    Ok(out)
}
