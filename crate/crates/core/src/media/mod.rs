//! Sentence-level evidence segments and playback control.
//!
//! Every clip the engine offers is exactly one transcript sentence's interval
//! in the source video. The engine only tracks what should be playing; a
//! client player renders it.

mod locate;
mod playback;

pub use locate::{
    locate_segments, segment_for_sentence, LexicalMatcher, RemoteMatcher, SegmentMatcher, SegmentReason, SegmentRef,
    SegmentRequest, MATCH_FLOOR,
};
pub use playback::{advance, control, parse_media_command, MediaCommand, PlaybackEvent, PlaybackState, PlaybackStatus, SEPARATOR_CUE_SECS};

use crate::adapter::AdapterError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MediaError {
    #[error("no part of the video matches {0:?}")]
    NoSegmentFound(String),
    #[error("unknown response {0}")]
    UnknownResponse(u64),
    #[error("{command} is not valid while {status}")]
    InvalidCommand { command: &'static str, status: PlaybackStatus },
    #[error("matcher unavailable: {0}")]
    MatcherUnavailable(#[from] AdapterError),
}
