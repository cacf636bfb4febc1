use std::fmt;

use serde::{Deserialize, Serialize};

use super::{MediaError, SegmentRef};
use crate::text;

/// Pause spoken between consecutive segments of a multi-segment answer.
pub const SEPARATOR_CUE_SECS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaybackStatus {
    #[default]
    Stopped,
    Playing,
    Paused,
}

impl fmt::Display for PlaybackStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlaybackStatus::Stopped => "stopped",
            PlaybackStatus::Playing => "playing",
            PlaybackStatus::Paused => "paused",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MediaCommand {
    Play(Vec<SegmentRef>),
    Pause,
    Resume,
    Replay,
    Stop,
}

impl MediaCommand {
    pub fn name(&self) -> &'static str {
        match self {
            MediaCommand::Play(_) => "play",
            MediaCommand::Pause => "pause",
            MediaCommand::Resume => "resume",
            MediaCommand::Replay => "replay",
            MediaCommand::Stop => "stop",
        }
    }
}

/// What the player should be doing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlaybackState {
    pub status: PlaybackStatus,
    pub queue: Vec<SegmentRef>,
    /// Index into `queue` of the segment being played.
    pub current: usize,
    /// Video time within the current segment.
    pub position: f64,
    /// Time left on the separator cue before `current` starts.
    #[serde(default)]
    pub cue_remaining: f64,
    /// The most recently loaded queue, kept after stop for replay.
    pub last_played: Vec<SegmentRef>,
}

impl PlaybackState {
    pub fn current_segment(&self) -> Option<&SegmentRef> {
        self.queue.get(self.current)
    }

    pub fn is_valid(&self) -> bool {
        match self.current_segment() {
            None => self.status == PlaybackStatus::Stopped && self.queue.is_empty(),
            Some(s) => s.t_start <= self.position && self.position <= s.t_end,
        }
    }

    pub fn event(&self) -> PlaybackEvent {
        PlaybackEvent { status: self.status, segment: self.current_segment().cloned(), position: self.position }
    }

    fn load(&mut self, queue: Vec<SegmentRef>) {
        self.position = queue[0].t_start;
        self.last_played = queue.clone();
        self.queue = queue;
        self.current = 0;
        self.cue_remaining = 0.0;
        self.status = PlaybackStatus::Playing;
    }
}

/// Playback snapshot sent to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackEvent {
    pub status: PlaybackStatus,
    pub segment: Option<SegmentRef>,
    pub position: f64,
}

/// Applies one command. Every (command, status) pair is defined; invalid ones
/// return `InvalidCommand` and the caller keeps the old state.
///
/// | command | stopped | playing | paused |
/// |---|---|---|---|
/// | play(segs) | load, playing | load, playing | load, playing |
/// | pause | invalid | paused | invalid |
/// | resume | invalid | invalid | playing |
/// | replay | reload last played, or invalid | restart current segment | restart current segment |
/// | stop | invalid | stopped, queue cleared | stopped, queue cleared |
///
/// `play` with no segments is invalid in every status.
pub fn control(cmd: &MediaCommand, pb: &PlaybackState) -> Result<PlaybackState, MediaError> {
    use PlaybackStatus::*;
    let invalid = || MediaError::InvalidCommand { command: cmd.name(), status: pb.status };
    let mut next = pb.clone();
    match (cmd, pb.status) {
        (MediaCommand::Play(segs), _) => {
            if segs.is_empty() {
                return Err(invalid());
            }
            next.load(segs.clone());
        }
        (MediaCommand::Pause, Playing) => next.status = Paused,
        (MediaCommand::Resume, Paused) => next.status = Playing,
        (MediaCommand::Replay, Playing | Paused) => {
            next.position = pb.queue[pb.current].t_start;
            next.cue_remaining = 0.0;
            next.status = Playing;
        }
        (MediaCommand::Replay, Stopped) => {
            if pb.last_played.is_empty() {
                return Err(invalid());
            }
            next.load(pb.last_played.clone());
        }
        (MediaCommand::Stop, Playing | Paused) => {
            next.status = Stopped;
            next.queue.clear();
            next.current = 0;
            next.position = 0.0;
            next.cue_remaining = 0.0;
        }
        (MediaCommand::Pause | MediaCommand::Resume | MediaCommand::Stop, _) => return Err(invalid()),
    }
    Ok(next)
}

/// Moves playback forward by `elapsed` seconds of wall time. Segments play
/// in queue order with a separator cue between them; the queue empties and
/// playback stops after the last one.
pub fn advance(pb: &PlaybackState, elapsed: f64) -> PlaybackState {
    let mut next = pb.clone();
    if next.status != PlaybackStatus::Playing {
        return next;
    }
    let mut left = elapsed.max(0.0);
    loop {
        if next.cue_remaining > 0.0 {
            if left < next.cue_remaining {
                next.cue_remaining -= left;
                return next;
            }
            left -= next.cue_remaining;
            next.cue_remaining = 0.0;
        }
        let seg = &next.queue[next.current];
        let remaining = seg.t_end - next.position;
        if left < remaining {
            next.position += left;
            return next;
        }
        left -= remaining;
        if next.current + 1 >= next.queue.len() {
            next.status = PlaybackStatus::Stopped;
            next.queue.clear();
            next.current = 0;
            next.position = 0.0;
            return next;
        }
        next.current += 1;
        next.position = next.queue[next.current].t_start;
        next.cue_remaining = SEPARATOR_CUE_SECS;
    }
}

/// The playback verb in a media-control utterance. `play` carries no
/// segments yet; the caller resolves what to play.
pub fn parse_media_command(utterance: &str) -> Option<MediaCommand> {
    let words = text::words(utterance);
    let has = |w: &str| words.iter().any(|x| x == w);
    if has("pause") {
        Some(MediaCommand::Pause)
    } else if has("resume") || has("continue") {
        Some(MediaCommand::Resume)
    } else if has("stop") {
        Some(MediaCommand::Stop)
    } else if has("replay") || has("rewind") || has("again") {
        Some(MediaCommand::Replay)
    } else if has("play") {
        Some(MediaCommand::Play(Vec::new()))
    } else {
        None
    }
}
