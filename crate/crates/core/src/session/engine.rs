//! The single-writer session loop.

use std::collections::{BTreeMap, VecDeque};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    validate_tts_speed, MockSpeaker, SessionConfig, SessionError, Speaker, StimulusKind, TraceRecord,
};
use crate::clock::{Clock, SimTime};
use crate::knowledge::{FrameRef, RecipeKnowledge};
use crate::media::{
    self, control, locate_segments, segment_for_sentence, LexicalMatcher, MediaCommand, MediaError, PlaybackEvent,
    PlaybackState, PlaybackStatus, SegmentMatcher, SegmentReason, SegmentRef, SegmentRequest,
};
use crate::memory::{
    assemble_context, ContextRequest, MemoryStore, RecencyLexicalScorer, RecordDraft, RecordKind, RecordLinks,
    RecordScorer,
};
use crate::monitor::{
    advance_progress, emit_alerts, judge, AlertLimiter, Judge, Judgment, Monitor, Observation, Perceiver,
    ProgressState, RuleJudge, ScriptedPerceiver,
};
use crate::orchestrator::{
    classify_or_fallback, render_response, transition, CannedGenerator, DialogueState, EventClassifier, EventKind,
    Generator, Intent, InteractionEvent, KeywordClassifier, OrchestratorError, ResetReason, ResponseEnvelope,
    Transition, APOLOGY,
};

/// Every model boundary the engine talks to.
pub struct Adapters {
    pub classifier: Box<dyn EventClassifier + Send>,
    pub generator: Box<dyn Generator + Send>,
    pub perceiver: Box<dyn Perceiver + Send>,
    pub judge: Box<dyn Judge + Send>,
    pub matcher: Box<dyn SegmentMatcher + Send>,
    pub scorer: Box<dyn RecordScorer + Send>,
    pub speaker: Box<dyn Speaker + Send>,
}

impl Adapters {
    /// Deterministic mocks throughout. The perceiver sees nothing.
    pub fn mock() -> Self {
        Self {
            classifier: Box::new(KeywordClassifier::builtin()),
            generator: Box::new(CannedGenerator),
            perceiver: Box::new(ScriptedPerceiver::new()),
            judge: Box::new(RuleJudge),
            matcher: Box::new(LexicalMatcher),
            scorer: Box::new(RecencyLexicalScorer::default()),
            speaker: Box::new(MockSpeaker::default()),
        }
    }
}

/// Input arriving through the session channel. This is also the
/// client-to-engine wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Stimulus {
    /// Already-transcribed user speech.
    Utterance { text: String },
    /// A chunk of the frame manifest captured since the previous chunk.
    Frames { frames: Vec<FrameRef> },
    /// Explicit playback control. `play` takes its segments from
    /// `sentences` if given, else from response `response_id`, else from the
    /// latest response.
    Command {
        command: CommandVerb,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        response_id: Option<u64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        sentences: Vec<usize>,
    },
    /// The user declares a step (0-based) intentionally skipped.
    Skip { step: usize },
    Config { tts_speed: f64 },
}

impl Stimulus {
    pub fn utterance(text: impl Into<String>) -> Self {
        Stimulus::Utterance { text: text.into() }
    }

    pub fn command(command: CommandVerb) -> Self {
        Stimulus::Command { command, response_id: None, sentences: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandVerb {
    Play,
    Pause,
    Resume,
    Replay,
    Stop,
}

/// Output for clients, in the order it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    StateChange { at: SimTime, from: DialogueState, to: DialogueState, event: EventKind },
    Response { envelope: ResponseEnvelope },
    Alert { at: SimTime, event: EventKind, judgment_id: u64, text: String },
    Playback { at: SimTime, playback: PlaybackEvent },
    Tts { at: SimTime, response_id: Option<u64>, audio_ref: String, speed: f64 },
    Notice { at: SimTime, text: String },
    Error { at: SimTime, message: String },
}

impl ServerMessage {
    pub const KINDS: [&'static str; 7] = ["state_change", "response", "alert", "playback", "tts", "notice", "error"];

    pub fn kind(&self) -> &'static str {
        match self {
            ServerMessage::StateChange { .. } => "state_change",
            ServerMessage::Response { .. } => "response",
            ServerMessage::Alert { .. } => "alert",
            ServerMessage::Playback { .. } => "playback",
            ServerMessage::Tts { .. } => "tts",
            ServerMessage::Notice { .. } => "notice",
            ServerMessage::Error { .. } => "error",
        }
    }
}

#[derive(Debug, Clone)]
struct PendingAlert {
    at: SimTime,
    event: InteractionEvent,
    judgment: Judgment,
}

/// Which work item the loop runs next.
enum Next {
    Idle(SimTime),
    Tick(SimTime),
    Stimulus,
    Alert,
}

/// One cooking session. All dialogue, progress and playback state lives
/// here and is mutated only by [`Engine::pump`].
pub struct Engine {
    config: SessionConfig,
    knowledge: Arc<RecipeKnowledge>,
    adapters: Adapters,
    clock: Arc<dyn Clock>,
    floor: SimTime,

    state: DialogueState,
    progress: ProgressState,
    monitor: Monitor,
    limiter: AlertLimiter,
    memory: MemoryStore,
    playback: PlaybackState,
    playback_synced_at: SimTime,
    responses: BTreeMap<u64, ResponseEnvelope>,
    last_response_id: Option<u64>,
    latest_observation: Option<Observation>,
    frame_window: Vec<FrameRef>,
    last_activity: SimTime,
    next_response_id: u64,
    next_judgment_id: u64,
    tts_speed: f64,

    tx: Sender<(SimTime, Stimulus)>,
    rx: Receiver<(SimTime, Stimulus)>,
    pending: VecDeque<(SimTime, Stimulus)>,
    alerts: VecDeque<PendingAlert>,

    trace: Vec<TraceRecord>,
    trace_sink: Option<BufWriter<File>>,
    outbox: Vec<ServerMessage>,
}

/// A handle other threads use to feed the session.
#[derive(Clone)]
pub struct EngineHandle {
    tx: Sender<(SimTime, Stimulus)>,
    clock: Arc<dyn Clock>,
}

impl EngineHandle {
    pub fn submit(&self, stimulus: Stimulus) -> Result<(), SessionError> {
        self.tx.send((self.clock.now(), stimulus)).map_err(|_| SessionError::Closed)
    }
}

impl Engine {
    /// Starts a session in idle with a fresh memory.
    pub fn start(
        config: SessionConfig,
        knowledge: RecipeKnowledge,
        adapters: Adapters,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, SessionError> {
        let memory = match &config.memory_file {
            Some(p) => MemoryStore::with_sink(p)?,
            None => MemoryStore::new(),
        };
        Self::with_memory(config, knowledge, adapters, clock, memory)
    }

    /// Restarts a session from its memory file: idle state, memory intact,
    /// tick numbering continuing after the last stored observation.
    pub fn recover(
        config: SessionConfig,
        knowledge: RecipeKnowledge,
        adapters: Adapters,
        clock: Arc<dyn Clock>,
        memory_file: &Path,
    ) -> Result<Self, SessionError> {
        let mut memory = MemoryStore::load(memory_file)?;
        memory.attach_sink(memory_file)?;
        Self::with_memory(config, knowledge, adapters, clock, memory)
    }

    fn with_memory(
        config: SessionConfig,
        knowledge: RecipeKnowledge,
        adapters: Adapters,
        clock: Arc<dyn Clock>,
        memory: MemoryStore,
    ) -> Result<Self, SessionError> {
        config.validate()?;
        knowledge.validate().map_err(SessionError::StartupFailure)?;
        let floor = memory.last_timestamp();
        let last_tick = memory.records().iter().filter_map(|r| r.links.tick_id).max().unwrap_or(0);
        let last_judgment = memory.records().iter().filter_map(|r| r.links.judgment_id).max().unwrap_or(0);
        let last_response = memory.records().iter().filter_map(|r| r.links.response_id).max().unwrap_or(0);
        let start = clock.now().max(floor);
        let trace_sink = match &config.trace_file {
            Some(p) => Some(BufWriter::new(
                OpenOptions::new().create(true).append(true).open(p).map_err(|e| SessionError::io(p, e))?,
            )),
            None => None,
        };
        let (tx, rx) = mpsc::channel();
        let mut engine = Self {
            progress: ProgressState::new(knowledge.step_count()),
            monitor: Monitor::resume(config.tick_span(), start, last_tick),
            limiter: AlertLimiter::new(config.cooldown_span()),
            tts_speed: config.tts_speed,
            config,
            knowledge: Arc::new(knowledge),
            adapters,
            clock,
            floor,
            state: DialogueState::Idle,
            memory,
            playback: PlaybackState::default(),
            playback_synced_at: start,
            responses: BTreeMap::new(),
            last_response_id: None,
            latest_observation: None,
            frame_window: Vec::new(),
            last_activity: start,
            next_response_id: last_response + 1,
            next_judgment_id: last_judgment + 1,
            tx,
            rx,
            pending: VecDeque::new(),
            alerts: VecDeque::new(),
            trace: Vec::new(),
            trace_sink,
            outbox: Vec::new(),
        };
        let startup = TraceRecord::new(0, start, StimulusKind::Startup, DialogueState::Idle, PlaybackStatus::Stopped);
        engine.push_trace(startup);
        Ok(engine)
    }

    pub fn handle(&self) -> EngineHandle {
        EngineHandle { tx: self.tx.clone(), clock: self.clock.clone() }
    }

    /// Current session time; never earlier than the last stored record.
    pub fn now(&self) -> SimTime {
        self.clock.now().max(self.floor)
    }

    pub fn state(&self) -> DialogueState {
        self.state
    }

    pub fn progress(&self) -> &ProgressState {
        &self.progress
    }

    pub fn playback(&self) -> &PlaybackState {
        &self.playback
    }

    pub fn memory(&self) -> &MemoryStore {
        &self.memory
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn knowledge(&self) -> &RecipeKnowledge {
        &self.knowledge
    }

    pub fn responses(&self) -> &BTreeMap<u64, ResponseEnvelope> {
        &self.responses
    }

    pub fn response(&self, id: u64) -> Option<&ResponseEnvelope> {
        self.responses.get(&id)
    }

    pub fn ticks_emitted(&self) -> u64 {
        self.monitor.ticks_emitted()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Queues a stimulus stamped with the current session time.
    pub fn submit(&self, stimulus: Stimulus) {
        self.tx.send((self.now(), stimulus)).expect("engine owns its receiver");
    }

    pub fn take_outbound(&mut self) -> Vec<ServerMessage> {
        std::mem::take(&mut self.outbox)
    }

    /// Submits an utterance, runs the loop and returns what it produced.
    pub fn ingest_utterance(&mut self, text: &str) -> Vec<ServerMessage> {
        self.submit(Stimulus::Utterance { text: text.to_string() });
        self.pump();
        self.take_outbound()
    }

    /// Runs every piece of work that is due at the current session time, in
    /// time order. At equal times, timers (idle reset, monitor tick) run
    /// first, then queued stimuli, then alerts raised by the ticks.
    pub fn pump(&mut self) {
        loop {
            while let Ok(item) = self.rx.try_recv() {
                self.pending.push_back(item);
            }
            let now = self.now();
            let idle_at = (self.state != DialogueState::Idle).then(|| self.last_activity + self.config.idle_span());
            let tick_at = self.monitor.next_tick_at();
            let mut best: Option<((SimTime, u8), Next)> = None;
            let mut offer = |key: (SimTime, u8), next: Next| {
                if key.0 <= now && best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, next));
                }
            };
            if let Some(t) = idle_at {
                offer((t, 0), Next::Idle(t));
            }
            offer((tick_at, 1), Next::Tick(tick_at));
            if let Some((t, _)) = self.pending.front() {
                offer((*t, 2), Next::Stimulus);
            }
            if let Some(a) = self.alerts.front() {
                offer((a.at, 3), Next::Alert);
            }
            match best.map(|(_, n)| n) {
                None => break,
                Some(Next::Idle(t)) => self.dispatch_idle(t),
                Some(Next::Tick(t)) => self.dispatch_tick(t),
                Some(Next::Stimulus) => {
                    let (at, s) = self.pending.pop_front().expect("front checked");
                    self.dispatch(at, s);
                }
                Some(Next::Alert) => {
                    let a = self.alerts.pop_front().expect("front checked");
                    self.dispatch_alert(a);
                }
            }
        }
    }

    fn push_trace(&mut self, record: TraceRecord) {
        if let Some(sink) = self.trace_sink.as_mut() {
            let line = serde_json::to_string(&record).expect("trace records serialize");
            if let Err(e) = writeln!(sink, "{line}").and_then(|_| sink.flush()) {
                log::error!("trace write failed: {e}");
            }
        }
        self.trace.push(record);
    }

    fn new_record(&self, at: SimTime, kind: StimulusKind) -> TraceRecord {
        TraceRecord::new(self.trace.len() as u64, at, kind, self.state, self.playback.status)
    }

    fn finish(&mut self, mut record: TraceRecord) {
        record.to_state = self.state;
        record.playback = self.playback.status;
        self.push_trace(record);
    }

    fn remember(&mut self, draft: RecordDraft, record: &mut TraceRecord) -> Option<u64> {
        match self.memory.append(draft) {
            Ok(id) => Some(id),
            Err(e) => {
                log::error!("memory append failed: {e}");
                record.flags.push("memory_error".into());
                None
            }
        }
    }

    fn sync_playback(&mut self, at: SimTime) {
        let elapsed = at.saturating_sub(self.playback_synced_at).as_secs_f64();
        self.playback_synced_at = self.playback_synced_at.max(at);
        if self.playback.status == PlaybackStatus::Playing && elapsed > 0.0 {
            self.playback = media::advance(&self.playback, elapsed);
        }
    }

    fn move_to(&mut self, at: SimTime, event: EventKind, record: &mut TraceRecord) -> bool {
        match transition(self.state, event) {
            Transition::Rejected => {
                log::info!("event {event} rejected in {}", self.state);
                record.rejected = true;
                false
            }
            Transition::To(next) => {
                if next != self.state {
                    self.outbox.push(ServerMessage::StateChange { at, from: self.state, to: next, event });
                }
                self.state = next;
                true
            }
        }
    }

    fn dispatch_idle(&mut self, at: SimTime) {
        self.sync_playback(at);
        let mut record = self.new_record(at, StimulusKind::IdleTimeout);
        let event = InteractionEvent::reset(ResetReason::IdleTimeout);
        record.classified_event = Some(event.kind());
        self.move_to(at, event.kind(), &mut record);
        self.last_activity = at;
        self.finish(record);
    }

    fn dispatch_tick(&mut self, at: SimTime) {
        self.sync_playback(at);
        let mut record = self.new_record(at, StimulusKind::Tick);
        let frames = std::mem::take(&mut self.frame_window);
        let obs = self.monitor.tick(frames, None, self.adapters.perceiver.as_ref());
        debug_assert_eq!(obs.timestamp, at);
        if obs.degraded {
            record.flags.push("degraded".into());
        }
        let obs_links = RecordLinks { tick_id: Some(obs.tick_id), step: obs.matched_step, ..Default::default() };
        self.remember(RecordDraft::new(RecordKind::Observation, at, obs.summary()).with_links(obs_links), &mut record);

        let judgment_id = self.next_judgment_id;
        self.next_judgment_id += 1;
        let j = judge(judgment_id, &obs, &self.knowledge, &self.progress, self.adapters.judge.as_ref());
        record.judgment_id = Some(judgment_id);
        let j_links = RecordLinks { tick_id: Some(j.tick_id), judgment_id: Some(judgment_id), step: j.step, ..Default::default() };
        self.remember(RecordDraft::new(RecordKind::Judgment, at, j.summary()).with_links(j_links), &mut record);
        match advance_progress(&j, &self.progress) {
            Ok(p) => self.progress = p,
            Err(e) => {
                log::warn!("{e}");
                record.flags.push("advance_rejected".into());
            }
        }
        let raised = emit_alerts(&j);
        let allowed = self.limiter.filter(raised.clone(), &j, at);
        if allowed.len() < raised.len() {
            record.flags.push("alert_suppressed".into());
        }
        for event in allowed {
            self.alerts.push_back(PendingAlert { at, event, judgment: j.clone() });
        }
        self.latest_observation = Some(obs);
        self.finish(record);
    }

    fn alert_text(&self, event: EventKind, j: &Judgment) -> String {
        let describe = |i: usize| {
            self.knowledge.step(i).map(|s| format!("step {} ({})", i + 1, s.summary)).unwrap_or_else(|| format!("step {}", i + 1))
        };
        match event {
            EventKind::MissedStepDetected => {
                let steps: Vec<String> = j.missed_steps.iter().map(|s| describe(*s)).collect();
                format!("It appears you have not done {}.", steps.join(" or "))
            }
            _ => format!(
                "It looks like {} is not being done the way the video shows.",
                j.step.map(describe).unwrap_or_else(|| "this step".into())
            ),
        }
    }

    fn dispatch_alert(&mut self, alert: PendingAlert) {
        let at = alert.at.max(self.memory.last_timestamp());
        self.sync_playback(at);
        let kind = alert.event.kind();
        let mut record = self.new_record(at, StimulusKind::Alert);
        record.classified_event = Some(kind);
        record.judgment_id = Some(alert.judgment.judgment_id);
        let text = self.alert_text(kind, &alert.judgment);
        let step = match kind {
            EventKind::MissedStepDetected => alert.judgment.missed_steps.first().copied(),
            _ => alert.judgment.step,
        };
        let links = RecordLinks { judgment_id: Some(alert.judgment.judgment_id), step, ..Default::default() };
        self.remember(RecordDraft::new(RecordKind::Alert, at, text.clone()).with_links(links), &mut record);
        self.outbox.push(ServerMessage::Alert { at, event: kind, judgment_id: alert.judgment.judgment_id, text: text.clone() });
        if self.move_to(at, kind, &mut record) {
            self.respond(at, None, Some(&text), &mut record);
        }
        self.last_activity = at;
        self.finish(record);
    }

    fn dispatch(&mut self, at: SimTime, stimulus: Stimulus) {
        let at = at.max(self.memory.last_timestamp());
        self.sync_playback(at);
        match stimulus {
            Stimulus::Utterance { text } => self.dispatch_utterance(at, text),
            Stimulus::Frames { frames } => {
                let record = self.new_record(at, StimulusKind::Frames);
                self.frame_window.extend(frames);
                self.finish(record);
            }
            Stimulus::Command { command, response_id, sentences } => {
                let mut record = self.new_record(at, StimulusKind::Command);
                self.explicit_command(at, command, response_id, &sentences, &mut record);
                self.finish(record);
            }
            Stimulus::Skip { step } => {
                let mut record = self.new_record(at, StimulusKind::SkipDeclaration);
                self.declare_skip(at, Some(step), &mut record);
                self.finish(record);
            }
            Stimulus::Config { tts_speed } => {
                let mut record = self.new_record(at, StimulusKind::Config);
                match validate_tts_speed(tts_speed) {
                    Ok(()) => self.tts_speed = tts_speed,
                    Err(e) => {
                        record.flags.push("invalid_config".into());
                        self.outbox.push(ServerMessage::Error { at, message: e.to_string() });
                    }
                }
                self.finish(record);
            }
        }
    }

    fn declare_skip(&mut self, at: SimTime, step: Option<usize>, record: &mut TraceRecord) {
        let step = step.unwrap_or(self.progress.current_step);
        match self.progress.declare_skip(step) {
            Ok(()) => {
                record.flags.push("skip_declared".into());
                self.outbox.push(ServerMessage::Notice { at, text: format!("Okay, skipping step {}.", step + 1) });
            }
            Err(e) => {
                record.flags.push("invalid_skip".into());
                self.outbox.push(ServerMessage::Error { at, message: e.to_string() });
            }
        }
    }

    fn dispatch_utterance(&mut self, at: SimTime, text: String) {
        let mut record = self.new_record(at, StimulusKind::Utterance);
        record.utterance = Some(text.clone());
        if text.trim().is_empty() {
            record.rejected = true;
            record.flags.push("empty_utterance".into());
            self.outbox.push(ServerMessage::Error { at, message: OrchestratorError::EmptyUtterance.to_string() });
            self.finish(record);
            return;
        }
        self.last_activity = at;
        let Some(utterance_id) = self.remember(RecordDraft::new(RecordKind::Utterance, at, text.clone()), &mut record) else {
            self.finish(record);
            return;
        };
        record.utterance_id = Some(utterance_id);
        let classified = classify_or_fallback(
            utterance_id,
            &text,
            self.latest_observation.as_ref(),
            self.state,
            self.adapters.classifier.as_ref(),
        );
        let intent = match classified {
            Ok((intent, fallback)) => {
                if fallback {
                    record.flags.push("classification_fallback".into());
                }
                intent
            }
            Err(e) => {
                self.outbox.push(ServerMessage::Error { at, message: e.to_string() });
                self.finish(record);
                return;
            }
        };
        match intent {
            Intent::SkipStep { step, .. } => self.declare_skip(at, step, &mut record),
            Intent::Event(event) => {
                let kind = event.kind();
                record.classified_event = Some(kind);
                if !self.move_to(at, kind, &mut record) {
                    self.outbox.push(ServerMessage::Notice { at, text: "There is no earlier answer to follow up on yet.".into() });
                } else if kind == EventKind::MediaControl {
                    self.media_from_utterance(at, &text, &mut record);
                } else if self.state.responds() {
                    self.respond(at, Some(&text), None, &mut record);
                }
            }
        }
        self.finish(record);
    }

    fn media_from_utterance(&mut self, at: SimTime, text: &str, record: &mut TraceRecord) {
        let verb = media::parse_media_command(text).unwrap_or(MediaCommand::Play(Vec::new()));
        let wants_content = matches!(verb, MediaCommand::Play(_) | MediaCommand::Replay)
            && !LexicalMatcher::request_terms(text).is_empty();
        let command = if wants_content {
            match locate_segments(SegmentRequest::Text(text), &self.knowledge, &self.responses, self.adapters.matcher.as_ref()) {
                Ok(segs) => MediaCommand::Play(segs),
                Err(e) => return self.media_failed(at, e, record),
            }
        } else if let MediaCommand::Play(_) = verb {
            let Some(id) = self.last_response_id else {
                return self.media_failed(at, MediaError::NoSegmentFound(text.to_string()), record);
            };
            match locate_segments(SegmentRequest::Response(id), &self.knowledge, &self.responses, self.adapters.matcher.as_ref()) {
                Ok(segs) => MediaCommand::Play(segs),
                Err(e) => return self.media_failed(at, e, record),
            }
        } else {
            verb
        };
        self.apply_media(at, command, record);
    }

    fn explicit_command(
        &mut self,
        at: SimTime,
        verb: CommandVerb,
        response_id: Option<u64>,
        sentences: &[usize],
        record: &mut TraceRecord,
    ) {
        let command = match verb {
            CommandVerb::Pause => MediaCommand::Pause,
            CommandVerb::Resume => MediaCommand::Resume,
            CommandVerb::Replay => MediaCommand::Replay,
            CommandVerb::Stop => MediaCommand::Stop,
            CommandVerb::Play if !sentences.is_empty() => {
                let segs: Option<Vec<SegmentRef>> = sentences
                    .iter()
                    .map(|i| self.knowledge.sentence(*i).map(|s| segment_for_sentence(s, SegmentReason::UserRequest)))
                    .collect();
                match segs {
                    Some(segs) => MediaCommand::Play(segs),
                    None => {
                        let e = MediaError::NoSegmentFound(format!("sentences {sentences:?}"));
                        return self.media_failed(at, e, record);
                    }
                }
            }
            CommandVerb::Play => {
                let Some(id) = response_id.or(self.last_response_id) else {
                    return self.media_failed(at, MediaError::NoSegmentFound("no response yet".into()), record);
                };
                match locate_segments(SegmentRequest::Response(id), &self.knowledge, &self.responses, self.adapters.matcher.as_ref()) {
                    Ok(segs) => MediaCommand::Play(segs),
                    Err(e) => return self.media_failed(at, e, record),
                }
            }
        };
        self.apply_media(at, command, record);
    }

    fn media_failed(&mut self, at: SimTime, error: MediaError, record: &mut TraceRecord) {
        let (flag, text) = match &error {
            MediaError::NoSegmentFound(_) | MediaError::UnknownResponse(_) => {
                ("no_segment_found", "I could not find that part of the video.".to_string())
            }
            MediaError::InvalidCommand { .. } => ("invalid_command", format!("I can't do that right now: {error}.")),
            MediaError::MatcherUnavailable(_) => ("matcher_unavailable", "Video search is unavailable right now.".to_string()),
        };
        record.flags.push(flag.into());
        self.outbox.push(ServerMessage::Notice { at, text });
    }

    fn apply_media(&mut self, at: SimTime, command: MediaCommand, record: &mut TraceRecord) {
        if let MediaCommand::Play(segs) = &command {
            if segs.is_empty() {
                return self.media_failed(at, MediaError::NoSegmentFound(String::new()), record);
            }
        }
        match control(&command, &self.playback) {
            Ok(next) => {
                self.playback = next;
                self.playback_synced_at = at;
                let sentences = self.playback.queue.iter().map(|s| s.sentence_index).collect();
                let links = RecordLinks { sentences, ..Default::default() };
                let text = format!("{} -> {}", command.name(), self.playback.status);
                self.remember(RecordDraft::new(RecordKind::MediaAction, at, text).with_links(links), record);
                self.outbox.push(ServerMessage::Playback { at, playback: self.playback.event() });
            }
            Err(e) => self.media_failed(at, e, record),
        }
    }

    /// Renders, stores and speaks the response for the current state. On
    /// failure the session apologises and returns to the state it left.
    fn respond(&mut self, at: SimTime, query: Option<&str>, alert: Option<&str>, record: &mut TraceRecord) {
        let request = ContextRequest { state: self.state, query, alert, budget: self.config.context_budget, now: at };
        let rendered = assemble_context(
            &self.memory,
            &self.knowledge,
            &self.progress,
            &request,
            &self.config.context,
            self.adapters.scorer.as_ref(),
        )
        .map_err(|e| OrchestratorError::GenerationUnavailable(e.to_string()))
        .and_then(|bundle| {
            render_response(self.next_response_id, self.state, &bundle, &self.knowledge, self.adapters.generator.as_ref(), at)
        });
        let envelope = match rendered {
            Ok(env) => env,
            Err(e) => {
                log::warn!("response failed in {}: {e}", self.state);
                record.flags.push("generation_failed".into());
                self.state = record.from_state;
                self.outbox.push(ServerMessage::Error { at, message: e.to_string() });
                self.outbox.push(ServerMessage::Notice { at, text: APOLOGY.into() });
                self.speak_text(at, None, APOLOGY, record);
                return;
            }
        };
        self.next_response_id += 1;
        let links = RecordLinks {
            response_id: Some(envelope.response_id),
            sentences: envelope.evidence_segments.iter().map(|s| s.sentence_index).collect(),
            step: Some(self.progress.current_step),
            ..Default::default()
        };
        self.remember(RecordDraft::new(RecordKind::Response, at, envelope.text.clone()).with_links(links), record);
        record.response_id = Some(envelope.response_id);
        self.last_response_id = Some(envelope.response_id);
        self.last_activity = at;
        self.responses.insert(envelope.response_id, envelope.clone());
        self.outbox.push(ServerMessage::Response { envelope: envelope.clone() });
        self.speak(at, &envelope, record);
    }

    /// Speaks a response. Video playback pauses first so the two never
    /// overlap; a synthesis failure leaves the text-only response flagged.
    pub fn speak(&mut self, at: SimTime, envelope: &ResponseEnvelope, record: &mut TraceRecord) {
        self.speak_text(at, Some(envelope.response_id), &envelope.text, record);
    }

    fn speak_text(&mut self, at: SimTime, response_id: Option<u64>, text: &str, record: &mut TraceRecord) {
        if self.playback.status == PlaybackStatus::Playing {
            self.apply_media(at, MediaCommand::Pause, record);
        }
        match self.adapters.speaker.speak(text, self.tts_speed) {
            Ok(audio_ref) => self.outbox.push(ServerMessage::Tts { at, response_id, audio_ref, speed: self.tts_speed }),
            Err(e) => {
                log::warn!("speech synthesis failed: {e}");
                record.flags.push("tts_failed".into());
            }
        }
    }
}
