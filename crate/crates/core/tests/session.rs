use std::path::PathBuf;
use std::sync::Arc;

use galley_core::clock::{Clock, SimClock, SimSpan, SimTime};
use galley_core::knowledge::{load_knowledge, KnowledgeError, RecipeKnowledge};
use galley_core::media::PlaybackStatus;
use galley_core::memory::RecordKind;
use galley_core::monitor::{PerceivedScene, ScriptedPerceiver};
use galley_core::orchestrator::{DialogueState, EventKind, FailingGenerator, APOLOGY};
use galley_core::session::*;

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn spaghetti() -> RecipeKnowledge {
    load_knowledge(&fixture("recipes/spaghetti.json")).unwrap()
}

struct Rig {
    clock: SimClock,
    engine: Engine,
    speaker: MockSpeaker,
}

fn rig_with(config: SessionConfig, mut adapters: Adapters) -> Rig {
    let clock = SimClock::new();
    let speaker = MockSpeaker::default();
    adapters.speaker = Box::new(speaker.clone());
    let engine = Engine::start(config, spaghetti(), adapters, Arc::new(clock.clone())).unwrap();
    Rig { clock, engine, speaker }
}

fn rig() -> Rig {
    rig_with(SessionConfig::default(), Adapters::mock())
}

impl Rig {
    fn at(&mut self, secs: f64) {
        self.clock.advance_to(SimTime::from_secs_f64(secs));
        self.engine.pump();
    }

    fn say(&mut self, secs: f64, text: &str) -> Vec<ServerMessage> {
        self.at(secs);
        self.engine.ingest_utterance(text)
    }

    fn send(&mut self, stimulus: Stimulus) -> Vec<ServerMessage> {
        self.engine.submit(stimulus);
        self.engine.pump();
        self.engine.take_outbound()
    }

    fn last_trace(&self) -> &TraceRecord {
        self.engine.trace().last().unwrap()
    }
}

fn scene(action: &str, step: Option<usize>) -> String {
    PerceivedScene { action: action.into(), matched_step: step, visible_items: vec![], sounds: vec![] }.to_reply()
}

#[test]
fn starts_idle_with_valid_recipe() {
    let cfg = SessionConfig { recipe: Some(fixture("recipes/spaghetti.json")), ..Default::default() };
    let engine = start_session(cfg, Adapters::mock(), Arc::new(SimClock::new())).unwrap();
    assert_eq!(engine.state(), DialogueState::Idle);
    assert_eq!(engine.trace().len(), 1);
    assert_eq!(engine.trace()[0].stimulus, StimulusKind::Startup);
}

#[test]
fn recipe_without_sentences_fails_startup() {
    let mut k = spaghetti();
    k.sentences.clear();
    k.steps.clear();
    k.ingredients.clear();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, serde_json::to_string(&k).unwrap()).unwrap();
    let cfg = SessionConfig { recipe: Some(path), ..Default::default() };
    match start_session(cfg, Adapters::mock(), Arc::new(SimClock::new())) {
        Err(SessionError::StartupFailure(KnowledgeError::SchemaViolation(v))) => {
            assert!(v.iter().any(|m| m.contains("at least one sentence")), "{v:?}")
        }
        Err(e) => panic!("{e}"),
        Ok(_) => panic!("started"),
    }
}

#[test]
fn half_second_ticks_over_three_seconds() {
    let cfg = SessionConfig { tick_period: 0.5, ..Default::default() };
    let mut r = rig_with(cfg, Adapters::mock());
    r.at(3.0);
    let expected = (3.0f64 / 0.5).floor() as usize;
    assert_eq!(r.engine.memory().count(RecordKind::Observation), expected);
    assert_eq!(r.engine.ticks_emitted(), expected as u64);
}

#[test]
fn next_step_question_names_the_next_step() {
    let mut r = rig();
    let out = r.say(1.0, "What's my next step?");
    let t = r.last_trace();
    assert_eq!(t.classified_event, Some(EventKind::StepQuery));
    assert_eq!((t.from_state, t.to_state), (DialogueState::Idle, DialogueState::StepGuide));
    let k = spaghetti();
    let next = &k.steps[r.engine.progress().current_step + 1].summary;
    let text = out
        .iter()
        .find_map(|m| match m {
            ServerMessage::Response { envelope } => Some(envelope.text.clone()),
            _ => None,
        })
        .unwrap();
    assert!(text.contains(next.as_str()), "{text}");
}

#[test]
fn pause_during_playback() {
    let mut r = rig();
    r.at(1.0);
    r.send(Stimulus::Command { command: CommandVerb::Play, response_id: None, sentences: vec![0, 1] });
    assert_eq!(r.engine.playback().status, PlaybackStatus::Playing);
    r.say(2.0, "pause");
    let t = r.last_trace();
    assert_eq!(t.classified_event, Some(EventKind::MediaControl));
    assert_eq!(t.from_state, t.to_state);
    assert_eq!(r.engine.playback().status, PlaybackStatus::Paused);
}

#[test]
fn empty_utterance_is_rejected() {
    let mut r = rig();
    r.say(1.0, "What's my next step?");
    let before = (r.engine.state(), r.engine.memory().len());
    let out = r.say(1.5, "   ");
    assert!(out.iter().any(|m| matches!(m, ServerMessage::Error { .. })));
    assert!(r.last_trace().rejected);
    assert!(!r.last_trace().is_user_query());
    assert_eq!((r.engine.state(), r.engine.memory().len()), before);
}

#[test]
fn tts_speed_passes_through() {
    let cfg = SessionConfig { tts_speed: 1.5, ..Default::default() };
    let mut r = rig_with(cfg, Adapters::mock());
    r.say(1.0, "What's my next step?");
    assert_eq!(r.speaker.calls().len(), 1);
    assert_eq!(r.speaker.calls()[0].1, 1.5);
    r.send(Stimulus::Config { tts_speed: 2.0 });
    r.say(2.0, "tell me more");
    assert_eq!(r.speaker.calls()[1].1, 2.0);
    let out = r.send(Stimulus::Config { tts_speed: 9.0 });
    assert!(out.iter().any(|m| matches!(m, ServerMessage::Error { .. })));
}

/// Walks the outbound stream tracking playback; speech must never start
/// while a segment is playing.
fn assert_no_overlap(msgs: &[ServerMessage], mut status: PlaybackStatus) {
    for m in msgs {
        match m {
            ServerMessage::Playback { playback, .. } => status = playback.status,
            ServerMessage::Tts { .. } => assert_ne!(status, PlaybackStatus::Playing, "speech over video: {msgs:?}"),
            _ => {}
        }
    }
}

#[test]
fn speech_and_video_never_overlap_in_either_order() {
    // Video first, then a question: the segment pauses before speech.
    let mut r = rig();
    r.at(1.0);
    let mut out = r.send(Stimulus::Command { command: CommandVerb::Play, response_id: None, sentences: vec![2] });
    out.extend(r.say(2.0, "What's my next step?"));
    assert_no_overlap(&out, PlaybackStatus::Stopped);
    assert_eq!(r.engine.playback().status, PlaybackStatus::Paused);
    let kinds: Vec<&str> = out.iter().map(|m| m.kind()).collect();
    let paused_at = out
        .iter()
        .position(|m| matches!(m, ServerMessage::Playback { playback, .. } if playback.status == PlaybackStatus::Paused))
        .unwrap();
    assert!(paused_at < kinds.iter().position(|k| *k == "tts").unwrap(), "{kinds:?}");

    // Question first, then video: speech is already done, playback starts.
    let mut r = rig();
    let mut out = r.say(1.0, "What's my next step?");
    r.at(2.0);
    out.extend(r.send(Stimulus::command(CommandVerb::Play)));
    assert_no_overlap(&out, PlaybackStatus::Stopped);
    assert_eq!(r.engine.playback().status, PlaybackStatus::Playing);
}

#[test]
fn speech_failure_flags_text_only_response() {
    let mut adapters = Adapters::mock();
    adapters.speaker = Box::new(FailingSpeaker);
    let clock = SimClock::new();
    let mut engine = Engine::start(SessionConfig::default(), spaghetti(), adapters, Arc::new(clock.clone())).unwrap();
    clock.advance_to(SimTime::from_secs_f64(1.0));
    let out = engine.ingest_utterance("What's my next step?");
    assert!(out.iter().any(|m| m.kind() == "response"));
    assert!(!out.iter().any(|m| m.kind() == "tts"));
    assert!(engine.trace().last().unwrap().has_flag("tts_failed"));
}

#[test]
fn generation_failure_apologises_and_keeps_state() {
    let mut adapters = Adapters::mock();
    adapters.generator = Box::new(FailingGenerator);
    let mut r = rig_with(SessionConfig::default(), adapters);
    let out = r.say(1.0, "What's my next step?");
    assert_eq!(r.engine.state(), DialogueState::Idle);
    assert!(r.last_trace().has_flag("generation_failed"));
    assert!(out.iter().any(|m| matches!(m, ServerMessage::Notice { text, .. } if text == APOLOGY)));
    assert_eq!(r.speaker.calls()[0].0, APOLOGY);
}

#[test]
fn unrecognised_utterance_falls_back_to_general_question() {
    let mut r = rig();
    r.say(1.0, "hmm");
    assert_eq!(r.last_trace().classified_event, Some(EventKind::GeneralVisualQuery));
}

#[test]
fn idle_timeout_returns_to_idle() {
    let entry: [(DialogueState, &[&str]); 6] = [
        (DialogueState::FoodState, &["Is the pasta cooked yet?"]),
        (DialogueState::StepGuide, &["What's my next step?"]),
        (DialogueState::ProblemSolving, &["Something went wrong with the sauce"]),
        (DialogueState::GeneralVisual, &["What do you see on the counter?"]),
        (DialogueState::CorrectionReview, &["Is the pasta cooked yet?", "That's wrong"]),
        (DialogueState::DetailElaboration, &["Is the pasta cooked yet?", "Tell me more"]),
    ];
    for (state, utterances) in entry {
        for (quiet, expect_idle) in [(4.9, false), (5.0, true)] {
            let mut r = rig();
            let mut t = 1.0;
            for u in utterances {
                r.say(t, u);
                t += 0.5;
            }
            assert_eq!(r.engine.state(), state);
            r.at(t - 0.5 + quiet);
            assert_eq!(r.engine.state() == DialogueState::Idle, expect_idle, "{state} after {quiet}s");
            if expect_idle {
                let reset = r.engine.trace().iter().rev().find(|t| t.stimulus != StimulusKind::Tick).unwrap();
                assert_eq!(reset.stimulus, StimulusKind::IdleTimeout);
                assert_eq!(reset.classified_event, Some(EventKind::Reset));
            }
        }
    }
}

#[test]
fn deviation_reaches_problem_solving_in_the_same_cycle() {
    let mut adapters = Adapters::mock();
    adapters.perceiver = Box::new(ScriptedPerceiver::new().with_scene(SimTime(5000), scene("boiling the pasta", Some(2))));
    let mut r = rig_with(SessionConfig::default(), adapters);
    r.at(6.0);
    let t = r.last_trace();
    assert_eq!(t.stimulus, StimulusKind::Alert);
    assert_eq!(t.classified_event, Some(EventKind::MissedStepDetected));
    assert_eq!(t.at, SimTime(6000));
    assert_eq!(r.engine.state(), DialogueState::ProblemSolving);
    let out = r.engine.take_outbound();
    let kinds: Vec<&str> = out.iter().map(|m| m.kind()).collect();
    assert_eq!(kinds, ["alert", "state_change", "response", "tts"]);
}

#[test]
fn utterance_and_alert_in_the_same_cycle_answer_the_user_first() {
    let mut adapters = Adapters::mock();
    adapters.perceiver = Box::new(ScriptedPerceiver::new().with_scene(SimTime(5000), scene("boiling the pasta", Some(2))));
    let mut r = rig_with(SessionConfig::default(), adapters);
    r.at(5.0);
    r.clock.advance_to(SimTime(6000));
    r.engine.submit(Stimulus::utterance("Is the pasta cooked yet?"));
    r.engine.pump();
    let order: Vec<StimulusKind> = r.engine.trace().iter().filter(|t| t.at == SimTime(6000)).map(|t| t.stimulus).collect();
    assert_eq!(order, [StimulusKind::Tick, StimulusKind::Utterance, StimulusKind::Alert]);
    assert_eq!(r.engine.state(), DialogueState::ProblemSolving);
}

#[test]
fn trace_counts_match_memory() {
    let mut adapters = Adapters::mock();
    adapters.perceiver = Box::new(ScriptedPerceiver::new().with_scene(SimTime(5000), scene("boiling the pasta", Some(2))));
    let mut r = rig_with(SessionConfig::default(), adapters);
    r.say(1.0, "What's my next step?");
    r.say(3.0, "");
    r.say(8.0, "tell me more");
    r.say(9.0, "play the boiling part");
    r.say(10.0, "pause");
    r.at(40.0);
    let trace = r.engine.trace();
    let count = |k: StimulusKind| trace.iter().filter(|t| t.stimulus == k).count();
    let mem = r.engine.memory();
    assert_eq!(count(StimulusKind::Tick), mem.count(RecordKind::Observation));
    assert_eq!(count(StimulusKind::Tick), mem.count(RecordKind::Judgment));
    assert_eq!(count(StimulusKind::Alert), mem.count(RecordKind::Alert));
    assert_eq!(trace.iter().filter(|t| t.is_user_query()).count(), mem.count(RecordKind::Utterance));
    assert_eq!(trace.iter().filter(|t| t.response_id.is_some()).count(), mem.count(RecordKind::Response));
    assert_eq!(count(StimulusKind::Tick), 20);
    assert!(trace.windows(2).all(|w| w[0].seq + 1 == w[1].seq && w[0].at <= w[1].at));
}

#[test]
fn recovery_restores_memory_and_returns_to_idle() {
    let dir = tempfile::tempdir().unwrap();
    let memory_file = dir.path().join("session.jsonl");
    let cfg = SessionConfig { memory_file: Some(memory_file.clone()), ..Default::default() };
    let clock = SimClock::new();
    let records = {
        let mut engine = Engine::start(cfg.clone(), spaghetti(), Adapters::mock(), Arc::new(clock.clone())).unwrap();
        clock.advance_to(SimTime(3000));
        engine.pump();
        engine.ingest_utterance("What's my next step?");
        assert_eq!(engine.state(), DialogueState::StepGuide);
        engine.memory().records().to_vec()
    };
    let restart = SimClock::new();
    let mut engine =
        Engine::recover(cfg, spaghetti(), Adapters::mock(), Arc::new(restart.clone()), &memory_file).unwrap();
    assert_eq!(engine.state(), DialogueState::Idle);
    assert_eq!(engine.memory().records(), &records[..]);
    assert!(engine.now() >= SimTime(3000));

    restart.advance_by(SimSpan(0));
    engine.ingest_utterance("tell me more");
    let n = records.len() as u64;
    assert!(engine.memory().records().iter().skip(records.len()).all(|r| r.record_id > n));
    let reloaded = galley_core::memory::MemoryStore::load(&memory_file).unwrap();
    assert_eq!(reloaded.records(), engine.memory().records());
}

#[test]
fn protocol_lines_round_trip_through_the_engine() {
    let mut r = rig();
    r.at(1.0);
    let input = concat!(
        r#"{"type":"utterance","text":"What's my next step?"}"#,
        "\n",
        "garbage\n",
        r#"{"type":"command","command":"play"}"#,
        "\n",
        r#"{"type":"command","command":"pause"}"#,
        "\n",
    );
    let mut out = Vec::new();
    serve_lines(&mut r.engine, input.as_bytes(), &mut out).unwrap();
    let msgs: Vec<ServerMessage> =
        String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let kinds: Vec<&str> = msgs.iter().map(|m| m.kind()).collect();
    assert_eq!(kinds, ["state_change", "response", "tts", "error", "playback", "playback"]);
}

#[test]
fn server_message_kinds_are_exhaustive() {
    use galley_core::media::PlaybackEvent;
    let at = SimTime(1);
    let samples = [
        ServerMessage::StateChange { at, from: DialogueState::Idle, to: DialogueState::StepGuide, event: EventKind::StepQuery },
        ServerMessage::Alert { at, event: EventKind::MissedStepDetected, judgment_id: 1, text: "x".into() },
        ServerMessage::Playback { at, playback: PlaybackEvent { status: PlaybackStatus::Paused, segment: None, position: 0.0 } },
        ServerMessage::Tts { at, response_id: None, audio_ref: "a".into(), speed: 1.0 },
        ServerMessage::Notice { at, text: "n".into() },
        ServerMessage::Error { at, message: "e".into() },
    ];
    let mut kinds: Vec<&str> = samples.iter().map(|m| m.kind()).collect();
    kinds.push("response");
    kinds.sort_unstable();
    let mut all = ServerMessage::KINDS.to_vec();
    all.sort_unstable();
    assert_eq!(kinds, all);
    for m in samples {
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["type"], m.kind());
    }
}

#[test]
fn clock_never_runs_backwards_for_stimuli() {
    let mut r = rig();
    r.say(2.0, "What's my next step?");
    assert_eq!(r.clock.now(), SimTime(2000));
    assert!(r.engine.memory().records().windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
}
