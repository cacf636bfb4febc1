//! Scripted scenarios run against the full engine on a simulated clock.
//!
//! A scenario is a TOML file:
//!
//! ```toml
//! name = "missed salt"
//! recipe = "../recipes/spaghetti.json"   # relative to this file
//!
//! [config]                               # optional session settings
//! tick_period = 2.0
//!
//! [[timeline]]                           # sorted by `at` (seconds)
//! at = 5.0
//! kind = "scene"                         # scene | utterance | skip_declaration
//! action = "boiling pasta in water"
//! step = 2                               # 0-based step index, omit for none
//! items = ["pot", "spaghetti"]
//! sounds = ["bubbling"]
//!
//! [[timeline]]
//! at = 16.0
//! kind = "utterance"
//! text = "What's my next step?"
//!
//! [[expect]]                             # sorted by `by` (seconds)
//! by = 10.0
//! after = 5.0                            # window start, default 0
//! kind = "alert"                         # event | state | alert | response_contains | playback_status
//! value = "E5"
//! contains = "salt"                      # alert text check (alert only)
//! absent = false                         # expect the opposite
//! ```
//!
//! A scene replaces what the perceiver reports from the next tick on. An
//! `event` expectation holds when a record in the window `(after, by]` was
//! classified as the event; `state` and `playback_status` compare the value
//! in force at `by`; `response_contains` searches responses created in the
//! window, ignoring case.

mod coverage;
mod junit;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coverage::{coverage_report, reachable_cells, CoverageReport};
pub use junit::junit_xml;

use crate::clock::{Clock, SimClock, SimTime};
use crate::knowledge::load_knowledge;
use crate::memory::RecordKind;
use crate::monitor::{PerceivedScene, ScriptedPerceiver};
use crate::orchestrator::{DialogueState, EventKind};
use crate::session::{compute_metrics, Engine, MetricsReport, SessionConfig, SessionError, Stimulus, StimulusKind, TraceRecord};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}: {1}")]
    Invalid(String, String),
    #[error("{0}: fixture does not resolve: {1}")]
    Fixture(String, String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimelineKind {
    Utterance,
    Scene,
    SkipDeclaration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineItem {
    pub at: f64,
    pub kind: TimelineKind,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub step: Option<usize>,
    #[serde(default)]
    pub action: Option<String>,
    #[serde(default)]
    pub items: Vec<String>,
    #[serde(default)]
    pub sounds: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectKind {
    Event,
    State,
    Alert,
    ResponseContains,
    PlaybackStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub by: f64,
    #[serde(default)]
    pub after: f64,
    pub kind: ExpectKind,
    pub value: String,
    #[serde(default)]
    pub contains: Option<String>,
    #[serde(default)]
    pub absent: bool,
}

impl Expectation {
    pub fn describe(&self) -> String {
        let kind = serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let neg = if self.absent { "no " } else { "" };
        let extra = self.contains.as_deref().map(|c| format!(" containing {c:?}")).unwrap_or_default();
        format!("{neg}{kind} {:?}{extra} in ({}s, {}s]", self.value, self.after, self.by)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub name: String,
    pub recipe: PathBuf,
    #[serde(default)]
    pub config: Option<SessionConfig>,
    #[serde(default)]
    pub timeline: Vec<TimelineItem>,
    #[serde(default)]
    pub expect: Vec<Expectation>,
}

impl ScenarioScript {
    pub fn parse(text: &str) -> Result<Self, ScriptError> {
        let script: Self = toml::from_str(text).map_err(|e| ScriptError::Invalid("<script>".into(), e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    /// Reads a script; its recipe path resolves against the script's folder.
    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScriptError::Io { path: path.into(), source })?;
        let mut script = Self::parse(&text).map_err(|e| match e {
            ScriptError::Invalid(_, m) => ScriptError::Invalid(path.display().to_string(), m),
            e => e,
        })?;
        if script.recipe.is_relative() {
            script.recipe = path.parent().unwrap_or(Path::new(".")).join(&script.recipe);
        }
        Ok(script)
    }

    pub fn validate(&self) -> Result<(), ScriptError> {
        let bad = |m: String| Err(ScriptError::Invalid(self.name.clone(), m));
        let times_ok = |t: f64| t.is_finite() && t >= 0.0;
        if !self.timeline.windows(2).all(|w| w[0].at <= w[1].at) || !self.timeline.iter().all(|i| times_ok(i.at)) {
            return bad("timeline is not sorted by time".into());
        }
        if !self.expect.windows(2).all(|w| w[0].by <= w[1].by) || !self.expect.iter().all(|e| times_ok(e.by)) {
            return bad("expectations are not sorted by time".into());
        }
        for item in &self.timeline {
            match item.kind {
                TimelineKind::Utterance if item.text.is_none() => return bad(format!("utterance at {}s has no text", item.at)),
                TimelineKind::Scene if item.action.is_none() => return bad(format!("scene at {}s has no action", item.at)),
                TimelineKind::SkipDeclaration if item.step.is_none() => {
                    return bad(format!("skip_declaration at {}s has no step", item.at))
                }
                _ => {}
            }
        }
        for e in &self.expect {
            let parsed = match e.kind {
                ExpectKind::Event | ExpectKind::Alert => e.value.parse::<EventKind>().map(drop),
                ExpectKind::State => e.value.parse::<DialogueState>().map(drop),
                ExpectKind::PlaybackStatus => parse_playback(&e.value).map(drop),
                ExpectKind::ResponseContains => Ok(()),
            };
            if let Err(m) = parsed {
                return bad(m);
            }
            if e.after > e.by {
                return bad(format!("expectation window ({}, {}] is empty", e.after, e.by));
            }
        }
        Ok(())
    }

    fn end_time(&self) -> SimTime {
        let last_item = self.timeline.iter().map(|i| i.at).fold(0.0, f64::max);
        let last_expect = self.expect.iter().map(|e| e.by).fold(0.0, f64::max);
        SimTime::from_secs_f64(last_item.max(last_expect))
    }
}

fn parse_playback(v: &str) -> Result<crate::media::PlaybackStatus, String> {
    serde_json::from_value(serde_json::Value::String(v.to_ascii_lowercase())).map_err(|_| format!("unknown playback status {v:?}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub expectation: Expectation,
    pub passed: bool,
    pub detail: String,
    /// Trace records closest to the expectation window.
    pub nearest: Vec<u64>,
}

/// Everything a scenario run produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRun {
    pub name: String,
    pub trace: Vec<TraceRecord>,
    pub results: Vec<ExpectationResult>,
    pub alerts: Vec<(SimTime, String)>,
    pub responses: Vec<(SimTime, String)>,
}

impl ScenarioRun {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn report(&self) -> String {
        let mut out = format!("scenario {}: {}\n", self.name, if self.passed() { "PASS" } else { "FAIL" });
        for r in &self.results {
            out.push_str(&format!(
                "  [{}] {}: {} (nearest trace records {:?})\n",
                if r.passed { "pass" } else { "FAIL" },
                r.expectation.describe(),
                r.detail,
                r.nearest
            ));
        }
        out
    }
}

/// Runs a script with mock adapters on a simulated clock.
pub fn run_scenario(script: &ScenarioScript) -> Result<ScenarioRun, ScriptError> {
    script.validate()?;
    let knowledge = load_knowledge(&script.recipe).map_err(|e| ScriptError::Fixture(script.name.clone(), e.to_string()))?;
    let mut config = script.config.clone().unwrap_or_default();
    config.memory_file = None;
    config.trace_file = None;
    config.validate()?;
    let mut adapters = config.adapters.build()?;
    let mut perceiver = ScriptedPerceiver::new();
    for item in script.timeline.iter().filter(|i| i.kind == TimelineKind::Scene) {
        let scene = PerceivedScene {
            action: item.action.clone().unwrap_or_default(),
            matched_step: item.step,
            visible_items: item.items.clone(),
            sounds: item.sounds.clone(),
        };
        perceiver.push_scene(SimTime::from_secs_f64(item.at), scene.to_reply());
    }
    adapters.perceiver = Box::new(perceiver);

    let clock = SimClock::new();
    let mut engine = Engine::start(config, knowledge, adapters, Arc::new(clock.clone()))?;
    for item in &script.timeline {
        clock.advance_to(SimTime::from_secs_f64(item.at));
        engine.pump();
        match item.kind {
            TimelineKind::Scene => {}
            TimelineKind::Utterance => engine.submit(Stimulus::utterance(item.text.clone().unwrap_or_default())),
            TimelineKind::SkipDeclaration => engine.submit(Stimulus::Skip { step: item.step.unwrap_or_default() }),
        }
        engine.pump();
    }
    clock.advance_to(script.end_time().max(clock.now()));
    engine.pump();

    let alerts = engine
        .memory()
        .records()
        .iter()
        .filter(|r| r.kind == RecordKind::Alert)
        .map(|r| (r.timestamp, r.text.clone()))
        .collect();
    let responses = engine.responses().values().map(|r| (r.created_at, r.text.clone())).collect();
    let mut run = ScenarioRun { name: script.name.clone(), trace: engine.trace().to_vec(), results: Vec::new(), alerts, responses };
    run.results = script.expect.iter().map(|e| check(&run, e)).collect();
    Ok(run)
}

fn check(run: &ScenarioRun, e: &Expectation) -> ExpectationResult {
    let after = SimTime::from_secs_f64(e.after);
    let by = SimTime::from_secs_f64(e.by);
    let in_window = |t: SimTime| (e.after == 0.0 && t == SimTime::ZERO) || (t > after && t <= by);
    let window: Vec<&TraceRecord> = run.trace.iter().filter(|r| in_window(r.at)).collect();
    let last_by = run.trace.iter().rev().find(|r| r.at <= by);
    let (found, detail) = match e.kind {
        ExpectKind::Event => {
            let want: EventKind = e.value.parse().expect("validated");
            let hit = window.iter().find(|r| r.classified_event == Some(want) && !r.rejected);
            (hit.is_some(), hit.map(|r| format!("seq {} at {}", r.seq, r.at)).unwrap_or_else(|| "not seen".into()))
        }
        ExpectKind::Alert => {
            let want: EventKind = e.value.parse().expect("validated");
            let hits: Vec<&&TraceRecord> =
                window.iter().filter(|r| r.stimulus == StimulusKind::Alert && r.classified_event == Some(want)).collect();
            let text_ok = |r: &TraceRecord| match &e.contains {
                None => true,
                Some(c) => run.alerts.iter().any(|(t, text)| *t == r.at && text.to_lowercase().contains(&c.to_lowercase())),
            };
            let hit = hits.iter().find(|r| text_ok(r));
            (hit.is_some(), hit.map(|r| format!("seq {} at {}", r.seq, r.at)).unwrap_or_else(|| format!("{} alert(s) of that kind", hits.len())))
        }
        ExpectKind::State => {
            let want: DialogueState = e.value.parse().expect("validated");
            let got = last_by.map(|r| r.to_state).unwrap_or(DialogueState::Idle);
            (got == want, format!("state {got}"))
        }
        ExpectKind::PlaybackStatus => {
            let want = parse_playback(&e.value).expect("validated");
            let got = last_by.map(|r| r.playback).unwrap_or_default();
            (got == want, format!("playback {got}"))
        }
        ExpectKind::ResponseContains => {
            let needle = e.value.to_lowercase();
            let hit = run.responses.iter().find(|(t, text)| in_window(*t) && text.to_lowercase().contains(&needle));
            (hit.is_some(), hit.map(|(t, text)| format!("at {t}: {text:?}")).unwrap_or_else(|| "no matching response".into()))
        }
    };
    ExpectationResult { expectation: e.clone(), passed: found != e.absent, detail, nearest: nearest(&run.trace, after, by) }
}

fn nearest(trace: &[TraceRecord], after: SimTime, by: SimTime) -> Vec<u64> {
    let inside: Vec<u64> =
        trace.iter().filter(|r| r.at > after && r.at <= by && r.stimulus != StimulusKind::Tick).map(|r| r.seq).collect();
    if !inside.is_empty() {
        return inside.into_iter().take(5).collect();
    }
    let mut by_distance: Vec<(u64, u64)> = trace.iter().map(|r| (r.at.0.abs_diff(by.0), r.seq)).collect();
    by_distance.sort_unstable();
    let mut seqs: Vec<u64> = by_distance.into_iter().take(3).map(|(_, s)| s).collect();
    seqs.sort_unstable();
    seqs
}

/// Loads every `*.toml` script in `dir`, sorted by file name.
pub fn load_scenarios(dir: &Path) -> Result<Vec<(PathBuf, ScenarioScript)>, ScriptError> {
    let io = |source| ScriptError::Io { path: dir.into(), source };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| ScenarioScript::load(&p).map(|s| (p, s))).collect()
}

/// Metrics for a harness trace, in the session report format.
pub fn score_trace(trace: &[TraceRecord], labels: &std::collections::BTreeMap<u64, crate::session::Label>) -> Result<MetricsReport, SessionError> {
    compute_metrics(&crate::session::annotate(trace, labels)?)
}

/// Distinct `(from, event)` pairs taken by accepted transitions in a trace.
pub fn cells_taken(trace: &[TraceRecord]) -> BTreeSet<(DialogueState, EventKind)> {
    trace
        .iter()
        .filter(|r| !r.rejected)
        .filter_map(|r| r.classified_event.map(|e| (r.from_state, e)))
        .collect()
}
