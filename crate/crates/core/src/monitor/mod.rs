//! Proactive scene monitor.
//!
//! On a fixed period the monitor asks the perceiver for an [`Observation`] of
//! the live scene, judges it against the recipe and the progress pointer, and
//! turns deviations into missed-step (E5) and incorrect-step (E6) alerts. It
//! holds no dialogue state; the session applies its outputs.

mod judge;
mod observation;

use std::collections::BTreeMap;

pub use judge::{
    action_matches_step, advance_progress, judge, Judge, Judgment, ProgressState, RemoteJudge, RuleJudge, Verdict,
};
pub use observation::{
    parse_perceiver_reply, Observation, PerceivedScene, PerceptionRequest, Perceiver, RemotePerceiver,
    ScriptedPerceiver, OBSERVE_PROMPT_TAG,
};

use crate::clock::{SimSpan, SimTime};
use crate::knowledge::FrameRef;
use crate::orchestrator::{EventKind, InteractionEvent};

pub const DEFAULT_TICK_PERIOD: SimSpan = SimSpan(2000);
pub const DEFAULT_ALERT_COOLDOWN: SimSpan = SimSpan(30_000);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MonitorError {
    #[error("cannot advance to step {target} from {current} (recipe has {n_steps} steps)")]
    AdvanceOutOfRange { target: usize, current: usize, n_steps: usize },
    #[error("step {step} does not exist (recipe has {n_steps} steps)")]
    StepOutOfRange { step: usize, n_steps: usize },
}

/// Tick scheduler. Ticks fall at `period, 2 * period, ...` after start.
#[derive(Debug, Clone)]
pub struct Monitor {
    period: SimSpan,
    last_tick_at: SimTime,
    last_tick_id: u64,
}

impl Monitor {
    pub fn new(period: SimSpan) -> Self {
        assert!(period.as_millis() > 0, "tick period must be positive");
        Self { period, last_tick_at: SimTime::ZERO, last_tick_id: 0 }
    }

    /// Scheduler continuing after tick `last_tick_id`, which fell at
    /// `last_tick_at`.
    pub fn resume(period: SimSpan, last_tick_at: SimTime, last_tick_id: u64) -> Self {
        Self { last_tick_at, last_tick_id, ..Self::new(period) }
    }

    pub fn period(&self) -> SimSpan {
        self.period
    }

    pub fn next_tick_at(&self) -> SimTime {
        self.last_tick_at + self.period
    }

    pub fn ticks_emitted(&self) -> u64 {
        self.last_tick_id
    }

    /// Runs the tick due at `next_tick_at()`. A perceiver failure or an
    /// unparseable reply yields a degraded observation; the tick still counts.
    pub fn tick(&mut self, frames: Vec<FrameRef>, audio_ref: Option<String>, perceiver: &dyn Perceiver) -> Observation {
        let at = self.next_tick_at();
        let tick_id = self.last_tick_id + 1;
        let request = PerceptionRequest {
            tick_id,
            window_start: self.last_tick_at,
            window_end: at,
            frame_refs: frames,
            audio_ref,
            prompt_tag: OBSERVE_PROMPT_TAG,
        };
        self.last_tick_at = at;
        self.last_tick_id = tick_id;
        let reply = match perceiver.perceive(&request) {
            Ok(r) => r,
            Err(e) => return Observation::degraded(tick_id, at, e.to_string()),
        };
        match parse_perceiver_reply(&reply) {
            Ok(scene) => Observation {
                tick_id,
                timestamp: at,
                action: scene.action,
                matched_step: scene.matched_step,
                visible_items: scene.visible_items,
                sounds: scene.sounds,
                raw_descriptor: reply,
                degraded: false,
            },
            Err(e) => Observation::degraded(tick_id, at, e.to_string()),
        }
    }
}

/// Alert events for a judgment: E5 when steps were missed, then E6 when the
/// observed step is performed incorrectly. Degraded judgments raise nothing.
pub fn emit_alerts(j: &Judgment) -> Vec<InteractionEvent> {
    let mut out = Vec::new();
    if j.degraded {
        return out;
    }
    if !j.missed_steps.is_empty() {
        out.push(InteractionEvent::missed_step(j.judgment_id));
    }
    if j.relevant && j.correct == Some(false) {
        out.push(InteractionEvent::incorrect_step(j.judgment_id));
    }
    out
}

/// Suppresses repeats of the same (kind, step) alert within a cooldown.
#[derive(Debug, Clone)]
pub struct AlertLimiter {
    cooldown: SimSpan,
    last_fired: BTreeMap<(EventKind, usize), SimTime>,
}

impl AlertLimiter {
    pub fn new(cooldown: SimSpan) -> Self {
        Self { cooldown, last_fired: BTreeMap::new() }
    }

    fn key(event: &InteractionEvent, j: &Judgment) -> (EventKind, usize) {
        let step = match event.kind() {
            EventKind::MissedStepDetected => j.missed_steps.first().copied(),
            _ => j.step,
        };
        (event.kind(), step.unwrap_or(usize::MAX))
    }

    /// Keeps the alerts allowed at `now` and records them as fired.
    pub fn filter(&mut self, alerts: Vec<InteractionEvent>, j: &Judgment, now: SimTime) -> Vec<InteractionEvent> {
        alerts
            .into_iter()
            .filter(|a| {
                let key = Self::key(a, j);
                let allowed = match self.last_fired.get(&key) {
                    Some(t) => now - *t >= self.cooldown,
                    None => true,
                };
                if allowed {
                    self.last_fired.insert(key, now);
                }
                allowed
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judgment(relevant: bool, correct: Option<bool>, missed: Vec<usize>) -> Judgment {
        Judgment {
            judgment_id: 7,
            tick_id: 3,
            step: relevant.then_some(3),
            relevant,
            correct,
            missed_steps: missed,
            advanced_to: None,
            degraded: false,
        }
    }

    fn kinds(events: &[InteractionEvent]) -> Vec<EventKind> {
        events.iter().map(|e| e.kind()).collect()
    }

    #[test]
    fn missed_step_raises_e5() {
        assert_eq!(kinds(&emit_alerts(&judgment(true, Some(true), vec![2]))), vec![EventKind::MissedStepDetected]);
    }

    #[test]
    fn healthy_judgment_raises_nothing() {
        assert!(emit_alerts(&judgment(true, Some(true), vec![])).is_empty());
        assert!(emit_alerts(&judgment(false, None, vec![])).is_empty());
    }

    #[test]
    fn both_deviations_raise_e5_then_e6() {
        let alerts = emit_alerts(&judgment(true, Some(false), vec![2]));
        assert_eq!(kinds(&alerts), vec![EventKind::MissedStepDetected, EventKind::IncorrectStepDetected]);
    }

    #[test]
    fn degraded_judgment_never_alerts() {
        let mut j = judgment(true, Some(false), vec![1]);
        j.degraded = true;
        assert!(emit_alerts(&j).is_empty());
    }

    #[test]
    fn limiter_suppresses_repeats_within_cooldown() {
        let mut limiter = AlertLimiter::new(DEFAULT_ALERT_COOLDOWN);
        let j = judgment(true, Some(true), vec![2]);
        assert_eq!(limiter.filter(emit_alerts(&j), &j, SimTime(2000)).len(), 1);
        assert!(limiter.filter(emit_alerts(&j), &j, SimTime(31_999)).is_empty());
        assert_eq!(limiter.filter(emit_alerts(&j), &j, SimTime(32_000)).len(), 1);
        let other = judgment(true, Some(true), vec![1]);
        assert_eq!(limiter.filter(emit_alerts(&other), &other, SimTime(32_500)).len(), 1);
    }

    #[test]
    fn scripted_ticks_follow_cadence() {
        let perceiver = ScriptedPerceiver::new().with_scene(SimTime(0), "action: stir\nstep: 0\nitems: pot\nsounds:\n");
        let mut m = Monitor::new(DEFAULT_TICK_PERIOD);
        let obs: Vec<Observation> = (0..5).map(|_| m.tick(vec![], None, &perceiver)).collect();
        assert_eq!(obs.iter().map(|o| o.tick_id).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert_eq!(obs[4].timestamp, SimTime(10_000));
        assert_eq!(obs[0].action, "stir");
        assert_eq!(obs[0].matched_step, Some(0));
        assert_eq!(obs[0].visible_items, vec!["pot"]);
    }

    #[test]
    fn perceiver_failure_degrades_only_that_tick() {
        let perceiver = ScriptedPerceiver::new()
            .with_scene(SimTime(0), "action: stir\nstep: 0\nitems:\nsounds:\n")
            .failing_on(3);
        let mut m = Monitor::new(DEFAULT_TICK_PERIOD);
        let obs: Vec<Observation> = (0..5).map(|_| m.tick(vec![], None, &perceiver)).collect();
        assert!(obs[2].degraded);
        assert!(!obs[3].degraded && !obs[4].degraded);
        assert_eq!(obs[2].tick_id, 3);
    }

    #[test]
    fn garbled_reply_degrades() {
        let perceiver = ScriptedPerceiver::new().with_scene(SimTime(0), "I see a kitchen");
        let mut m = Monitor::new(DEFAULT_TICK_PERIOD);
        assert!(m.tick(vec![], None, &perceiver).degraded);
    }
}
