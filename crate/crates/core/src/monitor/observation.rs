use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::adapter::{AdapterError, RemoteEndpoint};
use crate::clock::SimTime;
use crate::knowledge::FrameRef;

pub const OBSERVE_PROMPT_TAG: &str = "observe.v1";

/// One tick's description of the live scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub tick_id: u64,
    pub timestamp: SimTime,
    pub action: String,
    pub matched_step: Option<usize>,
    pub visible_items: Vec<String>,
    pub sounds: Vec<String>,
    pub raw_descriptor: String,
    #[serde(default)]
    pub degraded: bool,
}

impl Observation {
    /// Placeholder for a tick whose perception failed.
    pub fn degraded(tick_id: u64, timestamp: SimTime, reason: impl Into<String>) -> Self {
        Self {
            tick_id,
            timestamp,
            action: String::new(),
            matched_step: None,
            visible_items: Vec::new(),
            sounds: Vec::new(),
            raw_descriptor: reason.into(),
            degraded: true,
        }
    }

    /// One-line text form stored in memory.
    pub fn summary(&self) -> String {
        if self.degraded {
            return "observation unavailable".to_string();
        }
        let step = self.matched_step.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        format!(
            "action: {}; step: {}; items: {}; sounds: {}",
            self.action,
            step,
            self.visible_items.join(", "),
            self.sounds.join(", ")
        )
    }
}

/// What the perceiver is asked about on one tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerceptionRequest {
    pub tick_id: u64,
    pub window_start: SimTime,
    pub window_end: SimTime,
    pub frame_refs: Vec<FrameRef>,
    pub audio_ref: Option<String>,
    pub prompt_tag: &'static str,
}

/// Parsed fields of a perceiver reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerceivedScene {
    pub action: String,
    pub matched_step: Option<usize>,
    pub visible_items: Vec<String>,
    pub sounds: Vec<String>,
}

impl PerceivedScene {
    pub fn to_reply(&self) -> String {
        format!(
            "action: {}\nstep: {}\nitems: {}\nsounds: {}\n",
            self.action,
            self.matched_step.map(|s| s.to_string()).unwrap_or_else(|| "none".into()),
            self.visible_items.join(", "),
            self.sounds.join(", ")
        )
    }
}

fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Parses the four-field reply format:
///
/// ```text
/// action: boiling water in a pot
/// step: 2
/// items: pot, water, stove
/// sounds: bubbling
/// ```
///
/// `step` is a step index or `none`. All four keys must be present; values
/// may be empty. Other lines are ignored.
pub fn parse_perceiver_reply(reply: &str) -> Result<PerceivedScene, AdapterError> {
    let (mut action, mut step, mut items, mut sounds) = (None, None, None, None);
    for line in reply.lines() {
        let Some((key, value)) = line.split_once(':') else { continue };
        let value = value.trim();
        match key.trim().to_ascii_lowercase().as_str() {
            "action" => action = Some(value.to_string()),
            "step" => {
                step = Some(match value.to_ascii_lowercase().as_str() {
                    "" | "none" | "-" => None,
                    v => Some(v.parse::<usize>().map_err(|_| AdapterError::BadReply(format!("step {v:?}")))?),
                })
            }
            "items" => items = Some(split_list(value)),
            "sounds" => sounds = Some(split_list(value)),
            _ => {}
        }
    }
    match (action, step, items, sounds) {
        (Some(action), Some(matched_step), Some(visible_items), Some(sounds)) => {
            Ok(PerceivedScene { action, matched_step, visible_items, sounds })
        }
        _ => Err(AdapterError::BadReply("perceiver reply is missing one of action/step/items/sounds".into())),
    }
}

pub trait Perceiver {
    fn perceive(&self, request: &PerceptionRequest) -> Result<String, AdapterError>;
}

/// Replays a timed list of scenes: each tick reports the latest scene that
/// started at or before the end of its window. Before the first scene it
/// reports an empty, unmatched scene.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPerceiver {
    scenes: Vec<(SimTime, String)>,
    failing_ticks: BTreeSet<u64>,
}

impl ScriptedPerceiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_scene(mut self, at: SimTime, reply: impl Into<String>) -> Self {
        self.push_scene(at, reply);
        self
    }

    pub fn push_scene(&mut self, at: SimTime, reply: impl Into<String>) {
        self.scenes.push((at, reply.into()));
        self.scenes.sort_by_key(|(t, _)| *t);
    }

    pub fn failing_on(mut self, tick_id: u64) -> Self {
        self.failing_ticks.insert(tick_id);
        self
    }
}

impl Perceiver for ScriptedPerceiver {
    fn perceive(&self, request: &PerceptionRequest) -> Result<String, AdapterError> {
        if self.failing_ticks.contains(&request.tick_id) {
            return Err(AdapterError::Unavailable(format!("scripted failure on tick {}", request.tick_id)));
        }
        Ok(self
            .scenes
            .iter()
            .rev()
            .find(|(at, _)| *at <= request.window_end)
            .map(|(_, reply)| reply.clone())
            .unwrap_or_else(|| "action: \nstep: none\nitems: \nsounds: \n".to_string()))
    }
}

/// Streams the frame window to a hosted multimodal model.
#[derive(Debug, Clone)]
pub struct RemotePerceiver {
    pub endpoint: RemoteEndpoint,
}

impl Perceiver for RemotePerceiver {
    fn perceive(&self, request: &PerceptionRequest) -> Result<String, AdapterError> {
        let payload = json!({
            "request": request,
            "instructions": "Describe objectively: the cooking action being performed; the corresponding \
                             recipe step index (or none); the visible food items, ingredients and kitchenware; \
                             any cooking-related sounds. Answer with lines action:, step:, items:, sounds:.",
        });
        self.endpoint.call("observe", &payload)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reply_parses_all_fields() {
        let s = parse_perceiver_reply("action: boiling water\nstep: 2\nitems: pot, water\nsounds: bubbling\n").unwrap();
        assert_eq!(s.action, "boiling water");
        assert_eq!(s.matched_step, Some(2));
        assert_eq!(s.visible_items, vec!["pot", "water"]);
        assert_eq!(s.sounds, vec!["bubbling"]);
        assert_eq!(parse_perceiver_reply(&s.to_reply()).unwrap(), s);
    }

    #[test]
    fn missing_field_is_bad_reply() {
        assert!(parse_perceiver_reply("action: x\nstep: none\nitems:\n").is_err());
        assert!(parse_perceiver_reply("action: x\nstep: two\nitems:\nsounds:\n").is_err());
    }

    #[test]
    fn empty_values_are_allowed() {
        let s = parse_perceiver_reply("action:\nstep: none\nitems:\nsounds:").unwrap();
        assert_eq!(s.matched_step, None);
        assert!(s.visible_items.is_empty());
    }
}
