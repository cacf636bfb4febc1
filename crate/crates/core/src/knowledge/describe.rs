//! Describer adapters: visual descriptions from keyframes, audio-event
//! descriptions from sample windows, and the step/ingredient outline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{FrameRef, Ingredient, KnowledgeError, SentenceUnit, Step};
use crate::adapter::{AdapterError, RemoteEndpoint};

/// Mono audio samples for one interval of the source video.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl AudioWindow {
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|s| (*s as f64) * (*s as f64)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }
}

/// Whole-audio-track samples; windows are cut from it by time.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrack {
    pub sample_rate: u32,
    pub samples: Vec<f32>,
}

impl AudioTrack {
    pub fn window(&self, t_start: f64, t_end: f64) -> AudioWindow {
        let rate = self.sample_rate as f64;
        let clamp = |t: f64| ((t.max(0.0) * rate).round() as usize).min(self.samples.len());
        let (a, b) = (clamp(t_start), clamp(t_end));
        AudioWindow {
            t_start,
            t_end,
            sample_rate: self.sample_rate,
            samples: self.samples[a..b.max(a)].to_vec(),
        }
    }
}

/// Step and ingredient lists for a recipe, either extracted by the describer
/// or loaded from a hand-authored override file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecipeOutline {
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub ingredients: Vec<Ingredient>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DescribeRequest<'a> {
    Visual { index: usize, text: &'a str, keyframes: &'a [FrameRef] },
    Audio { index: usize, window: &'a AudioWindow },
    Outline { sentences: &'a [SentenceUnit] },
}

impl DescribeRequest<'_> {
    pub fn task(&self) -> &'static str {
        match self {
            DescribeRequest::Visual { .. } => "describe_visual",
            DescribeRequest::Audio { .. } => "describe_audio",
            DescribeRequest::Outline { .. } => "extract_outline",
        }
    }

    /// JSON payload for the remote contract.
    pub fn payload(&self) -> serde_json::Value {
        match self {
            DescribeRequest::Visual { index, text, keyframes } => json!({
                "sentence_index": index,
                "text": text,
                "keyframes": keyframes,
                "instructions": "Describe the cooking step shown, and the appearance, relative position, \
                                 and relationships of the ingredients and kitchenware.",
            }),
            DescribeRequest::Audio { index, window } => json!({
                "sentence_index": index,
                "t_start": window.t_start,
                "t_end": window.t_end,
                "sample_rate": window.sample_rate,
                "samples": window.samples,
                "instructions": "Describe environmental cooking sounds such as sizzling or simmering.",
            }),
            DescribeRequest::Outline { sentences } => json!({
                "sentences": sentences.iter().map(|s| json!({"index": s.index, "text": s.text})).collect::<Vec<_>>(),
                "instructions": "Return JSON {\"steps\": [{\"index\", \"summary\", \"first_sentence\", \
                                 \"last_sentence\"}], \"ingredients\": [{\"name\", \"quantity\", \"first_mention\"}]}.",
            }),
        }
    }
}

pub trait Describer {
    fn describe(&self, request: &DescribeRequest<'_>) -> Result<String, AdapterError>;
}

/// Deterministic describer used by `distill --describer mock`.
///
/// Visual requests echo `KF:<keyframe count> TXT:<sentence text>`. Audio
/// requests answer `sizzling` when the window RMS exceeds the threshold and
/// `silence` otherwise. The outline makes one step per sentence.
#[derive(Debug, Clone)]
pub struct MockDescriber {
    pub rms_threshold: f64,
}

impl Default for MockDescriber {
    fn default() -> Self {
        Self { rms_threshold: 0.05 }
    }
}

impl Describer for MockDescriber {
    fn describe(&self, request: &DescribeRequest<'_>) -> Result<String, AdapterError> {
        Ok(match request {
            DescribeRequest::Visual { text, keyframes, .. } => format!("KF:{} TXT:{}", keyframes.len(), text),
            DescribeRequest::Audio { window, .. } => {
                if window.rms() > self.rms_threshold { "sizzling" } else { "silence" }.to_string()
            }
            DescribeRequest::Outline { sentences } => {
                let steps = sentences
                    .iter()
                    .map(|s| Step {
                        index: s.index,
                        summary: s.text.trim_end_matches(['.', '!', '?']).to_string(),
                        first_sentence: s.index,
                        last_sentence: s.index,
                    })
                    .collect();
                serde_json::to_string(&RecipeOutline { steps, ingredients: Vec::new() })
                    .map_err(|e| AdapterError::BadReply(e.to_string()))?
            }
        })
    }
}

/// Replays fixed answers keyed by sentence index.
#[derive(Debug, Clone, Default)]
pub struct CannedDescriber {
    pub visual: BTreeMap<usize, String>,
    pub audio: BTreeMap<usize, String>,
    pub outline: RecipeOutline,
}

impl Describer for CannedDescriber {
    fn describe(&self, request: &DescribeRequest<'_>) -> Result<String, AdapterError> {
        let missing = |what: &str, i: &usize| AdapterError::Unavailable(format!("no canned {what} for sentence {i}"));
        match request {
            DescribeRequest::Visual { index, .. } => self.visual.get(index).cloned().ok_or_else(|| missing("visual", index)),
            DescribeRequest::Audio { index, .. } => self.audio.get(index).cloned().ok_or_else(|| missing("audio", index)),
            DescribeRequest::Outline { .. } => {
                serde_json::to_string(&self.outline).map_err(|e| AdapterError::BadReply(e.to_string()))
            }
        }
    }
}

/// Always fails; exercises the graceful-degradation path.
#[derive(Debug, Clone, Default)]
pub struct FailingDescriber;

impl Describer for FailingDescriber {
    fn describe(&self, request: &DescribeRequest<'_>) -> Result<String, AdapterError> {
        Err(AdapterError::Unavailable(format!("{} is offline", request.task())))
    }
}

/// Describer backed by a hosted multimodal model.
#[derive(Debug, Clone)]
pub struct RemoteDescriber {
    pub endpoint: RemoteEndpoint,
}

impl Describer for RemoteDescriber {
    fn describe(&self, request: &DescribeRequest<'_>) -> Result<String, AdapterError> {
        self.endpoint.call(request.task(), &request.payload())
    }
}

/// Describes one unit from its keyframes. Units without keyframes are
/// skipped.
pub fn describe_visual(unit: &SentenceUnit, describer: &dyn Describer) -> Result<String, KnowledgeError> {
    if unit.keyframes.is_empty() {
        return Err(KnowledgeError::NoKeyframes(unit.index));
    }
    let req = DescribeRequest::Visual { index: unit.index, text: &unit.text, keyframes: &unit.keyframes };
    match describer.describe(&req) {
        Ok(text) if !text.trim().is_empty() => Ok(text),
        Ok(_) => Err(KnowledgeError::DescriberUnavailable(format!("empty visual description for sentence {}", unit.index))),
        Err(e) => Err(KnowledgeError::DescriberUnavailable(e.to_string())),
    }
}

pub fn describe_audio(index: usize, window: &AudioWindow, describer: &dyn Describer) -> Result<String, KnowledgeError> {
    match describer.describe(&DescribeRequest::Audio { index, window }) {
        Ok(text) if !text.trim().is_empty() => Ok(text),
        Ok(_) => Err(KnowledgeError::DescriberUnavailable(format!("empty audio description for sentence {index}"))),
        Err(e) => Err(KnowledgeError::DescriberUnavailable(e.to_string())),
    }
}

/// Asks the describer for the step and ingredient outline.
pub fn extract_outline(sentences: &[SentenceUnit], describer: &dyn Describer) -> Result<RecipeOutline, KnowledgeError> {
    let reply = describer
        .describe(&DescribeRequest::Outline { sentences })
        .map_err(|e| KnowledgeError::DescriberUnavailable(e.to_string()))?;
    serde_json::from_str(&reply)
        .map_err(|e| KnowledgeError::DescriberUnavailable(format!("outline reply is not valid JSON: {e}")))
}
