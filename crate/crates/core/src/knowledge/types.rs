use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::KnowledgeError;

/// Current schema version of the recipe knowledge file.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Word {
    pub text: String,
    pub start: f64,
    pub end: f64,
}

impl Word {
    pub fn new(text: impl Into<String>, start: f64, end: f64) -> Self {
        Self { text: text.into(), start, end }
    }
}

/// Word-timed transcript of the spoken instructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedTranscript {
    pub words: Vec<Word>,
    pub language: String,
}

impl TimedTranscript {
    pub fn new(words: Vec<Word>, language: impl Into<String>) -> Self {
        Self { words, language: language.into() }
    }

    /// Checks word timing: finite, non-negative, `start <= end`, words do not
    /// overlap, and (when given) everything ends by `video_duration`.
    pub fn validate(&self, video_duration: Option<f64>) -> Result<(), KnowledgeError> {
        if self.words.is_empty() {
            return Err(KnowledgeError::EmptyInput("transcript has no words".into()));
        }
        let mut prev_end = 0.0f64;
        for (i, w) in self.words.iter().enumerate() {
            if w.text.trim().is_empty() {
                return Err(KnowledgeError::MalformedTranscript(format!("word {i} is blank")));
            }
            if !w.start.is_finite() || !w.end.is_finite() || w.start < 0.0 || w.start > w.end {
                return Err(KnowledgeError::MalformedTranscript(format!(
                    "word {i} ({:?}) has invalid interval [{}, {}]",
                    w.text, w.start, w.end
                )));
            }
            if w.start < prev_end {
                return Err(KnowledgeError::MalformedTranscript(format!(
                    "word {i} ({:?}) starts at {} before the previous word ends at {}",
                    w.text, w.start, prev_end
                )));
            }
            if let Some(d) = video_duration {
                if w.end > d {
                    return Err(KnowledgeError::MalformedTranscript(format!(
                        "word {i} ends at {} past the video duration {d}",
                        w.end
                    )));
                }
            }
            prev_end = w.end;
        }
        Ok(())
    }
}

/// Reference to one extracted frame: its timestamp and a content hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub timestamp: f64,
    pub hash: String,
}

/// One decoded frame as delivered by the frame manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp: f64,
    pub descriptor: Vec<f32>,
}

impl Frame {
    pub fn new(timestamp: f64, descriptor: Vec<f32>) -> Self {
        Self { timestamp, descriptor }
    }

    /// First 16 hex digits of the SHA-256 of the little-endian descriptor.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.descriptor {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_ref(&self) -> FrameRef {
        FrameRef { timestamp: self.timestamp, hash: self.content_hash() }
    }
}

/// One transcript sentence with its multimodal descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub index: usize,
    pub text: String,
    pub t_start: f64,
    pub t_end: f64,
    pub keyframes: Vec<FrameRef>,
    pub visual_description: String,
    pub audio_description: String,
}

impl SentenceUnit {
    pub fn new(index: usize, text: impl Into<String>, t_start: f64, t_end: f64) -> Self {
        Self {
            index,
            text: text.into(),
            t_start,
            t_end,
            keyframes: Vec::new(),
            visual_description: String::new(),
            audio_description: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCutList {
    pub cuts: Vec<f64>,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingredient {
    pub name: String,
    pub quantity: String,
    pub first_mention: usize,
}

/// A recipe step covering the inclusive sentence range
/// `first_sentence..=last_sentence`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub summary: String,
    pub first_sentence: usize,
    pub last_sentence: usize,
}

impl Step {
    pub fn sentence_indices(&self) -> std::ops::RangeInclusive<usize> {
        self.first_sentence..=self.last_sentence
    }
}

/// Structured, per-sentence knowledge distilled from one instructional video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeKnowledge {
    pub schema_version: u32,
    pub recipe_id: String,
    pub title: String,
    pub video_duration: f64,
    pub sentences: Vec<SentenceUnit>,
    pub ingredients: Vec<Ingredient>,
    pub steps: Vec<Step>,
}

impl RecipeKnowledge {
    pub fn sentence(&self, index: usize) -> Option<&SentenceUnit> {
        self.sentences.get(index)
    }

    pub fn step(&self, index: usize) -> Option<&Step> {
        self.steps.get(index)
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Sentences belonging to `step`, in order.
    pub fn step_sentences(&self, step: usize) -> &[SentenceUnit] {
        match self.steps.get(step) {
            Some(s) => &self.sentences[s.first_sentence..=s.last_sentence],
            None => &[],
        }
    }

    /// The step whose range contains `sentence`, if any.
    pub fn step_of_sentence(&self, sentence: usize) -> Option<usize> {
        self.steps
            .iter()
            .find(|s| s.sentence_indices().contains(&sentence))
            .map(|s| s.index)
    }

    /// Collects every schema violation. An empty list means the value is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            v.push(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.recipe_id.trim().is_empty() {
            v.push("recipe_id is empty".into());
        }
        if !(self.video_duration.is_finite() && self.video_duration > 0.0) {
            v.push(format!("video_duration {} must be positive", self.video_duration));
        }
        if self.sentences.is_empty() {
            v.push("a recipe must have at least one sentence".into());
        }
        let mut prev_end = 0.0f64;
        for (i, s) in self.sentences.iter().enumerate() {
            if s.index != i {
                v.push(format!("sentence at position {i} has index {}", s.index));
            }
            if s.text.trim().is_empty() {
                v.push(format!("sentence {i} has empty text"));
            }
            if !(s.t_start.is_finite() && s.t_end.is_finite()) || s.t_start >= s.t_end {
                v.push(format!("sentence {i} interval [{}, {}] is not increasing", s.t_start, s.t_end));
            }
            if s.t_start < prev_end {
                v.push(format!("sentence {i} starts at {} before sentence {} ends", s.t_start, i.wrapping_sub(1)));
            }
            if s.t_start < 0.0 || s.t_end > self.video_duration {
                v.push(format!("sentence {i} lies outside [0, {}]", self.video_duration));
            }
            for kf in &s.keyframes {
                if kf.timestamp < s.t_start || kf.timestamp > s.t_end {
                    v.push(format!(
                        "sentence {i} keyframe at {} lies outside [{}, {}]",
                        kf.timestamp, s.t_start, s.t_end
                    ));
                }
            }
            prev_end = prev_end.max(s.t_end);
        }
        let n = self.sentences.len();
        for ing in &self.ingredients {
            if ing.first_mention >= n {
                v.push(format!(
                    "ingredient {:?} first_mention {} references no sentence",
                    ing.name, ing.first_mention
                ));
            }
        }
        let mut next_free = 0usize;
        for (i, st) in self.steps.iter().enumerate() {
            if st.index != i {
                v.push(format!("step at position {i} has index {}", st.index));
            }
            if st.first_sentence > st.last_sentence {
                v.push(format!("step {i} range {}..={} is reversed", st.first_sentence, st.last_sentence));
            }
            if st.last_sentence >= n {
                v.push(format!("step {i} range ends at sentence {} which does not exist", st.last_sentence));
            }
            if st.first_sentence < next_free {
                v.push(format!("step {i} range overlaps or precedes the previous step"));
            }
            next_free = st.last_sentence.saturating_add(1);
        }
        v
    }

    pub fn validate(&self) -> Result<(), KnowledgeError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(KnowledgeError::SchemaViolation(v))
        }
    }
}
