//! End-to-end distillation: transcript, frames and audio in; canonical recipe
//! knowledge file and a list of warnings out.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    assign_keyframes, compile_knowledge, describe_audio, describe_visual, detect_scenes, extract_outline,
    read_audio, read_frame_manifest, read_transcript, segment_transcript, AudioTrack, Describer, Frame, KnowledgeError, RecipeKnowledge, RecipeMeta,
    RecipeOutline, SceneCutList, TimedTranscript, DEFAULT_GAP_SECONDS, DEFAULT_SCENE_THRESHOLD,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineWarning {
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentence: Option<usize>,
    pub message: String,
}

impl PipelineWarning {
    fn new(stage: &str, sentence: Option<usize>, message: impl Into<String>) -> Self {
        Self { stage: stage.to_string(), sentence, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillConfig {
    pub gap_seconds: f64,
    pub scene_threshold: f64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self { gap_seconds: DEFAULT_GAP_SECONDS, scene_threshold: DEFAULT_SCENE_THRESHOLD }
    }
}

#[derive(Debug, Clone)]
pub struct DistillInputs {
    pub transcript: TimedTranscript,
    pub frames: Vec<Frame>,
    pub audio: Option<AudioTrack>,
    /// Hand-authored steps and ingredients; replaces the describer outline.
    pub outline_override: Option<RecipeOutline>,
    pub recipe_id: String,
    pub title: String,
    /// Defaults to the latest time seen across transcript, frames and audio.
    pub video_duration: Option<f64>,
}

impl DistillInputs {
    /// Reads the transcript, frame manifest and optional WAV track.
    pub fn read(
        transcript: &Path,
        frames: &Path,
        audio: Option<&Path>,
        recipe_id: impl Into<String>,
        title: impl Into<String>,
    ) -> Result<Self, KnowledgeError> {
        Ok(Self {
            transcript: read_transcript(transcript)?,
            frames: read_frame_manifest(frames)?,
            audio: audio.map(read_audio).transpose()?,
            outline_override: None,
            recipe_id: recipe_id.into(),
            title: title.into(),
            video_duration: None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DistillOutput {
    pub knowledge: RecipeKnowledge,
    pub canonical: String,
    pub cuts: SceneCutList,
    pub warnings: Vec<PipelineWarning>,
}

impl DistillOutput {
    /// Warnings sidecar: one JSON object per line.
    pub fn warnings_jsonl(&self) -> String {
        self.warnings
            .iter()
            .map(|w| serde_json::to_string(w).expect("warning serializes") + "\n")
            .collect()
    }
}

fn inferred_duration(inputs: &DistillInputs) -> f64 {
    let words = inputs.transcript.words.last().map(|w| w.end).unwrap_or(0.0);
    let frames = inputs.frames.last().map(|f| f.timestamp).unwrap_or(0.0);
    let audio = inputs
        .audio
        .as_ref()
        .map(|a| a.samples.len() as f64 / a.sample_rate.max(1) as f64)
        .unwrap_or(0.0);
    words.max(frames).max(audio)
}

/// Runs the whole pipeline. Describer failures degrade to empty descriptions
/// plus a warning; structural problems in the inputs are errors.
pub fn distill(
    inputs: &DistillInputs,
    config: &DistillConfig,
    describer: &dyn Describer,
) -> Result<DistillOutput, KnowledgeError> {
    let video_duration = inputs.video_duration.unwrap_or_else(|| inferred_duration(inputs));
    inputs.transcript.validate(Some(video_duration))?;
    let mut warnings = Vec::new();

    let mut sentences = segment_transcript(&inputs.transcript, config.gap_seconds)?;

    let cuts = match detect_scenes(&inputs.frames, config.scene_threshold) {
        Ok(mut cuts) => {
            cuts.cuts.retain(|c| *c < video_duration);
            cuts
        }
        Err(KnowledgeError::EmptyInput(msg)) => {
            warnings.push(PipelineWarning::new("scenes", None, msg));
            SceneCutList { cuts: Vec::new(), threshold: config.scene_threshold }
        }
        Err(e) => return Err(e),
    };

    for index in assign_keyframes(&mut sentences, &cuts, &inputs.frames) {
        warnings.push(PipelineWarning::new("keyframes", Some(index), "no frames inside the sentence interval"));
    }

    // Describer calls are issued in sentence order so results commit in order.
    for unit in sentences.iter_mut() {
        match describe_visual(unit, describer) {
            Ok(text) => unit.visual_description = text,
            Err(KnowledgeError::NoKeyframes(_)) => {
                warnings.push(PipelineWarning::new("visual", Some(unit.index), "skipped: sentence has no keyframes"))
            }
            Err(e) => warnings.push(PipelineWarning::new("visual", Some(unit.index), e.to_string())),
        }
        if let Some(track) = &inputs.audio {
            let window = track.window(unit.t_start, unit.t_end);
            match describe_audio(unit.index, &window, describer) {
                Ok(text) => unit.audio_description = text,
                Err(e) => warnings.push(PipelineWarning::new("audio", Some(unit.index), e.to_string())),
            }
        }
    }
    if inputs.audio.is_none() {
        warnings.push(PipelineWarning::new("audio", None, "no audio track supplied"));
    }

    let outline = match &inputs.outline_override {
        Some(o) => o.clone(),
        None => match extract_outline(&sentences, describer) {
            Ok(o) => o,
            Err(e) => {
                warnings.push(PipelineWarning::new("outline", None, e.to_string()));
                RecipeOutline::default()
            }
        },
    };

    let meta = RecipeMeta {
        recipe_id: inputs.recipe_id.clone(),
        title: inputs.title.clone(),
        video_duration,
    };
    let (knowledge, canonical) = compile_knowledge(sentences, outline.ingredients, outline.steps, meta)?;
    Ok(DistillOutput { knowledge, canonical, cuts, warnings })
}
