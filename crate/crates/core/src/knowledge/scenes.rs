//! Content-difference scene detection and per-sentence keyframe selection.
//!
//! Each frame carries a small content descriptor (a coarse color histogram
//! when it comes from an image). Consecutive descriptors are compared by mean
//! absolute difference; a cut is placed at the later frame whenever the
//! difference exceeds the threshold.

use super::{Frame, FrameRef, KnowledgeError, SceneCutList, SentenceUnit};

pub const DEFAULT_SCENE_THRESHOLD: f64 = 0.15;

/// Mean absolute difference between two descriptors of equal length.
pub fn content_difference(a: &[f32], b: &[f32]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).abs()).sum();
    sum / a.len() as f64
}

fn check_frames(frames: &[Frame]) -> Result<(), KnowledgeError> {
    let dim = frames.first().map(|f| f.descriptor.len()).unwrap_or(0);
    for (i, f) in frames.iter().enumerate() {
        if !f.timestamp.is_finite() || f.timestamp < 0.0 {
            return Err(KnowledgeError::MalformedFrames(format!("frame {i} has timestamp {}", f.timestamp)));
        }
        if f.descriptor.len() != dim {
            return Err(KnowledgeError::MalformedFrames(format!(
                "frame {i} descriptor has {} values, expected {dim}",
                f.descriptor.len()
            )));
        }
        if i > 0 && f.timestamp <= frames[i - 1].timestamp {
            return Err(KnowledgeError::MalformedFrames(format!(
                "frame {i} timestamp {} does not increase",
                f.timestamp
            )));
        }
    }
    Ok(())
}

pub fn detect_scenes(frames: &[Frame], threshold: f64) -> Result<SceneCutList, KnowledgeError> {
    if frames.len() < 2 {
        return Err(KnowledgeError::EmptyInput(format!(
            "scene detection needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(KnowledgeError::InvalidArgument(format!("scene threshold {threshold} must be positive")));
    }
    check_frames(frames)?;
    let cuts = frames
        .windows(2)
        .filter(|w| content_difference(&w[0].descriptor, &w[1].descriptor) > threshold)
        .map(|w| w[1].timestamp)
        .collect();
    Ok(SceneCutList { cuts, threshold })
}

/// Frame whose timestamp is closest to the middle of `[lo, hi]`; ties go to
/// the earlier frame.
fn middle_frame<'a>(frames: &[&'a Frame], lo: f64, hi: f64) -> Option<&'a Frame> {
    let mid = (lo + hi) / 2.0;
    let mut best: Option<&Frame> = None;
    for f in frames {
        let better = match best {
            None => true,
            Some(b) => (f.timestamp - mid).abs() < (b.timestamp - mid).abs(),
        };
        if better {
            best = Some(f);
        }
    }
    best
}

/// Selects keyframes for one sentence: one per scene that overlaps the
/// sentence for a positive length and contains a frame in the overlap. When
/// no scene qualifies but frames exist inside the closed sentence interval,
/// the frame nearest the sentence midpoint is used.
pub fn keyframes_for_interval(t_start: f64, t_end: f64, cuts: &[f64], frames: &[Frame]) -> Vec<FrameRef> {
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(f64::NEG_INFINITY);
    bounds.extend(cuts.iter().copied());
    bounds.push(f64::INFINITY);

    let mut picked = Vec::new();
    for scene in bounds.windows(2) {
        let lo = t_start.max(scene[0]);
        let hi = t_end.min(scene[1]);
        if hi <= lo {
            continue;
        }
        let inside: Vec<&Frame> = frames.iter().filter(|f| f.timestamp >= lo && f.timestamp < hi).collect();
        if let Some(f) = middle_frame(&inside, lo, hi) {
            picked.push(f.to_ref());
        }
    }
    if picked.is_empty() {
        let inside: Vec<&Frame> =
            frames.iter().filter(|f| f.timestamp >= t_start && f.timestamp <= t_end).collect();
        if let Some(f) = middle_frame(&inside, t_start, t_end) {
            picked.push(f.to_ref());
        }
    }
    picked
}

/// Populates keyframes for every sentence. Returns the indices of sentences
/// left without any keyframe.
pub fn assign_keyframes(sentences: &mut [SentenceUnit], cuts: &SceneCutList, frames: &[Frame]) -> Vec<usize> {
    let mut empty = Vec::new();
    for s in sentences.iter_mut() {
        s.keyframes = keyframes_for_interval(s.t_start, s.t_end, &cuts.cuts, frames);
        if s.keyframes.is_empty() {
            empty.push(s.index);
        }
    }
    empty
}
