//! Readers for the distillation inputs.
//!
//! Transcript file: UTF-8 text, one word per line as
//! `<start>\t<end>\t<word>`. Blank lines and lines starting with `#` are
//! ignored, except a `# language: <tag>` header which sets the language.
//!
//! Frame manifest: UTF-8 text, one frame per line as
//! `<timestamp>\t<descriptor>`, where the descriptor is either a
//! comma-separated list of floats or `@<image path>` (resolved relative to the
//! manifest). Image frames are reduced to a 12-value color histogram: four
//! bins per RGB channel, each channel normalized to sum to 1.
//!
//! Audio: a RIFF/WAVE file, 16-bit PCM or 32-bit float. Multi-channel audio is
//! averaged down to mono.

use std::path::Path;

use super::{AudioTrack, Frame, KnowledgeError, TimedTranscript, Word};

fn parse_f64(field: &str, line_no: usize, what: &str) -> Result<f64, KnowledgeError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| KnowledgeError::Parse(format!("line {line_no}: {what} {field:?} is not a number")))
}

pub fn parse_transcript(text: &str) -> Result<TimedTranscript, KnowledgeError> {
    let mut words = Vec::new();
    let mut language = String::from("und");
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(tag) = comment.trim().strip_prefix("language:") {
                language = tag.trim().to_string();
            }
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(start), Some(end), Some(word)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(KnowledgeError::Parse(format!("line {line_no}: expected <start>\\t<end>\\t<word>")));
        };
        words.push(Word::new(word.trim(), parse_f64(start, line_no, "start")?, parse_f64(end, line_no, "end")?));
    }
    Ok(TimedTranscript::new(words, language))
}

pub fn read_transcript(path: &Path) -> Result<TimedTranscript, KnowledgeError> {
    parse_transcript(&std::fs::read_to_string(path).map_err(|e| KnowledgeError::io(path, e))?)
}

/// Coarse RGB histogram of an image: 4 bins per channel, per-channel
/// normalized.
pub fn image_descriptor(path: &Path) -> Result<Vec<f32>, KnowledgeError> {
    let img = image::open(path)
        .map_err(|e| KnowledgeError::Parse(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let mut bins = [0u64; 12];
    for px in img.pixels() {
        for c in 0..3 {
            bins[c * 4 + (px.0[c] as usize >> 6)] += 1;
        }
    }
    let total = (img.width() as u64 * img.height() as u64).max(1) as f32;
    Ok(bins.iter().map(|b| *b as f32 / total).collect())
}

pub fn parse_frame_manifest(text: &str, base_dir: Option<&Path>) -> Result<Vec<Frame>, KnowledgeError> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((ts, desc)) = line.split_once('\t') else {
            return Err(KnowledgeError::Parse(format!("line {line_no}: expected <timestamp>\\t<descriptor>")));
        };
        let timestamp = parse_f64(ts, line_no, "timestamp")?;
        let desc = desc.trim();
        let descriptor = if let Some(img) = desc.strip_prefix('@') {
            let path = match base_dir {
                Some(dir) => dir.join(img),
                None => Path::new(img).to_path_buf(),
            };
            image_descriptor(&path)?
        } else {
            desc.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f32>()
                        .map_err(|_| KnowledgeError::Parse(format!("line {line_no}: descriptor value {v:?}")))
                })
                .collect::<Result<Vec<f32>, _>>()?
        };
        frames.push(Frame::new(timestamp, descriptor));
    }
    Ok(frames)
}

pub fn read_frame_manifest(path: &Path) -> Result<Vec<Frame>, KnowledgeError> {
    let text = std::fs::read_to_string(path).map_err(|e| KnowledgeError::io(path, e))?;
    parse_frame_manifest(&text, path.parent())
}

pub fn read_audio(path: &Path) -> Result<AudioTrack, KnowledgeError> {
    let mut reader = hound::WavReader::open(path).map_err(|e| KnowledgeError::Parse(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(|e| KnowledgeError::Parse(e.to_string()))?,
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| KnowledgeError::Parse(e.to_string()))?
        }
    };
    let samples = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f32>() / frame.len() as f32)
        .collect();
    Ok(AudioTrack { sample_rate: spec.sample_rate, samples })
}
