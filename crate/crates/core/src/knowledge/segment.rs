//! Sentence segmentation of a word-timed transcript.

use super::{KnowledgeError, SentenceUnit, TimedTranscript};

pub const DEFAULT_GAP_SECONDS: f64 = 1.5;

/// True when the word ends with sentence-final punctuation, looking through
/// trailing quotes and closing brackets.
pub fn ends_sentence(word: &str) -> bool {
    let trimmed = word.trim_end_matches(['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}']);
    trimmed.ends_with(['.', '!', '?', '\u{2026}'])
}

/// Splits the transcript into sentence units. A boundary falls after a word
/// with sentence-final punctuation, or before a word that starts at least
/// `gap_seconds` after the previous word ended.
pub fn segment_transcript(
    transcript: &TimedTranscript,
    gap_seconds: f64,
) -> Result<Vec<SentenceUnit>, KnowledgeError> {
    if !(gap_seconds.is_finite() && gap_seconds > 0.0) {
        return Err(KnowledgeError::InvalidArgument(format!("gap_seconds {gap_seconds} must be positive")));
    }
    transcript.validate(None)?;

    let words = &transcript.words;
    let mut units = Vec::new();
    let mut first = 0usize;
    for i in 0..words.len() {
        let last = i + 1 == words.len();
        let boundary = last
            || ends_sentence(&words[i].text)
            || words[i + 1].start - words[i].end >= gap_seconds;
        if !boundary {
            continue;
        }
        let span = &words[first..=i];
        let text = span.iter().map(|w| w.text.trim()).collect::<Vec<_>>().join(" ");
        let (t_start, t_end) = (span[0].start, span[span.len() - 1].end);
        if t_start >= t_end {
            return Err(KnowledgeError::MalformedTranscript(format!(
                "sentence {:?} has zero duration at {t_start}",
                text
            )));
        }
        units.push(SentenceUnit::new(units.len(), text, t_start, t_end));
        first = i + 1;
    }
    Ok(units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::Word;

    fn transcript(words: &[(&str, f64, f64)]) -> TimedTranscript {
        TimedTranscript::new(words.iter().map(|(t, s, e)| Word::new(*t, *s, *e)).collect(), "en")
    }

    #[test]
    fn punctuation_forces_split() {
        let units = segment_transcript(&transcript(&[("Add.", 0.0, 0.4), ("Stir.", 0.6, 1.0)]), 1.5).unwrap();
        assert_eq!(units.len(), 2);
        assert_eq!((units[0].text.as_str(), units[0].t_start, units[0].t_end), ("Add.", 0.0, 0.4));
        assert_eq!((units[1].text.as_str(), units[1].t_start, units[1].t_end), ("Stir.", 0.6, 1.0));
    }

    #[test]
    fn single_word_is_one_unit() {
        let units = segment_transcript(&transcript(&[("Mix", 0.0, 1.0)]), 1.5).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!((units[0].text.as_str(), units[0].t_start, units[0].t_end), ("Mix", 0.0, 1.0));
    }

    #[test]
    fn pause_at_exact_gap_splits() {
        let units =
            segment_transcript(&transcript(&[("stir", 0.0, 0.5), ("gently", 2.0, 2.5)]), 1.5).unwrap();
        assert_eq!(units.len(), 2);
        let units =
            segment_transcript(&transcript(&[("stir", 0.0, 0.5), ("gently", 1.9, 2.5)]), 1.5).unwrap();
        assert_eq!(units.len(), 1);
    }

    #[test]
    fn quotes_after_period_still_end_sentence() {
        assert!(ends_sentence("done.\""));
        assert!(ends_sentence("really?)"));
        assert!(!ends_sentence("e.g"));
    }

    #[test]
    fn empty_transcript_is_rejected() {
        let err = segment_transcript(&transcript(&[]), 1.5).unwrap_err();
        assert!(matches!(err, KnowledgeError::EmptyInput(_)));
    }

    #[test]
    fn non_monotone_times_are_rejected() {
        let err = segment_transcript(&transcript(&[("a", 1.0, 2.0), ("b", 0.5, 0.8)]), 1.5).unwrap_err();
        assert!(matches!(err, KnowledgeError::MalformedTranscript(_)));
        let err = segment_transcript(&transcript(&[("a", 2.0, 1.0)]), 1.5).unwrap_err();
        assert!(matches!(err, KnowledgeError::MalformedTranscript(_)));
    }

    #[test]
    fn zero_duration_sentence_is_rejected() {
        let err = segment_transcript(&transcript(&[("Go.", 1.0, 1.0)]), 1.5).unwrap_err();
        assert!(matches!(err, KnowledgeError::MalformedTranscript(_)));
    }
}
