use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::MediaError;
use crate::adapter::{AdapterError, RemoteEndpoint};
use crate::knowledge::{RecipeKnowledge, SentenceUnit};
use crate::orchestrator::ResponseEnvelope;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentReason {
    UserRequest,
    ResponseEvidence,
}

/// A playable clip: one sentence's interval of the source video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub sentence_index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub reason: SegmentReason,
}

pub fn segment_for_sentence(s: &SentenceUnit, reason: SegmentReason) -> SegmentRef {
    SegmentRef { sentence_index: s.index, t_start: s.t_start, t_end: s.t_end, reason }
}

#[derive(Debug, Clone, Copy)]
pub enum SegmentRequest<'a> {
    Text(&'a str),
    Response(u64),
}

/// Scores every sentence of the recipe against a request.
pub trait SegmentMatcher {
    fn score_sentences(&self, request: &str, knowledge: &RecipeKnowledge) -> Result<Vec<f64>, AdapterError>;
}

/// Words that name the video or the act of playing it rather than content.
const MEDIA_WORDS: &[&str] = &[
    "again", "clip", "part", "play", "recipe", "repeat", "replay", "say", "says", "section", "segment", "show",
    "tell", "tells", "video",
];

/// Scores of at most this value never count as a match.
pub const MATCH_FLOOR: f64 = 0.0;

/// Shared content terms between the request and the sentence text.
#[derive(Debug, Clone, Default)]
pub struct LexicalMatcher;

impl LexicalMatcher {
    pub fn request_terms(request: &str) -> BTreeSet<String> {
        let media: BTreeSet<String> = MEDIA_WORDS.iter().map(|w| text::stem(w)).collect();
        text::content_terms(request).into_iter().filter(|t| !media.contains(t)).collect()
    }
}

impl SegmentMatcher for LexicalMatcher {
    fn score_sentences(&self, request: &str, knowledge: &RecipeKnowledge) -> Result<Vec<f64>, AdapterError> {
        let terms = Self::request_terms(request);
        Ok(knowledge
            .sentences
            .iter()
            .map(|s| text::overlap(&terms, &text::content_terms(&s.text)) as f64)
            .collect())
    }
}

/// Matcher backed by a hosted model; the reply is one score per line.
#[derive(Debug, Clone)]
pub struct RemoteMatcher {
    pub endpoint: RemoteEndpoint,
}

impl SegmentMatcher for RemoteMatcher {
    fn score_sentences(&self, request: &str, knowledge: &RecipeKnowledge) -> Result<Vec<f64>, AdapterError> {
        let sentences: Vec<&str> = knowledge.sentences.iter().map(|s| s.text.as_str()).collect();
        let reply = self.endpoint.call("match_segments", &json!({ "request": request, "sentences": sentences }))?;
        let scores = reply
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|e| AdapterError::BadReply(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        if scores.len() != sentences.len() {
            return Err(AdapterError::BadReply(format!("{} scores for {} sentences", scores.len(), sentences.len())));
        }
        Ok(scores)
    }
}

/// Finds the clips for a request.
///
/// A response id yields that response's evidence unchanged. Free text picks
/// the best-scoring sentence (earliest on ties) and extends it over
/// neighbouring sentences that also score above [`MATCH_FLOOR`].
pub fn locate_segments(
    request: SegmentRequest<'_>,
    knowledge: &RecipeKnowledge,
    responses: &BTreeMap<u64, ResponseEnvelope>,
    matcher: &dyn SegmentMatcher,
) -> Result<Vec<SegmentRef>, MediaError> {
    let text = match request {
        SegmentRequest::Response(id) => {
            return responses
                .get(&id)
                .map(|r| r.evidence_segments.clone())
                .ok_or(MediaError::UnknownResponse(id))
        }
        SegmentRequest::Text(t) => t,
    };
    let scores = matcher.score_sentences(text, knowledge)?;
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if *s > MATCH_FLOOR && best.is_none_or(|b| *s > scores[b]) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        return Err(MediaError::NoSegmentFound(text.to_string()));
    };
    let mut first = best;
    while first > 0 && scores[first - 1] > MATCH_FLOOR {
        first -= 1;
    }
    let mut last = best;
    while last + 1 < scores.len() && scores[last + 1] > MATCH_FLOOR {
        last += 1;
    }
    Ok(knowledge.sentences[first..=last]
        .iter()
        .map(|s| segment_for_sentence(s, SegmentReason::UserRequest))
        .collect())
}
