//! State-specific response rendering.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DialogueState, OrchestratorError};
use crate::adapter::{AdapterError, RemoteEndpoint};
use crate::clock::SimTime;
use crate::knowledge::{RecipeKnowledge, SentenceUnit};
use crate::media::{segment_for_sentence, SegmentReason, SegmentRef};
use crate::memory::{ContextBundle, MemoryRecord};
use crate::text;

pub const TEMPLATE_VERSION: u32 = 1;

/// Spoken when the generator fails; the session stays where it was.
pub const APOLOGY: &str = "Sorry, I could not work out an answer just now. Please ask again.";

/// Prompt template text for a responding state.
pub fn template(state: DialogueState) -> Option<&'static str> {
    Some(match state {
        DialogueState::Idle => return None,
        DialogueState::FoodState => include_str!("../../fixtures/templates/S1.v1.txt"),
        DialogueState::StepGuide => include_str!("../../fixtures/templates/S2.v1.txt"),
        DialogueState::ProblemSolving => include_str!("../../fixtures/templates/S3.v1.txt"),
        DialogueState::GeneralVisual => include_str!("../../fixtures/templates/S4.v1.txt"),
        DialogueState::CorrectionReview => include_str!("../../fixtures/templates/S5.v1.txt"),
        DialogueState::DetailElaboration => include_str!("../../fixtures/templates/S6.v1.txt"),
    })
}

pub fn template_id(state: DialogueState) -> String {
    format!("{}.v{TEMPLATE_VERSION}", state.code())
}

fn record_lines(records: &[MemoryRecord]) -> String {
    if records.is_empty() {
        return "(none)".into();
    }
    records.iter().map(|r| format!("- [{}] {}: {}", r.timestamp, r.kind, r.text)).collect::<Vec<_>>().join("\n")
}

fn sentence_lines(sentences: &[SentenceUnit]) -> String {
    sentences
        .iter()
        .map(|s| {
            let mut line = format!("- [{:.1}s-{:.1}s] {}", s.t_start, s.t_end, s.text);
            if !s.visual_description.is_empty() {
                line.push_str(&format!(" (seen: {})", s.visual_description));
            }
            if !s.audio_description.is_empty() {
                line.push_str(&format!(" (heard: {})", s.audio_description));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Fills the state's template from the bundle.
pub fn fill_template(state: DialogueState, bundle: &ContextBundle) -> Result<String, OrchestratorError> {
    let tpl = template(state).ok_or(OrchestratorError::NoResponseInIdle)?;
    let steps = bundle
        .steps
        .iter()
        .map(|s| {
            let marker = if s.index == bundle.current_step { " (current)" } else { "" };
            format!("Step {}{marker}: {}", s.index + 1, s.summary)
        })
        .collect::<Vec<_>>()
        .join("\n");
    Ok(tpl
        .replace("{{query}}", bundle.user_query.as_deref().unwrap_or("(none)"))
        .replace("{{alert}}", &bundle.alert.as_ref().map(|a| format!("Monitor finding: {a}")).unwrap_or_default())
        .replace("{{recent_turns}}", &record_lines(&bundle.recent_turns))
        .replace("{{recent_observations}}", &record_lines(&bundle.recent_observations))
        .replace("{{retrieved}}", &record_lines(&bundle.retrieved))
        .replace("{{steps}}", &steps)
        .replace("{{knowledge}}", &sentence_lines(&bundle.knowledge_slices)))
}

#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub template_id: &'a str,
    pub state: DialogueState,
    pub prompt: &'a str,
    pub context: &'a ContextBundle,
}

pub trait Generator {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, AdapterError>;
}

/// Returns the filled prompt tagged with its template id.
#[derive(Debug, Clone, Default)]
pub struct EchoGenerator;

impl Generator for EchoGenerator {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, AdapterError> {
        Ok(format!("[{}] {}", request.template_id, request.prompt))
    }
}

#[derive(Debug, Clone, Default)]
pub struct FailingGenerator;

impl Generator for FailingGenerator {
    fn generate(&self, _: &GenerationRequest<'_>) -> Result<String, AdapterError> {
        Err(AdapterError::Unavailable("generator offline".into()))
    }
}

/// Short deterministic answers assembled from the context, one pattern per
/// state.
#[derive(Debug, Clone, Default)]
pub struct CannedGenerator;

fn observed_action(record: &MemoryRecord) -> String {
    let first = record.text.split(';').next().unwrap_or("");
    first.strip_prefix("action:").unwrap_or(first).trim().to_string()
}

fn first_slice(ctx: &ContextBundle) -> &str {
    ctx.knowledge_slices.first().map(|s| s.text.as_str()).unwrap_or("nothing more on this")
}

impl Generator for CannedGenerator {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, AdapterError> {
        let ctx = request.context;
        let query = ctx.user_query.as_deref().unwrap_or("");
        let step = |i: usize| ctx.steps.iter().find(|s| s.index == i);
        Ok(match request.state {
            DialogueState::Idle => return Err(AdapterError::BadReply("no response in idle".into())),
            DialogueState::FoodState => match ctx.recent_observations.last() {
                Some(obs) if !observed_action(obs).is_empty() => {
                    format!("Looking at your food: {}. The video says: {}", observed_action(obs), first_slice(ctx))
                }
                _ => format!("I cannot see the food clearly yet. The video says: {}", first_slice(ctx)),
            },
            DialogueState::StepGuide => {
                let cur = ctx.current_step;
                let now = step(cur).map(|s| format!("You are on step {}: {}.", cur + 1, s.summary)).unwrap_or_default();
                match step(cur + 1) {
                    Some(next) => format!("{now} Next, step {}: {}.", next.index + 1, next.summary),
                    None => format!("{now} That is the last step."),
                }
            }
            DialogueState::ProblemSolving => match &ctx.alert {
                Some(alert) => format!("{alert} The video says: {}", first_slice(ctx)),
                None => format!("For that problem, the video says: {}", first_slice(ctx)),
            },
            DialogueState::GeneralVisual => {
                let terms = text::content_terms(query);
                let earlier = ctx
                    .retrieved
                    .iter()
                    .find(|r| text::overlap(&terms, &text::content_terms(&r.text)) > 0);
                match (earlier, ctx.recent_observations.last()) {
                    (Some(r), _) => format!("Earlier, at {}, the {} was: {}.", r.timestamp, r.kind, r.text),
                    (None, Some(obs)) => format!("Right now I see: {}.", obs.text),
                    (None, None) => "I cannot see anything yet.".to_string(),
                }
            }
            DialogueState::CorrectionReview => {
                format!("Thanks, taking into account that \"{query}\": the video says {}", first_slice(ctx))
            }
            DialogueState::DetailElaboration => {
                let detail = ctx.knowledge_slices.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
                format!("In more detail, considering \"{query}\": {detail}")
            }
        })
    }
}

/// Generator backed by a hosted language model.
#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    pub endpoint: RemoteEndpoint,
}

impl Generator for RemoteGenerator {
    fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, AdapterError> {
        let payload = json!({ "template_id": request.template_id, "state": request.state, "prompt": request.prompt });
        self.endpoint.call("generate_response", &payload)
    }
}

/// A rendered response with the evidence it was grounded in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEnvelope {
    pub response_id: u64,
    pub state: DialogueState,
    pub template_id: String,
    pub text: String,
    pub evidence_segments: Vec<SegmentRef>,
    pub sources: Vec<u64>,
    pub created_at: SimTime,
}

/// Knowledge slices the response draws on: those sharing content words with
/// the query, alert or response text. Step-centred states fall back to all
/// of their slices when none do.
pub fn evidence_for(state: DialogueState, bundle: &ContextBundle, response_text: &str) -> Vec<SegmentRef> {
    let mut terms = text::content_terms(response_text);
    terms.extend(text::content_terms(bundle.user_query.as_deref().unwrap_or("")));
    terms.extend(text::content_terms(bundle.alert.as_deref().unwrap_or("")));
    let hits: Vec<&SentenceUnit> = bundle
        .knowledge_slices
        .iter()
        .filter(|s| text::overlap(&terms, &text::content_terms(&s.text)) > 0)
        .collect();
    let chosen: Vec<&SentenceUnit> = if hits.is_empty() && state != DialogueState::GeneralVisual {
        bundle.knowledge_slices.iter().collect()
    } else {
        hits
    };
    chosen.into_iter().map(|s| segment_for_sentence(s, SegmentReason::ResponseEvidence)).collect()
}

/// Renders the response for `state`.
pub fn render_response(
    response_id: u64,
    state: DialogueState,
    bundle: &ContextBundle,
    knowledge: &RecipeKnowledge,
    generator: &dyn Generator,
    now: SimTime,
) -> Result<ResponseEnvelope, OrchestratorError> {
    if !state.responds() {
        return Err(OrchestratorError::NoResponseInIdle);
    }
    let id = template_id(state);
    let prompt = fill_template(state, bundle)?;
    let text = generator
        .generate(&GenerationRequest { template_id: &id, state, prompt: &prompt, context: bundle })
        .map_err(|e| OrchestratorError::GenerationUnavailable(e.to_string()))?;
    if text.trim().is_empty() {
        return Err(OrchestratorError::GenerationUnavailable("generator returned an empty answer".into()));
    }
    let evidence_segments = evidence_for(state, bundle, &text);
    debug_assert!(evidence_segments.iter().all(|s| knowledge.sentence(s.sentence_index).is_some()));
    Ok(ResponseEnvelope {
        response_id,
        state,
        template_id: id,
        text,
        evidence_segments,
        sources: bundle.records().map(|r| r.record_id).collect(),
        created_at: now,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{Step, SCHEMA_VERSION};
    use crate::memory::{RecordKind, RecordLinks};

    fn knowledge() -> RecipeKnowledge {
        let texts = ["Fill a pot with water.", "Bring the pasta to a boil.", "Drain the pasta."];
        RecipeKnowledge {
            schema_version: SCHEMA_VERSION,
            recipe_id: "r".into(),
            title: "r".into(),
            video_duration: 10.0,
            sentences: texts.iter().enumerate().map(|(i, t)| SentenceUnit::new(i, *t, i as f64 * 3.0, i as f64 * 3.0 + 2.0)).collect(),
            ingredients: vec![],
            steps: vec![
                Step { index: 0, summary: "fill pot".into(), first_sentence: 0, last_sentence: 0 },
                Step { index: 1, summary: "boil pasta".into(), first_sentence: 1, last_sentence: 1 },
                Step { index: 2, summary: "drain pasta".into(), first_sentence: 2, last_sentence: 2 },
            ],
        }
    }

    fn bundle(state: DialogueState, current: usize) -> ContextBundle {
        let k = knowledge();
        ContextBundle {
            state,
            user_query: Some("what's next?".into()),
            alert: None,
            recent_turns: vec![],
            recent_observations: vec![],
            retrieved: vec![],
            knowledge_slices: k.sentences[current..(current + 2).min(3)].to_vec(),
            steps: k.steps[current..(current + 2).min(3)].to_vec(),
            current_step: current,
            budget_used: 0,
        }
    }

    #[test]
    fn echo_on_step_guide_carries_template_and_step() {
        let env = render_response(1, DialogueState::StepGuide, &bundle(DialogueState::StepGuide, 0), &knowledge(), &EchoGenerator, SimTime(0)).unwrap();
        assert!(env.text.contains("boil pasta"));
        assert!(env.text.contains("S2.v1"));
        assert_eq!(env.template_id, "S2.v1");
    }

    #[test]
    fn food_state_answer_uses_observation() {
        let mut b = bundle(DialogueState::FoodState, 1);
        b.recent_observations.push(MemoryRecord {
            record_id: 3,
            kind: RecordKind::Observation,
            timestamp: SimTime(2000),
            text: "action: internal temp below target; step: 1; items: pot; sounds: ".into(),
            links: RecordLinks { tick_id: Some(1), ..Default::default() },
        });
        let env = render_response(2, DialogueState::FoodState, &b, &knowledge(), &CannedGenerator, SimTime(2500)).unwrap();
        assert_eq!(env.state, DialogueState::FoodState);
        assert_eq!(env.text, "Looking at your food: internal temp below target. The video says: Bring the pasta to a boil.");
        assert_eq!(env.sources, vec![3]);
    }

    #[test]
    fn generator_failure_is_reported() {
        let err = render_response(1, DialogueState::StepGuide, &bundle(DialogueState::StepGuide, 0), &knowledge(), &FailingGenerator, SimTime(0)).unwrap_err();
        assert!(matches!(err, OrchestratorError::GenerationUnavailable(_)));
    }

    #[test]
    fn idle_never_renders() {
        let err = render_response(1, DialogueState::Idle, &bundle(DialogueState::Idle, 0), &knowledge(), &EchoGenerator, SimTime(0)).unwrap_err();
        assert!(matches!(err, OrchestratorError::NoResponseInIdle));
    }

    #[test]
    fn follow_up_templates_stress_added_information() {
        for s in [DialogueState::CorrectionReview, DialogueState::DetailElaboration] {
            assert!(template(s).unwrap().contains("special attention to the additional information"));
        }
        for s in DialogueState::ALL.into_iter().filter(|s| s.responds()) {
            let t = template(s).unwrap();
            assert!(t.contains("{{query}}") && t.contains("Omit anything the user did not ask about"), "{s}");
        }
    }

    #[test]
    fn evidence_snaps_to_sentences() {
        let env = render_response(1, DialogueState::StepGuide, &bundle(DialogueState::StepGuide, 0), &knowledge(), &CannedGenerator, SimTime(0)).unwrap();
        let k = knowledge();
        assert!(!env.evidence_segments.is_empty());
        for seg in &env.evidence_segments {
            let s = k.sentence(seg.sentence_index).unwrap();
            assert_eq!((seg.t_start, seg.t_end), (s.t_start, s.t_end));
        }
    }
}
