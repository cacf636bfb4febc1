//! Mapping utterances and judgments to events.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{DialogueState, EventKind, InteractionEvent, OrchestratorError};
use crate::adapter::{AdapterError, RemoteEndpoint};
use crate::monitor::{emit_alerts, Judgment, Observation};
use crate::text;

/// The committed keyword rule table, version 1.
pub const CLASSIFIER_RULES_V1: &str = include_str!("../../fixtures/classifier_rules.v1.tsv");

/// What a classifier may answer for an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Event(EventKind),
    /// Intentional skip; `None` means the current step.
    SkipStep(Option<usize>),
}

/// A classified stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Intent {
    Event(InteractionEvent),
    SkipStep { utterance_id: u64, step: Option<usize> },
}

pub trait EventClassifier {
    fn classify(
        &self,
        utterance: &str,
        observation: Option<&Observation>,
        state: DialogueState,
    ) -> Result<Label, AdapterError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordRule {
    pub label: RuleLabel,
    pub phrase: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleLabel {
    Event(EventKind),
    Skip,
}

/// First-match keyword rules; unmatched utterances are general visual
/// questions (E4).
#[derive(Debug, Clone)]
pub struct KeywordClassifier {
    rules: Vec<KeywordRule>,
}

impl KeywordClassifier {
    pub fn parse(table: &str) -> Result<Self, String> {
        let mut rules = Vec::new();
        for (n, line) in table.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, phrase) = line.split_once('\t').ok_or(format!("line {}: expected label<TAB>phrase", n + 1))?;
            let label = match label.trim() {
                "SKIP" => RuleLabel::Skip,
                code => {
                    let kind: EventKind = code.parse()?;
                    if kind.is_alert() {
                        return Err(format!("line {}: {kind} cannot come from an utterance", n + 1));
                    }
                    RuleLabel::Event(kind)
                }
            };
            let phrase = text::words(phrase);
            if phrase.is_empty() {
                return Err(format!("line {}: empty phrase", n + 1));
            }
            rules.push(KeywordRule { label, phrase });
        }
        Ok(Self { rules })
    }

    /// The shipped rule table.
    pub fn builtin() -> Self {
        Self::parse(CLASSIFIER_RULES_V1).expect("shipped classifier rules parse")
    }

    pub fn rules(&self) -> &[KeywordRule] {
        &self.rules
    }

    /// Index of the first rule matching `utterance`.
    pub fn matching_rule(&self, utterance: &str) -> Option<usize> {
        let words = text::words(utterance);
        self.rules.iter().position(|r| words.windows(r.phrase.len()).any(|w| w == r.phrase.as_slice()))
    }
}

/// Step named in a skip declaration. Spoken step numbers start at 1.
pub fn spoken_step(utterance: &str) -> Option<usize> {
    let words = text::words(utterance);
    words
        .windows(2)
        .find(|w| w[0] == "step")
        .and_then(|w| w[1].parse::<usize>().ok())
        .and_then(|n| n.checked_sub(1))
}

impl EventClassifier for KeywordClassifier {
    fn classify(&self, utterance: &str, _: Option<&Observation>, _: DialogueState) -> Result<Label, AdapterError> {
        Ok(match self.matching_rule(utterance).map(|i| self.rules[i].label) {
            Some(RuleLabel::Event(kind)) => Label::Event(kind),
            Some(RuleLabel::Skip) => Label::SkipStep(spoken_step(utterance)),
            None => Label::Event(EventKind::GeneralVisualQuery),
        })
    }
}

/// Always fails; exercises the fallback path.
#[derive(Debug, Clone, Default)]
pub struct FailingClassifier;

impl EventClassifier for FailingClassifier {
    fn classify(&self, _: &str, _: Option<&Observation>, _: DialogueState) -> Result<Label, AdapterError> {
        Err(AdapterError::Unavailable("classifier offline".into()))
    }
}

/// Classifier backed by a hosted model. The reply is an event code such as
/// `E2`, or `SKIP` optionally followed by a step index.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    pub endpoint: RemoteEndpoint,
}

pub fn parse_label(reply: &str) -> Result<Label, AdapterError> {
    let mut parts = reply.split_whitespace();
    match parts.next() {
        Some(t) if t.eq_ignore_ascii_case("skip") => match parts.next() {
            None => Ok(Label::SkipStep(None)),
            Some(n) => n.parse().map(|s| Label::SkipStep(Some(s))).map_err(|_| AdapterError::BadReply(reply.into())),
        },
        Some(code) => code.parse().map(Label::Event).map_err(AdapterError::BadReply),
        None => Err(AdapterError::BadReply("empty classifier reply".into())),
    }
}

impl EventClassifier for RemoteClassifier {
    fn classify(&self, utterance: &str, observation: Option<&Observation>, state: DialogueState) -> Result<Label, AdapterError> {
        let payload = json!({
            "utterance": utterance,
            "observation": observation.map(Observation::summary),
            "state": state,
            "instructions": "Map the user's request to one event: E1 food state, E2 step guidance, E3 problem, \
                             E4 general visual question, E7 follow-up asking for details, E8 previous answer is \
                             wrong, E9 user is satisfied, E10 media playback control, or SKIP <step> when the user \
                             is deliberately skipping a step. Reply with the code only.",
        });
        parse_label(&self.endpoint.call("classify", &payload)?)
    }
}

/// Classifies one dispatch input into at most one intent.
///
/// An utterance always yields exactly one intent and takes precedence over a
/// judgment in the same call. Without an utterance a judgment yields its
/// first alert (E5 before E6), or nothing when it is healthy. Classifier
/// failures, and classifiers that claim an alert from an utterance, surface
/// as `ClassificationUnavailable`; see [`classify_or_fallback`].
pub fn classify_event(
    utterance: Option<(u64, &str)>,
    judgment: Option<&Judgment>,
    observation: Option<&Observation>,
    state: DialogueState,
    classifier: &dyn EventClassifier,
) -> Result<Option<Intent>, OrchestratorError> {
    if let Some((id, text)) = utterance {
        if text.trim().is_empty() {
            return Err(OrchestratorError::EmptyUtterance);
        }
        let label = classifier
            .classify(text, observation, state)
            .map_err(|e| OrchestratorError::ClassificationUnavailable(e.to_string()))?;
        return match label {
            Label::SkipStep(step) => Ok(Some(Intent::SkipStep { utterance_id: id, step })),
            Label::Event(kind) => InteractionEvent::from_utterance(kind, id)
                .map(|e| Some(Intent::Event(e)))
                .ok_or_else(|| OrchestratorError::ClassificationUnavailable(format!("classifier returned {kind} for an utterance"))),
        };
    }
    Ok(judgment.and_then(|j| emit_alerts(j).into_iter().next()).map(Intent::Event))
}

/// Classifies an utterance, degrading to a general visual question when the
/// classifier is unavailable. The flag reports whether the fallback was used.
pub fn classify_or_fallback(
    utterance_id: u64,
    text: &str,
    observation: Option<&Observation>,
    state: DialogueState,
    classifier: &dyn EventClassifier,
) -> Result<(Intent, bool), OrchestratorError> {
    match classify_event(Some((utterance_id, text)), None, observation, state, classifier) {
        Ok(Some(intent)) => Ok((intent, false)),
        Ok(None) => unreachable!("utterances always classify"),
        Err(OrchestratorError::ClassificationUnavailable(reason)) => {
            log::warn!("classification unavailable ({reason}); treating utterance {utterance_id} as E4");
            let e = InteractionEvent::from_utterance(EventKind::GeneralVisualQuery, utterance_id).expect("E4 is a user event");
            Ok((Intent::Event(e), true))
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::EventPayload;

    fn kind_of(text: &str) -> EventKind {
        match KeywordClassifier::builtin().classify(text, None, DialogueState::Idle).unwrap() {
            Label::Event(k) => k,
            other => panic!("{text:?} gave {other:?}"),
        }
    }

    #[test]
    fn food_state_exemplar() {
        assert_eq!(kind_of("Is the chicken cooked through?"), EventKind::FoodStateQuery);
    }

    #[test]
    fn tell_me_more_is_follow_up() {
        let rules = KeywordClassifier::builtin();
        let label = rules.classify("tell me more", None, DialogueState::StepGuide).unwrap();
        // Oracle: look the phrase up in the shipped table directly.
        let line = CLASSIFIER_RULES_V1.lines().find(|l| l.ends_with("\ttell me more")).unwrap();
        assert_eq!(line.split('\t').next(), Some("E7"));
        assert_eq!(label, Label::Event(EventKind::FollowUpDetails));
    }

    #[test]
    fn usage_scenario_utterances() {
        assert_eq!(kind_of("What's my next step?"), EventKind::StepQuery);
        assert_eq!(kind_of("How do I properly chop onions?"), EventKind::StepQuery);
        assert_eq!(kind_of("I'm chopping my onion this thin, is this correct?"), EventKind::FollowUpDetails);
        assert_eq!(kind_of("play the video recipe"), EventKind::MediaControl);
        assert_eq!(kind_of("pause"), EventKind::MediaControl);
        assert_eq!(kind_of("Did I already add the garlic?"), EventKind::GeneralVisualQuery);
        assert_eq!(kind_of("That's wrong, it feels soft"), EventKind::FlagResponseWrong);
        assert_eq!(kind_of("thanks"), EventKind::Reset);
        assert_eq!(kind_of("I have a problem"), EventKind::ProblemQuery);
    }

    #[test]
    fn skip_declarations() {
        let c = KeywordClassifier::builtin();
        assert_eq!(c.classify("I'm going to skip step 3", None, DialogueState::Idle).unwrap(), Label::SkipStep(Some(2)));
        assert_eq!(c.classify("skipping this one", None, DialogueState::Idle).unwrap(), Label::SkipStep(None));
    }

    #[test]
    fn judgment_without_utterance_yields_alert() {
        let j = Judgment {
            judgment_id: 4,
            tick_id: 2,
            step: Some(2),
            relevant: true,
            correct: Some(true),
            missed_steps: vec![1],
            advanced_to: None,
            degraded: false,
        };
        let c = KeywordClassifier::builtin();
        let intent = classify_event(None, Some(&j), None, DialogueState::Idle, &c).unwrap();
        assert_eq!(intent, Some(Intent::Event(InteractionEvent::missed_step(4))));
        let healthy = Judgment { missed_steps: vec![], ..j };
        assert_eq!(classify_event(None, Some(&healthy), None, DialogueState::Idle, &c).unwrap(), None);
    }

    #[test]
    fn failure_falls_back_to_general_visual() {
        let (intent, fallback) = classify_or_fallback(7, "anything", None, DialogueState::Idle, &FailingClassifier).unwrap();
        assert!(fallback);
        let Intent::Event(e) = intent else { panic!() };
        assert_eq!(e.kind(), EventKind::GeneralVisualQuery);
        assert_eq!(e.payload(), EventPayload::Utterance(7));
    }

    struct ClaimsAlert;
    impl EventClassifier for ClaimsAlert {
        fn classify(&self, _: &str, _: Option<&Observation>, _: DialogueState) -> Result<Label, AdapterError> {
            Ok(Label::Event(EventKind::MissedStepDetected))
        }
    }

    #[test]
    fn alerts_never_come_from_utterances() {
        let (intent, fallback) = classify_or_fallback(1, "salt?", None, DialogueState::Idle, &ClaimsAlert).unwrap();
        assert!(fallback);
        assert!(matches!(intent, Intent::Event(e) if e.kind() == EventKind::GeneralVisualQuery));
    }

    #[test]
    fn rule_table_rejects_alert_labels() {
        assert!(KeywordClassifier::parse("E5\tsalt\n").is_err());
        assert!(KeywordClassifier::parse("E2\t\n").is_err());
    }

    #[test]
    fn remote_labels_parse() {
        assert_eq!(parse_label("E2").unwrap(), Label::Event(EventKind::StepQuery));
        assert_eq!(parse_label("SKIP 3").unwrap(), Label::SkipStep(Some(3)));
        assert!(parse_label("").is_err());
    }
}
