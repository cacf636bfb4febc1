use serde::{Deserialize, Serialize};

use super::{MemoryError, MemoryRecord, MemoryStore, RecordKind, RecordScorer};
use crate::clock::SimTime;
use crate::knowledge::{RecipeKnowledge, SentenceUnit, Step};
use crate::monitor::ProgressState;
use crate::orchestrator::DialogueState;
use crate::text::token_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextConfig {
    pub recent_turns: usize,
    pub recent_observations: usize,
    pub retrieved: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        Self { recent_turns: 6, recent_observations: 3, retrieved: 5 }
    }
}

/// Everything a response in one state is generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub state: DialogueState,
    pub user_query: Option<String>,
    /// Description of the monitor finding that triggered this response.
    pub alert: Option<String>,
    pub recent_turns: Vec<MemoryRecord>,
    pub recent_observations: Vec<MemoryRecord>,
    pub retrieved: Vec<MemoryRecord>,
    pub knowledge_slices: Vec<SentenceUnit>,
    pub steps: Vec<Step>,
    pub current_step: usize,
    pub budget_used: usize,
}

impl ContextBundle {
    /// Every memory record in the bundle, in priority order.
    pub fn records(&self) -> impl Iterator<Item = &MemoryRecord> {
        self.recent_turns.iter().chain(&self.recent_observations).chain(&self.retrieved)
    }
}

pub fn sentence_cost(s: &SentenceUnit) -> usize {
    token_count(&s.text) + token_count(&s.visual_description) + token_count(&s.audio_description)
}

pub fn step_cost(s: &Step) -> usize {
    token_count(&s.summary) + 2
}

/// Step outline and sentences a state's responses draw on.
///
/// - S2: the current and the next step.
/// - S4: the whole outline, with each step's opening sentence.
/// - Other responding states: the current step.
pub fn knowledge_for_state(
    state: DialogueState,
    knowledge: &RecipeKnowledge,
    progress: &ProgressState,
) -> (Vec<Step>, Vec<SentenceUnit>) {
    let n = knowledge.step_count();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let cur = progress.current_step.min(n - 1);
    let step_ids: Vec<usize> = match state {
        DialogueState::Idle => Vec::new(),
        DialogueState::StepGuide => (cur..(cur + 2).min(n)).collect(),
        DialogueState::GeneralVisual => (0..n).collect(),
        _ => vec![cur],
    };
    let steps: Vec<Step> = step_ids.iter().map(|i| knowledge.steps[*i].clone()).collect();
    let sentences = if state == DialogueState::GeneralVisual {
        steps.iter().filter_map(|s| knowledge.sentence(s.first_sentence).cloned()).collect()
    } else {
        steps.iter().flat_map(|s| knowledge.step_sentences(s.index).iter().cloned()).collect()
    };
    (steps, sentences)
}

/// Inputs to [`assemble_context`] that come from the running session.
pub struct ContextRequest<'a> {
    pub state: DialogueState,
    pub query: Option<&'a str>,
    pub alert: Option<&'a str>,
    pub budget: usize,
    pub now: SimTime,
}

enum Item {
    Turn(MemoryRecord),
    Observation(MemoryRecord),
    Retrieved(MemoryRecord),
    Slice(SentenceUnit),
    Step(Step),
}

impl Item {
    fn cost(&self) -> usize {
        match self {
            Item::Turn(r) | Item::Observation(r) | Item::Retrieved(r) => token_count(&r.text),
            Item::Slice(s) => sentence_cost(s),
            Item::Step(s) => step_cost(s),
        }
    }
}

/// Builds the context for one response.
///
/// Candidates are ranked by priority: the query (and alert), recent turns
/// newest first, recent observations newest first, records retrieved for the
/// query, then recipe knowledge. The bundle keeps the longest prefix of that
/// ranking whose token cost fits `budget`, so a lower-priority item is only
/// ever kept when everything above it is. Retrieval skips records already
/// present as turns or observations.
pub fn assemble_context(
    store: &MemoryStore,
    knowledge: &RecipeKnowledge,
    progress: &ProgressState,
    request: &ContextRequest<'_>,
    config: &ContextConfig,
    scorer: &dyn RecordScorer,
) -> Result<ContextBundle, MemoryError> {
    let required = request.query.map(token_count).unwrap_or(0) + request.alert.map(token_count).unwrap_or(0);
    if required > request.budget {
        return Err(MemoryError::BudgetTooSmall { needed: required, budget: request.budget });
    }

    let turns = store.latest(config.recent_turns, RecordKind::is_turn);
    let observations = store.latest(config.recent_observations, |k| k == RecordKind::Observation);
    let search = request.query.or(request.alert).unwrap_or("");
    let taken: Vec<u64> = turns.iter().chain(&observations).map(|r| r.record_id).collect();
    let retrieved = if search.trim().is_empty() {
        Vec::new()
    } else {
        store.retrieve_where(search, config.retrieved, request.now, scorer, |r| !taken.contains(&r.record_id))
    };
    let (steps, slices) = knowledge_for_state(request.state, knowledge, progress);

    let mut items: Vec<Item> = Vec::new();
    items.extend(turns.into_iter().rev().map(Item::Turn));
    items.extend(observations.into_iter().rev().map(Item::Observation));
    items.extend(retrieved.into_iter().map(Item::Retrieved));
    items.extend(steps.into_iter().map(Item::Step));
    items.extend(slices.into_iter().map(Item::Slice));

    let mut bundle = ContextBundle {
        state: request.state,
        user_query: request.query.map(str::to_string),
        alert: request.alert.map(str::to_string),
        recent_turns: Vec::new(),
        recent_observations: Vec::new(),
        retrieved: Vec::new(),
        knowledge_slices: Vec::new(),
        steps: Vec::new(),
        current_step: progress.current_step,
        budget_used: required,
    };
    for item in items {
        let cost = item.cost();
        if bundle.budget_used + cost > request.budget {
            break;
        }
        bundle.budget_used += cost;
        match item {
            Item::Turn(r) => bundle.recent_turns.push(r),
            Item::Observation(r) => bundle.recent_observations.push(r),
            Item::Retrieved(r) => bundle.retrieved.push(r),
            Item::Step(s) => bundle.steps.push(s),
            Item::Slice(s) => bundle.knowledge_slices.push(s),
        }
    }
    bundle.recent_turns.reverse();
    bundle.recent_observations.reverse();
    Ok(bundle)
}
