use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{MonitorError, Observation};
use crate::adapter::{AdapterError, RemoteEndpoint};
use crate::knowledge::RecipeKnowledge;
use crate::text;

/// The engine's belief about where the user is in the recipe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressState {
    pub current_step: usize,
    pub completed_steps: BTreeSet<usize>,
    pub skipped_steps: BTreeSet<usize>,
    pub n_steps: usize,
}

impl ProgressState {
    pub fn new(n_steps: usize) -> Self {
        Self { current_step: 0, completed_steps: BTreeSet::new(), skipped_steps: BTreeSet::new(), n_steps }
    }

    pub fn is_valid(&self) -> bool {
        let in_range = |s: &usize| *s < self.n_steps;
        self.completed_steps.iter().all(in_range)
            && self.skipped_steps.iter().all(in_range)
            && !self.completed_steps.contains(&self.current_step)
            && (self.n_steps == 0 || self.current_step < self.n_steps)
    }

    /// Records a user-declared skip.
    pub fn declare_skip(&mut self, step: usize) -> Result<(), MonitorError> {
        if step >= self.n_steps {
            return Err(MonitorError::StepOutOfRange { step, n_steps: self.n_steps });
        }
        self.skipped_steps.insert(step);
        Ok(())
    }
}

/// Adapter's verdict on one observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub relevant: bool,
    pub correct: Option<bool>,
    pub missed_steps: Vec<usize>,
    pub advanced_to: Option<usize>,
}

/// Recipe-alignment judgment for one observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub judgment_id: u64,
    pub tick_id: u64,
    /// The step the observation was matched to, when relevant.
    pub step: Option<usize>,
    pub relevant: bool,
    pub correct: Option<bool>,
    pub missed_steps: Vec<usize>,
    pub advanced_to: Option<usize>,
    #[serde(default)]
    pub degraded: bool,
}

impl Judgment {
    fn irrelevant(judgment_id: u64, tick_id: u64, degraded: bool) -> Self {
        Self {
            judgment_id,
            tick_id,
            step: None,
            relevant: false,
            correct: None,
            missed_steps: Vec::new(),
            advanced_to: None,
            degraded,
        }
    }

    pub fn summary(&self) -> String {
        if self.degraded {
            return format!("judgment for tick {} unavailable", self.tick_id);
        }
        if !self.relevant {
            return format!("tick {}: activity not related to the recipe", self.tick_id);
        }
        let mut parts = vec![format!("tick {}: step {}", self.tick_id, self.step.unwrap_or_default())];
        match self.correct {
            Some(true) => parts.push("performed correctly".into()),
            Some(false) => parts.push("performed incorrectly".into()),
            None => {}
        }
        if !self.missed_steps.is_empty() {
            parts.push(format!("missed steps {:?}", self.missed_steps));
        }
        if let Some(a) = self.advanced_to {
            parts.push(format!("advanced to step {a}"));
        }
        parts.join(", ")
    }
}

pub trait Judge {
    fn judge(
        &self,
        observation: &Observation,
        knowledge: &RecipeKnowledge,
        progress: &ProgressState,
    ) -> Result<Verdict, AdapterError>;
}

/// Rule-based judge.
///
/// - relevant: the observation names a step that exists.
/// - correct: the observed action shares at least one content word with the
///   step summary.
/// - advanced_to: the matched step when it is past the current step.
/// - missed_steps: steps before the matched step that are neither completed
///   nor declared skipped. When the user advances, the step being left
///   counts as completed.
#[derive(Debug, Clone, Default)]
pub struct RuleJudge;

pub fn action_matches_step(action: &str, summary: &str) -> bool {
    text::overlap(&text::content_terms(action), &text::content_terms(summary)) > 0
}

impl Judge for RuleJudge {
    fn judge(
        &self,
        observation: &Observation,
        knowledge: &RecipeKnowledge,
        progress: &ProgressState,
    ) -> Result<Verdict, AdapterError> {
        let Some(step) = observation.matched_step.filter(|s| *s < knowledge.step_count()) else {
            return Ok(Verdict { relevant: false, correct: None, missed_steps: Vec::new(), advanced_to: None });
        };
        let summary = &knowledge.steps[step].summary;
        let correct = action_matches_step(&observation.action, summary);
        let advanced_to = (step > progress.current_step).then_some(step);
        let missed_steps = (0..step)
            .filter(|s| !progress.completed_steps.contains(s) && !progress.skipped_steps.contains(s))
            .filter(|s| !(advanced_to.is_some() && *s == progress.current_step))
            .collect();
        Ok(Verdict { relevant: true, correct: Some(correct), missed_steps, advanced_to })
    }
}

/// Judge backed by a hosted model.
#[derive(Debug, Clone)]
pub struct RemoteJudge {
    pub endpoint: RemoteEndpoint,
}

impl Judge for RemoteJudge {
    fn judge(
        &self,
        observation: &Observation,
        knowledge: &RecipeKnowledge,
        progress: &ProgressState,
    ) -> Result<Verdict, AdapterError> {
        let payload = json!({
            "observation": observation,
            "steps": knowledge.steps,
            "progress": progress,
            "instructions": "Decide whether the activity is relevant to the recipe, whether the step is \
                             executed correctly, which required steps were missed, and whether the user \
                             advanced to a new step. Answer JSON {relevant, correct, missed_steps, advanced_to}.",
        });
        let reply = self.endpoint.call("judge", &payload)?;
        serde_json::from_str(&reply).map_err(|e| AdapterError::BadReply(e.to_string()))
    }
}

fn verdict_is_consistent(v: &Verdict, progress: &ProgressState) -> bool {
    if !v.relevant && (v.correct.is_some() || !v.missed_steps.is_empty() || v.advanced_to.is_some()) {
        return false;
    }
    if let Some(a) = v.advanced_to {
        if a <= progress.current_step || a >= progress.n_steps {
            return false;
        }
    }
    let pointer = v.advanced_to.unwrap_or(progress.current_step).max(progress.current_step);
    v.missed_steps.iter().all(|s| *s < pointer)
}

/// Judges one observation. Degraded observations, adapter failures and
/// inconsistent verdicts all yield an irrelevant, degraded judgment.
pub fn judge(
    judgment_id: u64,
    observation: &Observation,
    knowledge: &RecipeKnowledge,
    progress: &ProgressState,
    adapter: &dyn Judge,
) -> Judgment {
    if observation.degraded {
        return Judgment::irrelevant(judgment_id, observation.tick_id, true);
    }
    match adapter.judge(observation, knowledge, progress) {
        Ok(mut v) if verdict_is_consistent(&v, progress) => {
            v.missed_steps.sort_unstable();
            v.missed_steps.dedup();
            Judgment {
                judgment_id,
                tick_id: observation.tick_id,
                step: if v.relevant { observation.matched_step } else { None },
                relevant: v.relevant,
                correct: if v.relevant { v.correct } else { None },
                missed_steps: v.missed_steps,
                advanced_to: v.advanced_to,
                degraded: false,
            }
        }
        Ok(v) => {
            log::warn!("judge verdict {v:?} violates progress invariants; treating tick as degraded");
            Judgment::irrelevant(judgment_id, observation.tick_id, true)
        }
        Err(e) => {
            log::warn!("judge unavailable on tick {}: {e}", observation.tick_id);
            Judgment::irrelevant(judgment_id, observation.tick_id, true)
        }
    }
}

/// Applies a judgment to the progress pointer.
///
/// Advancing moves the pointer and marks the step being left as completed.
/// A correct observation of an earlier, not yet completed step marks that
/// step completed. The pointer never moves backwards.
pub fn advance_progress(j: &Judgment, progress: &ProgressState) -> Result<ProgressState, MonitorError> {
    let mut next = progress.clone();
    if let Some(target) = j.advanced_to {
        if target >= progress.n_steps || target <= progress.current_step {
            return Err(MonitorError::AdvanceOutOfRange { target, current: progress.current_step, n_steps: progress.n_steps });
        }
        next.completed_steps.insert(progress.current_step);
        next.current_step = target;
    } else if let (true, Some(true), Some(step)) = (j.relevant, j.correct, j.step) {
        if step < progress.current_step {
            next.completed_steps.insert(step);
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimTime;
    use crate::knowledge::{SentenceUnit, Step, SCHEMA_VERSION};

    fn knowledge(n: usize) -> RecipeKnowledge {
        let sentences = (0..n).map(|i| SentenceUnit::new(i, format!("Step {i}."), i as f64, i as f64 + 0.5)).collect();
        let summaries = ["fill pot with water", "add salt to the water", "boil the pasta", "chop onions", "drain pasta"];
        let steps = (0..n)
            .map(|i| Step { index: i, summary: summaries[i % summaries.len()].into(), first_sentence: i, last_sentence: i })
            .collect();
        RecipeKnowledge {
            schema_version: SCHEMA_VERSION,
            recipe_id: "t".into(),
            title: "t".into(),
            video_duration: n as f64 + 1.0,
            sentences,
            ingredients: vec![],
            steps,
        }
    }

    fn obs(step: Option<usize>, action: &str) -> Observation {
        Observation {
            tick_id: 1,
            timestamp: SimTime(2000),
            action: action.into(),
            matched_step: step,
            visible_items: vec![],
            sounds: vec![],
            raw_descriptor: String::new(),
            degraded: false,
        }
    }

    fn progress(current: usize, completed: &[usize], skipped: &[usize]) -> ProgressState {
        ProgressState {
            current_step: current,
            completed_steps: completed.iter().copied().collect(),
            skipped_steps: skipped.iter().copied().collect(),
            n_steps: 5,
        }
    }

    /// Set-difference oracle: steps before `matched` that are in neither set.
    fn missed_oracle(matched: usize, completed: &[usize], skipped: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for s in 0..5 {
            if s < matched && !completed.contains(&s) && !skipped.contains(&s) {
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn nothing_missed_when_prior_steps_done() {
        let j = judge(1, &obs(Some(2), "boiling pasta"), &knowledge(5), &progress(2, &[0, 1], &[]), &RuleJudge);
        assert!(j.relevant);
        assert_eq!(j.missed_steps, Vec::<usize>::new());
    }

    #[test]
    fn gap_in_completed_is_missed() {
        let j = judge(1, &obs(Some(3), "chopping onions"), &knowledge(5), &progress(3, &[0, 1], &[]), &RuleJudge);
        assert_eq!(j.missed_steps, missed_oracle(3, &[0, 1], &[]));
        assert_eq!(j.missed_steps, vec![2]);
    }

    #[test]
    fn declared_skip_suppresses_missed() {
        let j = judge(1, &obs(Some(2), "boiling pasta"), &knowledge(5), &progress(2, &[0, 1], &[2]), &RuleJudge);
        assert_eq!(j.missed_steps, missed_oracle(2, &[0, 1], &[2]));
        let j = judge(1, &obs(Some(3), "chopping onions"), &knowledge(5), &progress(3, &[0, 1], &[2]), &RuleJudge);
        assert!(j.missed_steps.is_empty());
    }

    #[test]
    fn advancing_counts_the_left_step_as_done() {
        // Filling the pot (step 0), then seen boiling (step 2): salt (1) missed.
        let j = judge(1, &obs(Some(2), "boiling the pasta"), &knowledge(5), &progress(0, &[], &[]), &RuleJudge);
        assert_eq!(j.advanced_to, Some(2));
        assert_eq!(j.missed_steps, vec![1]);
    }

    #[test]
    fn mismatched_action_is_incorrect() {
        let j = judge(1, &obs(Some(1), "stirring sauce"), &knowledge(5), &progress(1, &[0], &[]), &RuleJudge);
        assert_eq!(j.correct, Some(false));
        let j = judge(1, &obs(Some(1), "adding salt"), &knowledge(5), &progress(1, &[0], &[]), &RuleJudge);
        assert_eq!(j.correct, Some(true));
    }

    #[test]
    fn unmatched_or_degraded_is_irrelevant() {
        let j = judge(1, &obs(None, "talking"), &knowledge(5), &progress(0, &[], &[]), &RuleJudge);
        assert!(!j.relevant && j.correct.is_none() && !j.degraded);
        let degraded = Observation::degraded(2, SimTime(4000), "perceiver down");
        let j = judge(2, &degraded, &knowledge(5), &progress(0, &[], &[]), &RuleJudge);
        assert!(j.degraded && !j.relevant);
    }

    struct Broken;
    impl Judge for Broken {
        fn judge(&self, _: &Observation, _: &RecipeKnowledge, _: &ProgressState) -> Result<Verdict, AdapterError> {
            Ok(Verdict { relevant: true, correct: Some(true), missed_steps: vec![4], advanced_to: None })
        }
    }

    #[test]
    fn inconsistent_verdict_degrades() {
        let j = judge(1, &obs(Some(1), "x"), &knowledge(5), &progress(1, &[0], &[]), &Broken);
        assert!(j.degraded && !j.relevant);
    }

    fn judgment(step: Option<usize>, correct: Option<bool>, advanced_to: Option<usize>) -> Judgment {
        Judgment {
            judgment_id: 1,
            tick_id: 1,
            step,
            relevant: step.is_some(),
            correct,
            missed_steps: vec![],
            advanced_to,
            degraded: false,
        }
    }

    #[test]
    fn advance_moves_pointer() {
        let p = advance_progress(&judgment(Some(2), Some(true), Some(2)), &progress(1, &[0], &[])).unwrap();
        assert_eq!(p.current_step, 2);
        assert!(p.completed_steps.contains(&1));
        let same = advance_progress(&judgment(None, None, None), &progress(1, &[0], &[])).unwrap();
        assert_eq!(same, progress(1, &[0], &[]));
    }

    #[test]
    fn advance_fold_over_script() {
        let mut p = progress(0, &[], &[]);
        for target in 1..=3 {
            p = advance_progress(&judgment(Some(target), Some(true), Some(target)), &p).unwrap();
        }
        // Fold oracle: each advance completes the previous pointer.
        assert_eq!(p.completed_steps, [0, 1, 2].into_iter().collect());
        assert_eq!(p.current_step, 3);
        assert!(p.is_valid());
    }

    #[test]
    fn out_of_range_advance_is_rejected() {
        let err = advance_progress(&judgment(Some(9), Some(true), Some(9)), &progress(1, &[0], &[])).unwrap_err();
        assert!(matches!(err, MonitorError::AdvanceOutOfRange { .. }));
    }

    #[test]
    fn late_correct_step_is_caught_up() {
        let p = advance_progress(&judgment(Some(1), Some(true), None), &progress(2, &[0], &[])).unwrap();
        assert!(p.completed_steps.contains(&1));
        assert_eq!(p.current_step, 2);
    }
}
