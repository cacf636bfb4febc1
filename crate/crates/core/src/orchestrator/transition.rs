//! The transition function and its tabular form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{DialogueState, EventKind};

/// The committed transition table, version 1.
pub const TRANSITION_FIXTURE_V1: &str = include_str!("../../fixtures/transitions.v1.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    To(DialogueState),
    Rejected,
}

impl Transition {
    /// The state after applying this transition from `from`.
    pub fn resolve(self, from: DialogueState) -> DialogueState {
        match self {
            Transition::To(s) => s,
            Transition::Rejected => from,
        }
    }
}

/// Total transition function over every (state, event) pair.
///
/// - Top-level queries (E1 to E4) route as from idle in every state.
/// - Monitor alerts (E5, E6) always lead to problem solving.
/// - Follow-ups (E7 to detail elaboration, E8 to correction review) need a
///   prior response, so they are rejected in idle.
/// - Reset (E9) always returns to idle.
/// - Media control (E10) never changes state.
pub fn transition(state: DialogueState, event: EventKind) -> Transition {
    use DialogueState as S;
    use EventKind as E;
    match (state, event) {
        (_, E::FoodStateQuery) => Transition::To(S::FoodState),
        (_, E::StepQuery) => Transition::To(S::StepGuide),
        (_, E::ProblemQuery | E::MissedStepDetected | E::IncorrectStepDetected) => {
            Transition::To(S::ProblemSolving)
        }
        (_, E::GeneralVisualQuery) => Transition::To(S::GeneralVisual),
        (S::Idle, E::FollowUpDetails | E::FlagResponseWrong) => Transition::Rejected,
        (_, E::FollowUpDetails) => Transition::To(S::DetailElaboration),
        (_, E::FlagResponseWrong) => Transition::To(S::CorrectionReview),
        (_, E::Reset) => Transition::To(S::Idle),
        (s, E::MediaControl) => Transition::To(s),
    }
}

pub type TransitionTable = BTreeMap<(DialogueState, EventKind), Transition>;

/// Parses a tab-separated transition table.
pub fn parse_transition_table(text: &str) -> Result<TransitionTable, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or("missing header row")?;
    let events = header
        .split('\t')
        .skip(1)
        .map(str::parse::<EventKind>)
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = TransitionTable::new();
    for line in lines {
        let mut cells = line.split('\t');
        let state: DialogueState = cells.next().ok_or("empty row")?.parse()?;
        let cells: Vec<&str> = cells.collect();
        if cells.len() != events.len() {
            return Err(format!("row {state} has {} cells, expected {}", cells.len(), events.len()));
        }
        for (event, cell) in events.iter().zip(cells) {
            let t = match cell.trim() {
                "-" => Transition::Rejected,
                s => Transition::To(s.parse()?),
            };
            if table.insert((state, *event), t).is_some() {
                return Err(format!("duplicate cell ({state}, {event})"));
            }
        }
    }
    Ok(table)
}

/// Renders the transition function in the fixture's tabular layout.
pub fn render_transition_table() -> String {
    let mut out = String::from("state");
    for e in EventKind::ALL {
        write!(out, "\t{e}").unwrap();
    }
    out.push('\n');
    for s in DialogueState::ALL {
        out.push_str(s.code());
        for e in EventKind::ALL {
            match transition(s, e) {
                Transition::To(next) => write!(out, "\t{next}").unwrap(),
                Transition::Rejected => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}
