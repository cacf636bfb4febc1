use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::orchestrator::{transition, DialogueState, EventKind, Transition};

/// Every `(state, event)` cell the transition table accepts.
pub fn reachable_cells() -> BTreeSet<(DialogueState, EventKind)> {
    DialogueState::ALL
        .into_iter()
        .flat_map(|s| EventKind::ALL.into_iter().map(move |e| (s, e)))
        .filter(|(s, e)| transition(*s, *e) != Transition::Rejected)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub reachable: usize,
    pub covered: BTreeSet<(DialogueState, EventKind)>,
    pub missing: BTreeSet<(DialogueState, EventKind)>,
}

impl CoverageReport {
    pub fn complete(&self) -> bool {
        self.missing.is_empty()
    }

    /// A state-by-event grid: `x` covered, `.` missing, blank unreachable.
    pub fn render(&self) -> String {
        let mut out = String::from("    ");
        for e in EventKind::ALL {
            write!(out, "{:>4}", e.code()).unwrap();
        }
        out.push('\n');
        for s in DialogueState::ALL {
            write!(out, "{:<4}", s.code()).unwrap();
            for e in EventKind::ALL {
                let mark = if self.covered.contains(&(s, e)) {
                    "x"
                } else if self.missing.contains(&(s, e)) {
                    "."
                } else {
                    " "
                };
                write!(out, "{mark:>4}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "covered {}/{} reachable cells", self.covered.len(), self.reachable).unwrap();
        out
    }
}

/// Compares the cells taken across runs with the reachable set.
pub fn coverage_report(taken: &BTreeSet<(DialogueState, EventKind)>) -> CoverageReport {
    let reachable = reachable_cells();
    CoverageReport {
        reachable: reachable.len(),
        covered: reachable.intersection(taken).copied().collect(),
        missing: reachable.difference(taken).copied().collect(),
    }
}
