use serde::{Deserialize, Serialize};

use super::{SessionError, TraceRecord};

/// Event-mapping and response accuracy over the user queries of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub total_queries: usize,
    /// Queries whose true event is not a follow-up (E7/E8).
    pub mapping_queries: usize,
    pub correct_mappings: usize,
    /// `None` when there is nothing to divide by.
    pub mapping_accuracy: Option<f64>,
    pub correct_responses: usize,
    pub response_accuracy: Option<f64>,
}

/// Two decimals, halves rounded up (10/16 prints as 0.63).
fn two_decimals(x: f64) -> String {
    format!("{:.2}", ((x * 100.0) + 0.5 + 1e-9).floor() / 100.0)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl MetricsReport {
    pub fn from_counts(total_queries: usize, mapping_queries: usize, correct_mappings: usize, correct_responses: usize) -> Self {
        Self {
            total_queries,
            mapping_queries,
            correct_mappings,
            mapping_accuracy: ratio(correct_mappings, mapping_queries),
            correct_responses,
            response_accuracy: ratio(correct_responses, total_queries),
        }
    }

    pub fn render(&self) -> String {
        let fmt = |v: Option<f64>| v.map(two_decimals).unwrap_or_else(|| "-".into());
        format!(
            "queries {}  mapping {}/{} = {}  response {}/{} = {}",
            self.total_queries,
            self.correct_mappings,
            self.mapping_queries,
            fmt(self.mapping_accuracy),
            self.correct_responses,
            self.total_queries,
            fmt(self.response_accuracy)
        )
    }
}

/// Computes the report for an annotated trace.
///
/// mapping accuracy = correctly classified / queries whose true event is not
/// E7 or E8; response accuracy = correct responses / all queries.
pub fn compute_metrics(records: &[TraceRecord]) -> Result<MetricsReport, SessionError> {
    let queries: Vec<&TraceRecord> = records.iter().filter(|r| r.is_user_query()).collect();
    let missing: Vec<u64> = queries
        .iter()
        .filter(|r| r.ground_truth_event.is_none() || r.response_correct.is_none())
        .map(|r| r.seq)
        .collect();
    if !missing.is_empty() {
        return Err(SessionError::IncompleteAnnotation(missing));
    }
    let mapped: Vec<&&TraceRecord> = queries.iter().filter(|r| !r.ground_truth_event.unwrap().is_follow_up()).collect();
    let correct_mappings = mapped.iter().filter(|r| r.classified_event == r.ground_truth_event).count();
    let correct_responses = queries.iter().filter(|r| r.response_correct == Some(true)).count();
    Ok(MetricsReport::from_counts(queries.len(), mapped.len(), correct_mappings, correct_responses))
}

/// Count-weighted combination of several reports.
pub fn aggregate(reports: &[MetricsReport]) -> MetricsReport {
    let sum = |f: fn(&MetricsReport) -> usize| reports.iter().map(f).sum::<usize>();
    MetricsReport::from_counts(
        sum(|r| r.total_queries),
        sum(|r| r.mapping_queries),
        sum(|r| r.correct_mappings),
        sum(|r| r.correct_responses),
    )
}
