use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use galley_core::harness::*;
use galley_core::orchestrator::EventKind;
use galley_core::session::{label_template, parse_labels, trace_to_jsonl, StimulusKind};

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/scenarios")
}

fn recipe() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/recipes/spaghetti.json").display().to_string()
}

fn runs() -> Vec<ScenarioRun> {
    load_scenarios(&scenario_dir()).unwrap().iter().map(|(_, s)| run_scenario(s).unwrap()).collect()
}

#[test]
fn shipped_scenarios_pass() {
    let runs = runs();
    assert_eq!(runs.len(), 5);
    for run in &runs {
        assert!(run.passed(), "{}", run.report());
    }
}

#[test]
fn replays_are_bit_identical() {
    for (a, b) in runs().iter().zip(runs().iter()) {
        assert_eq!(trace_to_jsonl(&a.trace), trace_to_jsonl(&b.trace), "{}", a.name);
        assert_eq!(a.responses, b.responses);
    }
}

#[test]
fn scenario_library_covers_every_reachable_cell() {
    let taken: BTreeSet<_> = runs().iter().flat_map(|r| cells_taken(&r.trace)).collect();
    let report = coverage_report(&taken);
    assert_eq!(report.reachable, 68);
    assert!(report.complete(), "{}", report.render());
}

#[test]
fn empty_timeline_only_starts_up() {
    let script = ScenarioScript::parse(&format!("name = \"empty\"\nrecipe = {:?}\n", recipe())).unwrap();
    let run = run_scenario(&script).unwrap();
    assert_eq!(run.trace.len(), 1);
    assert_eq!(run.trace[0].stimulus, StimulusKind::Startup);
    assert!(run.passed());
}

#[test]
fn unsorted_timeline_is_rejected() {
    let text = format!(
        "name = \"bad\"\nrecipe = {:?}\n[[timeline]]\nat = 3.0\nkind = \"utterance\"\ntext = \"a\"\n[[timeline]]\nat = 1.0\nkind = \"utterance\"\ntext = \"b\"\n",
        recipe()
    );
    assert!(matches!(ScenarioScript::parse(&text), Err(ScriptError::Invalid(..))));
}

#[test]
fn failed_expectations_name_nearby_records() {
    let text = format!(
        "name = \"wrong\"\nrecipe = {:?}\n[[timeline]]\nat = 1.0\nkind = \"utterance\"\ntext = \"What's my next step?\"\n\
         [[expect]]\nby = 2.0\nkind = \"state\"\nvalue = \"S1\"\n",
        recipe()
    );
    let run = run_scenario(&ScenarioScript::parse(&text).unwrap()).unwrap();
    assert!(!run.passed());
    assert!(!run.results[0].nearest.is_empty());
    let xml = junit_xml(&[run]);
    assert!(xml.contains("tests=\"1\" failures=\"1\""), "{xml}");
    assert!(xml.contains("<failure message="));
}

#[test]
fn junit_counts_every_expectation() {
    let runs = runs();
    let total: usize = runs.iter().map(|r| r.results.len()).sum();
    let xml = junit_xml(&runs);
    assert!(xml.starts_with("<?xml"));
    assert!(xml.contains(&format!("<testsuites name=\"scenarios\" tests=\"{total}\" failures=\"0\">")));
    assert_eq!(xml.matches("<testcase ").count(), total);
    assert_eq!(xml.matches("<testsuite ").count(), runs.len());
}

#[test]
fn harness_traces_can_be_labelled_and_scored() {
    let run = runs().into_iter().find(|r| r.name.contains("usage")).unwrap();
    let template = label_template(&run.trace);
    let queries: Vec<_> = run.trace.iter().filter(|r| r.is_user_query()).collect();
    assert_eq!(template.lines().filter(|l| !l.starts_with('#')).count(), queries.len());
    // Label every query with its own classification; mark the first answer wrong.
    let sheet: String = queries
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}\t{}\t{}\n", r.seq, r.classified_event.unwrap().code(), if i == 0 { "n" } else { "y" }))
        .collect();
    let report = score_trace(&run.trace, &parse_labels(&sheet).unwrap()).unwrap();
    let follow_ups = queries
        .iter()
        .filter(|r| matches!(r.classified_event, Some(EventKind::FollowUpDetails | EventKind::FlagResponseWrong)))
        .count();
    assert_eq!(report.total_queries, queries.len());
    assert_eq!(report.mapping_queries, queries.len() - follow_ups);
    assert_eq!(report.correct_mappings, report.mapping_queries);
    assert_eq!(report.correct_responses, queries.len() - 1);
}
