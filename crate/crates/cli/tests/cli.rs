use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn galley(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galley")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn conformance_matches_the_fixture() {
    let fixture = fixtures().join("transitions.v1.tsv");
    let o = galley(&["conformance", "--fixture", path(&fixture)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("state\tE1"), "{out}");
    assert!(out.contains("70 cells checked, 0 mismatches"));
}

#[test]
fn metrics_over_all_fixture_traces() {
    let traces: Vec<PathBuf> = (1..=8).map(|i| fixtures().join(format!("traces/P{i}.jsonl"))).collect();
    let mut args = vec!["metrics"];
    args.extend(traces.iter().map(|p| path(p)));
    let o = galley(&args);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("P5.jsonl: queries 16  mapping 12/16 = 0.75  response 10/16 = 0.63"), "{out}");
    assert!(out.contains("aggregate: queries 83  mapping 68/83 = 0.82  response 56/83 = 0.67"), "{out}");
}

#[test]
fn distill_reproduces_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = fixtures().join("pipeline/three_units");
    let out = dir.path().join("k.json");
    let warnings = dir.path().join("w.jsonl");
    let o = galley(&[
        "distill",
        "--transcript",
        path(&d.join("transcript.tsv")),
        "--frames",
        path(&d.join("frames.tsv")),
        "--audio",
        path(&d.join("audio.wav")),
        "--out",
        path(&out),
        "--recipe-id",
        "three-units",
        "--title",
        "Three units",
        "--warnings",
        path(&warnings),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(d.join("golden.json")).unwrap());
}

#[test]
fn harness_run_writes_junit_and_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let junit = dir.path().join("junit.xml");
    let traces = dir.path().join("traces");
    let o = galley(&[
        "harness",
        "run",
        path(&fixtures().join("scenarios")),
        "--junit",
        path(&junit),
        "--coverage",
        "--traces",
        path(&traces),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("5 scenarios, 0 failed; 68/68 reachable cells covered"));
    assert!(std::fs::read_to_string(junit).unwrap().contains("failures=\"0\""));

    // Label the usage scenario's queries and score them.
    let trace = traces.join("usage_scenario.jsonl");
    let template = stdout(&galley(&["annotate", path(&trace)]));
    let sheet: String = template
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let seq = l.split('\t').next().unwrap();
            let classified = l.rsplit("| ").next().unwrap().trim();
            format!("{seq}\t{classified}\ty\n")
        })
        .collect();
    let labels = dir.path().join("labels.tsv");
    std::fs::write(&labels, sheet).unwrap();
    let annotated = dir.path().join("annotated.jsonl");
    assert!(galley(&["annotate", path(&trace), "--labels", path(&labels), "--out", path(&annotated)]).status.success());
    let o = galley(&["metrics", path(&annotated)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("= 1.00  response"), "{}", stdout(&o));
}

#[test]
fn unannotated_trace_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("traces");
    galley(&["harness", "run", path(&fixtures().join("scenarios")), "--traces", path(&traces)]);
    let o = galley(&["metrics", path(&traces.join("usage_scenario.jsonl"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("annotation"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn served_session_can_be_exported_and_replayed() {
    let dir = tempfile::tempdir().unwrap();
    let memory = dir.path().join("memory.jsonl");
    let trace = dir.path().join("trace.jsonl");
    let config = dir.path().join("session.toml");
    std::fs::write(
        &config,
        format!(
            "recipe = {:?}\nmemory_file = {:?}\ntrace_file = {:?}\n",
            path(&fixtures().join("recipes/spaghetti.json")),
            path(&memory),
            path(&trace)
        ),
    )
    .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_galley"))
        .args(["serve", "--config", path(&config), "--mock-all"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let input = concat!(
        "{\"type\":\"utterance\",\"text\":\"What's my next step?\"}\n",
        "{\"type\":\"utterance\",\"text\":\"Tell me more\"}\n",
        "not json\n",
        "{\"type\":\"command\",\"command\":\"play\"}\n",
    );
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let kinds: Vec<String> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["type"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds.iter().filter(|k| *k == "response").count(), 2, "{kinds:?}");
    assert!(kinds.contains(&"error".to_string()) && kinds.contains(&"playback".to_string()));

    let o = galley(&["export", path(&memory)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("utterance"));
    let o = galley(&["export", path(&memory), "--format", "jsonl"]);
    assert!(stdout(&o).lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));

    let o = galley(&["replay-trace", path(&trace)]);
    assert!(stdout(&o).contains("\"Tell me more\""));
    let o = galley(&["replay-trace", path(&trace), "--recipe", path(&fixtures().join("recipes/spaghetti.json"))]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("2 utterances replayed, 0 diverged"));
}

#[test]
fn missing_recipe_is_reported() {
    let o = galley(&["serve", "--mock-all"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no recipe"));
}
