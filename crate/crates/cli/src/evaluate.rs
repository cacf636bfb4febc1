use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use galley_core::harness::{cells_taken, coverage_report, junit_xml, load_scenarios, run_scenario};
use galley_core::orchestrator::{parse_transition_table, render_transition_table, transition};
use galley_core::session::{aggregate, annotate as apply_labels, compute_metrics, label_template, parse_labels, read_trace, trace_to_jsonl};

pub fn metrics(paths: &[impl AsRef<Path>], json: bool) -> Result<bool> {
    let mut reports = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let report = compute_metrics(&read_trace(path)?).with_context(|| path.display().to_string())?;
        if json {
            println!("{}", serde_json::json!({ "trace": path.display().to_string(), "report": report }));
        } else {
            println!("{}: {}", path.display(), report.render());
        }
        reports.push(report);
    }
    if reports.len() > 1 {
        let total = aggregate(&reports);
        if json {
            println!("{}", serde_json::json!({ "trace": "aggregate", "report": total }));
        } else {
            println!("aggregate: {}", total.render());
        }
    }
    Ok(true)
}

pub fn annotate(trace: &Path, labels: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let records = read_trace(trace)?;
    let text = match labels {
        None => label_template(&records),
        Some(path) => {
            let sheet = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            trace_to_jsonl(&apply_labels(&records, &parse_labels(&sheet)?)?)
        }
    };
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(true)
}

pub fn conformance(fixture: Option<&Path>) -> Result<bool> {
    print!("{}", render_transition_table());
    let Some(path) = fixture else {
        return Ok(true);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table = parse_transition_table(&text).map_err(anyhow::Error::msg)?;
    let mismatches: Vec<String> = table
        .iter()
        .filter(|((s, e), t)| transition(*s, *e) != **t)
        .map(|((s, e), t)| format!("({s}, {e}): fixture {t:?}, implemented {:?}", transition(*s, *e)))
        .collect();
    for m in &mismatches {
        println!("mismatch {m}");
    }
    println!("{} cells checked, {} mismatches", table.len(), mismatches.len());
    Ok(mismatches.is_empty() && table.len() == 70)
}

pub fn harness_run(dir: &Path, junit: Option<&Path>, coverage: bool, traces: Option<&Path>) -> Result<bool> {
    let mut runs = Vec::new();
    for (path, script) in load_scenarios(dir)? {
        let run = run_scenario(&script).with_context(|| path.display().to_string())?;
        println!("{}", run.report());
        if let Some(dir) = traces {
            std::fs::create_dir_all(dir)?;
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            std::fs::write(dir.join(format!("{stem}.jsonl")), trace_to_jsonl(&run.trace))?;
        }
        runs.push(run);
    }
    if let Some(path) = junit {
        std::fs::write(path, junit_xml(&runs)).with_context(|| format!("writing {}", path.display()))?;
    }
    let passed = runs.iter().all(|r| r.passed());
    let taken: BTreeSet<_> = runs.iter().flat_map(|r| cells_taken(&r.trace)).collect();
    let report = coverage_report(&taken);
    if coverage {
        print!("{}", report.render());
    }
    println!(
        "{} scenarios, {} failed; {}/{} reachable cells covered",
        runs.len(),
        runs.iter().filter(|r| !r.passed()).count(),
        report.covered.len(),
        report.reachable
    );
    Ok(passed && (!coverage || report.complete()))
}
