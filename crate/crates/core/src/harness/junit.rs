use std::fmt::Write as _;

use super::ScenarioRun;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// JUnit-style XML: one test suite per scenario, one case per expectation.
pub fn junit_xml(runs: &[ScenarioRun]) -> String {
    let tests: usize = runs.iter().map(|r| r.results.len()).sum();
    let failures: usize = runs.iter().map(|r| r.results.iter().filter(|x| !x.passed).count()).sum();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(out, "<testsuites name=\"scenarios\" tests=\"{tests}\" failures=\"{failures}\">").unwrap();
    for run in runs {
        let f = run.results.iter().filter(|x| !x.passed).count();
        writeln!(out, "  <testsuite name=\"{}\" tests=\"{}\" failures=\"{f}\">", escape(&run.name), run.results.len()).unwrap();
        for r in &run.results {
            let name = escape(&r.expectation.describe());
            if r.passed {
                writeln!(out, "    <testcase classname=\"{}\" name=\"{name}\"/>", escape(&run.name)).unwrap();
            } else {
                writeln!(out, "    <testcase classname=\"{}\" name=\"{name}\">", escape(&run.name)).unwrap();
                writeln!(
                    out,
                    "      <failure message=\"{}\">nearest trace records {:?}</failure>",
                    escape(&r.detail),
                    r.nearest
                )
                .unwrap();
                out.push_str("    </testcase>\n");
            }
        }
        out.push_str("  </testsuite>\n");
    }
    out.push_str("</testsuites>\n");
    out
}
