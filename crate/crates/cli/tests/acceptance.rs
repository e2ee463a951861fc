//! Acceptance suite: prints one PASS/FAIL line per criterion and fails if any criterion fails.

use std::io::Write;
use std::time::Instant;

use qbell_cli::acceptance::{run_criterion, CRITERIA};

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    for (id, _, _) in CRITERIA {
        let start = Instant::now();
        let result = run_criterion(id);
        let mut out = std::io::stdout().lock();
        writeln!(out, "{} ({:.1} s)", result.line(), start.elapsed().as_secs_f64()).unwrap();
        out.flush().unwrap();
        if !result.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
