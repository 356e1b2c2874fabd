//! The acceptance gate: runs all ten verification criteria with the default
//! seed and tolerances, prints one line per criterion, and fails if any
//! criterion does.

use ggc_cbi_cli::verify::{run_all, VerifyOptions, CRITERIA};

#[test]
fn all_criteria_pass() {
    let results = run_all(&VerifyOptions { seed: 7, tol: None, only: Vec::new() });
    assert_eq!(results.len(), CRITERIA);
    let mut lines = Vec::new();
    for r in &results {
        let line = format!(
            "criterion {:02} {} {} [{:.2} s] {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            r.details
        );
        println!("{line}");
        lines.push((r.passed, line));
    }
    let failures: Vec<&String> =
        lines.iter().filter(|(p, _)| !p).map(|(_, l)| l).collect();
    assert!(failures.is_empty(), "failed criteria:\n{}", {
        let mut joined = String::new();
        for f in &failures {
            joined.push_str(f);
            joined.push('\n');
        }
        joined
    });
}
