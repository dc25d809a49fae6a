//! Runs the twelve acceptance criteria and prints one PASS/FAIL line each.
//! Set ACCEPTANCE_ONLY to a comma-separated list of family names or ids to
//! run a subset.

use std::process::ExitCode;

use schurdyn::verify::{run, summary_lines, DEFAULT_SEED};

fn main() -> ExitCode {
    let only: Vec<String> = std::env::var("ACCEPTANCE_ONLY")
        .map(|s| s.split(',').map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect())
        .unwrap_or_default();
    let report = match run(&only, DEFAULT_SEED) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::FAILURE;
        }
    };
    for (line, c) in summary_lines(&report).into_iter().zip(&report.criteria) {
        println!("{line}");
        for check in &c.checks {
            println!(
                "    {} {}: residual {:.3e} (tolerance {:.3e}) {}",
                if check.passed { "ok  " } else { "FAIL" },
                check.name,
                check.residual,
                check.tolerance,
                check.worst_case
            );
        }
    }
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
