//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use delos::criteria::{corpus_outcomes, run_criterion, CRITERIA};

fn main() -> ExitCode {
    let mut failed = 0;
    for c in CRITERIA {
        let o = run_criterion(c);
        println!("{}", o.line());
        if !o.passed() && o.required {
            failed += 1;
        }
    }
    for o in corpus_outcomes() {
        println!("{}", o.line());
        if !o.passed() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} required checks failed");
        ExitCode::FAILURE
    } else {
        println!("all required checks passed");
        ExitCode::SUCCESS
    }
}
