//! Runs the twelve acceptance criteria and prints one line per criterion.
//! Built without the test harness so the lines show under plain `cargo test`.

use qjacobi::checks::{Suite, CRITERIA};
use std::process::ExitCode;

fn main() -> ExitCode {
    let suite = Suite::new(0);
    let mut failed = Vec::new();
    for &(id, _) in CRITERIA.iter() {
        let t = std::time::Instant::now();
        let out = suite.run(id);
        println!("{} [{:.1}s]", out.line(), t.elapsed().as_secs_f64());
        if !out.passed {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", CRITERIA.len(), CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
