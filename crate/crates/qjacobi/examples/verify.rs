//! Run selected acceptance checks, e.g. `--example verify -- 1 2 11`.

use qjacobi::checks::{Suite, CRITERIA};

fn main() {
    let ids: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { vec![1, 2, 11] } else { ids };
    let suite = Suite::new(0);
    for id in ids {
        if !CRITERIA.iter().any(|(i, _)| *i == id) {
            eprintln!("no check {id}");
            continue;
        }
        let out = suite.run(id);
        println!("{}", out.line());
    }
}
