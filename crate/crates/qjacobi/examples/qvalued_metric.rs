//! Distances, matchings and averages on unordered Q-tuples.

use qjacobi::aq::optimal_matching;
use qjacobi::{eta_mean, g_distance, spread_stats, QPoint, TAU_COIN};

fn main() -> qjacobi::Result<()> {
    let t = QPoint::from_sheets(&[[0.0, 1.0], [2.0, 0.0], [2.0, 0.0]])?;
    let s = QPoint::from_sheets(&[[2.1, 0.0], [0.0, 0.9], [1.9, 0.1]])?;

    // labels carry no meaning, only the multiset does
    println!("t == t relabelled: {}", t == t.permuted(&[2, 0, 1]));
    let (perm, cost) = optimal_matching(&t, &s)?;
    println!("matching {perm:?}, G(t, s) = {:.6} (cost {cost:.6})", g_distance(&t, &s)?);

    println!("eta(t) = {:?}", eta_mean(&t));
    let sp = spread_stats(&t, TAU_COIN);
    println!("diameter {:.3}, separation {:.3}, distinct values {}", sp.diameter, sp.separation, sp.support);

    let rec = t.to_record();
    println!("record: {rec}");
    assert_eq!(QPoint::from_record(&rec)?, t);
    Ok(())
}
