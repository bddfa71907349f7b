//! Where sheets meet: multiplicity strata, branch points and a sheet
//! selection on a simply connected piece.

use qjacobi::field::DiscreteQField;
use qjacobi::frequency::multiplicity_strata;
use qjacobi::selection::lipschitz_selection;
use qjacobi::{Mesh, Scene};
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.1)?);
    let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| {
        let (r, th) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
        let (u, v) = (r.sqrt() * (0.5 * th).cos(), r.sqrt() * (0.5 * th).sin());
        vec![vec![u, v], vec![-u, -v]]
    })?;

    let st = multiplicity_strata(&n, 1e-6)?;
    println!("collapsed vertices {:?}, singular {:?}, isolated {}", st.collapsed, st.singular, st.isolated);

    // the whole disk carries monodromy, so the selection records branch edges
    let sel = lipschitz_selection(&n, None)?;
    println!("global selection: {}, branch edges {}", sel.is_global(), sel.branch_edges.len());
    if let Some(e) = sel.branch_edges.first() {
        println!("edge {}-{} permutes sheets by {:?}, cycles {:?}", e.a, e.b, e.perm, e.cycles);
    }
    Ok(())
}
