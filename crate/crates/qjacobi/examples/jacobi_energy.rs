//! The Jacobi energy of a normal two-valued section and its identity with
//! the second variation of the mass.

use qjacobi::field::{fd_variations, jac_energy, DiscreteQField, Region};
use qjacobi::{Mesh, Scene};
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.05)?);
    // the square root z ↦ ±z^{3/2}, in normal coordinates
    let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| {
        let (r, th) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
        let (u, v) = (r.powf(1.5) * (1.5 * th).cos(), r.powf(1.5) * (1.5 * th).sin());
        vec![vec![u, v], vec![-u, -v]]
    })?;

    let rep = jac_energy(&n, &Region::all(&mesh))?;
    println!("Jac = {:.6}  (6π = {:.6})", rep.jac, 6.0 * std::f64::consts::PI);
    println!("normal Dirichlet {:.6}, curvature terms {:.2e} {:.2e} {:.2e}", rep.dir_normal, rep.a_term, rep.ricci_term, rep.abar_term);

    let fd = fd_variations(&n, None)?;
    println!("d/dt M = {:.3e}, d²/dt² M = {:.6}, ratio to Jac {:.5}", fd.delta1, fd.delta2, fd.delta2 / rep.jac);
    Ok(())
}
