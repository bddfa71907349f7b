//! The smallest eigenvalue of the Jacobi operator on geodesic caps.

use qjacobi::solver::stability_constant;
use qjacobi::{Mesh, Scene};
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let sphere = Scene::equatorial_sphere(2);
    // the equator is stable on caps smaller than a hemisphere
    for r in [0.6, 1.0, 1.4] {
        let mesh = Arc::new(Mesh::ball(&sphere, r, 1.0 / 16.0)?);
        let st = stability_constant(&mesh)?;
        println!("cap radius {r}: constant {:.4} after {} iterations", st.constant, st.iterations);
    }
    let flat = Arc::new(Mesh::ball(&Scene::flat_disk(2, 1, 0), 1.0, 1.0 / 16.0)?);
    println!("flat disk: {:.4}", stability_constant(&flat)?.constant);
    Ok(())
}
