//! Blow-ups at a collapsed point and their limit.

use qjacobi::checks::two_mode_sheets;
use qjacobi::field::DiscreteQField;
use qjacobi::frequency::{blow_up_domain, tangent_map};
use qjacobi::{Mesh, Scene};
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let scene = Scene::flat_disk(2, 2, 0);
    let mesh = Arc::new(Mesh::ball(&scene, 1.0, 1.0 / 32.0)?);
    let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| two_mode_sheets(x, 0.5))?;
    let target = blow_up_domain(&scene, 1.0 / 16.0)?;

    let tm = tangent_map(&n, &[0.0; 4], &[0.6, 0.3, 0.15], &target, 1e-2)?;
    println!("homogeneity {:.4}, frequency {:.4}", tm.mu, tm.mu_frequency);
    println!("successive L2 gaps {:?}", tm.cauchy);
    println!("limit at origin {:.2e}, non-convergent {}", tm.origin_value, tm.non_convergent);
    Ok(())
}
