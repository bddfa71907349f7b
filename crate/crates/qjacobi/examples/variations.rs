//! Outer and inner variation residuals of a harmonic two-valued map.

use qjacobi::field::DiscreteQField;
use qjacobi::variation::{variation_residuals, VariationTest};
use qjacobi::{Mesh, Scene};
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 1.0 / 32.0)?);
    let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| {
        let (r, th) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
        let (u, v) = (r.powf(1.5) * (1.5 * th).cos(), r.powf(1.5) * (1.5 * th).sin());
        vec![vec![u, v], vec![-u, -v]]
    })?;

    let c = vec![0.0; 4];
    let tests = [
        ("outer", VariationTest::OuterCutoff { center: c.clone(), radius: 0.7 }),
        ("inner radial", VariationTest::InnerRadial { center: c.clone(), radius: 0.7 }),
        ("inner shifted", VariationTest::InnerTranslation { center: vec![0.1, 0.0, 0.0, 0.0], radius: 0.5, direction: vec![1.0, 0.0, 0.0, 0.0] }),
    ];
    for (name, t) in tests {
        let rep = variation_residuals(&n, &t)?;
        println!("{name:14} lhs {:+.5e} rhs {:+.5e} relative {:.2e}", rep.lhs, rep.rhs, rep.relative);
    }
    Ok(())
}
