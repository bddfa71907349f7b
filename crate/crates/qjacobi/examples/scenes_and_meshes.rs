//! Built-in scenes and the meshes built on them.

use qjacobi::{Mesh, Scene};
use std::f64::consts::PI;

fn main() -> qjacobi::Result<()> {
    let disk = Scene::flat_disk(2, 2, 0);
    let sphere = Scene::equatorial_sphere(2);
    for (name, s) in [("flat_disk", &disk), ("equatorial_sphere", &sphere)] {
        println!("{name}: m={} k={} d={} flat={} |A|,|R| bound {:.3}", s.m(), s.k(), s.d(), s.is_flat(), s.b_bound());
    }

    for h in [0.2, 0.1, 0.05] {
        let m = Mesh::ball(&disk, 1.0, h)?;
        println!("disk h={h}: {} vertices, area {:.6} (exact {:.6})", m.num_vertices(), m.total_volume(), PI);
    }
    let m = Mesh::closed(&sphere, 0.1)?;
    println!("sphere h=0.1: {} cells, area {:.6} (exact {:.6})", m.num_cells(), m.total_volume(), 4.0 * PI);

    // geodesic balls around the pole of the sphere
    let (p, e) = (sphere.pole(), sphere.pole_frame().remove(0));
    for r in [0.5, 1.0] {
        let x = sphere.exp_sigma(&p, &e.iter().map(|c| r * c).collect::<Vec<_>>())?;
        println!("exp_p({r}) = {x:.4?}, distance back {:.6}, ball volume {:.6}", sphere.distance_sigma(&p, &x), sphere.ball_volume(r));
    }
    Ok(())
}
