//! Interpolating between two two-valued circle maps across an annulus.

use qjacobi::collar::{circle_energies, collar_interpolation};
use qjacobi::harmonic::CircleMapDecomposition;

fn main() -> qjacobi::Result<()> {
    let inner = CircleMapDecomposition::from_modes(2, vec![(2, vec![0.0, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]])])?;
    let outer = CircleMapDecomposition::from_modes(
        2,
        vec![(2, vec![0.2, 0.0], vec![vec![1.1, 0.0], vec![0.0, 0.1]], vec![vec![0.0, 0.9], vec![0.05, 0.0]])],
    )?;
    let (f1, f2) = (inner.sample(1.0, 128), outer.sample(1.0, 128));
    let (l2, dir) = circle_energies(&f1)?;
    println!("inner trace: L2 {l2:.5}, Dirichlet {dir:.5}");

    for lambda in [0.5, 0.25, 0.1] {
        let (_, rep) = collar_interpolation(&f1, &f2, lambda)?;
        println!(
            "lambda {lambda}: L2 {:.4e} Dir {:.4e} constants {:.3} {:.3}, obstructed cells {}",
            rep.l2,
            rep.dirichlet,
            rep.c_l2,
            rep.c_dir,
            rep.obstructed_cells.len()
        );
    }
    Ok(())
}
