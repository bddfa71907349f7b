//! Fourier decomposition of a two-valued circle map and its rolled
//! harmonic extension into the disk.

use qjacobi::harmonic::{closed_form_energies, decompose_irreducible, harmonic_extension, quadrature_energies, CircleMapDecomposition};

fn main() -> qjacobi::Result<()> {
    // one irreducible piece of winding 2: θ ↦ ±e^{iθ/2}
    let dec = CircleMapDecomposition::from_modes(2, vec![(2, vec![0.0, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]])])?;
    let exact = closed_form_energies(&dec, 1.0);
    let quad = quadrature_energies(&dec, 1.0, 2048);
    println!("disk Dirichlet: closed form {:.12}, quadrature {:.12}", exact.disk_dirichlet, quad.disk_dirichlet);

    let (ext, rep) = harmonic_extension(&dec, 1.0)?;
    println!("Dir(disk)/Dir(circle) = {:.4}, L2(disk)/L2(circle) = {:.4}", rep.dir_ratio, rep.l2_ratio);
    println!("value at (0.25, 0): {:?}", ext.eval(0.25, 0.0).canonical());

    // recover the pieces from samples alone
    let back = decompose_irreducible(&dec.sample(1.0, 256), 1.0, 8, 1e-9)?;
    println!("windings {:?}, reassembly error {:.2e}", back.windings(), back.reassembly_error);
    Ok(())
}
