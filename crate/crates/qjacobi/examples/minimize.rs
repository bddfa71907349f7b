//! Minimize the Dirichlet energy of a two-valued map with a branched
//! boundary trace, then check the minimizer.

use qjacobi::solver::{boundary_trace, certify_minimizer, minimize_dirichlet, SolveConfig};
use qjacobi::{Mesh, QPoint, Scene};
use std::f64::consts::PI;
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let h = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1.0 / 16.0);
    let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, h)?);
    let bd = boundary_trace(&mesh, |x| {
        let th = x[1].atan2(x[0]);
        let (u, v) = ((1.5 * th).cos(), (1.5 * th).sin());
        QPoint::from_sheets(&[[0.0, 0.0, u, v], [0.0, 0.0, -u, -v]]).unwrap()
    });

    let cfg = SolveConfig { restarts: 2, seed: 1, ..Default::default() };
    let res = minimize_dirichlet(mesh, &bd, &cfg)?;
    println!("h={h}: energy {:.5} (6π = {:.5}), converged {}", res.energy, 6.0 * PI, res.converged);
    println!("restarts {:?}, swaps accepted {}", res.restart_energies, res.accepted_swaps);

    let cert = certify_minimizer(&res.field)?;
    println!("outer/inner variation residuals {:.2e} {:.2e}", cert.outer_residual, cert.inner_residual);
    println!("energy decay exponent {:.3}, Hölder exponent {:.3}", cert.decay_exponent, cert.holder_alpha);
    Ok(())
}
