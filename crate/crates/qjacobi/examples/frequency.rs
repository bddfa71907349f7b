//! Radial profiles, the frequency function and the decay fit.

use qjacobi::checks::{two_mode_profile, two_mode_sheets};
use qjacobi::field::DiscreteQField;
use qjacobi::frequency::{decay_fit, default_radii, monotonicity_audit, radial_profiles, RADIUS_RATIO};
use qjacobi::{Mesh, Scene};
use std::sync::Arc;

fn main() -> qjacobi::Result<()> {
    let c = 0.05;
    let radii: Vec<f64> = (0..17).rev().map(|k| 0.5 / RADIUS_RATIO.powi(k)).collect();
    let exact = two_mode_profile(c, &radii);
    let fit = decay_fit(&exact)?;
    println!("exact profile: I0 = {:.6}, beta = {:?}", fit.i0, fit.beta);

    let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 1.0 / 32.0)?);
    let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| two_mode_sheets(x, c))?;
    let p = vec![0.0; 4];
    let prof = radial_profiles(&n, &p, &default_radii(&mesh, &p, None))?;
    for k in prof.valid_indices().into_iter().step_by(3) {
        println!("r={:.3}  D={:.4e}  H={:.4e}  I={:.4}", prof.radii[k], prof.d[k], prof.h[k], prof.i[k]);
    }
    let fit = decay_fit(&prof)?;
    println!("mesh profile: I0 = {:.4} ± {:.1e}, inconsistent {}", fit.i0, fit.i0_interval, fit.inconsistent);
    let audit = monotonicity_audit(&prof)?;
    println!("audit: lambda {:.3}, C0 {:.3}, max Cauchy-Schwarz excess {:.2e}", audit.lambda, audit.c0, audit.cauchy_schwarz);
    Ok(())
}
