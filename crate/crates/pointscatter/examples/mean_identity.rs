//! Check the first structural identity: for a boundary source `a`, the
//! tau-derivative of `tau * (Mp)(a, tau)` equals a boundary term plus a
//! weighted singular integral of `p` over the in-ball cap of the sphere of
//! radius `tau` about `a`. Verified here for a radial potential (where the
//! closed form is known) and a harmonically modulated one.

use nalgebra::Vector3;
use pointscatter::potential::Potential;
use pointscatter::sphere_geometry::SourcePoint;
use pointscatter::spherical_means::{prop21_residual, Prop21Settings};

fn main() -> pointscatter::Result<()> {
    let a = SourcePoint::from_direction(Vector3::new(0.3, -0.2, 0.93))?;
    let settings = Prop21Settings::default();

    for (label, p) in [
        ("radial bump (c=1, m=2)", Potential::radial_bump(1.0, 2)),
        (
            "degree-2 harmonic modulation",
            Potential::harmonic_modulated(1.0, 2, 2, 1)?,
        ),
    ] {
        println!("{label}:");
        println!("   tau       lhs d/dtau[tau M]     rhs          rel residual");
        let mut worst = 0.0f64;
        for k in 0..9 {
            let tau = 0.1 + 0.1 * k as f64;
            let r = prop21_residual(&p, &a, tau, &settings)?;
            worst = worst.max(r.relative);
            println!(
                "  {tau:.2}    {:+.8e}    {:+.8e}    {:.2e}",
                r.lhs, r.rhs, r.relative
            );
        }
        println!("  max relative residual: {worst:.2e}\n");
    }
    Ok(())
}
