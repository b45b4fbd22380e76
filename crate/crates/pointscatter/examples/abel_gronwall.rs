//! Stability ingredients for the radial uniqueness argument: the exact
//! Abel-type double integral identity (its value is pi for every s < r),
//! and the Gronwall ratio R(s) = P(s) / int_s^1 P(rho) (rho - s)^{-1/2} drho
//! whose supremum controls error propagation in layer stripping.

use pointscatter::inversion::{abel_pi_identity, gronwall_report, ShellSamples};
use pointscatter::potential::{shell_norm, Potential};
use pointscatter::sphere_geometry::SphereGrid;

fn main() -> pointscatter::Result<()> {
    println!("Abel identity (expect pi = {:.12}):", std::f64::consts::PI);
    for (s, r) in [(0.0, 1.0), (0.2, 0.9), (0.45, 0.5)] {
        let v = abel_pi_identity(s, r, 64)?;
        println!(
            "  s = {s:.2}, r = {r:.2}: {v:.12}  (error {:.2e})",
            (v - std::f64::consts::PI).abs()
        );
    }

    let q = Potential::radial_bump(1.0, 2);
    let grid = SphereGrid::gauss_product(32, 64);
    let p = ShellSamples::from_fn(
        |rho| {
            if rho == 0.0 {
                0.0
            } else {
                shell_norm(&q, rho, &grid).expect("rho in (0,1]")
            }
        },
        64,
    );
    let report = gronwall_report(&p, 0.1, 100, 64)?;
    println!(
        "\nGronwall sweep on [{}, 0.99]: sup ratio {:.6} at s = {:.4}; pi C^2 = {:.4}",
        report.eps, report.sup_ratio, report.argmax_s, report.pi_c_sq
    );
    Ok(())
}
