//! Round-trip reconstruction of a radial potential by layer stripping:
//! synthesize backscatter data for one source, then march inward shell by
//! shell, subtracting the nonlinear correction computed from the
//! already-reconstructed outer layers.

use nalgebra::Vector3;
use pointscatter::forward_solver::{acquire_data, SolverConfig};
use pointscatter::inversion::{layer_strip_radial, InversionConfig};
use pointscatter::potential::Potential;
use pointscatter::sphere_geometry::SourcePoint;

fn main() -> pointscatter::Result<()> {
    let q_true = Potential::radial_bump(0.5, 2);
    let solver = SolverConfig::default();
    let a = SourcePoint::new(Vector3::z())?;
    let times: Vec<f64> = (0..=128).map(|k| 2.0 * k as f64 / 128.0).collect();
    let data = acquire_data(&q_true, &[a], &times, &solver)?;

    let cfg = InversionConfig::default();
    let profile = layer_strip_radial(&data, &cfg)?;

    println!("  rho      q_true       q_reconstructed");
    for k in (0..profile.rho_grid.len()).step_by(8) {
        let rho = profile.rho_grid[k];
        let truth = q_true.value(rho * Vector3::z());
        println!("  {rho:.3}   {truth:+.6e}   {:+.6e}", profile.values[k]);
    }
    let err = profile.relative_l2_error(&q_true, cfg.eps);
    println!(
        "\nrelative L2 error outside the central ball of radius {}: {:.3e}",
        cfg.eps, err
    );
    Ok(())
}
