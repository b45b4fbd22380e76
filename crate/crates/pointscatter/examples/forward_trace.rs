//! Solve the light-cone problem for one source on the unit sphere and look
//! at the smooth part of the field: its trace back at the source (the
//! backscatter observable), the interior PDE residual, and the agreement of
//! the short-time trace with the first Born term.

use nalgebra::Vector3;
use pointscatter::forward_solver::{born_first_term, picard_solve, SolverConfig};
use pointscatter::potential::Potential;
use pointscatter::sphere_geometry::SourcePoint;

fn main() -> pointscatter::Result<()> {
    let q = Potential::radial_bump(0.5, 2);
    let a = SourcePoint::new(Vector3::z())?;
    let config = SolverConfig::default();

    let field = picard_solve(&q, &a, &config)?;
    println!(
        "converged in {} sweeps, sup-change history {:?}",
        field.iteration_history.len(),
        field.iteration_history
    );

    let res = field.pde_residual(&q);
    println!(
        "interior PDE residual: max {:.3e}, mean {:.3e} over {} cells",
        res.max_residual, res.mean_residual, res.cells_checked
    );

    println!("\n   t        trace u(a, t)    first Born term");
    for k in 1..=10 {
        let t = 0.2 * k as f64;
        let trace = field.trace_at_source(t)?;
        let born = born_first_term(&q, &a, a.position(), t, 64)?;
        println!("  {t:.2}    {trace:+.8e}    {born:+.8e}");
    }
    Ok(())
}
