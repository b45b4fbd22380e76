//! Acquire backscatter data u^a(a, t) for a set of sources on the unit
//! sphere and a set of observation times, and emit the dataset as CSV.

use pointscatter::forward_solver::{acquire_data, grid_sources, SolverConfig};
use pointscatter::potential::Potential;
use pointscatter::sphere_geometry::SphereGrid;

fn main() -> pointscatter::Result<()> {
    let q = Potential::radial_bump(0.5, 2);
    let grid = SphereGrid::gauss_product(2, 3);
    let sources = grid_sources(&grid);
    let times: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();

    let config = SolverConfig::default();
    let data = acquire_data(&q, &sources, &times, &config)?;

    let failures = data.errors.iter().flatten().count();
    println!(
        "# {} sources x {} times, {} failed solves",
        sources.len(),
        times.len(),
        failures
    );
    print!("{}", data.to_csv());
    Ok(())
}
