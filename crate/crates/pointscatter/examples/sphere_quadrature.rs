//! Quadrature building blocks on the unit sphere: product grids, exactness
//! on polynomials, and the geometric weight that concentrates a spherical
//! mean onto the data sphere.

use nalgebra::Vector3;
use pointscatter::sphere_geometry::{sphere_delta_weight, SphereGrid};

fn main() {
    let grid = SphereGrid::gauss_product(24, 48);
    println!("product grid: {} nodes", grid.nodes.len());

    // Surface area and low-order moments.
    let area = grid.integrate(|_| 1.0);
    println!(
        "integral of 1      = {area:.12}  (expect {:.12})",
        4.0 * std::f64::consts::PI
    );
    let z2 = grid.integrate(|w| w.z * w.z);
    println!(
        "integral of z^2    = {z2:.12}  (expect {:.12})",
        4.0 * std::f64::consts::PI / 3.0
    );
    let odd = grid.integrate(|w| w.x * w.y * w.z);
    println!("integral of xyz    = {odd:.3e}  (expect 0)");

    // The |y|-dependent weight of the sphere-restricted mean: smooth in tau
    // except at the threshold tau = 1 - |y| where the sphere of radius tau
    // about a boundary point first touches |y|.
    let y = Vector3::new(0.3, 0.1, 0.4);
    let r: f64 = y.norm();
    println!("\n|y| = {r:.4}; threshold at tau = {:.4}", 1.0 - r);
    for tau in [0.3, 0.55, 1.0 - r, 0.75, 0.9] {
        match sphere_delta_weight(y, tau) {
            Ok(w) => println!("  tau = {tau:.4}  weight = {w:.8}"),
            Err(e) => println!("  tau = {tau:.4}  error: {e}"),
        }
    }
}
