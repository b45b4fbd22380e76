//! Geometry and quadrature for the unit sphere and for spheres `|y - a| = tau`
//! centered at boundary points.
//!
//! The cap `{ |y - a| = tau }` is parameterized by `(rho, theta)` where
//! `rho = |y|` and `theta` is the rotation about the axis through `a`; in this
//! chart the area element is `tau * rho * drho * dtheta`. The chart exposes an
//! inverse-square-root singularity in the `1/sin(phi)` weight at the inner
//! radius `rho = 1 - tau`, which is removed exactly by the substitution
//! `rho = (1 - tau) + w^2`.

use crate::error::{PsError, Result};
use crate::quad::{gauss_legendre, gauss_legendre_on};
use nalgebra::Vector3;

pub type Point = Vector3<f64>;

/// A source location on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePoint(Point);

impl SourcePoint {
    /// Tolerance for the unit-norm invariant.
    pub const UNIT_TOL: f64 = 1e-12;

    pub fn new(a: Point) -> Result<Self> {
        if (a.norm() - 1.0).abs() > Self::UNIT_TOL {
            return Err(PsError::Domain(format!(
                "source point must lie on the unit sphere, |a| = {}",
                a.norm()
            )));
        }
        Ok(SourcePoint(a))
    }

    /// Normalizes the input onto the sphere.
    pub fn from_direction(v: Point) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(PsError::Domain("zero direction".into()));
        }
        Ok(SourcePoint(v / n))
    }

    pub fn position(&self) -> Point {
        self.0
    }

    /// An orthonormal pair spanning the tangent plane at `a`.
    pub fn tangent_frame(&self) -> (Point, Point) {
        let a = self.0;
        let helper = if a.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let e1 = (helper - a * helper.dot(&a)).normalize();
        let e2 = a.cross(&e1);
        (e1, e2)
    }
}

/// Quadrature nodes and weights on the unit sphere.
///
/// Product rule: Gauss-Legendre in the cosine of the polar angle, uniform
/// midpoints in azimuth. Exact for spherical polynomials up to the rule's
/// degree, which the harmonic-analysis module relies on.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn gauss_product(n_polar: usize, n_azimuth: usize) -> Self {
        let (ct, wt) = gauss_legendre(n_polar);
        let mut nodes = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        let dphi = 2.0 * std::f64::consts::PI / n_azimuth as f64;
        for (i, &c) in ct.iter().enumerate() {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_azimuth {
                let phi = (j as f64 + 0.5) * dphi;
                nodes.push(Vector3::new(s * phi.cos(), s * phi.sin(), c));
                weights.push(wt[i] * dphi);
            }
        }
        SphereGrid { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Quadrature of `f` over the unit sphere, `sum_k w_k f(omega_k)`.
    pub fn integrate<F: Fn(Point) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| w * f(n))
            .sum()
    }
}

/// The `(rho, theta)` chart of the portion of the sphere `|y - a| = tau`
/// lying inside the closed unit ball.
#[derive(Debug, Clone, Copy)]
pub struct CapChart {
    pub a: SourcePoint,
    pub tau: f64,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl CapChart {
    pub fn new(a: SourcePoint, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(PsError::Domain(format!("cap radius tau = {tau} not in (0, 1]")));
        }
        Ok(CapChart {
            a,
            tau,
            rho_min: (1.0 - tau).max(0.0),
            rho_max: 1.0,
        })
    }

    /// The point at radius `rho`, azimuth `theta` on the cap.
    pub fn point(&self, rho: f64, theta: f64) -> Point {
        let a = self.a.position();
        let (e1, e2) = self.a.tangent_frame();
        let c = cap_cos_phi(rho, self.tau).unwrap().clamp(-1.0, 1.0);
        let s = (1.0 - c * c).max(0.0).sqrt();
        rho * (c * a + s * (theta.cos() * e1 + theta.sin() * e2))
    }
}

/// `cos(phi) = (rho^2 + 1 - tau^2) / (2 rho)` where `phi` is the angle between
/// `y` (with `|y| = rho`, `|y - a| = tau`) and the source direction `a`.
pub fn cap_cos_phi(rho: f64, tau: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Err(PsError::Domain(format!("rho = {rho} must be positive")));
    }
    Ok((rho * rho + 1.0 - tau * tau) / (2.0 * rho))
}

/// `sin^2(phi)` through the four-factor form; exact at the endpoints and free
/// of the cancellation that `1 - cos^2` suffers near `rho = 1 - tau`.
pub fn cap_sin_phi_sq(rho: f64, tau: f64) -> f64 {
    ((rho - (1.0 - tau)) * (tau + 1.0 - rho) * (rho + 1.0 + tau) * (rho + 1.0 - tau))
        / (4.0 * rho * rho)
}

/// The weight `1 / sin(phi)` on the cap, via the factorization
/// `2 rho / sqrt((rho-(1-tau)) (tau+1-rho) (rho+1+tau) (rho+1-tau))`.
///
/// Diverges like `(rho - (1-tau))^{-1/2}` at the inner radius; callers doing
/// quadrature against it must use the `w^2` substitution (see
/// [`integrate_cap`]).
pub fn inv_sin_phi(rho: f64, tau: f64) -> Result<f64> {
    let lo = 1.0 - tau;
    let hi = 1.0 + tau;
    if !(rho > lo && rho < hi) {
        return Err(PsError::Singular(format!(
            "rho = {rho} at or outside the open interval ({lo}, {hi})"
        )));
    }
    let s2 = cap_sin_phi_sq(rho, tau);
    Ok(1.0 / s2.sqrt())
}

/// Unit vector orthogonal to `y`, in the plane spanned by `y` and `a`, with
/// `alpha . a <= 0`. Returns `None` in the degenerate tangent configuration
/// `y` parallel to `a` (there `sin(phi) = 0` and the integrands carrying
/// `alpha` vanish with it).
pub fn alpha_vector(a: &SourcePoint, y: Point) -> Option<Point> {
    let rho = y.norm();
    if rho == 0.0 {
        return None;
    }
    let yhat = y / rho;
    let c = yhat.dot(&a.position());
    let s2 = 1.0 - c * c;
    if s2 <= 1e-24 {
        return None;
    }
    // From y - a = (rho - cos phi) yhat + sin phi * alpha:
    // alpha = (cos phi * yhat - a) / sin phi.
    Some((c * yhat - a.position()) / s2.sqrt())
}

/// Whether the quadrature should remove an inverse-square-root singularity at
/// the inner radius of the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularExponent {
    /// Integrand regular at `rho = rho_min`.
    None,
    /// Integrand behaves like `(rho - rho_min)^{-1/2}`; substituted away by
    /// `rho = rho_min + w^2`.
    Half,
}

/// Integral of `f` over the cap `{ |y - a| = tau, rho_min <= |y| <= rho_max }`
/// in the `(rho, theta)` chart with measure `tau rho drho dtheta`.
pub fn integrate_cap_range<F: Fn(Point) -> f64>(
    f: F,
    a: &SourcePoint,
    tau: f64,
    rho_min: f64,
    rho_max: f64,
    n_rho: usize,
    n_theta: usize,
    singular: SingularExponent,
) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(PsError::Domain(format!("tau = {tau} must be positive")));
    }
    if rho_max <= rho_min {
        return Err(PsError::Domain("empty rho range".into()));
    }
    let chart = CapChart {
        a: *a,
        tau,
        rho_min,
        rho_max,
    };
    // Radial nodes, with the w^2 substitution when requested.
    let (rho_nodes, rho_weights): (Vec<f64>, Vec<f64>) = match singular {
        SingularExponent::None => gauss_legendre_on(n_rho, rho_min, rho_max),
        SingularExponent::Half => {
            let (w_nodes, w_w) = gauss_legendre_on(n_rho, 0.0, (rho_max - rho_min).sqrt());
            (
                w_nodes.iter().map(|&w| rho_min + w * w).collect(),
                w_nodes
                    .iter()
                    .zip(&w_w)
                    .map(|(&w, &ww)| 2.0 * w * ww)
                    .collect(),
            )
        }
    };
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
    let mut total = 0.0;
    for (&rho, &wr) in rho_nodes.iter().zip(&rho_weights) {
        let mut ring = 0.0;
        for j in 0..n_theta {
            let theta = (j as f64 + 0.5) * dtheta;
            let v = f(chart.point(rho, theta));
            if !v.is_finite() {
                return Err(PsError::NonFinite(format!("rho = {rho}, theta = {theta}")));
            }
            ring += v;
        }
        total += wr * tau * rho * ring * dtheta;
    }
    Ok(total)
}

/// Integral of `f` over the in-ball cap `{ |y - a| = tau, |y| <= 1 }`.
pub fn integrate_cap<F: Fn(Point) -> f64>(
    f: F,
    a: &SourcePoint,
    tau: f64,
    n_rho: usize,
    n_theta: usize,
    singular: SingularExponent,
) -> Result<f64> {
    let chart = CapChart::new(*a, tau)?;
    integrate_cap_range(f, a, tau, chart.rho_min, chart.rho_max, n_rho, n_theta, singular)
}

/// `int_S delta(|y - a|^2 - tau^2) dS_a = (pi / |y|) H(tau + |y| - 1)`.
pub fn sphere_delta_weight(y: Point, tau: f64) -> Result<f64> {
    let r = y.norm();
    if r == 0.0 {
        return Err(PsError::Domain("sphere_delta_weight undefined at y = 0".into()));
    }
    if !(r < 1.0 && tau > 0.0 && tau < 1.0) {
        return Err(PsError::Domain(format!(
            "require 0 < |y| < 1 and tau in (0,1), got |y| = {r}, tau = {tau}"
        )));
    }
    Ok(if tau + r - 1.0 > 0.0 {
        std::f64::consts::PI / r
    } else {
        0.0
    })
}

/// Upper bound `4 pi H(tau + |y| - 1)` for `int_S H(tau^2 - |y - a|^2) dS_a`.
pub fn sphere_heaviside_bound(y: Point, tau: f64) -> f64 {
    if tau + y.norm() - 1.0 > 0.0 {
        4.0 * std::f64::consts::PI
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn src() -> SourcePoint {
        SourcePoint::new(Vector3::new(0.0, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn source_point_rejects_off_sphere() {
        assert!(SourcePoint::new(Vector3::new(0.0, 0.0, 1.1)).is_err());
    }

    #[test]
    fn cap_cos_phi_examples() {
        assert_relative_eq!(cap_cos_phi(1.0, 1.0).unwrap(), 0.5);
        for tau in [0.2, 0.5, 0.9] {
            assert_relative_eq!(cap_cos_phi(1.0 - tau, tau).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_relative_eq!(cap_cos_phi(1.0, 2f64.sqrt()).unwrap(), 0.0, epsilon = 1e-15);
        assert!(cap_cos_phi(0.0, 0.5).is_err());
    }

    #[test]
    fn inv_sin_phi_cross_checks_cos_form() {
        // Closed-form value at (1, 1) plus the generic consistency identity.
        assert_relative_eq!(inv_sin_phi(1.0, 1.0).unwrap(), 2.0 / 3f64.sqrt(), epsilon = 1e-14);
        for &(rho, tau) in &[(0.9, 0.3), (0.75, 0.5), (0.6, 0.7), (0.99, 0.05)] {
            let c = cap_cos_phi(rho, tau).unwrap();
            let direct = 1.0 / (1.0 - c * c).sqrt();
            assert_relative_eq!(inv_sin_phi(rho, tau).unwrap(), direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn inv_sin_phi_respects_closed_form_bound() {
        // 2 rho / (sqrt(tau) sqrt(1-tau) sqrt(rho - (1-tau))), and the known
        // value 6 at (0.75, 0.5).
        let bound = |rho: f64, tau: f64| {
            2.0 * rho / (tau.sqrt() * (1.0 - tau).sqrt() * (rho - (1.0 - tau)).sqrt())
        };
        assert_relative_eq!(bound(0.75, 0.5), 6.0, epsilon = 1e-14);
        assert!(inv_sin_phi(0.75, 0.5).unwrap() <= 6.0);
        for i in 1..40 {
            let tau = i as f64 / 41.0;
            for j in 1..40 {
                let rho = (1.0 - tau) + (tau - 1e-9) * j as f64 / 40.0;
                if rho <= 1.0 {
                    assert!(inv_sin_phi(rho, tau).unwrap() <= bound(rho, tau) * (1.0 + 1e-13));
                }
            }
        }
    }

    #[test]
    fn inv_sin_phi_singularity_order() {
        // Diverges like (rho - (1 - tau))^(-1/2) at the inner endpoint.
        let tau = 0.4;
        let v1 = inv_sin_phi(0.6 + 1e-4, tau).unwrap();
        let v2 = inv_sin_phi(0.6 + 1e-6, tau).unwrap();
        let order = (v2 / v1).log10() / 2.0;
        assert!((order - 0.5).abs() < 0.02, "observed order {order}");
        assert!(inv_sin_phi(0.6, tau).is_err());
        assert!(inv_sin_phi(1.4, tau).is_err());
    }

    #[test]
    fn sphere_grid_weight_and_norm_invariants() {
        let g = SphereGrid::gauss_product(24, 48);
        assert_relative_eq!(g.total_weight(), 4.0 * PI, epsilon = 1e-10);
        for n in &g.nodes {
            assert!((n.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cap_points_satisfy_chart_invariants() {
        let a = src();
        for &tau in &[0.3, 0.7, 1.0] {
            let chart = CapChart::new(a, tau).unwrap();
            for i in 0..10 {
                let rho = chart.rho_min + (chart.rho_max - chart.rho_min) * (i as f64 + 0.5) / 10.0;
                let y = chart.point(rho, 1.234);
                assert!(((y - a.position()).norm() - tau).abs() <= 1e-10);
                assert!((y.norm() - rho).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn cap_full_range_area_is_sphere_area() {
        let a = src();
        for &tau in &[0.3, 0.5, 0.8] {
            let area = integrate_cap_range(
                |_| 1.0,
                &a,
                tau,
                1.0 - tau,
                1.0 + tau,
                128,
                128,
                SingularExponent::None,
            )
            .unwrap();
            assert_relative_eq!(area, 4.0 * PI * tau * tau, epsilon = 1e-8);
        }
    }

    #[test]
    fn cap_in_ball_area_closed_form() {
        // 2 pi tau (1 - (1-tau)^2)/2 = pi tau (2 tau - tau^2).
        let a = src();
        let tau = 0.5;
        let area = integrate_cap(|_| 1.0, &a, tau, 64, 64, SingularExponent::None).unwrap();
        let exact = PI * tau * (2.0 * tau - tau * tau);
        assert_relative_eq!(exact, 1.1780972450961724, epsilon = 1e-12);
        assert_relative_eq!(area, exact, epsilon = 1e-10);
    }

    #[test]
    fn cap_radial_integrand_matches_1d_reduction() {
        let a = src();
        let tau = 0.6;
        let f = |y: Point| (1.0 - y.norm_squared()).powi(2);
        let got = integrate_cap(f, &a, tau, 256, 64, SingularExponent::None).unwrap();
        // (2 pi tau) int rho f(rho) drho with antiderivative -(1-rho^2)^3 / 6.
        let exact = 2.0 * PI * tau * (1.0 - (1.0 - tau).powi(2)).powi(3) / 6.0;
        assert_relative_eq!(got, exact, epsilon = 1e-8);
    }

    #[test]
    fn cap_singular_substitution_integrates_inverse_sqrt_exactly() {
        // f = 1/sqrt(rho - (1-tau)) has closed form
        // 2 pi tau int rho (rho - rho0)^(-1/2) drho over [rho0, 1].
        let a = src();
        let tau = 0.5;
        let rho0 = 1.0 - tau;
        let f = move |y: Point| 1.0 / (y.norm() - rho0).sqrt();
        let got = integrate_cap(f, &a, tau, 32, 16, SingularExponent::Half).unwrap();
        // int_{rho0}^{1} rho (rho-rho0)^{-1/2} drho = 2 sqrt(t) rho0 + (2/3) t^{3/2}, t = tau.
        let exact = 2.0 * PI * tau * (2.0 * tau.sqrt() * rho0 + 2.0 / 3.0 * tau.powf(1.5));
        assert_relative_eq!(got, exact, epsilon = 1e-10);
    }

    #[test]
    fn cap_linearity_and_theta_origin_invariance() {
        let a = src();
        let tau = 0.4;
        let f = |y: Point| y.x * y.x + 0.3 * y.z;
        let g = |y: Point| (2.0 * y.y).cos();
        let int_f = integrate_cap(f, &a, tau, 64, 64, SingularExponent::None).unwrap();
        let int_g = integrate_cap(g, &a, tau, 64, 64, SingularExponent::None).unwrap();
        let int_sum =
            integrate_cap(|y| 2.0 * f(y) - g(y), &a, tau, 64, 64, SingularExponent::None).unwrap();
        assert_relative_eq!(int_sum, 2.0 * int_f - int_g, epsilon = 1e-10);

        // Rotating the theta origin = rotating f about the a-axis.
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 0.77);
        let f_rot = |y: Point| f(rot * y);
        let int_f_rot = integrate_cap(f_rot, &a, tau, 64, 64, SingularExponent::None).unwrap();
        assert_relative_eq!(int_f, int_f_rot, epsilon = 1e-10);
    }

    #[test]
    fn alpha_is_tangent_and_inward() {
        let a = src();
        for &(x, z) in &[(0.3, 0.4), (0.5, -0.2), (0.1, 0.9)] {
            let y = Vector3::new(x, 0.05, z);
            let alpha = alpha_vector(&a, y).unwrap();
            assert_relative_eq!(alpha.norm(), 1.0, epsilon = 1e-12);
            assert!(alpha.dot(&y).abs() <= 1e-12);
            assert!(alpha.dot(&a.position()) <= 0.0);
            // alpha lies in span{y, a}.
            let n = y.cross(&a.position());
            assert!(alpha.dot(&n).abs() <= 1e-12);
        }
        assert!(alpha_vector(&a, Vector3::new(0.0, 0.0, 0.5)).is_none());
    }

    #[test]
    fn delta_weight_closed_form() {
        assert_relative_eq!(
            sphere_delta_weight(Vector3::new(0.0, 0.0, 0.5), 0.6).unwrap(),
            2.0 * PI,
            epsilon = 1e-14
        );
        assert_eq!(sphere_delta_weight(Vector3::new(0.0, 0.0, 0.5), 0.4).unwrap(), 0.0);
        assert!(sphere_delta_weight(Vector3::zeros(), 0.5).is_err());
        assert_relative_eq!(
            sphere_delta_weight(Vector3::new(0.8, 0.0, 0.0), 0.3).unwrap(),
            PI / 0.8,
            epsilon = 1e-14
        );
        assert_eq!(sphere_heaviside_bound(Vector3::new(0.8, 0.0, 0.0), 0.3), 4.0 * PI);
        assert_eq!(sphere_heaviside_bound(Vector3::new(0.2, 0.0, 0.0), 0.3), 0.0);
    }

    #[test]
    fn delta_weight_matches_mollified_quadrature() {
        // Gaussian mollification of delta(|y-a|^2 - tau^2) integrated over a
        // dense sphere grid; first-order agreement in the mollifier width.
        let g = SphereGrid::gauss_product(100, 100);
        let y = Vector3::new(0.8, 0.0, 0.0);
        let tau = 0.3;
        let oracle = |sigma: f64| {
            g.integrate(|omega| {
                let u = (y - omega).norm_squared() - tau * tau;
                (-u * u / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
            })
        };
        let exact = sphere_delta_weight(y, tau).unwrap();
        assert_relative_eq!(exact, PI / 0.8, epsilon = 1e-12);
        let e1 = (oracle(0.04) - exact).abs();
        let e2 = (oracle(0.02) - exact).abs();
        assert!(e2 / exact < 0.01, "mollified oracle off by {}", e2 / exact);
        assert!(e2 < e1);
    }
}
