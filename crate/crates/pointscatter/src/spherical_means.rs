//! The spherical mean transform and numerical verification of the
//! derivative identity
//!
//! `d/dtau ( tau (Mp)(a, tau) ) = ((1-tau)/2) p((1-tau) a)
//!     + (1/4pi) int_{|y-a|=tau} (alpha . grad p)(y) / sin(phi) dS_y`
//!
//! for potentials supported in the unit ball and sources on its boundary.
//! The left side is evaluated by Richardson-extrapolated central differences
//! of quadrature means, the right side by the singular cap quadrature; the
//! two paths share no code, so their agreement is a real check.

use crate::error::{PsError, Result};
use crate::potential::Potential;
use crate::sphere_geometry::{
    alpha_vector, cap_sin_phi_sq, integrate_cap, Point, SingularExponent, SourcePoint, SphereGrid,
};

/// Quadrature settings for the identity check.
#[derive(Debug, Clone, Copy)]
pub struct Prop21Settings {
    /// Sphere grid resolution for the means (polar x azimuth).
    pub mean_polar: usize,
    pub mean_azimuth: usize,
    /// Cap quadrature resolution for the singular integral.
    pub n_rho: usize,
    pub n_theta: usize,
    /// Relative floor in relative-residual denominators.
    pub residual_floor: f64,
}

impl Default for Prop21Settings {
    fn default() -> Self {
        Prop21Settings {
            mean_polar: 48,
            mean_azimuth: 96,
            n_rho: 96,
            n_theta: 96,
            residual_floor: 1e-12,
        }
    }
}

impl Prop21Settings {
    /// Same settings with all quadrature orders scaled by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Prop21Settings {
            mean_polar: self.mean_polar * factor,
            mean_azimuth: self.mean_azimuth * factor,
            n_rho: self.n_rho * factor,
            n_theta: self.n_theta * factor,
            residual_floor: self.residual_floor,
        }
    }
}

/// `(Mp)(center, tau)`: the mean of `p` over the sphere of radius `tau`
/// about `center`. `tau = 0` returns `p(center)`.
pub fn spherical_mean<F: Fn(Point) -> f64>(p: F, center: Point, tau: f64, grid: &SphereGrid) -> f64 {
    if tau == 0.0 {
        return p(center);
    }
    grid.integrate(|omega| p(center + tau * omega)) / (4.0 * std::f64::consts::PI)
}

/// A derivative value together with its Richardson error estimate.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub step: f64,
}

/// `(Mp)(a, tau)` for a boundary source, via the in-ball cap chart. For
/// ball-supported `p` this equals the full-sphere mean but avoids the kink
/// where the sphere crosses the support boundary, so the quadrature
/// converges spectrally.
pub fn boundary_mean(
    p: &Potential,
    a: &SourcePoint,
    tau: f64,
    n_rho: usize,
    n_theta: usize,
) -> Result<f64> {
    if tau == 0.0 {
        return Ok(p.value(a.position()));
    }
    let cap = integrate_cap(
        |y| p.value(y),
        a,
        tau,
        n_rho,
        n_theta,
        SingularExponent::None,
    )?;
    Ok(cap / (4.0 * std::f64::consts::PI * tau * tau))
}

/// Central-difference derivative of `tau -> tau (Mp)(a, tau)` with one
/// Richardson extrapolation step.
pub fn dtau_tau_mean(
    p: &Potential,
    a: &SourcePoint,
    tau: f64,
    step: f64,
    settings: &Prop21Settings,
) -> Result<DerivativeEstimate> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(PsError::Domain(format!("tau = {tau} not in (0, 1)")));
    }
    if !(step > 0.0) || tau - step <= 0.0 || tau + step >= 1.0 {
        return Err(PsError::Domain(format!(
            "step = {step} leaves the admissible tau window at tau = {tau}"
        )));
    }
    let g = |t: f64| -> Result<f64> {
        Ok(t * boundary_mean(p, a, t, settings.n_rho, settings.n_theta)?)
    };
    let diff = |h: f64| -> Result<f64> { Ok((g(tau + h)? - g(tau - h)?) / (2.0 * h)) };
    let d_h = diff(step)?;
    let d_h2 = diff(0.5 * step)?;
    Ok(DerivativeEstimate {
        value: (4.0 * d_h2 - d_h) / 3.0,
        error_estimate: (d_h2 - d_h).abs() / 3.0,
        step,
    })
}

/// Default step for the tau derivative: `tau / 64`, clamped into
/// `(0, min(tau, 1 - tau) / 4)`.
pub fn default_step(tau: f64) -> f64 {
    (tau / 64.0).min(tau.min(1.0 - tau) / 4.0 * 0.999)
}

/// Right side of the identity: boundary term plus singular cap integral.
pub fn prop21_rhs(p: &Potential, a: &SourcePoint, tau: f64, settings: &Prop21Settings) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(PsError::Domain(format!("tau = {tau} not in (0, 1)")));
    }
    let boundary = 0.5 * (1.0 - tau) * p.value((1.0 - tau) * a.position());
    let integrand = |y: Point| {
        let rho = y.norm();
        match alpha_vector(a, y) {
            // Tangency point: the integrand is multiplied by sin(phi) = 0
            // in the limit sense; quadrature nodes never land there.
            None => 0.0,
            Some(alpha) => {
                let s2 = cap_sin_phi_sq(rho, tau);
                alpha.dot(&p.gradient(y)) / s2.sqrt()
            }
        }
    };
    let cap = integrate_cap(
        integrand,
        a,
        tau,
        settings.n_rho,
        settings.n_theta,
        SingularExponent::Half,
    )?;
    Ok(boundary + cap / (4.0 * std::f64::consts::PI))
}

/// Residual report for the identity at one `(a, tau)`.
#[derive(Debug, Clone, Copy)]
pub struct Prop21Residual {
    pub tau: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub absolute: f64,
    pub relative: f64,
    pub lhs_error_estimate: f64,
}

/// `|LHS - RHS|` with a relative form against `max(|LHS|, |RHS|, floor)`.
pub fn prop21_residual(
    p: &Potential,
    a: &SourcePoint,
    tau: f64,
    settings: &Prop21Settings,
) -> Result<Prop21Residual> {
    let lhs = dtau_tau_mean(p, a, tau, default_step(tau), settings)?;
    let rhs = prop21_rhs(p, a, tau, settings)?;
    let absolute = (lhs.value - rhs).abs();
    let denom = lhs.value.abs().max(rhs.abs()).max(settings.residual_floor);
    Ok(Prop21Residual {
        tau,
        lhs: lhs.value,
        rhs,
        absolute,
        relative: absolute / denom,
        lhs_error_estimate: lhs.error_estimate,
    })
}

/// Both sides of the pointwise estimate bounding `(1-tau)^3 |p((1-tau)a)|^2`
/// by the derivative of the mean plus the weighted angular-derivative cap
/// integral; returns `(lhs, rhs, ratio)`.
pub fn estimate25_ratio(
    p: &Potential,
    a: &SourcePoint,
    tau: f64,
    settings: &Prop21Settings,
) -> Result<(f64, f64, f64)> {
    let lhs = (1.0 - tau).powi(3) * p.value((1.0 - tau) * a.position()).powi(2);
    let d = dtau_tau_mean(p, a, tau, default_step(tau), settings)?;
    let rho0 = 1.0 - tau;
    let cap = integrate_cap(
        |y: Point| {
            let g = p.gradient(y);
            let x = y;
            // |Omega_ij p|^2 summed over i < j, weighted by
            // (|y| - (1 - tau))^(-1/2).
            let o01 = x[0] * g[1] - x[1] * g[0];
            let o02 = x[0] * g[2] - x[2] * g[0];
            let o12 = x[1] * g[2] - x[2] * g[1];
            (o01 * o01 + o02 * o02 + o12 * o12) / (y.norm() - rho0).sqrt()
        },
        a,
        tau,
        settings.n_rho,
        settings.n_theta,
        SingularExponent::Half,
    )?;
    let rhs = d.value * d.value + cap;
    let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
    Ok((lhs, rhs, ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use std::f64::consts::PI;

    fn src() -> SourcePoint {
        SourcePoint::new(Vector3::z()).unwrap()
    }

    /// Closed-form mean of radial_bump(1, 2) about a boundary point:
    /// (Mp)(a, tau) = tau^2 (2 - tau)^3 / 12 via the radial reduction
    /// (1 / 2 tau) int_{1-tau}^{1} rho p(rho) drho with antiderivative
    /// -(1 - rho^2)^3 / 6.
    fn bump_mean_oracle(tau: f64) -> f64 {
        tau * tau * (2.0 - tau).powi(3) / 12.0
    }

    /// d/dtau of tau * oracle: tau^2 (2 - tau)^2 (1 - tau) / 2.
    fn bump_dtau_oracle(tau: f64) -> f64 {
        tau * tau * (2.0 - tau).powi(2) * (1.0 - tau) / 2.0
    }

    #[test]
    fn mean_at_zero_radius_is_point_value() {
        let p = Potential::radial_bump(1.0, 2);
        let grid = SphereGrid::gauss_product(8, 16);
        let c = Vector3::new(0.2, 0.1, -0.3);
        assert_eq!(spherical_mean(|x| p.value(x), c, 0.0, &grid), p.value(c));
    }

    #[test]
    fn mean_of_constant_is_one() {
        let grid = SphereGrid::gauss_product(16, 32);
        for &tau in &[0.2, 0.7, 1.5] {
            let m = spherical_mean(|_| 1.0, Vector3::new(0.4, 0.0, 0.1), tau, &grid);
            assert_relative_eq!(m, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_matches_radial_reduction_oracle() {
        let p = Potential::radial_bump(1.0, 2);
        let grid = SphereGrid::gauss_product(64, 128);
        let a = src();
        for &tau in &[0.25, 0.5, 0.75] {
            let m = spherical_mean(|x| p.value(x), a.position(), tau, &grid);
            // The integrand has a C^1 kink where the sphere crosses the
            // support boundary, which limits the product-grid accuracy.
            assert_relative_eq!(m, bump_mean_oracle(tau), epsilon = 1e-6, max_relative = 2e-4);
        }
        assert_relative_eq!(bump_mean_oracle(0.5), 0.0703125, epsilon = 1e-15);
    }

    #[test]
    fn mean_is_rotation_equivariant() {
        let p = Potential::harmonic_modulated(0.8, 2, 2, 1).unwrap();
        let grid = SphereGrid::gauss_product(32, 64);
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::x_axis(), 0.9);
        let a = Vector3::z();
        let tau = 0.45;
        let lhs = spherical_mean(|x| p.value(rot * x), a, tau, &grid);
        let rhs = spherical_mean(|x| p.value(x), rot * a, tau, &grid);
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn boundary_mean_matches_oracle_tightly() {
        let p = Potential::radial_bump(1.0, 2);
        let a = src();
        for &tau in &[0.25, 0.5, 0.75] {
            let m = boundary_mean(&p, &a, tau, 48, 48).unwrap();
            assert_relative_eq!(m, bump_mean_oracle(tau), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn dtau_examples() {
        let p = Potential::radial_bump(1.0, 2);
        let s = Prop21Settings::default();
        let a = src();
        let d = dtau_tau_mean(&p, &a, 0.5, default_step(0.5), &s).unwrap();
        assert_relative_eq!(bump_dtau_oracle(0.5), 0.140625, epsilon = 1e-15);
        assert_relative_eq!(d.value, 0.140625, max_relative = 1e-8);

        let zero = Potential::zero();
        let d0 = dtau_tau_mean(&zero, &a, 0.3, default_step(0.3), &s).unwrap();
        assert_eq!(d0.value, 0.0);
    }

    #[test]
    fn dtau_matches_oracle_across_taus() {
        let p = Potential::radial_bump(1.0, 2);
        let s = Prop21Settings::default();
        let a = src();
        for i in 1..10 {
            let tau = i as f64 / 10.0;
            let d = dtau_tau_mean(&p, &a, tau, default_step(tau), &s).unwrap();
            assert_relative_eq!(d.value, bump_dtau_oracle(tau), epsilon = 1e-9, max_relative = 1e-7);
        }
    }

    #[test]
    fn rhs_radial_case_reduces_to_boundary_term() {
        // For radial p the gradient is parallel to y, alpha is orthogonal to
        // y, so the cap integral vanishes and the right side equals
        // ((1-tau)/2) p((1-tau) a).
        let p = Potential::radial_bump(1.0, 2);
        let a = src();
        let s = Prop21Settings::default();
        let rhs = prop21_rhs(&p, &a, 0.5, &s).unwrap();
        assert_relative_eq!(rhs, 0.140625, epsilon = 1e-9);
    }

    #[test]
    fn rhs_of_zero_potential_is_zero() {
        let a = src();
        let s = Prop21Settings::default();
        assert_eq!(prop21_rhs(&Potential::zero(), &a, 0.4, &s).unwrap(), 0.0);
    }

    #[test]
    fn prop21_residual_radial_bump() {
        let p = Potential::radial_bump(1.0, 2);
        let a = src();
        let s = Prop21Settings::default();
        for &tau in &[0.2, 0.5, 0.8] {
            let r = prop21_residual(&p, &a, tau, &s).unwrap();
            assert!(
                r.relative <= 1e-3,
                "tau = {tau}: relative residual {}",
                r.relative
            );
            // Both sides near the closed form.
            assert_relative_eq!(r.lhs, bump_dtau_oracle(tau), max_relative = 1e-7);
            assert_relative_eq!(r.rhs, bump_dtau_oracle(tau), max_relative = 1e-7);
        }
    }

    #[test]
    fn prop21_residual_harmonic_preset() {
        let p = Potential::harmonic_modulated(1.0, 2, 2, 1).unwrap();
        let a = SourcePoint::from_direction(Vector3::new(0.3, -0.2, 0.93)).unwrap();
        let s = Prop21Settings::default();
        let mut worst = 0.0f64;
        for i in 0..16 {
            let tau = 0.05 + 0.9 * (i as f64 + 0.5) / 16.0;
            let r = prop21_residual(&p, &a, tau, &s).unwrap();
            worst = worst.max(r.relative);
        }
        assert!(worst <= 5e-3, "max relative residual {worst}");
    }

    #[test]
    fn prop21_residual_shrinks_under_refinement() {
        let p = Potential::harmonic_modulated(1.0, 2, 2, 1).unwrap();
        // Tilted source: at the pole this harmonic averages to zero and the
        // identity degenerates to 0 = 0.
        let a = SourcePoint::from_direction(Vector3::new(0.3, -0.2, 0.93)).unwrap();
        let tau = 0.4;
        let coarse = Prop21Settings {
            mean_polar: 24,
            mean_azimuth: 48,
            n_rho: 6,
            n_theta: 6,
            residual_floor: 1e-12,
        };
        let r1 = prop21_residual(&p, &a, tau, &coarse).unwrap();
        let r2 = prop21_residual(&p, &a, tau, &coarse.refined(2)).unwrap();
        assert!(r1.relative <= 5e-3);
        assert!(
            r2.relative <= 0.75 * r1.relative || r2.relative < 1e-7,
            "refinement did not reduce residual: {} -> {}",
            r1.relative,
            r2.relative
        );
    }

    #[test]
    fn estimate25_constant_stabilizes() {
        let p = Potential::harmonic_modulated(0.9, 2, 2, -1).unwrap();
        let a = src();
        let s = Prop21Settings::default();
        for &tau in &[0.3, 0.6] {
            let (lhs, rhs, ratio) = estimate25_ratio(&p, &a, tau, &s).unwrap();
            assert!(lhs >= 0.0 && rhs >= 0.0);
            let (_, _, ratio_fine) = estimate25_ratio(&p, &a, tau, &s.refined(2)).unwrap();
            if ratio.is_finite() && ratio > 1e-12 {
                assert!(
                    ((ratio_fine - ratio) / ratio).abs() <= 0.1,
                    "tau = {tau}: ratio moved {ratio} -> {ratio_fine}"
                );
            }
        }
    }

    #[test]
    fn prop21_relative_floor_handles_zero_potential() {
        let a = src();
        let s = Prop21Settings::default();
        let r = prop21_residual(&Potential::zero(), &a, 0.5, &s).unwrap();
        assert_eq!(r.relative, 0.0);
        assert_eq!(r.absolute, 0.0);
        let _ = PI; // silence unused import in cfg(test) builds without it
    }
}
