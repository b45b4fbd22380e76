//! Numerical verification of the adjoint data identity: the difference of
//! two scattered fields, read back at the source at time `2 tau`, equals
//!
//! `(1/8 pi) (Mp)(a, tau) + int_{|x-a| <= tau} p(x) k(x, tau, a) dx`
//!
//! where `p = q1 - q2` and the kernel
//!
//! `k = (u1 + u2)(x, 2 tau - |x-a|) / (4 pi |x-a|)
//!      + int_{|x-a|}^{2 tau - |x-a|} u1(x, 2 tau - t) u2(x, t) dt`
//!
//! is mollified near `x = a` by a quintic cutoff (admissible because `p`
//! vanishes near the sphere, so the identity is insensitive to the cutoff).
//! The two sides of the identity travel through independent numerical paths
//! (trace interpolation versus mean plus ball quadrature), so agreement is a
//! non-circular check on the whole forward machinery.

use crate::error::{PsError, Result};
use crate::forward_solver::{picard_solve, LightConeField, SolverConfig};
use crate::potential::Potential;
use crate::quad::gauss_legendre_on;
use crate::sphere_geometry::{Point, SourcePoint, SphereGrid};
use crate::spherical_means::boundary_mean;
use std::f64::consts::PI;

/// Quadrature and solver settings for the identity check.
#[derive(Debug, Clone, Copy)]
pub struct Prop22Settings {
    pub solver: SolverConfig,
    /// Radial shells of the ball quadrature around the source.
    pub n_radial: usize,
    /// Sphere-grid resolution of the ball quadrature.
    pub n_polar: usize,
    pub n_azimuth: usize,
    /// Kernel cutoff radius; the kernel vanishes for `|x-a| <= r_cut` and
    /// transitions smoothly over `[r_cut, 2 r_cut]`.
    pub r_cut: f64,
    /// Quadrature order of the spherical-mean term.
    pub mean_quad: usize,
    /// Relative floor in residual denominators.
    pub residual_floor: f64,
}

impl Default for Prop22Settings {
    fn default() -> Self {
        Prop22Settings {
            solver: SolverConfig::default(),
            n_radial: 24,
            n_polar: 16,
            n_azimuth: 32,
            r_cut: 0.02,
            mean_quad: 48,
            residual_floor: 1e-12,
        }
    }
}

impl Prop22Settings {
    /// Settings with solver steps halved and quadrature orders doubled.
    pub fn refined(&self) -> Self {
        Prop22Settings {
            solver: SolverConfig {
                delta: 0.5 * self.solver.delta,
                n_polar: 2 * self.solver.n_polar,
                ..self.solver
            },
            n_radial: 2 * self.n_radial,
            n_polar: 2 * self.n_polar,
            n_azimuth: 2 * self.n_azimuth,
            mean_quad: 2 * self.mean_quad,
            ..*self
        }
    }
}

/// Quintic smooth step: 0 for `r <= r_cut`, 1 for `r >= 2 r_cut`.
fn cutoff(r: f64, r_cut: f64) -> f64 {
    if r <= r_cut {
        0.0
    } else if r >= 2.0 * r_cut {
        1.0
    } else {
        let s = (r - r_cut) / r_cut;
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

/// Trapezoid-rule value of `int_{t_lo}^{t_hi} u1(x, 2 tau - t) u2(x, t) dt`
/// (with `t_lo + t_hi = 2 tau`), summed over explicitly mirrored node pairs
/// so that swapping the two fields permutes floating-point products without
/// changing the result.
fn time_convolution(
    field1: &LightConeField,
    field2: &LightConeField,
    x: Point,
    t_lo: f64,
    t_hi: f64,
) -> Result<f64> {
    if t_hi <= t_lo {
        return Ok(0.0);
    }
    let n_t = (((t_hi - t_lo) / (0.5 * field1.delta())).ceil() as usize).max(2);
    let dt = (t_hi - t_lo) / n_t as f64;
    let mut conv = 0.0;
    for k in 0..=n_t / 2 {
        let t = t_lo + k as f64 * dt;
        let m = t_hi - k as f64 * dt;
        if 2 * k == n_t {
            let tm = 0.5 * (t + m);
            conv += field1.eval(x, tm)? * field2.eval(x, tm)?;
        } else {
            let w = if k == 0 { 0.5 } else { 1.0 };
            conv += w
                * (field1.eval(x, m)? * field2.eval(x, t)?
                    + field1.eval(x, t)? * field2.eval(x, m)?);
        }
    }
    Ok(conv * dt)
}

fn require_same_source(f1: &LightConeField, f2: &LightConeField) -> Result<SourcePoint> {
    let a1 = f1.source().position();
    let a2 = f2.source().position();
    if (a1 - a2).norm() > 1e-12 {
        return Err(PsError::Usage(
            "kernel fields must be solved for the same source".into(),
        ));
    }
    Ok(*f1.source())
}

/// The identity kernel `k(x, tau, a)` built from two solved fields, with the
/// quintic cutoff applied. The time integral uses the trapezoid rule on a
/// uniform grid symmetric under `t -> 2 tau - t`, so swapping the fields is
/// an exact relabeling.
pub fn kernel_k(
    x: Point,
    tau: f64,
    field1: &LightConeField,
    field2: &LightConeField,
    r_cut: f64,
) -> Result<f64> {
    let a = require_same_source(field1, field2)?;
    let r = (x - a.position()).norm();
    if r > tau + 1e-12 {
        return Err(PsError::Domain(format!(
            "kernel point at distance {r} from the source exceeds tau = {tau}"
        )));
    }
    if 2.0 * tau > field1.nu_max() + 1e-12 || 2.0 * tau > field2.nu_max() + 1e-12 {
        return Err(PsError::Range(format!(
            "fields solved to nu_max = {} / {} but the identity needs 2 tau = {}",
            field1.nu_max(),
            field2.nu_max(),
            2.0 * tau
        )));
    }
    let chi = cutoff(r, r_cut);
    if chi == 0.0 {
        return Ok(0.0);
    }
    let t_lo = r;
    let t_hi = 2.0 * tau - r;
    let front = (field1.eval(x, t_hi)? + field2.eval(x, t_hi)?) / (4.0 * PI * r);
    let conv = time_convolution(field1, field2, x, t_lo, t_hi)?;
    Ok(chi * (front + conv))
}

/// Right side of the identity: mean term plus the ball integral of `p * k`
/// over `{|x - a| <= tau}` by a product rule (Gauss-Legendre shells around
/// the source times a sphere grid).
pub fn prop22_rhs(
    p: &Potential,
    a: &SourcePoint,
    tau: f64,
    field1: &LightConeField,
    field2: &LightConeField,
    settings: &Prop22Settings,
) -> Result<f64> {
    let (mean_term, kernel_term) = prop22_rhs_parts(p, a, tau, field1, field2, settings)?;
    Ok(mean_term + kernel_term)
}

fn prop22_rhs_parts(
    p: &Potential,
    a: &SourcePoint,
    tau: f64,
    field1: &LightConeField,
    field2: &LightConeField,
    settings: &Prop22Settings,
) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(PsError::Domain(format!("tau = {tau} not in (0, 1]")));
    }
    let mean_term = boundary_mean(p, a, tau, settings.mean_quad, settings.mean_quad)?
        / (8.0 * PI);
    let (r_nodes, r_weights) = gauss_legendre_on(settings.n_radial, 0.0, tau);
    let grid = SphereGrid::gauss_product(settings.n_polar, settings.n_azimuth);
    let mut kernel_term = 0.0;
    for (&r, &wr) in r_nodes.iter().zip(&r_weights) {
        let mut shell = 0.0;
        for (omega, w) in grid.nodes.iter().zip(&grid.weights) {
            let x = a.position() + r * omega;
            let pv = p.value(x);
            if pv == 0.0 {
                continue;
            }
            shell += w * pv * kernel_k(x, tau, field1, field2, settings.r_cut)?;
        }
        kernel_term += wr * r * r * shell;
    }
    Ok((mean_term, kernel_term))
}

/// Full residual report for the identity at one `(a, tau)`.
#[derive(Debug, Clone, Copy)]
pub struct Prop22Residual {
    pub tau: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub mean_term: f64,
    pub kernel_term: f64,
    pub absolute: f64,
    pub relative: f64,
}

/// Solve both fields, read the data difference at the source, and compare
/// with the mean-plus-kernel representation.
pub fn prop22_residual(
    q1: &Potential,
    q2: &Potential,
    a: &SourcePoint,
    tau: f64,
    settings: &Prop22Settings,
) -> Result<Prop22Residual> {
    let solver = SolverConfig {
        nu_max: 2.0 * tau,
        ..settings.solver
    };
    let f1 = picard_solve(q1, a, &solver)?;
    let f2 = picard_solve(q2, a, &solver)?;
    let lhs = f1.trace_at_source(2.0 * tau)? - f2.trace_at_source(2.0 * tau)?;
    let p = Potential::difference(q1, q2);
    let (mean_term, kernel_term) = prop22_rhs_parts(&p, a, tau, &f1, &f2, settings)?;
    let rhs = mean_term + kernel_term;
    let absolute = (lhs - rhs).abs();
    let relative = absolute / lhs.abs().max(rhs.abs()).max(settings.residual_floor);
    Ok(Prop22Residual {
        tau,
        lhs,
        rhs,
        mean_term,
        kernel_term,
        absolute,
        relative,
    })
}

/// Decomposition of the identity that isolates the time-convolution pairing
/// of the adjoint derivation.
#[derive(Debug, Clone, Copy)]
pub struct PairingReport {
    /// `int int p(x) u1(x, 2 tau - t) u2(x, t) dx dt` over the double cone.
    pub pairing: f64,
    /// `LHS - mean term - front kernel term`: what the identity says the
    /// pairing must equal.
    pub remainder: f64,
    pub mismatch: f64,
    /// Largest sampled value of the pairing integrand outside the double
    /// cone `|x-a| <= t <= 2 tau - |x-a|` (must vanish by causality).
    pub outside_max: f64,
}

/// Evaluate the space-time pairing directly and check it against the rest of
/// the identity, plus a support check outside the double cone.
pub fn adjoint_pairing_check(
    q1: &Potential,
    q2: &Potential,
    a: &SourcePoint,
    tau: f64,
    settings: &Prop22Settings,
) -> Result<PairingReport> {
    let solver = SolverConfig {
        nu_max: 2.0 * tau,
        ..settings.solver
    };
    let f1 = picard_solve(q1, a, &solver)?;
    let f2 = picard_solve(q2, a, &solver)?;
    let lhs = f1.trace_at_source(2.0 * tau)? - f2.trace_at_source(2.0 * tau)?;
    let p = Potential::difference(q1, q2);
    let mean_term = boundary_mean(&p, a, tau, settings.mean_quad, settings.mean_quad)?
        / (8.0 * PI);

    let (r_nodes, r_weights) = gauss_legendre_on(settings.n_radial, 0.0, tau);
    let grid = SphereGrid::gauss_product(settings.n_polar, settings.n_azimuth);
    let mut front_term = 0.0;
    let mut pairing = 0.0;
    let mut outside_max = 0.0f64;
    let margin = solver.delta;
    for (&r, &wr) in r_nodes.iter().zip(&r_weights) {
        let mut front_shell = 0.0;
        let mut pair_shell = 0.0;
        for (omega, w) in grid.nodes.iter().zip(&grid.weights) {
            let x = a.position() + r * omega;
            let pv = p.value(x);
            if pv == 0.0 {
                continue;
            }
            let chi = cutoff(r, settings.r_cut);
            if chi == 0.0 {
                continue;
            }
            let t_hi = 2.0 * tau - r;
            front_shell +=
                w * pv * chi * (f1.eval(x, t_hi)? + f2.eval(x, t_hi)?) / (4.0 * PI * r);
            pair_shell += w * pv * chi * time_convolution(&f1, &f2, x, r, t_hi)?;
            // Support check just outside both cone faces.
            let below = f1.eval(x, 2.0 * tau - (r - margin))? * f2.eval(x, r - margin)?;
            let above = f1.eval(x, 2.0 * tau - (t_hi + margin))? * f2.eval(x, t_hi + margin)?;
            outside_max = outside_max.max(below.abs()).max(above.abs());
        }
        front_term += wr * r * r * front_shell;
        pairing += wr * r * r * pair_shell;
    }
    let remainder = lhs - mean_term - front_term;
    Ok(PairingReport {
        pairing,
        remainder,
        mismatch: (pairing - remainder).abs(),
        outside_max,
    })
}
