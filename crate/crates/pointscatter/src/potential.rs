//! Potentials supported in the open unit ball: evaluable presets with
//! analytic gradients, gridded inputs, characteristic line integrals, and
//! shell norms.

use crate::error::{PsError, Result};
use crate::quad::{integrate_adaptive, integrate_gl};
use crate::sphere_geometry::{Point, SourcePoint, SphereGrid};
use nalgebra::Vector3;
use std::sync::Arc;

/// Normalization constants of the unit-normalized real solid harmonics
/// hand-coded below (degrees 0..=2).
mod solid {
    use std::f64::consts::PI;
    pub fn k0() -> f64 {
        (1.0 / (4.0 * PI)).sqrt()
    }
    pub fn k1() -> f64 {
        (3.0 / (4.0 * PI)).sqrt()
    }
    pub fn k20() -> f64 {
        (5.0 / (16.0 * PI)).sqrt()
    }
    pub fn k21() -> f64 {
        (15.0 / (4.0 * PI)).sqrt()
    }
    pub fn k22() -> f64 {
        (15.0 / (16.0 * PI)).sqrt()
    }
}

/// Unit-normalized solid harmonic `rho^l Y_{l,m}(omega)` (a polynomial in x)
/// and its gradient, for `l <= 2`.
fn solid_harmonic(l: usize, m: i32, x: Point) -> (f64, Point) {
    use solid::*;
    match (l, m) {
        (0, 0) => (k0(), Vector3::zeros()),
        (1, 0) => (k1() * x.z, Vector3::new(0.0, 0.0, k1())),
        (1, 1) => (k1() * x.x, Vector3::new(k1(), 0.0, 0.0)),
        (1, -1) => (k1() * x.y, Vector3::new(0.0, k1(), 0.0)),
        (2, 0) => (
            k20() * (2.0 * x.z * x.z - x.x * x.x - x.y * x.y),
            k20() * Vector3::new(-2.0 * x.x, -2.0 * x.y, 4.0 * x.z),
        ),
        (2, 1) => (
            k21() * x.z * x.x,
            k21() * Vector3::new(x.z, 0.0, x.x),
        ),
        (2, -1) => (
            k21() * x.z * x.y,
            k21() * Vector3::new(0.0, x.z, x.y),
        ),
        (2, 2) => (
            k22() * (x.x * x.x - x.y * x.y),
            k22() * Vector3::new(2.0 * x.x, -2.0 * x.y, 0.0),
        ),
        (2, -2) => (
            k21() * x.x * x.y,
            k21() * Vector3::new(x.y, x.x, 0.0),
        ),
        _ => unreachable!("harmonic_modulated presets are restricted to degree <= 2"),
    }
}

#[derive(Debug, Clone)]
enum Kind {
    /// `c (1 - |x|^2)^m` inside the ball, zero outside.
    RadialBump { c: f64, m: u32 },
    /// `c (1 - |x|^2)^m` times a unit-normalized solid harmonic of degree
    /// `l <= 2`.
    HarmonicModulated { c: f64, m: u32, degree: usize, order: i32 },
    /// Radial samples on a uniform grid over `[0, 1]`, linearly
    /// interpolated, zero at and beyond `rho = 1`.
    GriddedRadial { values: Arc<Vec<f64>> },
    /// Samples on a uniform 3-D grid, tricubic (Catmull-Rom) interpolation,
    /// clamped to zero outside the sample hull and outside the unit ball.
    Gridded3 {
        dims: [usize; 3],
        spacing: f64,
        origin: Point,
        samples: Arc<Vec<f64>>,
    },
    Sum(Box<Potential>, Box<Potential>),
    Scaled(f64, Box<Potential>),
    /// Pass-through wrapper that records the smallest in-ball radius ever
    /// evaluated (diagnostic for causality / domain-of-dependence checks).
    Tracked {
        inner: Box<Potential>,
        min_rho_bits: Arc<std::sync::atomic::AtomicU64>,
    },
}

/// Shared probe for a tracked potential; reports the smallest radius `|x|`
/// at which the wrapped potential was evaluated inside the unit ball.
#[derive(Debug, Clone)]
pub struct AccessProbe {
    bits: Arc<std::sync::atomic::AtomicU64>,
}

impl AccessProbe {
    /// Smallest observed evaluation radius; `+inf` if never evaluated.
    pub fn min_rho(&self) -> f64 {
        f64::from_bits(self.bits.load(std::sync::atomic::Ordering::Relaxed))
    }
}

/// An evaluable potential supported in the open unit ball.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: Kind,
}

impl Potential {
    /// Canonical radial preset `c (1 - |x|^2)^m`.
    pub fn radial_bump(c: f64, m: u32) -> Self {
        Potential {
            kind: Kind::RadialBump { c, m },
        }
    }

    /// Radial profile times a degree-`l` solid harmonic; `l <= 2`.
    pub fn harmonic_modulated(c: f64, m: u32, degree: usize, order: i32) -> Result<Self> {
        if degree > 2 || order.unsigned_abs() as usize > degree {
            return Err(PsError::Usage(format!(
                "harmonic_modulated supports degrees 0..=2, got (l, m) = ({degree}, {order})"
            )));
        }
        Ok(Potential {
            kind: Kind::HarmonicModulated { c, m, degree, order },
        })
    }

    pub fn zero() -> Self {
        Potential::radial_bump(0.0, 2)
    }

    /// Radial samples at `rho_k = k / (n - 1)`, `k = 0..n`, linearly
    /// interpolated. The last sample is forced to zero (support contract).
    pub fn gridded_radial(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(PsError::Usage("need at least two radial samples".into()));
        }
        *values.last_mut().unwrap() = 0.0;
        Ok(Potential {
            kind: Kind::GriddedRadial {
                values: Arc::new(values),
            },
        })
    }

    pub fn gridded3(dims: [usize; 3], spacing: f64, origin: Point, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != dims[0] * dims[1] * dims[2] {
            return Err(PsError::Usage(format!(
                "sample count {} does not match dims {:?}",
                samples.len(),
                dims
            )));
        }
        Ok(Potential {
            kind: Kind::Gridded3 {
                dims,
                spacing,
                origin,
                samples: Arc::new(samples),
            },
        })
    }

    pub fn sum(a: Potential, b: Potential) -> Self {
        Potential {
            kind: Kind::Sum(Box::new(a), Box::new(b)),
        }
    }

    pub fn scaled(s: f64, p: Potential) -> Self {
        Potential {
            kind: Kind::Scaled(s, Box::new(p)),
        }
    }

    /// Wrap a potential so that every in-ball evaluation radius is recorded
    /// in the returned probe. Nonnegative radii order like their IEEE bit
    /// patterns, so an atomic min over bits suffices.
    pub fn tracked(p: Potential) -> (Self, AccessProbe) {
        let bits = Arc::new(std::sync::atomic::AtomicU64::new(
            f64::INFINITY.to_bits(),
        ));
        (
            Potential {
                kind: Kind::Tracked {
                    inner: Box::new(p),
                    min_rho_bits: bits.clone(),
                },
            },
            AccessProbe { bits },
        )
    }

    /// The difference `q1 - q2`.
    pub fn difference(q1: &Potential, q2: &Potential) -> Self {
        Potential::sum(q1.clone(), Potential::scaled(-1.0, q2.clone()))
    }

    /// Whether the potential is exactly rotation invariant; the forward
    /// solver uses this to drop the azimuthal dimension of its grid.
    pub fn is_radial(&self) -> bool {
        match &self.kind {
            Kind::RadialBump { .. } | Kind::GriddedRadial { .. } => true,
            Kind::HarmonicModulated { c, degree, .. } => *c == 0.0 || *degree == 0,
            Kind::Gridded3 { .. } => false,
            Kind::Sum(a, b) => a.is_radial() && b.is_radial(),
            Kind::Scaled(_, p) => p.is_radial(),
            Kind::Tracked { inner, .. } => inner.is_radial(),
        }
    }

    /// `q(x)`; exactly zero for `|x| >= 1`.
    pub fn value(&self, x: Point) -> f64 {
        let rho2 = x.norm_squared();
        if rho2 >= 1.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::RadialBump { c, m } => c * (1.0 - rho2).powi(*m as i32),
            Kind::HarmonicModulated { c, m, degree, order } => {
                c * (1.0 - rho2).powi(*m as i32) * solid_harmonic(*degree, *order, x).0
            }
            Kind::GriddedRadial { values } => interp_radial(values, rho2.sqrt()),
            Kind::Gridded3 {
                dims,
                spacing,
                origin,
                samples,
            } => tricubic(dims, *spacing, *origin, samples, x),
            Kind::Sum(a, b) => a.value(x) + b.value(x),
            Kind::Scaled(s, p) => s * p.value(x),
            Kind::Tracked { inner, min_rho_bits } => {
                min_rho_bits.fetch_min(
                    rho2.sqrt().to_bits(),
                    std::sync::atomic::Ordering::Relaxed,
                );
                inner.value(x)
            }
        }
    }

    /// Gradient of `q`; analytic for presets, central differences for
    /// gridded kinds.
    pub fn gradient(&self, x: Point) -> Point {
        let rho2 = x.norm_squared();
        if rho2 >= 1.0 {
            return Vector3::zeros();
        }
        match &self.kind {
            Kind::RadialBump { c, m } => {
                if *m == 0 {
                    Vector3::zeros()
                } else {
                    -2.0 * c * (*m as f64) * (1.0 - rho2).powi(*m as i32 - 1) * x
                }
            }
            Kind::HarmonicModulated { c, m, degree, order } => {
                let (s, grad_s) = solid_harmonic(*degree, *order, x);
                let g = (1.0 - rho2).powi(*m as i32);
                let dg = if *m == 0 {
                    Vector3::zeros()
                } else {
                    -2.0 * (*m as f64) * (1.0 - rho2).powi(*m as i32 - 1) * x
                };
                *c * (dg * s + g * grad_s)
            }
            Kind::GriddedRadial { .. } | Kind::Gridded3 { .. } => self.fd_gradient(x),
            Kind::Sum(a, b) => a.gradient(x) + b.gradient(x),
            Kind::Scaled(s, p) => *s * p.gradient(x),
            Kind::Tracked { inner, min_rho_bits } => {
                min_rho_bits.fetch_min(
                    rho2.sqrt().to_bits(),
                    std::sync::atomic::Ordering::Relaxed,
                );
                inner.gradient(x)
            }
        }
    }

    fn fd_gradient(&self, x: Point) -> Point {
        let h = 1e-5;
        let mut g = Vector3::zeros();
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (self.value(xp) - self.value(xm)) / (2.0 * h);
        }
        g
    }

    /// Sup-norm estimate over a coarse lattice in the ball.
    pub fn sup_norm_estimate(&self) -> f64 {
        let n = 24;
        let mut sup = 0.0f64;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    let x = Vector3::new(
                        -1.0 + 2.0 * i as f64 / n as f64,
                        -1.0 + 2.0 * j as f64 / n as f64,
                        -1.0 + 2.0 * k as f64 / n as f64,
                    );
                    sup = sup.max(self.value(x).abs());
                }
            }
        }
        sup
    }
}

fn interp_radial(values: &[f64], rho: f64) -> f64 {
    let n = values.len();
    let t = rho * (n - 1) as f64;
    let i = (t.floor() as usize).min(n - 2);
    let frac = t - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// Catmull-Rom interpolation along one axis.
fn catmull_rom(p: [f64; 4], t: f64) -> f64 {
    0.5 * ((2.0 * p[1])
        + (-p[0] + p[2]) * t
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t * t
        + (-p[0] + 3.0 * p[1] - 3.0 * p[2] + p[3]) * t * t * t)
}

fn tricubic(dims: &[usize; 3], spacing: f64, origin: Point, samples: &[f64], x: Point) -> f64 {
    let idx = |i: i64, j: i64, k: i64| -> f64 {
        if i < 0
            || j < 0
            || k < 0
            || i >= dims[0] as i64
            || j >= dims[1] as i64
            || k >= dims[2] as i64
        {
            0.0
        } else {
            samples[(i as usize * dims[1] + j as usize) * dims[2] + k as usize]
        }
    };
    let u = (x - origin) / spacing;
    // Outside the sample hull the support contract returns zero.
    for d in 0..3 {
        if u[d] < 0.0 || u[d] > (dims[d] - 1) as f64 {
            return 0.0;
        }
    }
    let base: Vec<i64> = (0..3).map(|d| u[d].floor() as i64).collect();
    let frac: Vec<f64> = (0..3).map(|d| u[d] - base[d] as f64).collect();
    let mut plane = [0.0; 4];
    for (di, pl) in plane.iter_mut().enumerate() {
        let mut row = [0.0; 4];
        for (dj, r) in row.iter_mut().enumerate() {
            let col = [
                idx(base[0] + di as i64 - 1, base[1] + dj as i64 - 1, base[2] - 1),
                idx(base[0] + di as i64 - 1, base[1] + dj as i64 - 1, base[2]),
                idx(base[0] + di as i64 - 1, base[1] + dj as i64 - 1, base[2] + 1),
                idx(base[0] + di as i64 - 1, base[1] + dj as i64 - 1, base[2] + 2),
            ];
            *r = catmull_rom(col, frac[2]);
        }
        *pl = catmull_rom(row, frac[1]);
    }
    catmull_rom(plane, frac[0])
}

/// `(1 / 8 pi) int_0^1 q(a + s (x - a)) ds` -- the exact characteristic value
/// of the scattered field on the light cone, by adaptive quadrature.
pub fn char_line_integral(q: &Potential, a: &SourcePoint, x: Point) -> f64 {
    let a_pos = a.position();
    let d = x - a_pos;
    let f = |s: f64| q.value(a_pos + s * d);
    integrate_adaptive(&f, 0.0, 1.0, 1e-12) / (8.0 * std::f64::consts::PI)
}

/// Fixed-order Gauss-Legendre variant used by the forward solver's
/// characteristic data assembly.
pub fn char_line_integral_gl(q: &Potential, a: &SourcePoint, x: Point, order: usize) -> f64 {
    let a_pos = a.position();
    let d = x - a_pos;
    integrate_gl(|s| q.value(a_pos + s * d), 0.0, 1.0, order) / (8.0 * std::f64::consts::PI)
}

/// Shell norm `P(rho) = int_{|y| = rho} p(y)^2 dS_y = rho^2 sum_k w_k p(rho
/// omega_k)^2`.
pub fn shell_norm(p: &Potential, rho: f64, grid: &SphereGrid) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(PsError::Domain(format!("rho = {rho} not in (0, 1]")));
    }
    Ok(rho
        * rho
        * grid.integrate(|omega| {
            let v = p.value(rho * omega);
            v * v
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn src() -> SourcePoint {
        SourcePoint::new(Vector3::z()).unwrap()
    }

    #[test]
    fn radial_bump_values() {
        let q = Potential::radial_bump(1.0, 2);
        assert_relative_eq!(q.value(Vector3::zeros()), 1.0);
        assert_eq!(q.value(Vector3::new(1.0, 0.0, 0.0)), 0.0);
        assert_eq!(q.value(Vector3::new(0.8, 0.8, 0.0)), 0.0);
        assert_relative_eq!(q.value(Vector3::new(0.5, 0.0, 0.0)), 0.5625);
    }

    #[test]
    fn support_is_hard_zero_outside_ball() {
        let pots = [
            Potential::radial_bump(2.0, 3),
            Potential::harmonic_modulated(1.0, 2, 2, 1).unwrap(),
            Potential::gridded_radial(vec![1.0, 0.8, 0.5, 0.2, 0.1]).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in &pots {
            for _ in 0..200 {
                let dir = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
                .normalize();
                let x = dir * rng.gen_range(1.0..3.0);
                assert_eq!(p.value(x), 0.0);
                assert_eq!(p.gradient(x), Vector3::zeros());
            }
        }
    }

    #[test]
    fn harmonic_modulated_matches_basis_evaluator() {
        use crate::harmonics::eval_real_sh;
        let p = Potential::harmonic_modulated(0.7, 2, 2, -1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let dir = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalize();
            let rho: f64 = rng.gen_range(0.05..0.95);
            let x = rho * dir;
            let expect = 0.7 * (1.0 - rho * rho).powi(2) * rho.powi(2) * eval_real_sh(2, -1, dir);
            assert_relative_eq!(p.value(x), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn preset_gradients_match_central_differences() {
        let pots = [
            Potential::radial_bump(0.8, 2),
            Potential::radial_bump(-1.3, 4),
            Potential::harmonic_modulated(0.5, 3, 1, -1).unwrap(),
            Potential::harmonic_modulated(1.1, 2, 2, 2).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-4;
        for p in &pots {
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let x = Vector3::new(
                    rng.gen_range(-0.55..0.55),
                    rng.gen_range(-0.55..0.55),
                    rng.gen_range(-0.55..0.55),
                );
                let g = p.gradient(x);
                for i in 0..3 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (p.value(xp) - p.value(xm)) / (2.0 * h);
                    worst = worst.max((g[i] - fd).abs());
                }
            }
            assert!(worst <= 1e-6, "gradient mismatch {worst}");
        }
    }

    #[test]
    fn line_integral_examples() {
        let a = src();
        let q = Potential::radial_bump(1.0, 2);
        // Degenerate segment: q vanishes on the sphere.
        assert!(char_line_integral(&q, &a, a.position()).abs() <= 1e-14);
        // Antipodal chord: (1/8pi) * 8/15 = 1/(15 pi).
        let got = char_line_integral(&q, &a, -a.position());
        assert_relative_eq!(got, 1.0 / (15.0 * PI), epsilon = 1e-10);
        assert_relative_eq!(got, 0.021220659078919377, epsilon = 1e-8);
    }

    #[test]
    fn line_integral_is_linear() {
        let a = src();
        let q1 = Potential::radial_bump(0.7, 2);
        let q2 = Potential::harmonic_modulated(0.4, 2, 2, 0).unwrap();
        let x = Vector3::new(0.3, -0.8, 0.2);
        let v1 = char_line_integral(&q1, &a, x);
        let v2 = char_line_integral(&q2, &a, x);
        let vsum = char_line_integral(&Potential::sum(q1, q2), &a, x);
        assert_relative_eq!(vsum, v1 + v2, epsilon = 1e-12);
    }

    #[test]
    fn gl_line_integral_matches_adaptive() {
        let a = src();
        let q = Potential::radial_bump(0.5, 2);
        for &x in &[Vector3::new(0.2, 0.1, -0.9), Vector3::new(-0.7, 0.3, 0.0)] {
            let ad = char_line_integral(&q, &a, x);
            let gl = char_line_integral_gl(&q, &a, x, 32);
            assert_relative_eq!(ad, gl, epsilon = 1e-10);
        }
    }

    #[test]
    fn shell_norm_examples() {
        let grid = SphereGrid::gauss_product(24, 48);
        let q = Potential::radial_bump(0.9, 2);
        for &rho in &[0.3, 0.6, 0.9] {
            let got = shell_norm(&q, rho, &grid).unwrap();
            let expect = 4.0 * PI * rho * rho * q.value(Vector3::new(rho, 0.0, 0.0)).powi(2);
            assert_relative_eq!(got, expect, epsilon = 1e-10);
        }
        // p = f(rho) Y_n with unit-normalized Y_n -> rho^2 f(rho)^2.
        let p = Potential::harmonic_modulated(1.0, 2, 2, 1).unwrap();
        let rho: f64 = 0.5;
        let f = (1.0 - rho * rho).powi(2) * rho.powi(2);
        assert_relative_eq!(
            shell_norm(&p, rho, &grid).unwrap(),
            rho * rho * f * f,
            epsilon = 1e-10
        );
        // Any supported p vanishes on the unit sphere.
        assert!(shell_norm(&p, 1.0, &grid).unwrap() <= 1e-12);
    }

    #[test]
    fn shell_norm_nonnegative_and_continuous() {
        let grid = SphereGrid::gauss_product(16, 32);
        let p = Potential::difference(
            &Potential::radial_bump(0.6, 2),
            &Potential::harmonic_modulated(0.3, 2, 1, 0).unwrap(),
        );
        let mut prev = shell_norm(&p, 0.02, &grid).unwrap();
        for i in 1..50 {
            let rho = 0.02 + 0.019 * i as f64;
            let cur = shell_norm(&p, rho, &grid).unwrap();
            assert!(cur >= 0.0);
            assert!((cur - prev).abs() <= 0.08, "jump at rho = {rho}");
            prev = cur;
        }
    }

    #[test]
    fn gridded_radial_interpolates_and_clamps() {
        let q = Potential::gridded_radial(vec![1.0, 0.5, 0.25, 0.0]).unwrap();
        assert_relative_eq!(q.value(Vector3::zeros()), 1.0);
        assert_relative_eq!(q.value(Vector3::new(0.5, 0.0, 0.0)), 0.375, epsilon = 1e-12);
        assert_eq!(q.value(Vector3::new(0.0, 1.2, 0.0)), 0.0);
    }

    #[test]
    fn gridded3_reproduces_smooth_samples() {
        // Sample a radial bump on a grid and require tricubic interpolation
        // to track it to third order.
        let n = 33usize;
        let spacing = 2.0 / (n - 1) as f64;
        let origin = Vector3::new(-1.0, -1.0, -1.0);
        let truth = Potential::radial_bump(1.0, 3);
        let mut samples = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = origin + spacing * Vector3::new(i as f64, j as f64, k as f64);
                    samples[(i * n + j) * n + k] = truth.value(x);
                }
            }
        }
        let q = Potential::gridded3([n, n, n], spacing, origin, samples).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst = 0.0f64;
        for _ in 0..500 {
            let x = Vector3::new(
                rng.gen_range(-0.7..0.7),
                rng.gen_range(-0.7..0.7),
                rng.gen_range(-0.7..0.7),
            );
            worst = worst.max((q.value(x) - truth.value(x)).abs());
        }
        assert!(worst <= 5e-4, "tricubic error {worst}");
    }

    #[test]
    fn radial_detection() {
        assert!(Potential::radial_bump(1.0, 2).is_radial());
        assert!(Potential::difference(
            &Potential::radial_bump(1.0, 2),
            &Potential::radial_bump(0.3, 3)
        )
        .is_radial());
        assert!(!Potential::harmonic_modulated(0.5, 2, 2, 0).unwrap().is_radial());
        assert!(Potential::harmonic_modulated(0.5, 2, 0, 0).unwrap().is_radial());
    }
}
