//! Forward solver for the scattered part of the point-source wave field.
//!
//! The total field of a delta source fired at time zero from a point `a` on
//! the unit sphere splits into the free spherical front plus a smooth
//! remainder `u` that solves a characteristic Goursat problem inside the
//! light cone `t >= |x - a|`: `(box - q) u = 0` with data on the cone given
//! by the characteristic line integral of the potential.
//!
//! In source-centered spherical coordinates (`r = |x - a|`, polar angle
//! `psi` about the axis from the source through the ball center, azimuth
//! `beta`) and characteristic coordinates `mu = t - r`, `nu = t + r`, the
//! scaled field `w = r u` satisfies
//!
//! `4 w_{mu nu} = q w + r^{-2} Lap_S w`
//!
//! with `w = 0` on the axis `nu = mu` and `w = r * (line integral)` on
//! `mu = 0`. Each Picard iterate freezes the potential term at the unknown
//! corner and marches cell by cell in `mu`; the stiff angular Laplacian is
//! treated implicitly per cell (Fourier modes in `beta`, tridiagonal solve
//! in `psi`), which keeps the sweep unconditionally stable near the axis.

use crate::error::{PsError, Result};
use crate::potential::{char_line_integral, char_line_integral_gl, Potential};
use crate::quad::gauss_legendre_on;
use crate::sphere_geometry::{Point, SourcePoint, SphereGrid};
use crate::spherical_means::boundary_mean;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Discretization parameters for the light-cone solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Characteristic step in `mu` and `nu` (equal by construction so the
    /// axis `nu = mu` stays on the grid).
    pub delta: f64,
    /// Largest advanced time `nu = t + r` needed by the caller; the solver
    /// adds a small internal margin.
    pub nu_max: f64,
    /// Number of polar cells in `psi`.
    pub n_polar: usize,
    /// Number of azimuthal samples in `beta`; forced to 1 for radial
    /// potentials, whose fields are axisymmetric about the source axis.
    pub n_azimuth: usize,
    /// Picard iteration cap.
    pub max_iter: usize,
    /// Fixed-point tolerance on the sup change of `u` between sweeps.
    pub eps_fix: f64,
    /// Gauss-Legendre order for the characteristic line-integral data.
    pub line_quad: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            delta: 1.0 / 64.0,
            nu_max: 2.0,
            n_polar: 64,
            n_azimuth: 16,
            max_iter: 20,
            eps_fix: 1e-8,
            line_quad: 32,
        }
    }
}

/// Extra `nu` rows solved beyond the requested window so that traces and
/// interpolation right at `nu_max` have full stencils.
const NU_MARGIN_STEPS: usize = 4;

/// Azimuthal eigenvector of the discrete angular Laplacian.
struct BetaMode {
    m2: f64,
    basis: Vec<f64>,
    inv_norm2: f64,
}

/// Angular discretization shared by all cells: cell-centered `psi` grid with
/// zero-flux pole faces and a real Fourier basis in `beta`.
struct AngularOps {
    n_psi: usize,
    n_beta: usize,
    sin_c: Vec<f64>,
    inv_sin2: Vec<f64>,
    /// Finite-volume couplings: `(L w)_p = upper_p (w_{p+1} - w_p)
    /// - lower_p (w_p - w_{p-1}) - m^2 w_p / sin^2 psi_p`.
    lower: Vec<f64>,
    upper: Vec<f64>,
    modes: Vec<BetaMode>,
}

impl AngularOps {
    fn new(n_psi: usize, n_beta: usize) -> Self {
        let dpsi = PI / n_psi as f64;
        let mut sin_c = Vec::with_capacity(n_psi);
        let mut inv_sin2 = Vec::with_capacity(n_psi);
        let mut lower = Vec::with_capacity(n_psi);
        let mut upper = Vec::with_capacity(n_psi);
        for p in 0..n_psi {
            let psi = (p as f64 + 0.5) * dpsi;
            let s = psi.sin();
            sin_c.push(s);
            inv_sin2.push(1.0 / (s * s));
            // Face values sin(p dpsi) vanish at both poles, which encodes the
            // zero-flux condition without special cases.
            let s_lo = (p as f64 * dpsi).sin();
            let s_hi = ((p as f64 + 1.0) * dpsi).sin();
            lower.push(s_lo / (s * dpsi * dpsi));
            upper.push(s_hi / (s * dpsi * dpsi));
        }
        let mut modes = Vec::new();
        let nb = n_beta as f64;
        modes.push(BetaMode {
            m2: 0.0,
            basis: vec![1.0; n_beta],
            inv_norm2: 1.0 / nb,
        });
        let half = n_beta / 2;
        for m in 1..n_beta.div_ceil(2) {
            let cosv: Vec<f64> = (0..n_beta)
                .map(|b| (2.0 * PI * (m * b) as f64 / nb).cos())
                .collect();
            let sinv: Vec<f64> = (0..n_beta)
                .map(|b| (2.0 * PI * (m * b) as f64 / nb).sin())
                .collect();
            let m2 = (m * m) as f64;
            modes.push(BetaMode {
                m2,
                basis: cosv,
                inv_norm2: 2.0 / nb,
            });
            modes.push(BetaMode {
                m2,
                basis: sinv,
                inv_norm2: 2.0 / nb,
            });
        }
        if n_beta % 2 == 0 && n_beta > 1 {
            modes.push(BetaMode {
                m2: (half * half) as f64,
                basis: (0..n_beta).map(|b| if b % 2 == 0 { 1.0 } else { -1.0 }).collect(),
                inv_norm2: 1.0 / nb,
            });
        }
        AngularOps {
            n_psi,
            n_beta,
            sin_c,
            inv_sin2,
            lower,
            upper,
            modes,
        }
    }

    fn field_len(&self) -> usize {
        self.n_psi * self.n_beta
    }

    /// Project `w` (layout `[psi][beta]`) onto the beta modes; `coeff` has
    /// layout `[mode][psi]`.
    fn to_modes(&self, w: &[f64], coeff: &mut [f64]) {
        let (np, nb) = (self.n_psi, self.n_beta);
        for (k, mode) in self.modes.iter().enumerate() {
            for p in 0..np {
                let row = &w[p * nb..(p + 1) * nb];
                let mut acc = 0.0;
                for b in 0..nb {
                    acc += row[b] * mode.basis[b];
                }
                coeff[k * np + p] = acc * mode.inv_norm2;
            }
        }
    }

    fn from_modes(&self, coeff: &[f64], w: &mut [f64]) {
        let (np, nb) = (self.n_psi, self.n_beta);
        w.fill(0.0);
        for (k, mode) in self.modes.iter().enumerate() {
            for p in 0..np {
                let c = coeff[k * np + p];
                if c == 0.0 {
                    continue;
                }
                let row = &mut w[p * nb..(p + 1) * nb];
                for b in 0..nb {
                    row[b] += c * mode.basis[b];
                }
            }
        }
    }

    /// Apply the full discrete angular Laplacian to `w`, writing into `out`.
    fn apply_laplacian(&self, w: &[f64], coeff: &mut [f64], out: &mut [f64]) {
        let np = self.n_psi;
        self.to_modes(w, coeff);
        let mut lap = vec![0.0; self.modes.len() * np];
        for (k, mode) in self.modes.iter().enumerate() {
            let c = &coeff[k * np..(k + 1) * np];
            let l = &mut lap[k * np..(k + 1) * np];
            for p in 0..np {
                let up = if p + 1 < np { self.upper[p] * (c[p + 1] - c[p]) } else { 0.0 };
                let lo = if p > 0 { self.lower[p] * (c[p] - c[p - 1]) } else { 0.0 };
                l[p] = up - lo - mode.m2 * self.inv_sin2[p] * c[p];
            }
        }
        self.from_modes(&lap, out);
    }

    /// Solve `(4 I - lam * Lap_S) w = rhs` for one cell.
    fn solve_implicit(&self, lam: f64, rhs: &[f64], coeff: &mut [f64], w: &mut [f64]) {
        let np = self.n_psi;
        self.to_modes(rhs, coeff);
        let mut diag = vec![0.0; np];
        let mut work = vec![0.0; np];
        for (k, mode) in self.modes.iter().enumerate() {
            let c = &mut coeff[k * np..(k + 1) * np];
            for p in 0..np {
                let mut d = 4.0 + lam * mode.m2 * self.inv_sin2[p];
                if p + 1 < np {
                    d += lam * self.upper[p];
                }
                if p > 0 {
                    d += lam * self.lower[p];
                }
                diag[p] = d;
            }
            // Thomas sweep with sub-diagonal -lam*lower_p, super -lam*upper_p.
            work[0] = -lam * self.upper[0] / diag[0];
            c[0] /= diag[0];
            for p in 1..np {
                let sub = -lam * self.lower[p];
                let denom = diag[p] - sub * work[p - 1];
                if p + 1 < np {
                    work[p] = -lam * self.upper[p] / denom;
                }
                c[p] = (c[p] - sub * c[p - 1]) / denom;
            }
            for p in (0..np - 1).rev() {
                let cp1 = c[p + 1];
                c[p] -= work[p] * cp1;
            }
        }
        self.from_modes(coeff, w);
    }
}

/// The converged scaled field `w = r u` on the triangular characteristic
/// grid, with the source trace precomputed.
pub struct LightConeField {
    a: SourcePoint,
    frame: (Point, Point, Point),
    delta: f64,
    /// Grid extends over `0 <= i <= j <= n` with `mu = i delta`,
    /// `nu = j delta`.
    n: usize,
    nu_max: f64,
    n_psi: usize,
    n_beta: usize,
    row_offsets: Vec<usize>,
    w: Vec<f64>,
    /// Angular mean of `u` at the source for `t = k delta / 2`.
    trace: Vec<f64>,
    /// Sup change of `u` after each Picard sweep.
    pub iteration_history: Vec<f64>,
}

/// Discrete residual statistics of the converged field in the cell scheme.
#[derive(Debug, Clone, Copy)]
pub struct PdeResidualReport {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub cells_checked: usize,
}

fn source_frame(a: &SourcePoint) -> (Point, Point, Point) {
    let (e1, e2) = a.tangent_frame();
    (e1, e2, -a.position())
}

impl LightConeField {
    pub fn source(&self) -> &SourcePoint {
        &self.a
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nu_max(&self) -> f64 {
        self.nu_max
    }

    fn field_len(&self) -> usize {
        self.n_psi * self.n_beta
    }

    fn point_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j <= self.n);
        (self.row_offsets[i] + (j - i)) * self.field_len()
    }

    fn node(&self, i: usize, j: usize) -> &[f64] {
        let s = self.point_index(i, j);
        &self.w[s..s + self.field_len()]
    }

    /// Position of the angular node `(p, b)` at distance `r` from the source.
    fn position(&self, r: f64, p: usize, b: usize) -> Point {
        let dpsi = PI / self.n_psi as f64;
        let psi = (p as f64 + 0.5) * dpsi;
        let beta = 2.0 * PI * b as f64 / self.n_beta as f64;
        let (e1, e2, e3) = self.frame;
        let dir = psi.sin() * (beta.cos() * e1 + beta.sin() * e2) + psi.cos() * e3;
        self.a.position() + r * dir
    }

    fn angular_mean(&self, i: usize, j: usize, sin_c: &[f64], sin_total: f64) -> f64 {
        let node = self.node(i, j);
        let nb = self.n_beta;
        let mut acc = 0.0;
        for p in 0..self.n_psi {
            let mut row = 0.0;
            for b in 0..nb {
                row += node[p * nb + b];
            }
            acc += sin_c[p] * row;
        }
        acc / (sin_total * nb as f64)
    }

    /// Scattered field at the source point, `u(a, t)`, by Richardson
    /// extrapolation of angular means at the two smallest on-grid radii
    /// along the constant-time anti-diagonal, then linear interpolation in
    /// `t`.
    pub fn trace_at_source(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        if t > self.nu_max + 1e-12 {
            return Err(PsError::Range(format!(
                "trace time t = {t} beyond solved window nu_max = {}",
                self.nu_max
            )));
        }
        let step = 0.5 * self.delta;
        let f = (t / step).min((self.trace.len() - 1) as f64);
        let k = (f.floor() as usize).min(self.trace.len() - 2);
        let frac = f - k as f64;
        Ok((1.0 - frac) * self.trace[k] + frac * self.trace[k + 1])
    }

    /// Scattered field `u(x, t)` by multilinear interpolation of `w / r` on
    /// the characteristic grid. Exactly zero ahead of the front (`t < |x-a|`).
    pub fn eval(&self, x: Point, t: f64) -> Result<f64> {
        let dx = x - self.a.position();
        let r = dx.norm();
        let mu = t - r;
        let nu = t + r;
        if mu < 0.0 {
            return Ok(0.0);
        }
        if nu > self.n as f64 * self.delta + 1e-12 {
            return Err(PsError::Range(format!(
                "eval point (r = {r}, t = {t}) outside solved window nu_max = {}",
                self.nu_max
            )));
        }
        if r < 0.25 * self.delta {
            return self.trace_at_source(t);
        }
        let (e1, e2, e3) = self.frame;
        let psi = (dx.dot(&e3) / r).clamp(-1.0, 1.0).acos();
        let beta = dx.dot(&e2).atan2(dx.dot(&e1)).rem_euclid(2.0 * PI);

        let fi = mu / self.delta;
        let fj = (nu / self.delta).min(self.n as f64 - 1e-9);
        let i0 = (fi.floor() as usize).min(self.n - 1);
        let j0 = (fj.floor() as usize).min(self.n - 1);
        let si = fi - i0 as f64;
        let sj = fj - j0 as f64;

        let dpsi = PI / self.n_psi as f64;
        let fp = (psi / dpsi - 0.5).clamp(0.0, (self.n_psi - 1) as f64);
        let p0 = (fp.floor() as usize).min(self.n_psi.saturating_sub(2).max(0));
        let sp = if self.n_psi > 1 { fp - p0 as f64 } else { 0.0 };
        let dbeta = 2.0 * PI / self.n_beta as f64;
        let fb = beta / dbeta;
        let b0 = (fb.floor() as usize).min(self.n_beta - 1);
        let sb = fb - b0 as f64;
        let b1 = (b0 + 1) % self.n_beta;
        let p1 = (p0 + 1).min(self.n_psi - 1);

        let nb = self.n_beta;
        let mut acc = 0.0;
        for (di, wi) in [(0usize, 1.0 - si), (1, si)] {
            for (dj, wj) in [(0usize, 1.0 - sj), (1, sj)] {
                let (ci, cj) = (i0 + di, j0 + dj);
                // Corners below the axis carry w = 0.
                let corner = if ci > cj {
                    0.0
                } else {
                    let node = self.node(ci, cj);
                    let g = |p: usize, b: usize| node[p * nb + b];
                    let low = (1.0 - sb) * g(p0, b0) + sb * g(p0, b1);
                    let high = (1.0 - sb) * g(p1, b0) + sb * g(p1, b1);
                    (1.0 - sp) * low + sp * high
                };
                acc += wi * wj * corner;
            }
        }
        Ok(acc / r)
    }

    /// Re-evaluate the cell scheme on the converged field with nothing
    /// frozen; the result measures how well the field satisfies the discrete
    /// wave equation.
    pub fn pde_residual(&self, q: &Potential) -> PdeResidualReport {
        let ops = AngularOps::new(self.n_psi, self.n_beta);
        let len = self.field_len();
        let mut coeff = vec![0.0; ops.modes.len() * self.n_psi];
        let mut lap_a = vec![0.0; len];
        let mut lap_d = vec![0.0; len];
        let mut max_res = 0.0f64;
        let mut sum = 0.0f64;
        let mut count = 0usize;
        let d2 = self.delta * self.delta;
        for i in 0..self.n {
            for j in (i + 2)..=self.n {
                let rc = 0.5 * self.delta * (j - 1 - i) as f64;
                let inv_r2 = 1.0 / (rc * rc);
                let a = self.node(i, j - 1);
                let b = self.node(i + 1, j - 1);
                let c = self.node(i, j);
                let d = self.node(i + 1, j);
                ops.apply_laplacian(a, &mut coeff, &mut lap_a);
                ops.apply_laplacian(d, &mut coeff, &mut lap_d);
                let mut cell_max = 0.0f64;
                for p in 0..self.n_psi {
                    for bb in 0..self.n_beta {
                        let idx = p * self.n_beta + bb;
                        let qa = q.value(self.position(rc, p, bb));
                        let lhs = 4.0 * (d[idx] - b[idx] - c[idx] + a[idx]);
                        let rhs = 0.5
                            * d2
                            * (qa * (a[idx] + d[idx]) + inv_r2 * (lap_a[idx] + lap_d[idx]));
                        cell_max = cell_max.max((lhs - rhs).abs());
                    }
                }
                max_res = max_res.max(cell_max);
                sum += cell_max;
                count += 1;
            }
        }
        PdeResidualReport {
            max_residual: max_res,
            mean_residual: if count > 0 { sum / count as f64 } else { 0.0 },
            cells_checked: count,
        }
    }
}

/// Solve the characteristic Goursat problem for the scattered field of `q`
/// seen from the source `a`.
pub fn picard_solve(q: &Potential, a: &SourcePoint, config: &SolverConfig) -> Result<LightConeField> {
    if !(config.delta > 0.0 && config.nu_max > 0.0) {
        return Err(PsError::Domain("delta and nu_max must be positive".into()));
    }
    if config.n_polar == 0 || config.n_azimuth == 0 {
        return Err(PsError::Domain("angular resolution must be positive".into()));
    }
    let n_beta = if q.is_radial() { 1 } else { config.n_azimuth };
    let n_psi = config.n_polar;
    let n = (config.nu_max / config.delta).ceil() as usize + NU_MARGIN_STEPS;
    let ops = AngularOps::new(n_psi, n_beta);
    let len = ops.field_len();

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut off = 0usize;
    for i in 0..=n {
        row_offsets.push(off);
        off += n - i + 1;
    }
    let mut field = LightConeField {
        a: *a,
        frame: source_frame(a),
        delta: config.delta,
        n,
        nu_max: config.nu_max,
        n_psi,
        n_beta,
        row_offsets,
        w: vec![0.0; off * len],
        trace: Vec::new(),
        iteration_history: Vec::new(),
    };

    // Potential samples by radial shell: the grid radius depends only on
    // j - i, so one table covers every node.
    let q_shell: Vec<Vec<f64>> = (0..=n)
        .map(|d| {
            let r = 0.5 * config.delta * d as f64;
            (0..len)
                .map(|idx| q.value(field.position(r, idx / n_beta, idx % n_beta)))
                .collect()
        })
        .collect();

    // Characteristic data on mu = 0: w = r * (line integral of q).
    for j in 1..=n {
        let r = 0.5 * config.delta * j as f64;
        let s = field.point_index(0, j);
        for idx in 0..len {
            let x = field.position(r, idx / n_beta, idx % n_beta);
            field.w[s + idx] = r * char_line_integral_gl(q, a, x, config.line_quad);
        }
    }

    let d2 = config.delta * config.delta;
    let mut coeff = vec![0.0; ops.modes.len() * n_psi];
    let mut lap_a = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    let mut sol = vec![0.0; len];
    let mut converged = false;
    for _ in 0..config.max_iter {
        let mut sup_change = 0.0f64;
        for i in 0..n {
            for j in (i + 2)..=n {
                // Unknown corner D = (i+1, j); A = (i, j-1), B = (i+1, j-1),
                // C = (i, j) are already current in this sweep. The trapezoid
                // corners A and D share the radius r_c.
                let rc = 0.5 * config.delta * (j - 1 - i) as f64;
                let lam = 0.5 * d2 / (rc * rc);
                let qs = &q_shell[j - 1 - i];
                let ai = field.point_index(i, j - 1);
                let bi = field.point_index(i + 1, j - 1);
                let ci = field.point_index(i, j);
                let di = field.point_index(i + 1, j);
                {
                    let a_node = &field.w[ai..ai + len];
                    ops.apply_laplacian(a_node, &mut coeff, &mut lap_a);
                    for idx in 0..len {
                        let wa = field.w[ai + idx];
                        let wb = field.w[bi + idx];
                        let wc = field.w[ci + idx];
                        let wd_old = field.w[di + idx];
                        rhs[idx] = 4.0 * (wb + wc - wa)
                            + 0.5 * d2 * qs[idx] * (wa + wd_old)
                            + lam * lap_a[idx];
                    }
                }
                ops.solve_implicit(lam, &rhs, &mut coeff, &mut sol);
                let inv_r = 2.0 / (config.delta * (j - i - 1).max(1) as f64);
                for idx in 0..len {
                    let delta_w = sol[idx] - field.w[di + idx];
                    if !delta_w.is_finite() {
                        return Err(PsError::NonFinite(format!(
                            "solver blow-up at mu index {} nu index {}",
                            i + 1,
                            j
                        )));
                    }
                    sup_change = sup_change.max(delta_w.abs() * inv_r);
                    field.w[di + idx] = sol[idx];
                }
            }
        }
        field.iteration_history.push(sup_change);
        if sup_change <= config.eps_fix {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PsError::NonConvergence {
            history: field.iteration_history.clone(),
        });
    }

    // Precompute the source trace on the half-step time grid.
    let sin_total: f64 = ops.sin_c.iter().sum();
    let mut trace = vec![0.0; 2 * n];
    for (k, slot) in trace.iter_mut().enumerate().skip(1) {
        let mut vals: Vec<(f64, f64)> = Vec::with_capacity(2);
        for d in 1..=4usize {
            if d > k || (k - d) % 2 != 0 {
                continue;
            }
            let (i, j) = ((k - d) / 2, (k + d) / 2);
            if j > n {
                continue;
            }
            let r = 0.5 * config.delta * d as f64;
            vals.push((r, field.angular_mean(i, j, &ops.sin_c, sin_total) / r));
            if vals.len() == 2 {
                break;
            }
        }
        *slot = match vals.as_slice() {
            [] => 0.0,
            [(_, u)] => *u,
            [(r1, u1), (r2, u2), ..] => {
                (r2 * r2 * u1 - r1 * r1 * u2) / (r2 * r2 - r1 * r1)
            }
        };
    }
    field.trace = trace;
    Ok(field)
}

/// First Born approximation of the scattered field,
/// `(1/16 pi^2) int q(y) / (|y - x| |y - a|) delta(t - |y - x| - |y - a|) dy`,
/// reduced to a smooth integral over the prolate-spheroid level set with
/// foci `x` and `a`.
pub fn born_first_term(q: &Potential, a: &SourcePoint, x: Point, t: f64, n_quad: usize) -> Result<f64> {
    if n_quad == 0 {
        return Err(PsError::Domain("n_quad must be positive".into()));
    }
    let d = (x - a.position()).norm();
    if t <= 0.0 {
        return Ok(0.0);
    }
    if d < 1e-14 {
        // Coincident foci: the spheroid collapses to the sphere of radius
        // t/2 about the source, and the Born term is the spherical mean.
        return Ok(boundary_mean(q, a, 0.5 * t, n_quad, n_quad)? / (8.0 * PI));
    }
    if t < d {
        return Ok(0.0);
    }
    let sigma0 = t / d;
    if sigma0 - 1.0 < 1e-12 {
        return Ok(char_line_integral(q, a, x));
    }
    let e1 = (x - a.position()) / d;
    let helper = if e1.x.abs() < 0.9 { Point::new(1.0, 0.0, 0.0) } else { Point::new(0.0, 1.0, 0.0) };
    let e2 = (helper - helper.dot(&e1) * e1).normalize();
    let e3 = e1.cross(&e2);
    let mid = 0.5 * (x + a.position());
    let (nodes, weights) = gauss_legendre_on(n_quad, -1.0, 1.0);
    let n_beta = n_quad.max(4);
    let dbeta = 2.0 * PI / n_beta as f64;
    let radial = (sigma0 * sigma0 - 1.0).sqrt();
    let mut total = 0.0;
    for (&tc, &wt) in nodes.iter().zip(&weights) {
        let axial = 0.5 * d * sigma0 * tc;
        let ring = 0.5 * d * radial * (1.0 - tc * tc).max(0.0).sqrt();
        let mut acc = 0.0;
        for bi in 0..n_beta {
            let beta = (bi as f64 + 0.5) * dbeta;
            let y = mid + axial * e1 + ring * (beta.cos() * e2 + beta.sin() * e3);
            acc += q.value(y);
        }
        total += wt * acc * dbeta;
    }
    Ok(total / (32.0 * PI * PI))
}

/// Backscatter measurements `u^a(a, t)` for a family of sources and times.
#[derive(Debug, Clone)]
pub struct BackscatterData {
    pub sources: Vec<SourcePoint>,
    pub times: Vec<f64>,
    /// `values[source][time]`.
    pub values: Vec<Vec<f64>>,
    /// Per-source failure description; `None` marks success.
    pub errors: Vec<Option<String>>,
}

impl BackscatterData {
    /// CSV with columns `a_index,a_x,a_y,a_z,t,value`; failed sources are
    /// omitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a_index,a_x,a_y,a_z,t,value\n");
        for (si, src) in self.sources.iter().enumerate() {
            if self.errors[si].is_some() {
                continue;
            }
            let p = src.position();
            for (ti, &t) in self.times.iter().enumerate() {
                out.push_str(&format!(
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                    si, p.x, p.y, p.z, t, self.values[si][ti]
                ));
            }
        }
        out
    }
}

/// Acquire backscatter traces for every source. Radial potentials are solved
/// once and shared across sources (the trace is rotation invariant); general
/// potentials are solved per source in parallel with deterministic ordering.
pub fn acquire_data(
    q: &Potential,
    sources: &[SourcePoint],
    times: &[f64],
    config: &SolverConfig,
) -> Result<BackscatterData> {
    if sources.is_empty() {
        return Err(PsError::Domain("no sources given".into()));
    }
    if let Some(&bad) = times.iter().find(|&&t| !(t >= 0.0 && t <= config.nu_max)) {
        return Err(PsError::Domain(format!(
            "trace time {bad} outside [0, nu_max = {}]",
            config.nu_max
        )));
    }
    let trace_one = |a: &SourcePoint| -> std::result::Result<Vec<f64>, String> {
        let f = picard_solve(q, a, config).map_err(|e| e.to_string())?;
        times
            .iter()
            .map(|&t| f.trace_at_source(t).map_err(|e| e.to_string()))
            .collect()
    };
    let (values, errors): (Vec<Vec<f64>>, Vec<Option<String>>) = if q.is_radial() {
        match trace_one(&sources[0]) {
            Ok(row) => (
                vec![row; sources.len()],
                vec![None; sources.len()],
            ),
            Err(e) => (
                vec![vec![]; sources.len()],
                vec![Some(e); sources.len()],
            ),
        }
    } else {
        let results: Vec<_> = sources.par_iter().map(trace_one).collect();
        results
            .into_iter()
            .map(|r| match r {
                Ok(row) => (row, None),
                Err(e) => (vec![], Some(e)),
            })
            .unzip()
    };
    Ok(BackscatterData {
        sources: sources.to_vec(),
        times: times.to_vec(),
        values,
        errors,
    })
}

/// Sources taken from a sphere quadrature grid's nodes.
pub fn grid_sources(grid: &SphereGrid) -> Vec<SourcePoint> {
    grid.nodes
        .iter()
        .map(|&p| SourcePoint::new(p).expect("grid nodes are unit vectors"))
        .collect()
}
