//! Layer-stripping reconstruction of radial potentials from backscatter
//! data, plus the Abel/Gronwall utilities behind the stability argument.
//!
//! With the second potential set to zero, the data identity becomes a
//! nonlinear Volterra relation in the half-time `tau`:
//!
//! `d(a, 2 tau) = (1/8 pi) (Mq)(a, tau)
//!     + int_{|x-a| <= tau} q(x) u(x, 2 tau - |x-a|) / (4 pi |x-a|) dx`
//!
//! (the time-convolution part of the kernel vanishes). Causality makes the
//! correction integral depend only on the potential in the outer shell
//! `|y| >= 1 - tau`, which is exactly what earlier layers have already
//! recovered — so the relation can be marched inward: recover the mean,
//! differentiate (the radial derivative identity `q((1-tau) a) =
//! 2/(1-tau) d/dtau [tau (Mq)(a, tau)]`), deposit a new shell value,
//! optionally re-solve and correct.

use crate::error::{PsError, Result};
use crate::forward_solver::{picard_solve, BackscatterData, SolverConfig};
use crate::potential::Potential;
use crate::quad::gauss_legendre_on;
use crate::sphere_geometry::{SourcePoint, SphereGrid};
use nalgebra::Vector3;
use std::f64::consts::PI;

/// `int_s^r d rho / sqrt((rho - s)(r - rho))`, which equals `pi` for every
/// `s < r`. Computed by splitting at the midpoint and substituting the
/// square root of the distance to the nearer endpoint on each half, leaving
/// a smooth (but non-polynomial) integrand, so the quadrature convergence
/// is spectral rather than trivially exact.
pub fn abel_pi_identity(s: f64, r: f64, n_quad: usize) -> Result<f64> {
    if s >= r {
        return Err(PsError::Domain(format!("need s < r, got s = {s}, r = {r}")));
    }
    let len = r - s;
    let (nodes, weights) = gauss_legendre_on(n_quad, 0.0, (0.5 * len).sqrt());
    let mut total = 0.0;
    for (&w, &wt) in nodes.iter().zip(&weights) {
        // Left half (rho = s + w^2) and right half (rho = r - w^2) give the
        // same transformed integrand 2 / sqrt(len - w^2).
        total += wt * 4.0 / (len - w * w).sqrt();
    }
    Ok(total)
}

/// Shell-norm samples `P(rho)` on a grid in `(0, 1]`, linearly interpolated.
#[derive(Debug, Clone)]
pub struct ShellSamples {
    pub rho: Vec<f64>,
    pub values: Vec<f64>,
}

impl ShellSamples {
    pub fn from_fn<F: Fn(f64) -> f64>(f: F, n: usize) -> Self {
        let rho: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let values = rho.iter().map(|&r| f(r)).collect();
        ShellSamples { rho, values }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let n = self.rho.len();
        if r <= self.rho[0] {
            return self.values[0];
        }
        if r >= self.rho[n - 1] {
            return self.values[n - 1];
        }
        let i = self.rho.partition_point(|&x| x <= r).min(n - 1) - 1;
        let t = (r - self.rho[i]) / (self.rho[i + 1] - self.rho[i]);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

/// `R(s) = P(s) / int_s^1 P(rho) (rho - s)^{-1/2} d rho`, the ratio probed
/// by the Gronwall step of the stability argument. Returns 0 when both
/// numerator and denominator vanish, infinity when only the denominator
/// does.
pub fn stability_ratio(p: &ShellSamples, s: f64, n_quad: usize) -> f64 {
    let num = p.eval(s);
    if s >= 1.0 {
        return if num == 0.0 { 0.0 } else { f64::INFINITY };
    }
    // rho = s + w^2 removes the endpoint singularity.
    let (nodes, weights) = gauss_legendre_on(n_quad, 0.0, (1.0 - s).sqrt());
    let mut denom = 0.0;
    for (&w, &wt) in nodes.iter().zip(&weights) {
        denom += wt * 2.0 * p.eval(s + w * w);
    }
    if denom == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / denom
    }
}

/// Diagnostic sweep of the stability ratio over `s in [eps, 1)`.
#[derive(Debug, Clone)]
pub struct GronwallReport {
    pub eps: f64,
    pub table: Vec<(f64, f64)>,
    pub sup_ratio: f64,
    pub argmax_s: f64,
    /// The iterated-bound constant `pi C^2` with `C` the empirical sup.
    pub pi_c_sq: f64,
}

pub fn gronwall_report(p: &ShellSamples, eps: f64, n_s: usize, n_quad: usize) -> Result<GronwallReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(PsError::Domain(format!("eps = {eps} not in (0, 1)")));
    }
    let s_hi = 0.99;
    let mut table = Vec::with_capacity(n_s);
    let mut sup = 0.0f64;
    let mut argmax = eps;
    for k in 0..n_s {
        let s = eps + (s_hi - eps) * k as f64 / (n_s - 1).max(1) as f64;
        let r = stability_ratio(p, s, n_quad);
        if r > sup {
            sup = r;
            argmax = s;
        }
        table.push((s, r));
    }
    Ok(GronwallReport {
        eps,
        table,
        sup_ratio: sup,
        argmax_s: argmax,
        pi_c_sq: PI * sup * sup,
    })
}

/// Controls for the layer-stripping march.
#[derive(Debug, Clone, Copy)]
pub struct InversionConfig {
    pub solver: SolverConfig,
    /// Layer thickness of the `tau` march (also the radial grid spacing of
    /// the reconstruction).
    pub d_tau: f64,
    /// March stops at `tau = 1 - eps`.
    pub eps: f64,
    /// Kernel-free small-time bootstrap window.
    pub tau_boot: f64,
    /// Corrector passes per layer.
    pub n_corr: usize,
    /// Ball-quadrature resolution of the correction integral.
    pub n_radial: usize,
    pub n_polar: usize,
    /// Kernel cutoff radius near the source.
    pub r_cut: f64,
    /// Across-source relative spread above which data is rejected as
    /// non-radial.
    pub radial_tol: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            solver: SolverConfig::default(),
            d_tau: 1.0 / 64.0,
            eps: 0.05,
            tau_boot: 0.05,
            n_corr: 1,
            n_radial: 24,
            n_polar: 24,
            r_cut: 0.02,
            radial_tol: 1e-8,
        }
    }
}

/// One recovered layer of the march.
#[derive(Debug, Clone, Copy)]
pub struct LayerRecord {
    pub tau: f64,
    pub rho: f64,
    /// Recovered spherical mean `(Mq)(a, tau)`.
    pub mean_value: f64,
    /// Kernel correction subtracted from the data.
    pub correction: f64,
    /// Recovered potential value on this shell.
    pub q_value: f64,
    /// Change of the shell value over the corrector passes.
    pub layer_residual: f64,
    /// Structural lower bound on the radii the field solve sampled.
    pub min_rho_needed: f64,
}

/// Radial reconstruction on a uniform grid with per-layer metadata.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub rho_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub layers: Vec<LayerRecord>,
}

impl RadialProfile {
    pub fn eval(&self, rho: f64) -> f64 {
        let n = self.rho_grid.len();
        if rho <= 0.0 {
            return self.values[0];
        }
        if rho >= 1.0 {
            return 0.0;
        }
        let t = rho * (n - 1) as f64;
        let i = (t.floor() as usize).min(n - 2);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Relative L2 error against a reference on `[0, 1 - eps]`, restricted
    /// to the recovered shells.
    pub fn relative_l2_error(&self, q_true: &Potential, eps: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (&rho, &v) in self.rho_grid.iter().zip(&self.values) {
            // The march recovers shells rho = 1 - tau for tau <= 1 - eps,
            // i.e. rho >= eps; the unrecovered core is excluded.
            if rho < eps {
                continue;
            }
            let t = q_true.value(Vector3::new(0.0, 0.0, rho));
            num += (v - t) * (v - t);
            den += t * t;
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    /// CSV with columns `rho,q_true,q_reconstructed,layer_residual`; the
    /// `q_true` column is empty when no reference is given.
    pub fn to_csv(&self, q_true: Option<&Potential>) -> String {
        let mut out = String::from("rho,q_true,q_reconstructed,layer_residual\n");
        for (k, (&rho, &v)) in self.rho_grid.iter().zip(&self.values).enumerate() {
            let truth = q_true
                .map(|q| format!("{:.17e}", q.value(Vector3::new(0.0, 0.0, rho))))
                .unwrap_or_default();
            let res = self
                .layers
                .iter()
                .find(|l| (l.rho - rho).abs() < 1e-12)
                .map(|l| format!("{:.17e}", l.layer_residual))
                .unwrap_or_default();
            let _ = k;
            out.push_str(&format!("{rho:.17e},{truth},{v:.17e},{res}\n"));
        }
        out
    }

    /// Reconstruction as an evaluable radial potential.
    pub fn to_potential(&self) -> Result<Potential> {
        Potential::gridded_radial(self.values.clone())
    }
}

/// Across-source consistency check and averaging of (claimed radial) data.
fn radial_average(data: &BackscatterData, tol: f64) -> Result<Vec<f64>> {
    let ok: Vec<usize> = (0..data.sources.len())
        .filter(|&s| data.errors[s].is_none())
        .collect();
    if ok.is_empty() {
        return Err(PsError::Rejected("no usable sources in data".into()));
    }
    let n_t = data.times.len();
    let mut mean = vec![0.0; n_t];
    for &s in &ok {
        for (t, m) in mean.iter_mut().enumerate() {
            *m += data.values[s][t];
        }
    }
    for m in mean.iter_mut() {
        *m /= ok.len() as f64;
    }
    let scale = mean
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .max(1e-300);
    for &s in &ok {
        for t in 0..n_t {
            let dev = (data.values[s][t] - mean[t]).abs();
            if dev > tol * scale {
                return Err(PsError::Rejected(format!(
                    "data varies across sources (deviation {dev:.3e} at t = {}, source {s}); \
                     not radial within tolerance {tol:.1e}",
                    data.times[t]
                )));
            }
        }
    }
    Ok(mean)
}

fn interp_time(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    if times.len() < 2 || t < times[0] - 1e-12 || t > times[times.len() - 1] + 1e-12 {
        return Err(PsError::Range(format!(
            "data does not cover t = {t} (have [{}, {}])",
            times.first().copied().unwrap_or(f64::NAN),
            times.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let n = times.len();
    let i = times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
    let span = times[i + 1] - times[i];
    let f = ((t - times[i]) / span).clamp(0.0, 1.0);
    Ok(values[i] * (1.0 - f) + values[i + 1] * f)
}

/// Quintic smooth step, 0 below `r_cut`, 1 above `2 r_cut`.
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

/// Correction integral `int_{|x-a| <= tau} q(x) u(x, 2 tau - |x-a|)
/// / (4 pi |x-a|) dx` for the current estimate, with the source on the north
/// pole so the axisymmetric quadrature needs no azimuth nodes.
fn kernel_correction(
    q_hat: &Potential,
    a: &SourcePoint,
    tau: f64,
    cfg: &InversionConfig,
) -> Result<f64> {
    let solver = SolverConfig {
        nu_max: 2.0 * tau,
        ..cfg.solver
    };
    let field = picard_solve(q_hat, a, &solver)?;
    let (r_nodes, r_weights) = gauss_legendre_on(cfg.n_radial, 0.0, tau);
    let grid = SphereGrid::gauss_product(cfg.n_polar, 1);
    let mut total = 0.0;
    for (&r, &wr) in r_nodes.iter().zip(&r_weights) {
        let chi = cutoff(r, cfg.r_cut);
        if chi == 0.0 {
            continue;
        }
        let mut shell = 0.0;
        for (omega, w) in grid.nodes.iter().zip(&grid.weights) {
            let x = a.position() + r * omega;
            let qv = q_hat.value(x);
            if qv == 0.0 {
                continue;
            }
            shell += w * qv * field.eval(x, 2.0 * tau - r)?;
        }
        total += wr * r * r * chi * shell / (4.0 * PI * r);
    }
    Ok(total)
}

/// Three-point backward derivative of `g` at index `m` on a uniform grid
/// (`g[0]` sits at tau = 0), with a two-point closure for the first layer.
fn backward_derivative(g: &[f64], m: usize, d_tau: f64) -> f64 {
    if m >= 2 {
        (3.0 * g[m] - 4.0 * g[m - 1] + g[m - 2]) / (2.0 * d_tau)
    } else {
        (g[m] - g[m - 1]) / d_tau
    }
}

/// March the layers of a radial potential out of backscatter data.
pub fn layer_strip_radial(data: &BackscatterData, cfg: &InversionConfig) -> Result<RadialProfile> {
    if !(cfg.d_tau > 0.0 && cfg.eps > 0.0 && cfg.eps < 1.0) {
        return Err(PsError::Domain("need d_tau > 0 and eps in (0, 1)".into()));
    }
    let d_mean = radial_average(data, cfg.radial_tol)?;
    let a = SourcePoint::new(Vector3::z()).expect("unit vector");

    let n_shells = (1.0 / cfg.d_tau).round() as usize;
    if ((n_shells as f64) * cfg.d_tau - 1.0).abs() > 1e-9 {
        return Err(PsError::Domain(format!(
            "d_tau = {} must divide 1 so layers land on the radial grid",
            cfg.d_tau
        )));
    }
    let m_max = ((1.0 - cfg.eps) / cfg.d_tau).floor() as usize;
    let mut values = vec![0.0; n_shells + 1];
    let mut g = vec![0.0; m_max + 1];
    let mut layers = Vec::with_capacity(m_max);

    for m in 1..=m_max {
        let tau = m as f64 * cfg.d_tau;
        let shell_idx = n_shells - m;
        let rho = 1.0 - tau;
        let d_val = interp_time(&data.times, &d_mean, 2.0 * tau)?;
        let solve_radius =
            0.5 * cfg.solver.delta * ((2.0 * tau / cfg.solver.delta).ceil() + 4.0);
        let min_rho_needed = 1.0 - solve_radius;

        let mut correction = 0.0;
        let mut q_layer;
        let mut passes = 0usize;
        loop {
            if tau > cfg.tau_boot {
                let q_hat = Potential::gridded_radial(values.clone())?;
                correction = kernel_correction(&q_hat, &a, tau, cfg)?;
            }
            let mean = 8.0 * PI * (d_val - correction);
            g[m] = tau * mean;
            q_layer = 2.0 / (1.0 - tau) * backward_derivative(&g, m, cfg.d_tau);
            if passes >= cfg.n_corr || tau <= cfg.tau_boot {
                break;
            }
            values[shell_idx] = q_layer;
            passes += 1;
        }
        let residual = (q_layer - values[shell_idx]).abs();
        values[shell_idx] = q_layer;
        layers.push(LayerRecord {
            tau,
            rho,
            mean_value: g[m] / tau,
            correction,
            q_value: q_layer,
            layer_residual: if passes > 0 { residual } else { 0.0 },
            min_rho_needed,
        });
    }

    let rho_grid = (0..=n_shells)
        .map(|k| k as f64 / n_shells as f64)
        .collect();
    Ok(RadialProfile {
        rho_grid,
        values,
        layers,
    })
}
