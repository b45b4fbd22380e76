//! Spherical-harmonic analysis: the real orthonormal basis on the unit
//! sphere, angular derivative operators, the shell-wise angular-control
//! ratio, and the tangential-frame decomposition identity.

use crate::error::{PsError, Result};
use crate::potential::Potential;
use crate::sphere_geometry::{Point, SphereGrid};
use nalgebra::Vector3;

/// Real spherical harmonics, unit-normalized in `L^2(S)` (so that
/// `int_S Y^2 dS = 1`), indexed with degrees nondecreasing.
///
/// Within a degree `l` the orders run `m = -l..=l` with `m > 0` the cosine
/// branch and `m < 0` the sine branch; no Condon-Shortley phase. All uses in
/// this crate are order-agnostic.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    entries: Vec<(usize, i32)>,
    max_degree: usize,
}

impl HarmonicBasis {
    pub fn new(max_degree: usize) -> Self {
        let mut entries = Vec::new();
        for l in 0..=max_degree {
            for m in -(l as i32)..=(l as i32) {
                entries.push((l, m));
            }
        }
        HarmonicBasis { entries, max_degree }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Degree `d_n` of entry `n` (zero-based index).
    pub fn degree(&self, n: usize) -> usize {
        self.entries[n].0
    }

    pub fn order(&self, n: usize) -> i32 {
        self.entries[n].1
    }

    /// Evaluate entry `n` at the unit vector `omega`.
    pub fn eval(&self, n: usize, omega: Point) -> f64 {
        let (l, m) = self.entries[n];
        eval_real_sh(l, m, omega)
    }
}

/// Real spherical harmonic `Y_{l,m}` at a unit vector, by the stable
/// fully-normalized associated-Legendre recurrence.
pub fn eval_real_sh(l: usize, m: i32, omega: Point) -> f64 {
    let x = omega.z.clamp(-1.0, 1.0);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let phi = omega.y.atan2(omega.x);
    let ma = m.unsigned_abs() as usize;
    // pmm = normalized P_ma^ma
    let mut pmm = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for k in 1..=ma {
        pmm *= ((2 * k + 1) as f64 / (2 * k) as f64).sqrt() * s;
    }
    let plm = if l == ma {
        pmm
    } else {
        let mut p_prev = pmm;
        let mut p_cur = x * ((2 * ma + 3) as f64).sqrt() * pmm;
        for ll in (ma + 2)..=l {
            let lf = ll as f64;
            let mf = ma as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            let p_next = a * (x * p_cur - b * p_prev);
            p_prev = p_cur;
            p_cur = p_next;
        }
        p_cur
    };
    if m == 0 {
        plm
    } else if m > 0 {
        std::f64::consts::SQRT_2 * plm * (ma as f64 * phi).cos()
    } else {
        std::f64::consts::SQRT_2 * plm * (ma as f64 * phi).sin()
    }
}

/// Radial coefficient functions of a spherical-harmonic expansion,
/// `p(rho * omega) = sum_n coeffs[shell][n] * Y_n(omega)`.
#[derive(Debug, Clone)]
pub struct HarmonicProfile {
    pub rho_grid: Vec<f64>,
    /// `coeffs[shell][n]`.
    pub coeffs: Vec<Vec<f64>>,
    /// Degree of each basis entry.
    pub degrees: Vec<usize>,
    /// Per-shell energy not captured by the truncated basis, relative to the
    /// shell's total quadrature energy (0 when fully resolved).
    pub truncation_loss: Vec<f64>,
}

impl HarmonicProfile {
    /// Build a profile directly from coefficient rows (testing and the
    /// angular-condition checker do not need a field behind it).
    pub fn from_coeffs(rho_grid: Vec<f64>, degrees: Vec<usize>, coeffs: Vec<Vec<f64>>) -> Self {
        let n_shells = rho_grid.len();
        HarmonicProfile {
            rho_grid,
            coeffs,
            degrees,
            truncation_loss: vec![0.0; n_shells],
        }
    }

    pub fn max_truncation_loss(&self) -> f64 {
        self.truncation_loss.iter().cloned().fold(0.0, f64::max)
    }

    /// CSV with columns `rho,n,degree,coeff` (n is 1-based as in the usual
    /// basis indexing).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,n,degree,coeff\n");
        for (s, &rho) in self.rho_grid.iter().enumerate() {
            for (n, &c) in self.coeffs[s].iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", rho, n + 1, self.degrees[n], c));
            }
        }
        out
    }
}

/// The angular derivative `Omega_ij p = x_i d_j p - x_j d_i p` as a scalar
/// field. Axis indices are zero-based and must differ.
pub fn angular_derivative<'a>(
    p: &'a Potential,
    i: usize,
    j: usize,
) -> Result<impl Fn(Point) -> f64 + 'a> {
    if i == j || i > 2 || j > 2 {
        return Err(PsError::Usage(format!(
            "angular derivative needs distinct axis indices in 0..3, got ({i}, {j})"
        )));
    }
    Ok(move |x: Point| {
        let g = p.gradient(x);
        x[i] * g[j] - x[j] * g[i]
    })
}

/// Report from the angular-control checker: the supremum over shells of
/// `sum_n d_n (d_n + 1) p_n^2 / sum_n p_n^2`, plus the per-shell ratios.
#[derive(Debug, Clone)]
pub struct AngularConditionReport {
    /// `sup_rho` of the ratio; `f64::INFINITY` if unbounded on the grid.
    pub c_min: f64,
    /// `(rho, ratio)` for every shell that carried energy.
    pub per_shell: Vec<(f64, f64)>,
    /// Shells skipped because their energy fell below the vanishing
    /// threshold relative to the peak shell.
    pub skipped_shells: usize,
}

/// Relative energy threshold below which a shell counts as vanishing.
pub const SHELL_ENERGY_FLOOR: f64 = 1e-14;

/// Evaluate the angular-control constant of a harmonic profile.
pub fn angular_condition_constant(profile: &HarmonicProfile) -> Result<AngularConditionReport> {
    if profile.rho_grid.is_empty() || profile.coeffs.iter().all(|row| row.iter().all(|&c| c == 0.0))
    {
        return Err(PsError::Usage("empty harmonic profile".into()));
    }
    let peak: f64 = profile
        .coeffs
        .iter()
        .map(|row| row.iter().map(|c| c * c).sum::<f64>())
        .fold(0.0, f64::max);
    let mut per_shell = Vec::new();
    let mut skipped = 0usize;
    let mut sup = 0.0f64;
    for (s, &rho) in profile.rho_grid.iter().enumerate() {
        let energy: f64 = profile.coeffs[s].iter().map(|c| c * c).sum();
        if energy < SHELL_ENERGY_FLOOR * peak {
            skipped += 1;
            continue;
        }
        let weighted: f64 = profile.coeffs[s]
            .iter()
            .enumerate()
            .map(|(n, &c)| {
                let d = profile.degrees[n] as f64;
                d * (d + 1.0) * c * c
            })
            .sum();
        let ratio = weighted / energy;
        sup = sup.max(ratio);
        per_shell.push((rho, ratio));
    }
    Ok(AngularConditionReport {
        c_min: sup,
        per_shell,
        skipped_shells: skipped,
    })
}

/// Spherical-harmonic expansion of a scalar field over the given shells,
/// `p_n(rho) = int_S p(rho omega) Y_n(omega) dS` by sphere quadrature.
pub fn expand<F: Fn(Point) -> f64>(
    p: F,
    basis: &HarmonicBasis,
    rho_grid: &[f64],
    grid: &SphereGrid,
) -> HarmonicProfile {
    let mut coeffs = Vec::with_capacity(rho_grid.len());
    let mut loss = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let samples: Vec<f64> = grid.nodes.iter().map(|&w| p(rho * w)).collect();
        let mut row = vec![0.0; basis.len()];
        for (n, c) in row.iter_mut().enumerate() {
            *c = grid
                .nodes
                .iter()
                .zip(&grid.weights)
                .zip(&samples)
                .map(|((&omega, &w), &v)| w * v * basis.eval(n, omega))
                .sum();
        }
        // Parseval gap: quadrature energy minus captured coefficient energy.
        let total: f64 = grid
            .weights
            .iter()
            .zip(&samples)
            .map(|(&w, &v)| w * v * v)
            .sum();
        let captured: f64 = row.iter().map(|c| c * c).sum();
        loss.push(if total > 0.0 {
            ((total - captured) / total).max(0.0)
        } else {
            0.0
        });
        coeffs.push(row);
    }
    HarmonicProfile {
        rho_grid: rho_grid.to_vec(),
        coeffs,
        degrees: (0..basis.len()).map(|n| basis.degree(n)).collect(),
        truncation_loss: loss,
    }
}

/// Evaluate the expansion back at a point (reconstruction).
pub fn reconstruct(profile: &HarmonicProfile, basis: &HarmonicBasis, shell: usize, omega: Point) -> f64 {
    profile.coeffs[shell]
        .iter()
        .enumerate()
        .map(|(n, &c)| c * basis.eval(n, omega))
        .sum()
}

/// Result of decomposing `|x|^2 v` over the tangential frame
/// `T_ij = x_i e_j - x_j e_i` plus the radial direction.
#[derive(Debug, Clone, Copy)]
pub struct TijDecomposition {
    /// Coefficients `v . T_ij` for `(i,j) = (0,1), (0,2), (1,2)`.
    pub tangential: [f64; 3],
    /// Radial coefficient `v . x`.
    pub radial: f64,
    /// `|| sum (v.T_ij) T_ij + (v.x) x - |x|^2 v ||`.
    pub residual: f64,
}

/// The frame identity `|x|^2 v = sum_{i<j} (v.T_ij) T_ij + (v.x) x`.
pub fn tij_decompose(x: Point, v: Point) -> TijDecomposition {
    let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
    let mut tangential = [0.0; 3];
    let mut recon = Vector3::zeros();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let mut t = Vector3::zeros();
        t[j] = x[i];
        t[i] = -x[j];
        tangential[k] = v.dot(&t);
        recon += tangential[k] * t;
    }
    let radial = v.dot(&x);
    recon += radial * x;
    TijDecomposition {
        tangential,
        radial,
        residual: (recon - x.norm_squared() * v).norm(),
    }
}
