//! Configuration-driven command-line front end.
//!
//! `pointscatter <command> --config <file> [--set key=value ...] --out <dir>`
//!
//! Commands: `forward`, `acquire`, `verify-prop21`, `verify-prop22`,
//! `invert-radial`, `check-angular`, `gronwall-report`. The JSON config uses
//! a strict schema (unknown keys rejected); `--set` overrides take dotted
//! paths into the document and beat file values. Artifacts are plain
//! CSV/JSON, embed the effective config plus a content hash of the inputs,
//! and are byte-identical across reruns and thread counts. `PS_THREADS`
//! caps the worker pool.
//!
//! Exit codes: 0 success, 2 missing config file, 3 schema violation,
//! 4 solver failure, 5 tolerance not met, 6 I/O failure.

use crate::error::PsError;
use crate::forward_solver::{acquire_data, grid_sources, picard_solve, SolverConfig};
use crate::harmonics::{angular_condition_constant, expand, HarmonicBasis};
use crate::identity_lab::{prop22_residual, Prop22Settings};
use crate::inversion::{
    gronwall_report, layer_strip_radial, InversionConfig, ShellSamples,
};
use crate::potential::{shell_norm, Potential};
use crate::sphere_geometry::{SourcePoint, SphereGrid};
use crate::spherical_means::{prop21_residual, Prop21Settings};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Pipeline selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Forward,
    Acquire,
    VerifyProp21,
    VerifyProp22,
    InvertRadial,
    CheckAngular,
    GronwallReport,
}

impl Command {
    pub fn parse(s: &str) -> Option<Command> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Acquire => "acquire",
            Command::VerifyProp21 => "verify-prop21",
            Command::VerifyProp22 => "verify-prop22",
            Command::InvertRadial => "invert-radial",
            Command::CheckAngular => "check-angular",
            Command::GronwallReport => "gronwall-report",
        }
    }
}

/// Declarative potential description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    RadialBump { c: f64, m: u32 },
    HarmonicModulated { c: f64, m: u32, degree: usize, order: i32 },
    GriddedRadial { values: Vec<f64> },
    Sum { terms: Vec<PotentialSpec> },
}

impl PotentialSpec {
    pub fn build(&self) -> crate::Result<Potential> {
        Ok(match self {
            PotentialSpec::Zero => Potential::zero(),
            PotentialSpec::RadialBump { c, m } => Potential::radial_bump(*c, *m),
            PotentialSpec::HarmonicModulated { c, m, degree, order } => {
                Potential::harmonic_modulated(*c, *m, *degree, *order)?
            }
            PotentialSpec::GriddedRadial { values } => {
                Potential::gridded_radial(values.clone())?
            }
            PotentialSpec::Sum { terms } => {
                let mut acc = Potential::zero();
                for t in terms {
                    acc = Potential::sum(acc, t.build()?);
                }
                acc
            }
        })
    }
}

fn default_potential() -> PotentialSpec {
    PotentialSpec::RadialBump { c: 1.0, m: 2 }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub delta: f64,
    pub nu_max: f64,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub max_iter: usize,
    pub eps_fix: f64,
    pub line_quad: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let c = SolverConfig::default();
        SolverSpec {
            delta: c.delta,
            nu_max: c.nu_max,
            n_polar: c.n_polar,
            n_azimuth: c.n_azimuth,
            max_iter: c.max_iter,
            eps_fix: c.eps_fix,
            line_quad: c.line_quad,
        }
    }
}

impl SolverSpec {
    fn to_config(self) -> SolverConfig {
        SolverConfig {
            delta: self.delta,
            nu_max: self.nu_max,
            n_polar: self.n_polar,
            n_azimuth: self.n_azimuth,
            max_iter: self.max_iter,
            eps_fix: self.eps_fix,
            line_quad: self.line_quad,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop21Spec {
    pub mean_polar: usize,
    pub mean_azimuth: usize,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl Default for Prop21Spec {
    fn default() -> Self {
        let s = Prop21Settings::default();
        Prop21Spec {
            mean_polar: s.mean_polar,
            mean_azimuth: s.mean_azimuth,
            n_rho: s.n_rho,
            n_theta: s.n_theta,
        }
    }
}

impl Prop21Spec {
    fn to_settings(self) -> Prop21Settings {
        Prop21Settings {
            mean_polar: self.mean_polar,
            mean_azimuth: self.mean_azimuth,
            n_rho: self.n_rho,
            n_theta: self.n_theta,
            ..Prop21Settings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySpec {
    pub n_radial: usize,
    pub n_polar: usize,
    pub n_azimuth: usize,
    pub r_cut: f64,
    pub mean_quad: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        let s = Prop22Settings::default();
        IdentitySpec {
            n_radial: s.n_radial,
            n_polar: s.n_polar,
            n_azimuth: s.n_azimuth,
            r_cut: s.r_cut,
            mean_quad: s.mean_quad,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionSpec {
    pub d_tau: f64,
    pub eps: f64,
    pub tau_boot: f64,
    pub n_corr: usize,
    pub n_radial: usize,
    pub n_polar: usize,
    pub r_cut: f64,
    pub radial_tol: f64,
}

impl Default for InversionSpec {
    fn default() -> Self {
        let c = InversionConfig::default();
        InversionSpec {
            d_tau: c.d_tau,
            eps: c.eps,
            tau_boot: c.tau_boot,
            n_corr: c.n_corr,
            n_radial: c.n_radial,
            n_polar: c.n_polar,
            r_cut: c.r_cut,
            radial_tol: c.radial_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GronwallSpec {
    pub eps: f64,
    pub n_s: usize,
    pub n_quad: usize,
    pub n_shells: usize,
}

impl Default for GronwallSpec {
    fn default() -> Self {
        GronwallSpec {
            eps: 0.1,
            n_s: 200,
            n_quad: 64,
            n_shells: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngularSpec {
    pub max_degree: usize,
    pub n_shells: usize,
    pub grid_polar: usize,
    pub grid_azimuth: usize,
    pub expected_constant: Option<f64>,
    pub constant_tol: f64,
}

impl Default for AngularSpec {
    fn default() -> Self {
        AngularSpec {
            max_degree: 16,
            n_shells: 32,
            grid_polar: 32,
            grid_azimuth: 64,
            expected_constant: None,
            constant_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourcesSpec {
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl Default for SourcesSpec {
    fn default() -> Self {
        SourcesSpec {
            n_polar: 2,
            n_azimuth: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimesSpec {
    pub t_max: f64,
    pub n: usize,
}

impl Default for TimesSpec {
    fn default() -> Self {
        TimesSpec { t_max: 2.0, n: 128 }
    }
}

/// Full validated run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub potential2: Option<PotentialSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub prop21: Prop21Spec,
    #[serde(default)]
    pub identity: IdentitySpec,
    #[serde(default)]
    pub inversion: InversionSpec,
    #[serde(default)]
    pub gronwall: GronwallSpec,
    #[serde(default)]
    pub angular: AngularSpec,
    #[serde(default)]
    pub sources: SourcesSpec,
    #[serde(default)]
    pub times: TimesSpec,
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Source direction for single-source commands.
    #[serde(default)]
    pub source: Option<[f64; 3]>,
    #[serde(default)]
    pub seed: u64,
}

/// Failure modes mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    MissingFile(String),
    Schema(String),
    Solver(String),
    Tolerance(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingFile(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Solver(_) => 4,
            CliError::Tolerance(_) => 5,
            CliError::Io(_) => 6,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::MissingFile(m)
            | CliError::Schema(m)
            | CliError::Solver(m)
            | CliError::Tolerance(m)
            | CliError::Io(m) => m,
        }
    }
}

fn lift(e: PsError) -> CliError {
    match e {
        PsError::NonConvergence { history } => CliError::Solver(format!(
            "solver did not converge; residual history {history:?}"
        )),
        PsError::NonFinite(m) => CliError::Solver(format!("non-finite value: {m}")),
        PsError::Io(m) => CliError::Io(m.to_string()),
        other => CliError::Schema(other.to_string()),
    }
}

/// Apply a `--set key=value` override onto the raw JSON document using a
/// dotted path; the value side is parsed as JSON when possible, else taken
/// as a string.
fn apply_override(doc: &mut serde_json::Value, setting: &str) -> Result<(), CliError> {
    let (path, raw) = setting.split_once('=').ok_or_else(|| {
        CliError::Schema(format!("--set '{setting}' is not of the form key=value"))
    })?;
    let value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            return Err(CliError::Schema(format!(
                "--set path '{path}' descends into a non-object at '{part}'"
            )));
        }
        let map = node.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("non-empty split");
}

/// Parse a config file plus overrides into a validated `RunConfig`, along
/// with a content hash of the inputs.
pub fn parse_config(
    path: &Path,
    overrides: &[String],
) -> Result<(RunConfig, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::MissingFile(format!("cannot read config {path:?}: {e}")))?;
    let mut doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("config is not valid JSON: {e}")))?;
    for s in overrides {
        apply_override(&mut doc, s)?;
    }
    let cfg: RunConfig = serde_json::from_value(doc.clone())
        .map_err(|e| CliError::Schema(format!("config schema violation: {e}")))?;
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    for s in overrides {
        hasher.update(s.as_bytes());
    }
    let hash = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    Ok((cfg, hash))
}

fn default_source(cfg: &RunConfig) -> Result<SourcePoint, CliError> {
    let v = cfg.source.unwrap_or([0.0, 0.0, 1.0]);
    SourcePoint::from_direction(Vector3::new(v[0], v[1], v[2]))
        .map_err(|e| CliError::Schema(format!("config field 'source': {e}")))
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create output dir {dir:?}: {e}")))?;
    std::fs::write(dir.join(name), contents)
        .map_err(|e| CliError::Io(format!("cannot write {name}: {e}")))
}

fn summary_json(
    cfg: &RunConfig,
    command: Command,
    input_hash: &str,
    pass: bool,
    metrics: serde_json::Value,
) -> String {
    let doc = serde_json::json!({
        "command": command.name(),
        "pass": pass,
        "metrics": metrics,
        "input_hash": input_hash,
        "effective_config": cfg,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// Execute the configured pipeline, writing artifacts into `out_dir`.
/// Returns whether all asserted tolerances were met (callers map `false`
/// through `CliError::Tolerance`).
pub fn run(
    cfg: &RunConfig,
    command: Command,
    input_hash: &str,
    out_dir: &Path,
) -> Result<(), CliError> {
    if let Some(file_cmd) = cfg.command {
        if file_cmd != command {
            return Err(CliError::Schema(format!(
                "config field 'command' is '{}' but the CLI asked for '{}'",
                file_cmd.name(),
                command.name()
            )));
        }
    }
    let q = cfg.potential.build().map_err(lift)?;
    match command {
        Command::Forward => {
            let a = default_source(cfg)?;
            let solver = cfg.solver.to_config();
            let field = picard_solve(&q, &a, &solver).map_err(lift)?;
            let mut csv = String::from("t,value\n");
            let steps = (2.0 * solver.nu_max / solver.delta) as usize;
            for k in 0..=steps {
                let t = 0.5 * solver.delta * k as f64;
                if t > solver.nu_max {
                    break;
                }
                let v = field.trace_at_source(t).map_err(lift)?;
                csv.push_str(&format!("{t:.17e},{v:.17e}\n"));
            }
            write_artifact(out_dir, "trace.csv", &csv)?;
            let residual = field.pde_residual(&q);
            let metrics = serde_json::json!({
                "iteration_history": field.iteration_history,
                "pde_residual_max": residual.max_residual,
                "pde_residual_mean": residual.mean_residual,
                "cells_checked": residual.cells_checked,
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, true, metrics),
            )
        }
        Command::Acquire => {
            let solver = cfg.solver.to_config();
            let grid = SphereGrid::gauss_product(cfg.sources.n_polar, cfg.sources.n_azimuth);
            let sources = grid_sources(&grid);
            let times: Vec<f64> = (1..=cfg.times.n)
                .map(|k| cfg.times.t_max * k as f64 / cfg.times.n as f64)
                .collect();
            let data = acquire_data(&q, &sources, &times, &solver).map_err(lift)?;
            if let Some(err) = data.errors.iter().flatten().next() {
                return Err(CliError::Solver(format!("source solve failed: {err}")));
            }
            write_artifact(out_dir, "backscatter.csv", &data.to_csv())?;
            let metrics = serde_json::json!({
                "n_sources": sources.len(),
                "n_times": times.len(),
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, true, metrics),
            )
        }
        Command::VerifyProp21 => {
            let a = default_source(cfg)?;
            let settings = cfg.prop21.to_settings();
            let taus = cfg.taus.clone().unwrap_or_else(|| {
                (0..16).map(|i| 0.05 + 0.9 * (i as f64 + 0.5) / 16.0).collect()
            });
            let tol = cfg
                .tolerance
                .unwrap_or(if q.is_radial() { 1e-3 } else { 5e-3 });
            let mut rows = Vec::new();
            let mut max_rel = 0.0f64;
            for &tau in &taus {
                let r = prop21_residual(&q, &a, tau, &settings).map_err(lift)?;
                max_rel = max_rel.max(r.relative);
                rows.push(serde_json::json!({
                    "tau": r.tau,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "absolute": r.absolute,
                    "relative": r.relative,
                    "lhs_error_estimate": r.lhs_error_estimate,
                }));
            }
            let pass = max_rel <= tol;
            let metrics = serde_json::json!({
                "max_relative_residual": max_rel,
                "tolerance": tol,
                "residuals": rows,
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, pass, metrics),
            )?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!(
                    "max relative residual {max_rel:.3e} exceeds {tol:.3e}"
                )))
            }
        }
        Command::VerifyProp22 => {
            let q2 = cfg
                .potential2
                .clone()
                .unwrap_or(PotentialSpec::Zero)
                .build()
                .map_err(lift)?;
            let settings = Prop22Settings {
                solver: cfg.solver.to_config(),
                n_radial: cfg.identity.n_radial,
                n_polar: cfg.identity.n_polar,
                n_azimuth: cfg.identity.n_azimuth,
                r_cut: cfg.identity.r_cut,
                mean_quad: cfg.identity.mean_quad,
                ..Prop22Settings::default()
            };
            let grid = SphereGrid::gauss_product(cfg.sources.n_polar, cfg.sources.n_azimuth);
            let sources = grid_sources(&grid);
            let taus = cfg.taus.clone().unwrap_or_else(|| vec![0.3, 0.5, 0.7]);
            let tol = cfg.tolerance.unwrap_or(0.02);
            let mut rows = Vec::new();
            let mut max_rel = 0.0f64;
            for (si, a) in sources.iter().enumerate() {
                for &tau in &taus {
                    let r = prop22_residual(&q, &q2, a, tau, &settings).map_err(lift)?;
                    max_rel = max_rel.max(r.relative);
                    rows.push(serde_json::json!({
                        "source_index": si,
                        "tau": r.tau,
                        "lhs": r.lhs,
                        "rhs": r.rhs,
                        "mean_term": r.mean_term,
                        "kernel_term": r.kernel_term,
                        "absolute": r.absolute,
                        "relative": r.relative,
                    }));
                }
            }
            let pass = max_rel <= tol;
            let metrics = serde_json::json!({
                "max_relative_residual": max_rel,
                "tolerance": tol,
                "residuals": rows,
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, pass, metrics),
            )?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!(
                    "max relative residual {max_rel:.3e} exceeds {tol:.3e}"
                )))
            }
        }
        Command::InvertRadial => {
            // Self-closure: synthesize the data from the configured
            // potential, then reconstruct and compare.
            let solver = cfg.solver.to_config();
            let inv = InversionConfig {
                solver,
                d_tau: cfg.inversion.d_tau,
                eps: cfg.inversion.eps,
                tau_boot: cfg.inversion.tau_boot,
                n_corr: cfg.inversion.n_corr,
                n_radial: cfg.inversion.n_radial,
                n_polar: cfg.inversion.n_polar,
                r_cut: cfg.inversion.r_cut,
                radial_tol: cfg.inversion.radial_tol,
            };
            let a = default_source(cfg)?;
            let times: Vec<f64> = (0..=cfg.times.n)
                .map(|k| cfg.times.t_max * k as f64 / cfg.times.n as f64)
                .collect();
            let data = acquire_data(&q, &[a], &times, &solver).map_err(lift)?;
            let profile = layer_strip_radial(&data, &inv).map_err(lift)?;
            write_artifact(out_dir, "profile.csv", &profile.to_csv(Some(&q)))?;
            let err = profile.relative_l2_error(&q, inv.eps);
            let tol = cfg.tolerance.unwrap_or(0.05);
            let pass = err <= tol;
            let metrics = serde_json::json!({
                "relative_l2_error": err,
                "tolerance": tol,
                "layers": profile.layers.len(),
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, pass, metrics),
            )?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!(
                    "round-trip relative L2 error {err:.3e} exceeds {tol:.3e}"
                )))
            }
        }
        Command::CheckAngular => {
            let basis = HarmonicBasis::new(cfg.angular.max_degree);
            let grid =
                SphereGrid::gauss_product(cfg.angular.grid_polar, cfg.angular.grid_azimuth);
            let n = cfg.angular.n_shells;
            let rho_grid: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
            let profile = expand(|x| q.value(x), &basis, &rho_grid, &grid);
            let report = angular_condition_constant(&profile).map_err(lift)?;
            write_artifact(out_dir, "profile.csv", &profile.to_csv())?;
            let (pass, expected) = match cfg.angular.expected_constant {
                Some(e) => (
                    (report.c_min - e).abs() <= cfg.angular.constant_tol,
                    serde_json::json!(e),
                ),
                None => (true, serde_json::Value::Null),
            };
            let metrics = serde_json::json!({
                "c_min": report.c_min,
                "expected_constant": expected,
                "skipped_shells": report.skipped_shells,
                "per_shell": report.per_shell,
                "max_truncation_loss": profile.max_truncation_loss(),
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, pass, metrics),
            )?;
            if pass {
                Ok(())
            } else {
                Err(CliError::Tolerance(format!(
                    "angular constant {} deviates from expected {:?}",
                    report.c_min, cfg.angular.expected_constant
                )))
            }
        }
        Command::GronwallReport => {
            let n = cfg.gronwall.n_shells;
            let grid = SphereGrid::gauss_product(32, 64);
            let mut samples = Vec::with_capacity(n + 1);
            let mut rho = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let r = k as f64 / n as f64;
                rho.push(r);
                // P(0) = 0 exactly (the rho^2 surface factor vanishes).
                let v = if k == 0 {
                    0.0
                } else {
                    shell_norm(&q, r, &grid).map_err(lift)?
                };
                samples.push(v);
            }
            let p = ShellSamples {
                rho,
                values: samples,
            };
            let report =
                gronwall_report(&p, cfg.gronwall.eps, cfg.gronwall.n_s, cfg.gronwall.n_quad)
                    .map_err(lift)?;
            let mut csv = String::from("s,ratio\n");
            for (s, r) in &report.table {
                csv.push_str(&format!("{s:.17e},{r:.17e}\n"));
            }
            write_artifact(out_dir, "gronwall.csv", &csv)?;
            let metrics = serde_json::json!({
                "sup_ratio": report.sup_ratio,
                "argmax_s": report.argmax_s,
                "pi_c_sq": report.pi_c_sq,
                "eps": report.eps,
            });
            write_artifact(
                out_dir,
                "summary.json",
                &summary_json(cfg, command, input_hash, true, metrics),
            )
        }
    }
}

/// Install the `PS_THREADS` cap on the global worker pool (first caller
/// wins; later calls are no-ops, which keeps tests happy).
pub fn install_thread_cap() {
    if let Ok(v) = std::env::var("PS_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

/// Full command-line entry: parse arguments, run, map failures onto exit
/// codes. `args` excludes the program name.
pub fn cli_main(args: &[String]) -> i32 {
    use clap::Parser;

    #[derive(Parser)]
    #[command(
        name = "pointscatter",
        about = "Forward simulation, identity verification, and radial inversion \
                 for point-source backscattering"
    )]
    struct Cli {
        /// forward | acquire | verify-prop21 | verify-prop22 | invert-radial |
        /// check-angular | gronwall-report
        command: String,
        /// JSON configuration file
        #[arg(long)]
        config: std::path::PathBuf,
        /// Dotted-path overrides, e.g. --set potential.c=0.5
        #[arg(long = "set")]
        set: Vec<String>,
        /// Output directory for artifacts
        #[arg(long)]
        out: std::path::PathBuf,
    }

    let mut full = vec!["pointscatter".to_string()];
    full.extend_from_slice(args);
    let cli = match Cli::try_parse_from(&full) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 3;
        }
    };
    let Some(command) = Command::parse(&cli.command) else {
        eprintln!("unknown command '{}'", cli.command);
        return 3;
    };
    install_thread_cap();
    let (cfg, hash) = match parse_config(&cli.config, &cli.set) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}", e.message());
            return e.exit_code();
        }
    };
    match run(&cfg, command, &hash, &cli.out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_cfg(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join("cfg.json");
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(
            dir.path(),
            r#"{"command":"verify-prop21","potential":{"kind":"radial_bump","c":1.0,"m":2}}"#,
        );
        let (cfg, hash) = parse_config(&p, &[]).unwrap();
        assert_eq!(cfg.command, Some(Command::VerifyProp21));
        assert_eq!(cfg.solver.max_iter, 20);
        assert_eq!(hash.len(), 64);
    }

    #[test]
    fn unknown_key_is_rejected_with_name() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(
            dir.path(),
            r#"{"potentail":{"kind":"radial_bump","c":1.0,"m":2}}"#,
        );
        let err = parse_config(&p, &[]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.message().contains("potentail"), "{}", err.message());
    }

    #[test]
    fn missing_file_is_exit_two() {
        let err = parse_config(Path::new("/nonexistent/cfg.json"), &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(
            dir.path(),
            r#"{"potential":{"kind":"radial_bump","c":1.0,"m":2},"solver":{"delta":0.03125}}"#,
        );
        let (cfg, _) = parse_config(
            &p,
            &[
                "solver.delta=0.015625".to_string(),
                "potential.c=0.5".to_string(),
                "tolerance=0.01".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.solver.delta, 0.015625);
        assert_eq!(cfg.tolerance, Some(0.01));
        match cfg.potential {
            PotentialSpec::RadialBump { c, .. } => assert_eq!(c, 0.5),
            other => panic!("unexpected potential {other:?}"),
        }
    }

    #[test]
    fn bad_override_value_still_schema_checked() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(dir.path(), r#"{}"#);
        let err = parse_config(&p, &["solver.delta=fast".to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn mismatched_command_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_cfg(dir.path(), r#"{"command":"acquire"}"#);
        let (cfg, hash) = parse_config(&p, &[]).unwrap();
        let err = run(&cfg, Command::Forward, &hash, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
