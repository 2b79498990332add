//! Per-point computation, aggregation and output files.
//!
//! Every run writes `summary.csv` and `manifest.json` at the top of the
//! output directory and one `point_NNN/` directory per point holding
//! `path.csv` (path-derived profiles only), `profile.csv`,
//! `parameters.csv`, `W_<mode>.csv` and `mode_diff.csv`.

use crate::config::{Config, ProfileSpec};
use anyhow::{Context, Result};
use collinear::amplitudes::{
    assemble_matrix, extract_parameters, ClosedForm, Mode, Normalization, ScatteringParameters, TransitionMatrix,
};
use collinear::geometry::ReactionPath;
use collinear::oracle::{default_dt, oracle_matrix, GridSpec};
use collinear::oscillator::{
    solve_eta, solve_xi_with, FrequencyProfile, OscillatorSolution, XiOptions, DRIVE_CONVENTION,
};
use collinear::table::{row, sci};
use rayon::prelude::*;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Driven-column check that arbitrates the normalization: `W_m0`, `m ≤ 6`,
/// relative 1e-3 above the absolute resolution of the default oracle grid.
pub const ARBITRATION_M_MAX: usize = 6;
pub const ARBITRATION_REL: f64 = 1e-3;
pub const ARBITRATION_FLOOR: f64 = 1e-8;

pub const SUMMARY_HEADER: &str = "E_k,stretch,theta,W_00,unitarity_defect,max_mode_discrepancy,status";
pub const PARAMETERS_HEADER: &str =
    "E_k,stretch,theta,delta1,delta2,nu,beta,phi,omega_in,omega_out,wronskian,wronskian_drift";
pub const MODE_DIFF_HEADER: &str = "mode_a,mode_b,max_abs_diff,max_rel_diff";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSpec {
    pub index: usize,
    pub energy: f64,
    pub stretch: f64,
}

/// Everything computed for one point, possibly partial when a stage failed.
#[derive(Debug, Clone, Default)]
pub struct PointOutput {
    pub path: Option<ReactionPath>,
    pub profile: Option<FrequencyProfile>,
    pub solution: Option<OscillatorSolution>,
    pub params: Option<ScatteringParameters>,
    pub matrices: Vec<TransitionMatrix>,
    /// Hermite matrix under the normalization not in force, kept for arbitration.
    pub alternate: Option<TransitionMatrix>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl PointOutput {
    pub fn matrix(&self, mode: Mode) -> Option<&TransitionMatrix> {
        self.matrices.iter().find(|m| m.mode == mode)
    }

    /// `(mode_a, mode_b, max_abs, max_rel)` for every pair of computed modes.
    pub fn mode_differences(&self, n_max: usize) -> Vec<(Mode, Mode, f64, f64)> {
        let mut out = Vec::new();
        for (i, a) in self.matrices.iter().enumerate() {
            for b in &self.matrices[i + 1..] {
                let (abs, rel) = a.compare(b, n_max);
                out.push((a.mode, b.mode, abs, rel));
            }
        }
        out
    }

    pub fn max_mode_discrepancy(&self, n_max: usize) -> f64 {
        let d = self.mode_differences(n_max);
        if d.is_empty() {
            f64::NAN
        } else {
            d.iter().map(|x| x.2).fold(0.0, f64::max)
        }
    }
}

/// Points of a config: every energy crossed with every stretch factor,
/// stably sorted by energy and then numbered.
pub fn plan_points(energies: &[f64], stretch: &[f64]) -> (Vec<PointSpec>, Vec<String>) {
    let mut pairs: Vec<(f64, f64)> = energies.iter().flat_map(|&e| stretch.iter().map(move |&k| (e, k))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut warnings = Vec::new();
    for w in pairs.windows(2) {
        if w[0] == w[1] {
            warnings.push(format!("duplicate point E_k={} stretch={}", sci(w[0].0), sci(w[0].1)));
        }
    }
    warnings.dedup();
    let points =
        pairs.into_iter().enumerate().map(|(index, (energy, stretch))| PointSpec { index, energy, stretch }).collect();
    (points, warnings)
}

/// Runs one point through path, profile, oscillator, amplitudes and oracle.
/// Stages that succeeded before a failure stay in the output.
pub fn compute_point(cfg: &Config, point: PointSpec) -> PointOutput {
    let mut out = PointOutput::default();
    if let Err(e) = compute_into(cfg, point, &mut out) {
        out.error = Some(format!("{e:#}"));
    }
    out
}

fn compute_into(cfg: &Config, point: PointSpec, out: &mut PointOutput) -> Result<()> {
    let profile = match &cfg.profile {
        ProfileSpec::FromPath { drive } => {
            let system = cfg.system()?.at_collision_energy(point.energy)?;
            let surface = Arc::new(cfg.surface()?);
            let path = ReactionPath::trace(surface, system, cfg.path.options()).context("tracing the reaction path")?;
            let profile = FrequencyProfile::from_path(&path, *drive).context("building the frequency profile")?;
            out.path = Some(path);
            profile
        }
        ProfileSpec::AnalyticProfile { omega2, force, tau_range, samples } => {
            let range = tau_range.map(|(a, b)| {
                let (mid, half) = (0.5 * (a + b), 0.5 * (b - a) * point.stretch);
                (mid - half, mid + half)
            });
            FrequencyProfile::analytic(omega2.stretched(point.stretch), *force, range, *samples)
                .context("building the frequency profile")?
                .with_e_kin(point.energy)
        }
    };
    out.profile = Some(profile.clone());

    let opts = XiOptions { rtol: cfg.tolerances.xi, drift_tol: cfg.tolerances.drift };
    let mut solution = solve_xi_with(&profile, &opts).context("integrating xi")?;
    if profile.has_force() {
        let drive = solve_eta(&profile, &solution).context("integrating the drive")?;
        solution = solution.with_drive(&drive);
    }
    out.solution = Some(solution.clone());
    let params = extract_parameters(solution.c1, solution.c2, solution.d_inf, solution.omega_in, solution.omega_out)
        .context("extracting scattering parameters")?;
    out.params = Some(params);

    for &mode in &cfg.modes {
        let tm = match mode {
            Mode::Hermite => assemble_matrix(&params, cfg.n_max, ClosedForm::Hermite(cfg.normalization))?,
            Mode::Legendre => {
                if params.nu > 0.0 {
                    out.warnings.push(format!(
                        "legendre mode ignores the drive (nu = {}); it describes the purely parametric case",
                        sci(params.nu)
                    ));
                }
                assemble_matrix(&params, cfg.n_max, ClosedForm::Legendre)?
            }
            Mode::Oracle => {
                let grid = oracle_grid(cfg, &profile)?;
                let dt = cfg.oracle.dt.unwrap_or_else(|| default_dt(&profile));
                oracle_matrix(&profile, cfg.n_max, &grid, dt).context("oracle propagation")?
            }
        };
        out.warnings.extend(tm.warnings.iter().map(|w| format!("{mode}: {w}")));
        out.matrices.push(tm);
    }
    if cfg.modes.contains(&Mode::Hermite) && cfg.modes.contains(&Mode::Oracle) {
        let other = match cfg.normalization {
            Normalization::Factorial => Normalization::PaperLiteral,
            Normalization::PaperLiteral => Normalization::Factorial,
        };
        out.alternate = Some(assemble_matrix(&params, cfg.n_max, ClosedForm::Hermite(other))?);
    }
    Ok(())
}

fn oracle_grid(cfg: &Config, profile: &FrequencyProfile) -> Result<GridSpec> {
    let base = GridSpec::default_for(profile);
    let half = cfg.oracle.z_half_width.unwrap_or(base.z_max);
    Ok(GridSpec::new(-half, half, cfg.oracle.points.unwrap_or(base.points))?)
}

/// Whether the Hermite matrix under `norm` reproduces the oracle's driven
/// column `W_m0`, `m ≤ 6`, to the arbitration tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct VariantCheck {
    pub normalization: Normalization,
    pub max_rel_diff: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointArbitration {
    pub index: usize,
    pub variants: Vec<VariantCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Arbitration {
    pub criterion: String,
    pub in_force: Normalization,
    /// Variants that passed at every point where both matrices exist.
    pub passed: Vec<Normalization>,
    pub points: Vec<PointArbitration>,
}

pub fn check_driven_column(hermite: &TransitionMatrix, oracle: &TransitionMatrix) -> (f64, bool) {
    let lim = ARBITRATION_M_MAX.min(hermite.n_max).min(oracle.n_max);
    let mut worst = 0.0f64;
    let mut ok = true;
    for m in 0..=lim {
        let (a, b) = (hermite.w[m][0], oracle.w[m][0]);
        let scale = a.abs().max(b.abs());
        if (a - b).abs() > ARBITRATION_REL * scale + ARBITRATION_FLOOR {
            ok = false;
        }
        if scale > ARBITRATION_FLOOR {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    (worst, ok)
}

pub fn arbitrate(cfg: &Config, points: &[PointSpec], outputs: &[PointOutput]) -> Option<Arbitration> {
    if !(cfg.modes.contains(&Mode::Hermite) && cfg.modes.contains(&Mode::Oracle)) {
        return None;
    }
    let mut per_point = Vec::new();
    for (p, o) in points.iter().zip(outputs) {
        let (Some(h), Some(orc), Some(alt)) = (o.matrix(Mode::Hermite), o.matrix(Mode::Oracle), &o.alternate) else {
            continue;
        };
        let variants = [h, alt]
            .iter()
            .map(|tm| {
                let (max_rel_diff, passed) = check_driven_column(tm, orc);
                VariantCheck { normalization: tm.normalization.unwrap_or(cfg.normalization), max_rel_diff, passed }
            })
            .collect();
        per_point.push(PointArbitration { index: p.index, variants });
    }
    let mut passed = Vec::new();
    if !per_point.is_empty() {
        for norm in [Normalization::Factorial, Normalization::PaperLiteral] {
            let all = per_point.iter().all(|p| p.variants.iter().any(|v| v.normalization == norm && v.passed));
            if all {
                passed.push(norm);
            }
        }
    }
    Some(Arbitration {
        criterion: format!(
            "hermite W_m0 vs oracle W_m0 for m <= {ARBITRATION_M_MAX}: |a-b| <= {ARBITRATION_REL:e}*max(|a|,|b|) + {ARBITRATION_FLOOR:e}"
        ),
        in_force: cfg.normalization,
        passed,
        points: per_point,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub energy: f64,
    pub stretch: f64,
    pub dir: String,
    pub status: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub command: String,
    pub version: String,
    pub config: Config,
    pub modes: Vec<Mode>,
    pub normalization: Normalization,
    pub normalization_formula: String,
    pub drive_convention: String,
    pub seed: Option<u64>,
    pub points: Vec<PointRecord>,
    pub normalization_arbitration: Option<Arbitration>,
    pub warnings: Vec<String>,
}

/// Result of a whole run, as written to disk.
pub struct RunReport {
    pub points: Vec<PointSpec>,
    pub outputs: Vec<PointOutput>,
    pub manifest: Manifest,
}

impl RunReport {
    pub fn failures(&self) -> usize {
        self.outputs.iter().filter(|o| o.error.is_some()).count()
    }
}

/// Computes every point in parallel, then writes all outputs in point order.
pub fn execute(cfg: &Config, command: &str, seed: Option<u64>, out_dir: &Path) -> Result<RunReport> {
    let (points, mut warnings) = plan_points(&cfg.sweep_energies(), &cfg.stretch_factors());
    if points.is_empty() {
        warnings.push("empty sweep: no points to compute".into());
    }
    let outputs: Vec<PointOutput> = points.par_iter().map(|&p| compute_point(cfg, p)).collect();

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut records = Vec::with_capacity(points.len());
    for (p, o) in points.iter().zip(&outputs) {
        let dir = point_dir(out_dir, p.index);
        write_point(cfg, p, o, &dir).with_context(|| format!("writing {}", dir.display()))?;
        let status = status_of(o);
        if o.error.is_some() {
            warnings.push(format!("point {:03} (E_k={}): {status}", p.index, sci(p.energy)));
        }
        records.push(PointRecord {
            index: p.index,
            energy: p.energy,
            stretch: p.stretch,
            dir: dir.file_name().unwrap().to_string_lossy().into_owned(),
            status,
            warnings: o.warnings.clone(),
        });
    }
    write_summary(cfg, &points, &outputs, &out_dir.join("summary.csv"))?;

    let manifest = Manifest {
        name: cfg.name.clone(),
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        modes: cfg.modes.clone(),
        normalization: cfg.normalization,
        normalization_formula: cfg.normalization.describe().into(),
        drive_convention: DRIVE_CONVENTION.into(),
        seed,
        points: records,
        normalization_arbitration: arbitrate(cfg, &points, &outputs),
        warnings,
    };
    let mut f = BufWriter::new(File::create(out_dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    writeln!(f)?;
    f.flush()?;
    Ok(RunReport { points, outputs, manifest })
}

pub fn point_dir(out_dir: &Path, index: usize) -> PathBuf {
    out_dir.join(format!("point_{index:03}"))
}

fn status_of(o: &PointOutput) -> String {
    match &o.error {
        None => "ok".into(),
        // Keep the CSV single-field.
        Some(e) => format!("error: {}", e.replace([',', '\n', '\r'], ";")),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_point(cfg: &Config, p: &PointSpec, o: &PointOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(path) = &o.path {
        let mut f = create(&dir.join("path.csv"))?;
        path.write_csv(&mut f)?;
        f.flush()?;
    }
    if let Some(profile) = &o.profile {
        let mut f = create(&dir.join("profile.csv"))?;
        profile.write_csv(&mut f, o.solution.as_ref())?;
        f.flush()?;
    }

    let mut f = create(&dir.join("parameters.csv"))?;
    writeln!(f, "{PARAMETERS_HEADER}")?;
    if let (Some(s), Some(q)) = (&o.solution, &o.params) {
        writeln!(
            f,
            "{}",
            row(&[
                p.energy,
                p.stretch,
                q.theta,
                q.delta1,
                q.delta2,
                q.nu,
                q.beta,
                q.phi,
                q.omega_in,
                q.omega_out,
                s.wronskian_constant(),
                s.wronskian_drift
            ])
        )?;
    }
    f.flush()?;

    let meta = |tm: &TransitionMatrix| -> Vec<(&str, String)> {
        let mut m = vec![("E_k", sci(p.energy)), ("stretch", sci(p.stretch))];
        if let Some(q) = &o.params {
            m.push(("theta", sci(q.theta)));
            m.push(("nu", sci(q.nu)));
        }
        if tm.mode == Mode::Hermite {
            let norm = tm.normalization.unwrap_or(cfg.normalization);
            m.push(("normalization_formula", norm.describe().to_string()));
        }
        m
    };
    for tm in &o.matrices {
        let mut f = create(&dir.join(format!("W_{}.csv", tm.mode)))?;
        tm.write_csv(&mut f, &meta(tm))?;
        f.flush()?;
    }

    let mut f = create(&dir.join("mode_diff.csv"))?;
    writeln!(f, "{MODE_DIFF_HEADER}")?;
    for (a, b, abs, rel) in o.mode_differences(cfg.n_max) {
        writeln!(f, "{a},{b},{},{}", sci(abs), sci(rel))?;
    }
    f.flush()?;
    Ok(())
}

/// One row per point. `W_00` and `unitarity_defect` come from the first
/// requested mode; `max_mode_discrepancy` is the largest absolute entry
/// difference between any two modes (`nan` with a single mode).
pub fn write_summary(cfg: &Config, points: &[PointSpec], outputs: &[PointOutput], path: &Path) -> Result<()> {
    let mut f = create(path)?;
    writeln!(f, "{SUMMARY_HEADER}")?;
    for (p, o) in points.iter().zip(outputs) {
        let theta = o.params.map_or(f64::NAN, |q| q.theta);
        let primary = cfg.modes.first().and_then(|&m| o.matrix(m));
        let w00 = primary.map_or(f64::NAN, |tm| tm.get(0, 0));
        let defect = primary.map_or(f64::NAN, |tm| tm.unitarity_defect);
        writeln!(
            f,
            "{},{}",
            row(&[p.energy, p.stretch, theta, w00, defect, o.max_mode_discrepancy(cfg.n_max)]),
            status_of(o)
        )?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_sorted_and_duplicates_flagged() {
        let (pts, warn) = plan_points(&[2.0, 1.0, 2.0], &[1.0]);
        let e: Vec<f64> = pts.iter().map(|p| p.energy).collect();
        assert_eq!(e, vec![1.0, 2.0, 2.0]);
        assert_eq!(pts.iter().map(|p| p.index).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(warn.len(), 1);
    }

    #[test]
    fn stretch_order_kept_within_an_energy() {
        let (pts, warn) = plan_points(&[1.0], &[1.0, 2.0, 4.0, 8.0]);
        assert!(warn.is_empty());
        assert_eq!(pts.iter().map(|p| p.stretch).collect::<Vec<_>>(), vec![1.0, 2.0, 4.0, 8.0]);
    }

    #[test]
    fn error_status_stays_one_field() {
        let o = PointOutput { error: Some("a, b\nc".into()), ..Default::default() };
        assert_eq!(status_of(&o), "error: a; b;c");
    }
}
