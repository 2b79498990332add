//! JSON scenario files.
//!
//! Physical inputs (masses, energies, surface, profile, modes, `n_max`) are
//! required. Only numerical tolerances and grid settings have defaults,
//! listed on the structs below.

use anyhow::{bail, Context, Result};
use collinear::amplitudes::{Mode, Normalization};
use collinear::geometry::PathOptions;
use collinear::oscillator::{DriveModel, ForceShape, Omega2Shape};
use collinear::pes::{CollisionSystem, PotentialSurface, TwoChannel};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub name: String,
    pub system: SystemSpec,
    pub surface: SurfaceSpec,
    #[serde(default)]
    pub path: PathSpec,
    pub profile: ProfileSpec,
    pub modes: Vec<Mode>,
    pub n_max: usize,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracle: OracleSpec,
    #[serde(default = "default_normalization")]
    pub normalization: Normalization,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_normalization() -> Normalization {
    Normalization::Factorial
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub masses: [f64; 3],
    pub total_energy: f64,
    pub collision_energy: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceSpec {
    FlatChannel {
        omega: f64,
    },
    /// `mu0` is taken from the system masses.
    TwoChannelHarmonic {
        omega_in: f64,
        omega_out: f64,
        switch_length: f64,
        #[serde(default)]
        barrier_height: f64,
        #[serde(default = "one")]
        barrier_width: f64,
    },
    /// `values[i][j]` is `V(x[i], y[j])`.
    CustomTabulated {
        x: Vec<f64>,
        y: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// Path options; defaults `u ∈ [−20, 20]`, 801 samples, no offset,
/// caustic guard 1e-6, chart threshold 1, flatness 1e-8.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub samples: usize,
    pub offset: f64,
    pub caustic_eps: f64,
    pub chart_rho2: f64,
    pub asymptote_tol: f64,
}

impl Default for PathSpec {
    fn default() -> Self {
        let o = PathOptions::default();
        PathSpec {
            u_min: o.u_min,
            u_max: o.u_max,
            samples: o.samples,
            offset: o.offset,
            caustic_eps: o.caustic_eps,
            chart_rho2: o.chart_rho2,
            asymptote_tol: o.asymptote_tol,
        }
    }
}

impl PathSpec {
    pub fn options(&self) -> PathOptions {
        PathOptions {
            u_min: self.u_min,
            u_max: self.u_max,
            samples: self.samples,
            offset: self.offset,
            caustic_eps: self.caustic_eps,
            chart_rho2: self.chart_rho2,
            asymptote_tol: self.asymptote_tol,
            ..PathOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    FromPath {
        #[serde(default = "no_drive")]
        drive: DriveModel,
    },
    AnalyticProfile {
        omega2: Omega2Shape,
        #[serde(default = "no_force")]
        force: ForceShape,
        #[serde(default)]
        tau_range: Option<(f64, f64)>,
        #[serde(default = "default_profile_samples")]
        samples: usize,
    },
}

fn no_drive() -> DriveModel {
    DriveModel::None
}

fn no_force() -> ForceShape {
    ForceShape::Zero
}

fn default_profile_samples() -> usize {
    2001
}

/// Energies as an explicit list or an inclusive linear range; `stretch`
/// factors rescale the transition of an analytic `Ω²` (adiabatic family).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub energies: Option<Vec<f64>>,
    #[serde(default)]
    pub range: Option<EnergyRange>,
    #[serde(default)]
    pub stretch: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl EnergyRange {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// `xi` is the relative tolerance of the `ξ` integration (default 1e-10),
/// `drift` the accepted Wronskian drift (1e-8).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub xi: f64,
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { xi: 1e-10, drift: 1e-8 }
    }
}

/// Grid for the propagation oracle. Unset fields follow the profile:
/// `z ∈ [−12, 12]/sqrt(Ω_min)`, 2048 points, `Ω_max dt = 0.01`.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSpec {
    pub points: Option<usize>,
    pub z_half_width: Option<f64>,
    pub dt: Option<f64>,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Parses and validates; syntax and type errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| {
            anyhow::anyhow!(
                "line {}, column {}: {}",
                e.line(),
                e.column(),
                e.to_string().split(" at line").next().unwrap_or("")
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.system()?;
        self.surface()?;
        if self.modes.is_empty() {
            bail!("at least one mode is required");
        }
        if let Some(s) = &self.sweep {
            for e in s.energies.iter().flatten() {
                if !(*e > 0.0) {
                    bail!("sweep energies must be positive, got {e}");
                }
            }
            if let Some(r) = s.range {
                if !(r.start > 0.0 && r.stop > 0.0) {
                    bail!("sweep range must be positive");
                }
            }
            if s.energies.is_some() && s.range.is_some() {
                bail!("give sweep energies either as a list or as a range, not both");
            }
            for k in s.stretch.iter().flatten() {
                if !(*k > 0.0) {
                    bail!("stretch factors must be positive, got {k}");
                }
            }
            if s.stretch.is_some() && matches!(self.profile, ProfileSpec::FromPath { .. }) {
                bail!("stretch factors apply to analytic profiles only");
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<CollisionSystem> {
        let s = self.system;
        let sys = CollisionSystem::new(s.masses[0], s.masses[1], s.masses[2], s.total_energy, s.collision_energy)?;
        Ok(sys.with_hbar(s.hbar)?)
    }

    pub fn surface(&self) -> Result<PotentialSurface> {
        let mu0 = self.system()?.mu0;
        Ok(match &self.surface {
            SurfaceSpec::FlatChannel { omega } => PotentialSurface::flat_channel(*omega)?,
            SurfaceSpec::TwoChannelHarmonic { omega_in, omega_out, switch_length, barrier_height, barrier_width } => {
                PotentialSurface::two_channel(TwoChannel {
                    mu0,
                    omega_in: *omega_in,
                    omega_out: *omega_out,
                    switch_length: *switch_length,
                    barrier_height: *barrier_height,
                    barrier_width: *barrier_width,
                })?
            }
            SurfaceSpec::CustomTabulated { x, y, values } => PotentialSurface::tabulated(x.clone(), y.clone(), values)?,
        })
    }

    /// Collision energies of a sweep; the configured energy when none are given.
    pub fn sweep_energies(&self) -> Vec<f64> {
        match &self.sweep {
            Some(SweepSpec { energies: Some(e), .. }) => e.clone(),
            Some(SweepSpec { range: Some(r), .. }) => r.values(),
            _ => vec![self.system.collision_energy],
        }
    }

    pub fn stretch_factors(&self) -> Vec<f64> {
        match &self.sweep {
            Some(SweepSpec { stretch: Some(s), .. }) => s.clone(),
            _ => vec![1.0],
        }
    }
}

/// Parses `--energies`: a comma list (`0.5,1,2`), an inclusive range
/// `start:stop:count`, or the empty string.
pub fn parse_energies(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            bail!("energy range must read start:stop:count, got {spec:?}");
        }
        let start: f64 = parts[0].trim().parse().with_context(|| format!("bad range start {:?}", parts[0]))?;
        let stop: f64 = parts[1].trim().parse().with_context(|| format!("bad range stop {:?}", parts[1]))?;
        let count: usize = parts[2].trim().parse().with_context(|| format!("bad range count {:?}", parts[2]))?;
        let values = EnergyRange { start, stop, count }.values();
        check_positive(&values)?;
        return Ok(values);
    }
    let values = spec
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad energy {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    check_positive(&values)?;
    Ok(values)
}

fn check_positive(values: &[f64]) -> Result<()> {
    if let Some(e) = values.iter().find(|e| !(**e > 0.0)) {
        bail!("energies must be positive, got {e}");
    }
    Ok(())
}

/// Parses `--modes hermite,legendre,oracle` (or `all`).
pub fn parse_modes(spec: &str) -> Result<Vec<Mode>> {
    if spec.trim() == "all" {
        return Ok(vec![Mode::Hermite, Mode::Legendre, Mode::Oracle]);
    }
    spec.split(',')
        .map(|t| match t.trim() {
            "hermite" => Ok(Mode::Hermite),
            "legendre" => Ok(Mode::Legendre),
            "oracle" => Ok(Mode::Oracle),
            other => bail!("unknown mode {other:?} (expected hermite, legendre, oracle or all)"),
        })
        .collect()
}
