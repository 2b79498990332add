//! Effective parametric oscillator in internal time: frequency profile
//! `Ω²(τ)`, drive `F(τ)`, the classical solution `ξ(τ)` with its
//! asymptotic constants `c1`, `c2`, and the driven displacement `η(τ)`.

use crate::error::{Error, Result};
use crate::geometry::ReactionPath;
use crate::ode;
use crate::quad;
use crate::spline::Spline;
use crate::table::row;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Normalisation of the drive integral and of `η`, recorded in run output.
pub const DRIVE_CONVENTION: &str =
    "d(tau) = (2 Omega_in)^(-1/2) int xi F dtau'; eta = (2 Omega_in)^(-1/2) * 2 Im(xi d*)";

/// Relative flatness demanded of `Ω²` at the ends of the internal-time range.
pub const ASYMPTOTE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Omega2Shape {
    Constant {
        omega: f64,
    },
    /// Sudden jump of the frequency at `at`.
    Step {
        omega_in: f64,
        omega_out: f64,
        at: f64,
    },
    /// `Ω² = Ω_in² + (Ω_out² − Ω_in²)(1 + tanh((τ − center)/width))/2`.
    Tanh {
        omega_in: f64,
        omega_out: f64,
        width: f64,
        center: f64,
    },
}

impl Omega2Shape {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            Omega2Shape::Constant { omega } => omega * omega,
            Omega2Shape::Step { omega_in, omega_out, at } => {
                if tau < at {
                    omega_in * omega_in
                } else {
                    omega_out * omega_out
                }
            }
            Omega2Shape::Tanh { omega_in, omega_out, width, center } => {
                let (a, b) = (omega_in * omega_in, omega_out * omega_out);
                a + (b - a) * 0.5 * (1.0 + ((tau - center) / width).tanh())
            }
        }
    }

    pub fn asymptotes(&self) -> (f64, f64) {
        match *self {
            Omega2Shape::Constant { omega } => (omega, omega),
            Omega2Shape::Step { omega_in, omega_out, .. } | Omega2Shape::Tanh { omega_in, omega_out, .. } => {
                (omega_in, omega_out)
            }
        }
    }

    /// The same shape with its transition region stretched by `factor`.
    pub fn stretched(&self, factor: f64) -> Self {
        match *self {
            Omega2Shape::Tanh { omega_in, omega_out, width, center } => {
                Omega2Shape::Tanh { omega_in, omega_out, width: width * factor, center }
            }
            other => other,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Omega2Shape::Step { at, .. } => vec![at],
            _ => Vec::new(),
        }
    }

    /// Interval outside of which `Ω²` is flat to [`ASYMPTOTE_EPS`].
    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            Omega2Shape::Constant { .. } => None,
            Omega2Shape::Step { at, .. } => Some((at - 1.0, at + 1.0)),
            Omega2Shape::Tanh { width, center, .. } => {
                // 1 - tanh(s) < 2 e^{-2s}
                let s = 0.5 * (2.0 / (0.01 * ASYMPTOTE_EPS)).ln();
                Some((center - s * width, center + s * width))
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.asymptotes();
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::domain("asymptotic frequencies must be positive"));
        }
        if let Omega2Shape::Tanh { width, .. } = self {
            if !(*width > 0.0) {
                return Err(Error::domain("tanh width must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ForceShape {
    Zero,
    /// `A exp(−(τ − center)²/(2 width²))`.
    Gaussian {
        amplitude: f64,
        width: f64,
        center: f64,
    },
    /// `A exp(−(τ − center)²/(2 width²)) cos(ω (τ − center))`.
    ResonantPulse {
        amplitude: f64,
        omega: f64,
        width: f64,
        center: f64,
    },
}

impl ForceShape {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            ForceShape::Zero => 0.0,
            ForceShape::Gaussian { amplitude, width, center } => {
                let s = (tau - center) / width;
                amplitude * (-0.5 * s * s).exp()
            }
            ForceShape::ResonantPulse { amplitude, omega, width, center } => {
                let s = (tau - center) / width;
                amplitude * (-0.5 * s * s).exp() * (omega * (tau - center)).cos()
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            ForceShape::Zero => ForceShape::Zero,
            ForceShape::Gaussian { amplitude, width, center } => {
                ForceShape::Gaussian { amplitude: amplitude * factor, width, center }
            }
            ForceShape::ResonantPulse { amplitude, omega, width, center } => {
                ForceShape::ResonantPulse { amplitude: amplitude * factor, omega, width, center }
            }
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            ForceShape::Zero => None,
            ForceShape::Gaussian { width, center, .. } | ForceShape::ResonantPulse { width, center, .. } => {
                // exp(-s²/2) < 1e-18
                let s = (2.0 * 18.0 * 10f64.ln()).sqrt();
                Some((center - s * width.abs(), center + s * width.abs()))
            }
        }
    }
}

/// Drive model when the profile is built from a reaction path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum DriveModel {
    None,
    /// A prescribed `F(τ)`.
    Analytic {
        force: ForceShape,
    },
    /// Heuristic centrifugal-type drive `strength · (E_k^i/p)² / ρ1`.
    CurvatureInduced {
        strength: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSource {
    FromPath,
    AnalyticProfile,
}

#[derive(Debug, Clone)]
enum Shape {
    Sampled { omega2: Spline, force: Option<Spline> },
    Analytic { omega2: Omega2Shape, force: ForceShape },
}

#[derive(Debug, Clone)]
pub struct FrequencyProfile {
    pub tau_grid: Vec<f64>,
    pub omega2: Vec<f64>,
    pub force: Vec<f64>,
    pub omega_in: f64,
    pub omega_out: f64,
    pub source: ProfileSource,
    /// Collision energy carried into the translational phase `E_k^i τ`.
    pub e_kin: f64,
    shape: Shape,
}

impl FrequencyProfile {
    /// Analytic profile sampled on `samples` points of `tau_range`. Without
    /// an explicit range one is chosen that covers the transition and the
    /// drive with flat tails.
    pub fn analytic(
        omega2: Omega2Shape,
        force: ForceShape,
        tau_range: Option<(f64, f64)>,
        samples: usize,
    ) -> Result<Self> {
        omega2.validate()?;
        let (a, b) = match tau_range {
            Some(r) => r,
            None => {
                let spans = [omega2.support(), force.support()];
                let lo = spans.iter().flatten().map(|s| s.0).fold(f64::INFINITY, f64::min);
                let hi = spans.iter().flatten().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
                if lo.is_finite() {
                    (lo, hi)
                } else {
                    (-10.0, 10.0)
                }
            }
        };
        if !(b > a) || samples < 2 {
            return Err(Error::domain("profile needs an increasing tau range and at least two samples"));
        }
        let tau_grid: Vec<f64> = (0..samples).map(|i| a + (b - a) * i as f64 / (samples - 1) as f64).collect();
        let (omega_in, omega_out) = omega2.asymptotes();
        Ok(FrequencyProfile {
            omega2: tau_grid.iter().map(|&t| omega2.eval(t)).collect(),
            force: tau_grid.iter().map(|&t| force.eval(t)).collect(),
            tau_grid,
            omega_in,
            omega_out,
            source: ProfileSource::AnalyticProfile,
            e_kin: 0.0,
            shape: Shape::Analytic { omega2, force },
        })
    }

    /// Evaluates `Ω²(τ) = −(E_k^i/p)² [p_vv/p + p_v²/p² + 1/ρ2² + p_uu/p + p_u²/p²]`
    /// along the path, on the internal-time grid of its samples.
    pub fn from_path(path: &ReactionPath, drive: DriveModel) -> Result<Self> {
        let ek = path.system().collision_energy;
        let mut omega2 = Vec::with_capacity(path.samples.len());
        let mut force = Vec::with_capacity(path.samples.len());
        for (s, &tau) in path.samples.iter().zip(&path.tau) {
            let p = s.p;
            let bracket = s.p_vv / p + (s.p_v / p).powi(2) + s.kappa2 * s.kappa2 + s.p_uu / p + (s.p_u / p).powi(2);
            let w2 = -(ek / p).powi(2) * bracket;
            if !(w2 > 0.0) {
                return Err(Error::TachyonicFrequency { tau, omega2: w2 });
            }
            omega2.push(w2);
            force.push(match drive {
                DriveModel::None => 0.0,
                DriveModel::Analytic { force } => force.eval(tau),
                DriveModel::CurvatureInduced { strength } => strength * (ek / p).powi(2) * s.kappa1,
            });
        }
        let tau_grid = path.tau.clone();
        let omega_in = omega2[0].sqrt();
        let omega_out = omega2.last().unwrap().sqrt();
        let has_force = force.iter().any(|&f| f != 0.0);
        let shape = Shape::Sampled {
            omega2: Spline::new(tau_grid.clone(), omega2.clone())?,
            force: if has_force { Some(Spline::new(tau_grid.clone(), force.clone())?) } else { None },
        };
        Ok(FrequencyProfile {
            tau_grid,
            omega2,
            force,
            omega_in,
            omega_out,
            source: ProfileSource::FromPath,
            e_kin: ek,
            shape,
        })
    }

    pub fn with_e_kin(mut self, e_kin: f64) -> Self {
        self.e_kin = e_kin;
        self
    }

    pub fn tau_in(&self) -> f64 {
        self.tau_grid[0]
    }

    pub fn tau_out(&self) -> f64 {
        *self.tau_grid.last().unwrap()
    }

    /// `Ω²(τ)`; flat continuation beyond the sampled range.
    pub fn omega2_at(&self, tau: f64) -> f64 {
        if tau <= self.tau_in() {
            return self.omega_in * self.omega_in;
        }
        if tau >= self.tau_out() {
            return self.omega_out * self.omega_out;
        }
        match &self.shape {
            Shape::Sampled { omega2, .. } => omega2.value(tau),
            Shape::Analytic { omega2, .. } => omega2.eval(tau),
        }
    }

    /// `F(τ)`, zero outside the sampled range.
    pub fn force_at(&self, tau: f64) -> f64 {
        if tau < self.tau_in() || tau > self.tau_out() {
            return 0.0;
        }
        match &self.shape {
            Shape::Sampled { force: Some(f), .. } => f.value(tau),
            Shape::Sampled { force: None, .. } => 0.0,
            Shape::Analytic { force, .. } => force.eval(tau),
        }
    }

    pub fn has_force(&self) -> bool {
        match &self.shape {
            Shape::Sampled { force, .. } => force.is_some(),
            Shape::Analytic { force, .. } => *force != ForceShape::Zero,
        }
    }

    /// Points where `Ω²` is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Analytic { omega2, .. } => {
                omega2.breakpoints().into_iter().filter(|&b| b > self.tau_in() && b < self.tau_out()).collect()
            }
            Shape::Sampled { .. } => Vec::new(),
        }
    }

    /// Largest frequency on the grid.
    pub fn omega_max(&self) -> f64 {
        self.omega2.iter().fold(0.0f64, |m, &w| m.max(w)).max(self.omega_in.powi(2)).max(self.omega_out.powi(2)).sqrt()
    }

    pub fn omega_min(&self) -> f64 {
        self.omega2
            .iter()
            .fold(f64::INFINITY, |m: f64, &w| m.min(w))
            .min(self.omega_in.powi(2))
            .min(self.omega_out.powi(2))
            .sqrt()
    }

    fn check_tails(&self) -> Result<()> {
        let probes = [(self.tau_in(), self.omega_in), (self.tau_out(), self.omega_out)];
        for (tau, w) in probes {
            let inside = match &self.shape {
                Shape::Sampled { omega2, .. } => omega2.value(tau),
                Shape::Analytic { omega2, .. } => omega2.eval(tau),
            };
            let dev = (inside - w * w).abs() / (w * w);
            if dev > ASYMPTOTE_EPS {
                return Err(Error::BadAsymptote(format!(
                    "Omega^2 deviates from its asymptote by {dev:.3e} (relative) at tau = {tau}"
                )));
            }
        }
        if let Shape::Sampled { .. } = self.shape {
            let n = self.omega2.len();
            for (i, w) in [(1, self.omega_in), (n - 2, self.omega_out)] {
                let dev = (self.omega2[i] - w * w).abs() / (w * w);
                if dev > ASYMPTOTE_EPS {
                    return Err(Error::BadAsymptote(format!(
                        "sampled Omega^2 not flat near tau = {} ({dev:.3e})",
                        self.tau_grid[i]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Profile dump: `tau,omega2,F,re_xi,im_xi`.
    pub fn write_csv<W: Write>(&self, mut w: W, solution: Option<&OscillatorSolution>) -> io::Result<()> {
        writeln!(w, "tau,omega2,F,re_xi,im_xi")?;
        for ((&t, &o), &f) in self.tau_grid.iter().zip(&self.omega2).zip(&self.force) {
            let xi = solution.map_or(Complex64::new(f64::NAN, f64::NAN), |s| s.xi_at(t).0);
            writeln!(w, "{}", row(&[t, o, f, xi.re, xi.im]))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct XiOptions {
    pub rtol: f64,
    /// Largest accepted relative drift of the Wronskian `Im(ξ̇ ξ*)`.
    pub drift_tol: f64,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { rtol: 1e-10, drift_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct OscillatorSolution {
    /// Dense `[Re ξ, Im ξ, Re ξ̇, Im ξ̇]`.
    pub xi: ode::Trajectory<4>,
    pub c1: Complex64,
    pub c2: Complex64,
    pub d_inf: Complex64,
    pub wronskian_drift: f64,
    pub omega_in: f64,
    pub omega_out: f64,
}

fn cis(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

impl OscillatorSolution {
    pub fn tau_in(&self) -> f64 {
        self.xi.t_start()
    }

    pub fn tau_out(&self) -> f64 {
        self.xi.t_end()
    }

    /// `(ξ, ξ̇)` at any `τ`, using the exact plane waves outside the
    /// integrated range.
    pub fn xi_at(&self, tau: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        if tau < self.tau_in() {
            let w = self.omega_in;
            return (cis(w * tau), i * w * cis(w * tau));
        }
        if tau > self.tau_out() {
            let w = self.omega_out;
            let (e, em) = (cis(w * tau), cis(-w * tau));
            return (self.c1 * e - self.c2 * em, i * w * (self.c1 * e + self.c2 * em));
        }
        let y = self.xi.eval(tau);
        (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]))
    }

    /// Reflection ratio `θ = |c2/c1|²`.
    pub fn theta(&self) -> f64 {
        (self.c2 / self.c1).norm_sqr()
    }

    /// `|c1|² − |c2|²`, equal to `Ω_in/Ω_out` for an exact solution.
    pub fn wronskian_constant(&self) -> f64 {
        self.c1.norm_sqr() - self.c2.norm_sqr()
    }

    pub fn with_drive(mut self, drive: &DriveSolution) -> Self {
        self.d_inf = drive.d_inf;
        self
    }
}

pub fn solve_xi(profile: &FrequencyProfile, tol: f64) -> Result<OscillatorSolution> {
    solve_xi_with(profile, &XiOptions { rtol: tol, ..Default::default() })
}

/// Integrates `ξ̈ + Ω²(τ) ξ = 0` from `ξ = exp(iΩ_in τ)` and extracts
/// `c1`, `c2` from `ξ = c1 e^{iΩ_out τ} − c2 e^{−iΩ_out τ}` at the end.
pub fn solve_xi_with(profile: &FrequencyProfile, opts: &XiOptions) -> Result<OscillatorSolution> {
    profile.check_tails()?;
    let (wi, wo) = (profile.omega_in, profile.omega_out);
    let t0 = profile.tau_in();
    let t1 = profile.tau_out();
    let z0 = cis(wi * t0);
    let mut y = [z0.re, z0.im, -wi * z0.im, wi * z0.re];
    let ode_opts = ode::Options { rtol: opts.rtol, atol: opts.rtol * 1e-2, ..Default::default() };

    let mut edges = vec![t0];
    edges.extend(profile.breakpoints());
    edges.push(t1);
    let mut traj: Option<ode::Trajectory<4>> = None;
    for w in edges.windows(2) {
        // sample Ω² strictly inside the segment so steps see one branch
        let (a, b) = (w[0], w[1]);
        let rhs = |t: f64, s: &[f64; 4]| {
            let o2 = profile.omega2_at(t.clamp(a + (b - a) * 1e-15, b - (b - a) * 1e-15));
            [s[2], s[3], -o2 * s[0], -o2 * s[1]]
        };
        let seg = ode::integrate(rhs, a, y, b, &ode_opts)?;
        y = *seg.last();
        match traj.as_mut() {
            None => traj = Some(seg),
            Some(t) => t.append(seg),
        }
    }
    let xi = traj.expect("at least one segment");

    let drift = xi.y.iter().map(|s| ((s[3] * s[0] - s[2] * s[1]) - wi).abs() / wi).fold(0.0, f64::max);
    if drift > opts.drift_tol {
        return Err(Error::IntegrationDrift { drift, tol: opts.drift_tol });
    }

    let i = Complex64::i();
    let z = Complex64::new(y[0], y[1]);
    let zd = Complex64::new(y[2], y[3]);
    let c1 = (z + zd / (i * wo)) * 0.5 * cis(-wo * t1);
    let c2 = -(z - zd / (i * wo)) * 0.5 * cis(wo * t1);
    Ok(OscillatorSolution {
        xi,
        c1,
        c2,
        d_inf: Complex64::new(0.0, 0.0),
        wronskian_drift: drift,
        omega_in: wi,
        omega_out: wo,
    })
}

#[derive(Debug, Clone)]
pub struct DriveSolution {
    /// Nodes of the `ξ` solution.
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    pub eta_dot: Vec<f64>,
    /// `d(τ)` at the nodes.
    pub d: Vec<Complex64>,
    pub d_inf: Complex64,
}

impl DriveSolution {
    /// `ν = |d_∞|²`.
    pub fn nu(&self) -> f64 {
        self.d_inf.norm_sqr()
    }

    /// `(η, η̇, d)` at any `τ`.
    pub fn at(&self, solution: &OscillatorSolution, profile: &FrequencyProfile, tau: f64) -> (f64, f64, Complex64) {
        if self.tau.is_empty() || tau <= self.tau[0] {
            return (0.0, 0.0, Complex64::new(0.0, 0.0));
        }
        let k = self.tau.partition_point(|&t| t <= tau) - 1;
        let norm = (2.0 * solution.omega_in).powf(-0.5);
        let extra = if tau > self.tau[k] {
            quad::gauss_legendre5(|t| solution.xi_at(t).0 * profile.force_at(t), self.tau[k], tau) * norm
        } else {
            Complex64::new(0.0, 0.0)
        };
        let d = self.d[k] + extra;
        let (xi, xid) = solution.xi_at(tau);
        (2.0 * norm * (xi * d.conj()).im, 2.0 * norm * (xid * d.conj()).im, d)
    }
}

/// Solves `η̈ + Ω² η = F` through the drive integral
/// `d(τ) = (2Ω_in)^{-1/2} ∫ ξ F dτ'`, with `η = (2Ω_in)^{-1/2} · 2 Im(ξ d*)`.
pub fn solve_eta(profile: &FrequencyProfile, solution: &OscillatorSolution) -> Result<DriveSolution> {
    let tau = solution.xi.t.clone();
    let n = tau.len();
    if !profile.has_force() {
        return Ok(DriveSolution {
            eta: vec![0.0; n],
            eta_dot: vec![0.0; n],
            d: vec![Complex64::new(0.0, 0.0); n],
            tau,
            d_inf: Complex64::new(0.0, 0.0),
        });
    }
    let peak = profile.force.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    for t in [profile.tau_in(), profile.tau_out()] {
        let f = profile.force_at(t).abs();
        if f > 1e-8 * peak.max(f64::MIN_POSITIVE) {
            return Err(Error::NonIntegrableDrive { tau: t, value: f });
        }
    }
    let norm = (2.0 * solution.omega_in).powf(-0.5);
    let integrand = |t: f64| solution.xi_at(t).0 * profile.force_at(t);
    let mut d = Vec::with_capacity(n);
    let mut acc = Complex64::new(0.0, 0.0);
    d.push(acc);
    for w in tau.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        acc += (quad::gauss_legendre5(integrand, w[0], m) + quad::gauss_legendre5(integrand, m, w[1])) * norm;
        d.push(acc);
    }
    let mut eta = Vec::with_capacity(n);
    let mut eta_dot = Vec::with_capacity(n);
    for (k, &t) in tau.iter().enumerate() {
        let (xi, xid) = solution.xi_at(t);
        eta.push(2.0 * norm * (xi * d[k].conj()).im);
        eta_dot.push(2.0 * norm * (xid * d[k].conj()).im);
    }
    Ok(DriveSolution { tau, eta, eta_dot, d_inf: acc, d })
}
