//! Reaction path, induced metric and curvature radii, local-frame motion
//! and the internal-time coordinate map.
//!
//! The path is the valley floor `y_f(x)` of the surface (the minimum of `V`
//! over `y` at fixed `x`), optionally shifted by a constant transverse
//! offset. The arc parameter `u` is the channel coordinate `x` itself, so
//! `s_u = sqrt(1 + y'^2)` is the arc-length factor and `v` is the distance
//! along the unit normal. Inverse curvature radii `κ = 1/ρ` are stored so
//! that straight or momentum-flat stretches carry exact zeros instead of
//! infinities.

use crate::error::{Error, Result};
use crate::ode::{self, Outcome};
use crate::pes::{CollisionSystem, Jet, PotentialSurface};
use crate::quad;
use crate::table::{row, sci};
use std::io::{self, Write};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOptions {
    pub u_min: f64,
    pub u_max: f64,
    pub samples: usize,
    /// Constant transverse shift of the traced curve away from the valley
    /// floor. Zero traces the extremal path itself.
    pub offset: f64,
    pub caustic_eps: f64,
    /// Chart boundaries are placed where `|ρ2|` crosses this value.
    pub chart_rho2: f64,
    /// Relative flatness required of `p` and the transverse stiffness at
    /// both ends of the path.
    pub asymptote_tol: f64,
    /// Step of the central difference used for the floor curvature `y''`.
    pub fd_step: f64,
}

impl Default for PathOptions {
    fn default() -> Self {
        PathOptions {
            u_min: -20.0,
            u_max: 20.0,
            samples: 801,
            offset: 0.0,
            caustic_eps: 1e-6,
            chart_rho2: 1.0,
            asymptote_tol: 1e-8,
            fd_step: 1e-4,
        }
    }
}

/// Everything the reduction needs at one value of the arc parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub u: f64,
    pub x: f64,
    pub y: f64,
    /// `y'(u)` and `y''(u)` of the traced curve.
    pub slope: f64,
    pub bend: f64,
    pub s_u: f64,
    /// `p(u) = P(u, 0)` and partial derivatives of `P(u, v)` at `v = 0`.
    pub p: f64,
    pub p_u: f64,
    pub p_v: f64,
    pub p_uu: f64,
    pub p_vv: f64,
    pub p_uv: f64,
    /// `1/ρ1 = -p_u/p` and `1/ρ2 = -p_v/p`, with their `u`-derivatives.
    pub kappa1: f64,
    pub kappa2: f64,
    pub dkappa1: f64,
    pub dkappa2: f64,
    /// `P0(u, 0)` at total energy, `λ1 = ħ/P0` and `dλ1/du`.
    pub p0: f64,
    pub lambda1: f64,
    pub dlambda1: f64,
    /// `U(u, 0)` and `∂²U/∂v²` at `v = 0`.
    pub potential: f64,
    pub u_vv: f64,
}

impl PathSample {
    pub fn rho1(&self) -> f64 {
        1.0 / self.kappa1
    }

    pub fn rho2(&self) -> f64 {
        1.0 / self.kappa2
    }

    /// `λ1/ρ1`, exactly zero where `ρ1` is infinite.
    pub fn lambda1_over_rho1(&self) -> f64 {
        self.lambda1 * self.kappa1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub u_start: f64,
    pub u_end: f64,
    /// `|ρ2|` stays below the chart threshold on this segment.
    pub tight: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiclassicalSample {
    pub u: f64,
    pub ratio1: f64,
    pub ratio2: f64,
    pub product: f64,
    pub lambda2: f64,
    pub v0: f64,
    pub within_caustic_spacing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiclassicalReport {
    pub samples: Vec<QuasiclassicalSample>,
    pub worst_ratio: f64,
    pub worst_u: f64,
}

impl QuasiclassicalReport {
    fn build(system: &CollisionSystem, samples: &[PathSample]) -> Self {
        let hbar = system.hbar;
        let internal = system.total_energy - system.collision_energy;
        let samples: Vec<QuasiclassicalSample> = samples
            .iter()
            .map(|s| {
                // transverse oscillator length and turning-point spacing
                let (lambda2, v0) = if s.u_vv > 0.0 {
                    let l2 = (hbar / (system.mu0 * s.u_vv).sqrt()).sqrt();
                    let v0 = if internal > 0.0 { 2.0 * (2.0 * internal / s.u_vv).sqrt() } else { 0.0 };
                    (l2, v0)
                } else {
                    (f64::INFINITY, f64::INFINITY)
                };
                let ratio1 = s.lambda1 * s.kappa1.abs();
                let ratio2 = if s.kappa2 == 0.0 { 0.0 } else { lambda2 * s.kappa2.abs() };
                QuasiclassicalSample {
                    u: s.u,
                    ratio1,
                    ratio2,
                    product: ratio1 * ratio2,
                    lambda2,
                    v0,
                    within_caustic_spacing: lambda2 <= v0,
                }
            })
            .collect();
        let (worst_ratio, worst_u) = samples
            .iter()
            .map(|q| (q.ratio1.max(q.ratio2), q.u))
            .fold((0.0, samples.first().map_or(0.0, |q| q.u)), |acc, x| if x.0 > acc.0 { x } else { acc });
        QuasiclassicalReport { samples, worst_ratio, worst_u }
    }
}

#[derive(Debug, Clone)]
pub struct ReactionPath {
    surface: Arc<PotentialSurface>,
    system: CollisionSystem,
    options: PathOptions,
    pub samples: Vec<PathSample>,
    /// Internal time at each sample.
    pub tau: Vec<f64>,
    pub charts: Vec<Chart>,
    pub quasiclassical: QuasiclassicalReport,
    /// `p_-`: the in-asymptote momentum.
    pub p_minus: f64,
}

/// Finds the valley floor `y_f(x)` by Newton iteration on `∂V/∂y = 0`.
fn valley_floor(surface: &PotentialSurface, x: f64, guess: f64) -> Result<(f64, Jet)> {
    let mut y = guess;
    for _ in 0..60 {
        let j = surface.evaluate(x, y)?;
        let vyy = j.hess[1][1];
        if !(vyy > 0.0) {
            return Err(Error::NoAsymptote(format!("no transverse valley at x = {x} (V_yy = {vyy:.3e})")));
        }
        let step = j.grad[1] / vyy;
        y -= step;
        if step.abs() <= 1e-14 * (1.0 + y.abs()) {
            return Ok((y, surface.evaluate(x, y)?));
        }
    }
    Err(Error::NoAsymptote(format!("valley floor search did not converge at x = {x}")))
}

fn floor_slope(j: &Jet) -> f64 {
    -j.hess[0][1] / j.hess[1][1]
}

fn quad_form(a: [f64; 2], h: &[[f64; 2]; 2], b: [f64; 2]) -> f64 {
    a[0] * (h[0][0] * b[0] + h[0][1] * b[1]) + a[1] * (h[1][0] * b[0] + h[1][1] * b[1])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Curve point, tangent `r'`, normal `n` and `n'` at `u`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    r: [f64; 2],
    dr: [f64; 2],
    ddr: [f64; 2],
    n: [f64; 2],
    dn: [f64; 2],
    s_u: f64,
}

impl ReactionPath {
    pub fn trace(surface: Arc<PotentialSurface>, system: CollisionSystem, options: PathOptions) -> Result<Self> {
        system.validate()?;
        if !(options.u_min < 0.0 && options.u_max > 0.0) {
            return Err(Error::domain("path range must straddle u = 0"));
        }
        if options.samples < 3 {
            return Err(Error::domain("path needs at least three samples"));
        }
        let (xa, xb) = surface.x_range();
        if options.u_min < xa || options.u_max > xb {
            return Err(Error::domain(format!(
                "path range [{}, {}] exceeds the surface domain [{xa}, {xb}]",
                options.u_min, options.u_max
            )));
        }
        let mut path = ReactionPath {
            surface,
            system,
            options,
            samples: Vec::new(),
            tau: Vec::new(),
            charts: Vec::new(),
            quasiclassical: QuasiclassicalReport { samples: Vec::new(), worst_ratio: 0.0, worst_u: 0.0 },
            p_minus: 0.0,
        };

        let n = options.samples;
        let du = (options.u_max - options.u_min) / (n - 1) as f64;
        let mut guess = 0.0;
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let u = if i == n - 1 { options.u_max } else { options.u_min + i as f64 * du };
            let s = path.sample_with_guess(u, guess)?;
            guess = s.y - options.offset;
            samples.push(s);
        }
        if let Some((xt, _)) = path.surface.barrier_top() {
            if xt > options.u_min && xt < options.u_max {
                path.sample(xt)?;
            }
        }

        let tol = options.asymptote_tol;
        for (end, pair) in [("in", [&samples[0], &samples[1]]), ("out", [&samples[n - 1], &samples[n - 2]])] {
            let s = pair[0];
            let flat_p = (s.p_u / s.p).abs() * (options.u_max - options.u_min);
            let stiff = (pair[0].u_vv - pair[1].u_vv).abs() / pair[0].u_vv.abs().max(f64::MIN_POSITIVE);
            if flat_p > tol || stiff > tol || s.slope.abs() > tol {
                return Err(Error::NoAsymptote(format!(
                    "{end}-channel end at u = {} is not flat (|p_u/p|·span = {flat_p:.3e}, stiffness change = {stiff:.3e}, slope = {:.3e})",
                    s.u, s.slope
                )));
            }
        }
        path.p_minus = samples[0].p;

        // internal time: cumulative Gauss–Kronrod between samples, origin at u = 0
        let mut tau = Vec::with_capacity(n);
        tau.push(0.0);
        for w in samples.windows(2) {
            let piece = path.internal_time_between(w[0].u, w[1].u);
            tau.push(tau.last().unwrap() + piece);
        }
        let k0 = samples.partition_point(|s| s.u <= 0.0) - 1;
        let at_zero = tau[k0] + path.internal_time_between(samples[k0].u, 0.0);
        for t in &mut tau {
            *t -= at_zero;
        }

        path.charts = charts_from(&samples, options.chart_rho2);
        path.quasiclassical = QuasiclassicalReport::build(&system, &samples);
        path.samples = samples;
        path.tau = tau;
        Ok(path)
    }

    pub fn surface(&self) -> &PotentialSurface {
        &self.surface
    }

    pub fn system(&self) -> &CollisionSystem {
        &self.system
    }

    pub fn options(&self) -> &PathOptions {
        &self.options
    }

    pub fn u_range(&self) -> (f64, f64) {
        (self.options.u_min, self.options.u_max)
    }

    fn check_range(&self, u: f64) -> Result<()> {
        let (a, b) = self.u_range();
        if !(u >= a && u <= b) {
            return Err(Error::domain(format!("u = {u} outside path range [{a}, {b}]")));
        }
        Ok(())
    }

    fn curve_y(&self, u: f64, guess: f64) -> Result<(f64, f64, Jet)> {
        let (yf, jet) = valley_floor(&self.surface, u, guess)?;
        Ok((yf + self.options.offset, floor_slope(&jet), jet))
    }

    fn frame(&self, u: f64, guess: f64) -> Result<Frame> {
        let (y, slope, _) = self.curve_y(u, guess)?;
        let h = self.options.fd_step;
        let bend = if slope == 0.0 && self.is_straight_family() {
            0.0
        } else {
            let (_, sp, _) = self.curve_y(u + h, guess)?;
            let (_, sm, _) = self.curve_y(u - h, guess)?;
            (sp - sm) / (2.0 * h)
        };
        let s_u = (1.0 + slope * slope).sqrt();
        let ds = slope * bend / s_u;
        let n = [-slope / s_u, 1.0 / s_u];
        let dn = [-bend / s_u + slope * ds / (s_u * s_u), -ds / (s_u * s_u)];
        Ok(Frame { r: [u, y], dr: [1.0, slope], ddr: [0.0, bend], n, dn, s_u })
    }

    fn is_straight_family(&self) -> bool {
        !matches!(*self.surface, PotentialSurface::Tabulated(_))
    }

    /// Full path record at an arbitrary `u` in range.
    pub fn sample(&self, u: f64) -> Result<PathSample> {
        self.check_range(u)?;
        let guess = self.nearest_floor_guess(u);
        self.sample_with_guess(u, guess)
    }

    fn nearest_floor_guess(&self, u: f64) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let k = self.samples.partition_point(|s| s.u <= u).clamp(1, self.samples.len()) - 1;
        self.samples[k].y - self.options.offset
    }

    fn sample_with_guess(&self, u: f64, guess: f64) -> Result<PathSample> {
        let f = self.frame(u, guess)?;
        let j = self.surface.evaluate(f.r[0], f.r[1])?;
        let mu = self.system.mu0;
        let u_u = dot(j.grad, f.dr);
        let u_v = dot(j.grad, f.n);
        let u_uu = quad_form(f.dr, &j.hess, f.dr) + dot(j.grad, f.ddr);
        let u_vv = quad_form(f.n, &j.hess, f.n);
        let u_uv = quad_form(f.dr, &j.hess, f.n) + dot(j.grad, f.dn);

        let p2 = 2.0 * mu * (self.system.collision_energy - j.value);
        if !(p2 > 0.0) {
            return Err(Error::ClassicallyForbidden { u, p2 });
        }
        let p = p2.sqrt();
        let p_u = -mu * u_u / p;
        let p_v = -mu * u_v / p;
        let p_uu = -(mu * u_uu + p_u * p_u) / p;
        let p_vv = -(mu * u_vv + p_v * p_v) / p;
        let p_uv = -(mu * u_uv + p_u * p_v) / p;

        let p02 = 2.0 * mu * (self.system.total_energy - j.value);
        if !(p02 > 0.0) {
            return Err(Error::ClassicallyForbidden { u, p2: p02 });
        }
        let p0 = p02.sqrt();
        let p0_u = -mu * u_u / p0;
        let hbar = self.system.hbar;

        Ok(PathSample {
            u,
            x: f.r[0],
            y: f.r[1],
            slope: f.dr[1],
            bend: f.ddr[1],
            s_u: f.s_u,
            p,
            p_u,
            p_v,
            p_uu,
            p_vv,
            p_uv,
            kappa1: -p_u / p,
            kappa2: -p_v / p,
            dkappa1: -(p_uu * p - p_u * p_u) / p2,
            dkappa2: -(p_uv * p - p_v * p_u) / p2,
            p0,
            lambda1: hbar / p0,
            dlambda1: -hbar * p0_u / p02,
            potential: j.value,
            u_vv,
        })
    }

    /// Potential `U(u, v)` and its gradient in path coordinates, off the path.
    pub fn potential_at(&self, u: f64, v: f64) -> Result<(f64, [f64; 2])> {
        let f = self.frame(u, self.nearest_floor_guess(u))?;
        let x = f.r[0] + v * f.n[0];
        let y = f.r[1] + v * f.n[1];
        let j = self.surface.evaluate(x, y)?;
        let tangent = [f.dr[0] + v * f.dn[0], f.dr[1] + v * f.dn[1]];
        Ok((j.value, [dot(j.grad, tangent), dot(j.grad, f.n)]))
    }

    /// `(1/E_k^i) ∫ p s_u du'` from `a` to `b`.
    fn internal_time_between(&self, a: f64, b: f64) -> f64 {
        let ek = self.system.collision_energy;
        let scale = (b - a).abs() * self.p_minus.max(1e-300) / ek;
        quad::adaptive(
            |u| self.sample_with_guess(u, self.nearest_floor_guess(u)).map_or(f64::NAN, |s| s.p * s.s_u) / ek,
            a,
            b,
            1e-14 * scale.max(1e-300),
        )
    }

    /// Internal time `τ(u) = (1/E_k^i) ∫_0^u p(u') s_u' du'`.
    pub fn internal_time(&self, u: f64) -> Result<f64> {
        self.check_range(u)?;
        self.sample(u)?;
        Ok(self.internal_time_between(0.0, u))
    }

    /// Transverse scaled coordinate `z = (ħ E_k^i)^{-1/2} p(u) v`.
    pub fn z_of(&self, u: f64, v: f64) -> Result<f64> {
        let s = self.sample(u)?;
        Ok(v * s.p / (self.system.hbar * self.system.collision_energy).sqrt())
    }

    pub fn metric_at(&self, u: f64, v: f64) -> Result<MetricPoint> {
        let s = self.sample(u)?;
        MetricPoint::from_sample(&s, v, self.options.caustic_eps)
    }

    /// Path dump: `u,x,y,p,rho1,rho2,lambda1,tau,ratio1,ratio2,ratio_product`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "u,x,y,p,rho1,rho2,lambda1,tau,ratio1,ratio2,ratio_product")?;
        for ((s, t), q) in self.samples.iter().zip(&self.tau).zip(&self.quasiclassical.samples) {
            writeln!(
                w,
                "{},{}",
                row(&[s.u, s.x, s.y, s.p, s.rho1(), s.rho2(), s.lambda1, *t, q.ratio1, q.ratio2]),
                sci(q.product)
            )?;
        }
        Ok(())
    }
}

fn charts_from(samples: &[PathSample], threshold: f64) -> Vec<Chart> {
    let mut charts: Vec<Chart> = Vec::new();
    for s in samples {
        let tight = s.kappa2.abs() * threshold > 1.0;
        match charts.last_mut() {
            Some(c) if c.tight == tight => c.u_end = s.u,
            _ => {
                let start = charts.last().map_or(s.u, |c| c.u_end);
                charts.push(Chart { u_start: start, u_end: s.u, tight });
            }
        }
    }
    charts
}

/// Metric `g = diag((1 + λ1/ρ1)², (1 + v/ρ2)²)` and its connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
    pub det_g: f64,
    /// `∂_k g_ij` indexed `[k][i][j]`.
    pub dg: [[[f64; 2]; 2]; 2],
    /// `Γ^k_ij` indexed `[k][i][j]`.
    pub christoffel: [[[f64; 2]; 2]; 2],
}

impl MetricPoint {
    pub fn from_sample(s: &PathSample, v: f64, caustic_eps: f64) -> Result<Self> {
        let a = 1.0 + s.lambda1_over_rho1();
        let b = 1.0 + v * s.kappa2;
        if b.abs() <= caustic_eps {
            return Err(Error::Caustic { u: s.u, v, g22: b * b });
        }
        let da = s.dlambda1 * s.kappa1 + s.lambda1 * s.dkappa1;
        let g = [[a * a, 0.0], [0.0, b * b]];
        let mut dg = [[[0.0; 2]; 2]; 2];
        dg[0][0][0] = 2.0 * a * da;
        dg[0][1][1] = 2.0 * b * v * s.dkappa2;
        dg[1][1][1] = 2.0 * b * s.kappa2;
        let ginv = [1.0 / g[0][0], 1.0 / g[1][1]];
        let christoffel = christoffel_from(&ginv, &dg);
        Ok(MetricPoint { g11: g[0][0], g22: g[1][1], g12: 0.0, det_g: g[0][0] * g[1][1], dg, christoffel })
    }
}

/// `Γ^k_ij = ½ g^{kk} (∂_i g_kj + ∂_j g_ik − ∂_k g_ij)` for a diagonal metric.
fn christoffel_from(ginv: &[f64; 2], dg: &[[[f64; 2]; 2]; 2]) -> [[[f64; 2]; 2]; 2] {
    let mut c = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                c[k][i][j] = 0.5 * ginv[k] * (dg[i][k][j] + dg[j][i][k] - dg[k][i][j]);
            }
        }
    }
    c
}

/// How the evolution parameter of local-frame motion is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameMode {
    /// `a(t) = 0`: affinely parametrised geodesics.
    Geodesic,
    /// Speed `ds/dt = P0(u, v)/μ0`, the classical speed at total energy.
    Energy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
    /// Reparametrisation scalar multiplying the velocity in the equation
    /// of motion.
    pub a_t: f64,
}

impl FrameState {
    pub fn new(x1: f64, x2: f64, v1: f64, v2: f64) -> Self {
        FrameState { t: 0.0, x1, x2, v1, v2, a_t: 0.0 }
    }
}

#[derive(Debug, Clone)]
pub struct FrameTrajectory {
    pub states: Vec<FrameState>,
    pub dense: ode::Trajectory<4>,
    /// The run was truncated at a caustic, a classical turning point or
    /// the end of the path.
    pub caustic: bool,
}

impl FrameTrajectory {
    pub fn at(&self, t: f64) -> [f64; 4] {
        self.dense.eval(t)
    }

    pub fn last(&self) -> &FrameState {
        self.states.last().unwrap()
    }
}

struct FrameRhs<'a> {
    path: &'a ReactionPath,
    mode: FrameMode,
}

impl FrameRhs<'_> {
    fn accel(&self, y: &[f64; 4]) -> Result<([f64; 2], f64)> {
        let s = self.path.sample(y[0].clamp(self.path.options.u_min, self.path.options.u_max))?;
        let m = MetricPoint::from_sample(&s, y[1], 0.0)?;
        let vel = [y[2], y[3]];
        let a_t = match self.mode {
            FrameMode::Geodesic => 0.0,
            FrameMode::Energy => {
                let (pot, grad) = self.path.potential_at(s.u, y[1])?;
                let mu = self.path.system.mu0;
                let p02 = 2.0 * mu * (self.path.system.total_energy - pot);
                -mu * dot(grad, vel) / p02
            }
        };
        let mut acc = [0.0; 2];
        for k in 0..2 {
            let mut sum = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    sum += m.christoffel[k][i][j] * vel[i] * vel[j];
                }
            }
            acc[k] = -sum + a_t * vel[k];
        }
        Ok((acc, a_t))
    }
}

/// Integrates `ẍ^k + Γ^k_ij ẋ^i ẋ^j = a(t) ẋ^k` from `initial` to `t_end`.
///
/// In [`FrameMode::Energy`] the initial velocity is rescaled to the
/// classical speed and `a(t) = (d/dt P0)/P0` keeps it there.
pub fn integrate_frame(
    path: &ReactionPath,
    initial: FrameState,
    t_end: f64,
    tol: f64,
    mode: FrameMode,
) -> Result<FrameTrajectory> {
    let mut init = initial;
    let m0 = path.metric_at(init.x1, init.x2)?;
    let speed = (m0.g11 * init.v1 * init.v1 + m0.g22 * init.v2 * init.v2).sqrt();
    if !(speed > 0.0) {
        return Err(Error::domain("initial frame speed must be positive"));
    }
    if mode == FrameMode::Energy {
        let (pot, _) = path.potential_at(init.x1, init.x2)?;
        let target = (2.0 * path.system.mu0 * (path.system.total_energy - pot)).sqrt() / path.system.mu0;
        init.v1 *= target / speed;
        init.v2 *= target / speed;
    }
    integrate_unscaled(path, init, t_end, tol, mode)
}

fn integrate_unscaled(
    path: &ReactionPath,
    init: FrameState,
    t_end: f64,
    tol: f64,
    mode: FrameMode,
) -> Result<FrameTrajectory> {
    let rhs = FrameRhs { path, mode };
    let (u_min, u_max) = path.u_range();
    let eps = path.options.caustic_eps;
    let f = |_t: f64, y: &[f64; 4]| match rhs.accel(y) {
        Ok((acc, _)) => [y[2], y[3], acc[0], acc[1]],
        Err(_) => [f64::NAN; 4],
    };
    let sys = path.system;
    // classical turning point: the energy-mode speed P0/μ0 vanishes there
    let p0_floor = 1e-6 * 2.0 * sys.mu0 * sys.total_energy.abs();
    let guard = |_t: f64, y: &[f64; 4]| {
        if y[0] < u_min || y[0] > u_max {
            return false;
        }
        let inside = path.sample(y[0]).is_ok_and(|s| (1.0 + y[1] * s.kappa2).abs() > eps);
        inside
            && (mode == FrameMode::Geodesic
                || path
                    .potential_at(y[0], y[1])
                    .is_ok_and(|(pot, _)| 2.0 * sys.mu0 * (sys.total_energy - pot) > p0_floor))
    };
    let y0 = [init.x1, init.x2, init.v1, init.v2];
    let opts = ode::Options::with_tol(tol);
    let (dense, outcome) = ode::integrate_guarded(f, init.t, y0, t_end, &opts, guard)?;
    let states = dense
        .t
        .iter()
        .zip(&dense.y)
        .map(|(&t, y)| FrameState {
            t,
            x1: y[0],
            x2: y[1],
            v1: y[2],
            v2: y[3],
            a_t: rhs.accel(y).map_or(f64::NAN, |(_, a)| a),
        })
        .collect();
    Ok(FrameTrajectory { states, dense, caustic: outcome == Outcome::Stopped })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceEstimate {
    /// Mean logarithmic separation growth rate.
    pub exponent: f64,
    /// The reference trajectory was truncated before `t_end`.
    pub partial: bool,
    pub t_reached: f64,
    pub renormalizations: usize,
}

/// Benettin-style separation growth of two frame trajectories offset by
/// `delta0` in the transverse coordinate, renormalised every `interval`.
pub fn divergence_diagnostic(
    path: &ReactionPath,
    initial: FrameState,
    delta0: f64,
    t_end: f64,
    interval: f64,
    mode: FrameMode,
) -> Result<DivergenceEstimate> {
    if !(delta0 > 0.0 && interval > 0.0) {
        return Err(Error::domain("delta0 and renormalisation interval must be positive"));
    }
    let tol = 1e-12;
    // normalise the speed once through the public entry point
    let first = integrate_frame(path, initial, initial.t, tol, mode)?;
    let s0 = first.last();
    let initial = FrameState { a_t: 0.0, ..*s0 };
    let mut a = initial;
    let mut b = FrameState { x2: initial.x2 + delta0, ..initial };
    let mut t = initial.t;
    let mut log_sum = 0.0;
    let mut count = 0;
    while t < t_end - 1e-12 * t_end.abs().max(1.0) {
        let t_next = (t + interval).min(t_end);
        let ta = integrate_unscaled(path, FrameState { t, ..a }, t_next, tol, mode)?;
        let tb = integrate_unscaled(path, FrameState { t, ..b }, t_next, tol, mode)?;
        if ta.caustic || tb.caustic {
            let reached = ta.last().t.min(tb.last().t);
            let elapsed = reached - initial.t;
            return Ok(DivergenceEstimate {
                exponent: if elapsed > 0.0 { log_sum / elapsed } else { 0.0 },
                partial: true,
                t_reached: reached,
                renormalizations: count,
            });
        }
        let (ea, eb) = (ta.last(), tb.last());
        let d = [eb.x1 - ea.x1, eb.x2 - ea.x2, eb.v1 - ea.v1, eb.v2 - ea.v2];
        let dist = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        log_sum += (dist / delta0).ln();
        count += 1;
        a = *ea;
        let scale = delta0 / dist;
        b = FrameState {
            t: t_next,
            x1: ea.x1 + d[0] * scale,
            x2: ea.x2 + d[1] * scale,
            v1: ea.v1 + d[2] * scale,
            v2: ea.v2 + d[3] * scale,
            a_t: 0.0,
        };
        t = t_next;
    }
    Ok(DivergenceEstimate {
        exponent: log_sum / (t - initial.t),
        partial: false,
        t_reached: t,
        renormalizations: count,
    })
}
