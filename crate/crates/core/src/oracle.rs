//! Direct propagation of the reduced oscillator equation
//!
//! ```text
//! i ∂_τ ψ = [−½ ∂_z² + ½ Ω²(τ) z² − F(τ) z] ψ
//! ```
//!
//! in scaled units (`ħ = 1`, unit mass in `z`), with `z` the transverse
//! coordinate already scaled by `(ħE_k)^{-1/2} p` and `τ` the internal
//! time. S-matrix elements are overlaps of the propagated state with the
//! out-channel eigenstates, so `W_mn = |⟨φ_m^out|ψ_n(τ_out)⟩|²`.
//!
//! Time stepping is Strang split-operator: half a potential kick, a full
//! kinetic step in Fourier space, half a kick, with the potential taken at
//! the step midpoint. Steps are aligned to discontinuities of `Ω²`.

use crate::amplitudes::{Mode, TransitionMatrix};
use crate::error::{Error, Result};
use crate::oscillator::FrequencyProfile;
use crate::special::oscillator_states;
use crate::table::sci;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::Arc;

/// Largest `|ψ|` tolerated at the box edges.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Largest relative norm drift tolerated over a propagation.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub z_min: f64,
    pub z_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(z_min: f64, z_max: f64, points: usize) -> Result<Self> {
        if !(z_max > z_min) || points < 16 {
            return Err(Error::domain(format!("bad grid [{z_min}, {z_max}] with {points} points")));
        }
        Ok(GridSpec { z_min, z_max, points })
    }

    /// `z ∈ [−12, 12]/sqrt(Ω_min)` on 2048 points.
    pub fn default_for(profile: &FrequencyProfile) -> Self {
        let half = 12.0 / profile.omega_min().sqrt();
        GridSpec { z_min: -half, z_max: half, points: 2048 }
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.points as f64
    }

    /// Periodic grid: the right edge `z_max` is not a node.
    pub fn nodes(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.points).map(|i| self.z_min + i as f64 * dz).collect()
    }

    pub fn refined(&self) -> Self {
        GridSpec { points: 2 * self.points, ..*self }
    }
}

/// Step satisfying `Ω_max · dt ≤ 0.01`.
pub fn default_dt(profile: &FrequencyProfile) -> f64 {
    0.01 / profile.omega_max()
}

#[derive(Debug, Clone)]
pub struct GridWavefunction {
    pub z_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub tau: f64,
    pub norm: f64,
    pub steps: usize,
    /// Largest `|ψ|` seen at either box edge during the run.
    pub max_edge: f64,
}

impl GridWavefunction {
    pub fn dz(&self) -> f64 {
        self.z_grid[1] - self.z_grid[0]
    }

    /// `∫ φ(z) ψ(z) dz` for a real state sampled on the same grid.
    pub fn overlap(&self, state: &[f64]) -> Complex64 {
        self.values.iter().zip(state).map(|(v, s)| v * s).sum::<Complex64>() * self.dz()
    }

    /// `∫ conj(other) ψ dz`.
    pub fn inner(&self, other: &GridWavefunction) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| b.conj() * a).sum::<Complex64>() * self.dz()
    }

    /// Rows `tau,z,re_psi,im_psi`.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (z, v) in self.z_grid.iter().zip(&self.values) {
            writeln!(out, "{},{},{},{}", sci(self.tau), sci(*z), sci(v.re), sci(v.im))?;
        }
        Ok(())
    }
}

fn norm_of(values: &[Complex64], dz: f64) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dz
}

struct Stepper {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    z: Vec<f64>,
    k2: Vec<f64>,
}

impl Stepper {
    fn new(grid: &GridSpec) -> Self {
        let n = grid.points;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let l = grid.z_max - grid.z_min;
        let k2 = (0..n)
            .map(|j| {
                let f = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                let k = 2.0 * PI * f / l;
                k * k
            })
            .collect();
        Stepper { fwd, inv, scratch: vec![Complex64::new(0.0, 0.0); len], z: grid.nodes(), k2 }
    }

    /// Kinetic propagator `exp(−i k² h/2)/N` for one step length.
    fn kinetic(&self, h: f64) -> Vec<Complex64> {
        let n = self.k2.len() as f64;
        self.k2.iter().map(|k2| Complex64::from_polar(1.0 / n, -0.5 * k2 * h)).collect()
    }

    fn kick(&self, psi: &mut [Complex64], omega2: f64, force: f64, h: f64) {
        for (v, &z) in psi.iter_mut().zip(&self.z) {
            let pot = 0.5 * omega2 * z * z - force * z;
            *v *= Complex64::from_polar(1.0, -pot * h);
        }
    }

    fn step(&mut self, psi: &mut [Complex64], omega2: f64, force: f64, h: f64, kin: &[Complex64]) {
        self.kick(psi, omega2, force, 0.5 * h);
        self.fwd.process_with_scratch(psi, &mut self.scratch);
        for (v, k) in psi.iter_mut().zip(kin) {
            *v *= k;
        }
        self.inv.process_with_scratch(psi, &mut self.scratch);
        self.kick(psi, omega2, force, 0.5 * h);
    }
}

/// Propagates the `n_in`-th `Ω_in` eigenstate from `τ_in` to `τ_out`.
pub fn propagate(profile: &FrequencyProfile, n_in: usize, grid: &GridSpec, dt: f64) -> Result<GridWavefunction> {
    propagate_observed(profile, n_in, grid, dt, 0, |_| {})
}

/// As [`propagate`], handing the state to `observer` every `stride`
/// steps (never when `stride` is 0) and at the end.
pub fn propagate_observed<F: FnMut(&GridWavefunction)>(
    profile: &FrequencyProfile,
    n_in: usize,
    grid: &GridSpec,
    dt: f64,
    stride: usize,
    mut observer: F,
) -> Result<GridWavefunction> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    let z = grid.nodes();
    let dz = grid.dz();
    let initial = oscillator_states(n_in, profile.omega_in, &z).pop().expect("at least one state");
    let mut wf = GridWavefunction {
        values: initial.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        z_grid: z,
        tau: profile.tau_in(),
        norm: 0.0,
        steps: 0,
        max_edge: 0.0,
    };
    let norm0 = norm_of(&wf.values, dz);
    wf.norm = norm0;
    let mut stepper = Stepper::new(grid);

    let mut cuts = vec![profile.tau_in()];
    cuts.extend(profile.breakpoints());
    cuts.push(profile.tau_out());
    let n_pts = grid.points;
    let check_every = 64;
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let count = ((b - a) / dt).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        let kin = stepper.kinetic(h);
        for i in 0..count {
            let mid = a + (i as f64 + 0.5) * h;
            stepper.step(&mut wf.values, profile.omega2_at(mid), profile.force_at(mid), h, &kin);
            wf.steps += 1;
            wf.tau = a + (i + 1) as f64 * h;
            let last = i + 1 == count;
            if wf.steps.is_multiple_of(check_every) || last {
                let edge = wf.values[0].norm().max(wf.values[n_pts - 1].norm());
                wf.max_edge = wf.max_edge.max(edge);
                if edge > BOUNDARY_TOL {
                    return Err(Error::GridTooSmall { edge });
                }
            }
            if stride > 0 && wf.steps.is_multiple_of(stride) {
                wf.norm = norm_of(&wf.values, dz);
                observer(&wf);
            }
        }
    }
    wf.tau = profile.tau_out();
    wf.norm = norm_of(&wf.values, dz);
    let drift = (wf.norm - norm0).abs() / norm0;
    if drift > NORM_TOL {
        return Err(Error::NonunitaryStep { drift });
    }
    observer(&wf);
    Ok(wf)
}

/// Oracle transition matrix for `m, n ≤ n_max`. Each initial state is
/// propagated independently and in parallel.
pub fn oracle_matrix(profile: &FrequencyProfile, n_max: usize, grid: &GridSpec, dt: f64) -> Result<TransitionMatrix> {
    let z = grid.nodes();
    let out_states = oscillator_states(n_max, profile.omega_out, &z);
    check_orthonormal(&out_states, grid.dz())?;
    let columns: Vec<Vec<Complex64>> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let wf = propagate(profile, n, grid, dt)?;
            Ok(out_states.iter().map(|s| wf.overlap(s)).collect())
        })
        .collect::<Result<_>>()?;
    let amps: Vec<Vec<Complex64>> = (0..=n_max).map(|m| (0..=n_max).map(|n| columns[n][m]).collect()).collect();
    let w = amps.iter().map(|r| r.iter().map(|a| a.norm_sqr()).collect()).collect();
    let mut tm = TransitionMatrix::from_probabilities(w, Mode::Oracle);
    tm.amplitudes = Some(amps);
    Ok(tm)
}

fn check_orthonormal(states: &[Vec<f64>], dz: f64) -> Result<()> {
    for (m, a) in states.iter().enumerate() {
        for b in &states[..=m] {
            let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dz;
            let expect = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
            if (ip - expect).abs() > 1e-10 {
                return Err(Error::domain(format!(
                    "out-channel eigenstates not orthonormal on the grid (defect {:.3e}); widen or refine it",
                    (ip - expect).abs()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{ForceShape, Omega2Shape};

    fn constant(omega: f64) -> FrequencyProfile {
        FrequencyProfile::analytic(Omega2Shape::Constant { omega }, ForceShape::Zero, Some((-3.0, 3.0)), 601).unwrap()
    }

    fn step_profile() -> FrequencyProfile {
        FrequencyProfile::analytic(
            Omega2Shape::Step { omega_in: 1.0, omega_out: 2.0, at: 0.0 },
            ForceShape::Zero,
            Some((-1.0, 1.0)),
            201,
        )
        .unwrap()
    }

    #[test]
    fn stationary_state_is_preserved() {
        let p = constant(1.3);
        let g = GridSpec::default_for(&p);
        let wf = propagate(&p, 0, &g, default_dt(&p)).unwrap();
        let s0 = oscillator_states(0, 1.3, &g.nodes()).pop().unwrap();
        assert!(1.0 - wf.overlap(&s0).norm() < 1e-8);
        assert!((wf.norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sudden_jump_ground_state_overlap() {
        let p = step_profile();
        let g = GridSpec::default_for(&p);
        let wf = propagate(&p, 0, &g, default_dt(&p)).unwrap();
        let s0 = oscillator_states(0, 2.0, &g.nodes()).pop().unwrap();
        let p00 = wf.overlap(&s0).norm_sqr();
        assert!((p00 - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-5, "{p00}");
    }

    #[test]
    fn second_order_in_dt() {
        let p = FrequencyProfile::analytic(
            Omega2Shape::Tanh { omega_in: 1.0, omega_out: 2.0, width: 0.5, center: 0.0 },
            ForceShape::Gaussian { amplitude: 0.5, width: 0.7, center: 0.0 },
            Some((-6.0, 6.0)),
            601,
        )
        .unwrap();
        let g = GridSpec { z_min: -10.0, z_max: 10.0, points: 512 };
        let reference = propagate(&p, 1, &g, 0.00125).unwrap();
        let err = |dt: f64| {
            let wf = propagate(&p, 1, &g, dt).unwrap();
            wf.values.iter().zip(&reference.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        let (e1, e2) = (err(0.04), err(0.02));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn narrow_box_is_rejected() {
        let p = constant(1.0);
        let g = GridSpec::new(-3.0, 3.0, 256).unwrap();
        assert!(matches!(propagate(&p, 0, &g, 0.01), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn constant_frequency_gives_identity() {
        let p = constant(1.0);
        let g = GridSpec::default_for(&p);
        let tm = oracle_matrix(&p, 6, &g, default_dt(&p)).unwrap();
        for m in 0..=6 {
            for n in 0..=6 {
                assert!((tm.get(m, n) - f64::from(m == n)).abs() < 1e-8, "({m},{n})");
            }
        }
    }

    #[test]
    fn snapshots_follow_stride() {
        let p = constant(1.0);
        let g = GridSpec { z_min: -12.0, z_max: 12.0, points: 256 };
        let mut taus = Vec::new();
        propagate_observed(&p, 0, &g, 0.1, 20, |wf| taus.push(wf.tau)).unwrap();
        assert_eq!(taus.len(), 4);
        let mut buf = Vec::new();
        propagate(&p, 0, &g, 0.1).unwrap().write_snapshot(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 256);
    }
}
