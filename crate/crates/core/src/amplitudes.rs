//! Scattering parameters, state-to-state transition probabilities and the
//! semiclassical channel wavefunctions.
//!
//! Two closed forms are available. The parametric-only form depends on the
//! reflection ratio `θ` alone and is written with associated Legendre
//! functions. The general driven-parametric form is evaluated from the
//! two-variable generating function
//!
//! ```text
//! Σ S_mn s^m t^n / sqrt(m! n!) = N exp(A s² + B t² + C s t + D s + E t)
//! ```
//!
//! whose coefficients follow from the Bogoliubov map between in- and
//! out-channel ladder operators, `a_in = U A_out + V A_out† + W`, with
//! `U = e^{iδ1}/sqrt(1 − θ)`, `V = e^{iδ2} sqrt(θ/(1 − θ))` and
//! `W = −i d_∞`. At `θ = 0` the polynomial part reduces to the two-index
//! Hermite polynomial, `|S_mn|² = e^{−ν} |H_mn(b1, −b2)|²/(m! n!)`; the sign
//! of `b2` is what turns `|S_nn|²` into the Laguerre law `e^{−ν} L_n(ν)²`.

use crate::error::{Error, Result};
use crate::oscillator::{DriveSolution, FrequencyProfile, OscillatorSolution};
use crate::quad;
use crate::special::hermite_functions;
use crate::table::{row, sci};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{self, Write};

/// Relative tolerance on `|c1|² − |c2|² = Ω_in/Ω_out` accepted by
/// [`extract_parameters`].
pub const WRONSKIAN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringParameters {
    pub theta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub nu: f64,
    pub beta: f64,
    /// `φ = ½(δ1 + δ2) − β`.
    pub phi: f64,
    pub b1: Complex64,
    pub b2: Complex64,
    pub omega_in: f64,
    pub omega_out: f64,
}

fn arg_or_zero(z: Complex64) -> f64 {
    if z.norm() == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

impl ScatteringParameters {
    /// Builds the parameter set directly from its polar data.
    pub fn new(
        theta: f64,
        delta1: f64,
        delta2: f64,
        nu: f64,
        beta: f64,
        omega_in: f64,
        omega_out: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&theta) {
            return Err(Error::domain(format!("theta must lie in [0, 1), got {theta}")));
        }
        if !(nu >= 0.0) {
            return Err(Error::domain(format!("nu must be non-negative, got {nu}")));
        }
        let phi = 0.5 * (delta1 + delta2) - beta;
        let e = Complex64::from_polar(1.0, phi);
        let b1 = (nu * (1.0 - theta)).sqrt() * e;
        let b2 = -nu.sqrt() * (e.conj() - theta.sqrt() * e);
        Ok(ScatteringParameters { theta, delta1, delta2, nu, beta, phi, b1, b2, omega_in, omega_out })
    }

    /// Parametric-only set (`ν = 0`, zero phases).
    pub fn parametric(theta: f64) -> Result<Self> {
        Self::new(theta, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0)
    }

    /// `c1 = e^{iδ1} (Ω_in/Ω_out)^{1/2} (1 − θ)^{-1/2}`.
    pub fn c1(&self) -> Complex64 {
        Complex64::from_polar((self.omega_in / self.omega_out / (1.0 - self.theta)).sqrt(), self.delta1)
    }

    /// `c2 = e^{iδ2} (Ω_in/Ω_out)^{1/2} (θ/(1 − θ))^{1/2}`.
    pub fn c2(&self) -> Complex64 {
        Complex64::from_polar((self.omega_in / self.omega_out * self.theta / (1.0 - self.theta)).sqrt(), self.delta2)
    }

    /// `d_∞ = sqrt(ν) e^{iβ}`.
    pub fn d_inf(&self) -> Complex64 {
        Complex64::from_polar(self.nu.sqrt(), self.beta)
    }
}

/// Maps the asymptotic constants of `ξ` and the drive integral onto
/// `(θ, δ1, δ2, ν, β)` and the Hermite arguments `b1`, `b2`.
pub fn extract_parameters(
    c1: Complex64,
    c2: Complex64,
    d_inf: Complex64,
    omega_in: f64,
    omega_out: f64,
) -> Result<ScatteringParameters> {
    if !(c1.norm() > 0.0) {
        return Err(Error::domain("c1 must be non-zero"));
    }
    let expected = omega_in / omega_out;
    let wronskian = c1.norm_sqr() - c2.norm_sqr();
    if (wronskian - expected).abs() > WRONSKIAN_TOL * expected {
        return Err(Error::InconsistentConstants { wronskian, expected });
    }
    let theta = (c2 / c1).norm_sqr();
    ScatteringParameters::new(
        theta,
        arg_or_zero(c1),
        arg_or_zero(c2),
        d_inf.norm_sqr(),
        arg_or_zero(d_inf),
        omega_in,
        omega_out,
    )
}

/// Table of two-index Hermite polynomials `H_{m,n}(x, y)` for
/// `m ≤ m_max`, `n ≤ n_max`, defined by
/// `exp(sx + ty − st) = Σ H_{m,n}(x, y) s^m t^n/(m! n!)`.
pub fn complex_hermite_table(m_max: usize, n_max: usize, x: Complex64, y: Complex64) -> Vec<Vec<Complex64>> {
    let mut h = vec![vec![Complex64::new(0.0, 0.0); n_max + 1]; m_max + 1];
    h[0][0] = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        h[0][n] = h[0][n - 1] * y;
    }
    for m in 0..m_max {
        for n in 0..=n_max {
            let lower = if n > 0 { h[m][n - 1] * n as f64 } else { Complex64::new(0.0, 0.0) };
            h[m + 1][n] = x * h[m][n] - lower;
        }
    }
    h
}

pub fn complex_hermite(m: usize, n: usize, x: Complex64, y: Complex64) -> Complex64 {
    complex_hermite_table(m, n, x, y)[m][n]
}

/// Associated Legendre function `P_l^k(x)` on the cut `|x| ≤ 1`, with the
/// Condon–Shortley phase.
pub fn associated_legendre(l: usize, k: usize, x: f64) -> Result<f64> {
    let norm = normalized_legendre(l, k, x)?;
    // undo sqrt((l-k)!/(l+k)!)
    let scale: f64 = ((l - k.min(l) + 1)..=(l + k)).map(|j| j as f64).product::<f64>().sqrt();
    Ok(if k > l { 0.0 } else { norm * scale })
}

/// `sqrt((l − k)!/(l + k)!) P_l^k(x)` by forward recurrence in degree.
pub fn normalized_legendre(l: usize, k: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    if k > l {
        return Ok(0.0);
    }
    let sin = ((1.0 - x) * (1.0 + x)).sqrt();
    let mut pkk = 1.0;
    for j in 1..=k {
        pkk *= -((2 * j - 1) as f64 / (2 * j) as f64).sqrt() * sin;
    }
    if l == k {
        return Ok(pkk);
    }
    let mut prev = pkk;
    let mut cur = x * ((2 * k + 1) as f64).sqrt() * pkk;
    for deg in (k + 1)..l {
        let d = deg as f64;
        let kf = k as f64;
        let next = ((2.0 * d + 1.0) * x * cur - ((d + kf) * (d - kf)).sqrt() * prev)
            / ((d + 1.0 + kf) * (d + 1.0 - kf)).sqrt();
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Parametric-only transition probability
/// `(n_<!/n_>!) sqrt(1 − θ) |P^{(n_> − n_<)/2}_{(n_> + n_<)/2}(sqrt(1 − θ))|²`,
/// zero when `m − n` is odd.
pub fn transition_probability_parametric(theta: f64, m: usize, n: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::domain(format!("theta must lie in [0, 1), got {theta}")));
    }
    if (m + n) % 2 == 1 {
        return Ok(0.0);
    }
    let (lo, hi) = (m.min(n), m.max(n));
    let x = (1.0 - theta).sqrt();
    // (l − k)! = n_<!, (l + k)! = n_>!
    let p = normalized_legendre((hi + lo) / 2, (hi - lo) / 2, x)?;
    Ok(x * p * p)
}

/// Normalisation of the driven transition probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `sqrt(1 − θ)/(m! n!)` with the full generating function; reduces to
    /// the Poisson law of a displaced oscillator at `θ = 0`.
    Factorial,
    /// `((1 − θ)/(m! n!))^{1/2} |H_mn(b1, b2)|² exp[−ν(1 − √θ cos 2φ)]`
    /// taken literally.
    PaperLiteral,
}

impl Normalization {
    pub fn describe(&self) -> &'static str {
        match self {
            Normalization::Factorial => {
                "factorial: W_mn = sqrt(1-theta)/(m! n!) |H_mn|^2 exp(...), generating-function polynomial"
            }
            Normalization::PaperLiteral => {
                "paper-literal: W_mn = ((1-theta)/(m! n!))^(1/2) |H_mn(b1,b2)|^2 exp[-nu(1-sqrt(theta) cos 2 phi)]"
            }
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Factorial => "factorial",
            Normalization::PaperLiteral => "paper-literal",
        })
    }
}

/// S-matrix amplitudes `S_mn`, `m, n ≤ n_max`, from the generating
/// function. Phases follow the interaction-picture channel states and are
/// model-dependent; only the moduli enter the probabilities.
pub fn amplitude_table(params: &ScatteringParameters, n_max: usize) -> Vec<Vec<Complex64>> {
    let theta = params.theta;
    let u = Complex64::from_polar((1.0 - theta).powf(-0.5), params.delta1);
    let v = Complex64::from_polar((theta / (1.0 - theta)).sqrt(), params.delta2);
    let w = -Complex64::i() * params.d_inf();

    let alpha = -v / u;
    let gamma = -w / u;
    let a = alpha * 0.5;
    let b = v.conj() / (u * 2.0);
    let c = u.inv();
    let d = gamma;
    let e = w.conj() - w * v.conj() / u;
    let norm2 = (1.0 - theta).sqrt() * (-(gamma.norm_sqr() + (alpha.conj() * gamma * gamma).re) / (1.0 - theta)).exp();
    let norm = norm2.sqrt();

    let zero = Complex64::new(0.0, 0.0);
    let mut t = vec![vec![zero; n_max + 1]; n_max + 1];
    t[0][0] = Complex64::new(1.0, 0.0);
    for m in 0..n_max {
        let prev = if m > 0 { t[m - 1][0] * (2.0 * (m as f64).sqrt()) * a } else { zero };
        t[m + 1][0] = (prev + d * t[m][0]) / ((m + 1) as f64).sqrt();
    }
    for m in 0..=n_max {
        for n in 0..n_max {
            let mut acc = e * t[m][n];
            if n > 0 {
                acc += b * t[m][n - 1] * (2.0 * (n as f64).sqrt());
            }
            if m > 0 {
                acc += c * t[m - 1][n] * (m as f64).sqrt();
            }
            t[m][n + 1] = acc / ((n + 1) as f64).sqrt();
        }
    }
    for row in &mut t {
        for x in row.iter_mut() {
            *x *= norm;
        }
    }
    t
}

fn literal_probability(params: &ScatteringParameters, m: usize, n: usize) -> f64 {
    let h = complex_hermite(m, n, params.b1, params.b2);
    let fact: f64 = (1..=m).chain(1..=n).map(|j| j as f64).product();
    let exponent = -params.nu * (1.0 - params.theta.sqrt() * (2.0 * params.phi).cos());
    ((1.0 - params.theta) / fact).sqrt() * h.norm_sqr() * exponent.exp()
}

/// `W_mn = |S_mn|²` under the chosen normalisation.
pub fn transition_probability(params: &ScatteringParameters, m: usize, n: usize, norm: Normalization) -> Result<f64> {
    if !(0.0..1.0).contains(&params.theta) {
        return Err(Error::domain(format!("theta must lie in [0, 1), got {}", params.theta)));
    }
    Ok(match norm {
        Normalization::Factorial => amplitude_table(params, m.max(n))[m][n].norm_sqr(),
        Normalization::PaperLiteral => literal_probability(params, m, n),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Hermite,
    Legendre,
    Oracle,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Hermite => "hermite",
            Mode::Legendre => "legendre",
            Mode::Oracle => "oracle",
        })
    }
}

/// Closed-form evaluation route for [`assemble_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedForm {
    Hermite(Normalization),
    Legendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub n_max: usize,
    /// `w[m][n] = W_mn`: probability of `n → m`.
    pub w: Vec<Vec<f64>>,
    pub column_sums: Vec<f64>,
    pub unitarity_defect: f64,
    pub mode: Mode,
    pub normalization: Option<Normalization>,
    /// Model-dependent S-matrix amplitudes, when the route provides them.
    pub amplitudes: Option<Vec<Vec<Complex64>>>,
    pub warnings: Vec<String>,
}

impl TransitionMatrix {
    pub fn from_probabilities(w: Vec<Vec<f64>>, mode: Mode) -> Self {
        let n_max = w.len().saturating_sub(1);
        let column_sums: Vec<f64> = (0..=n_max).map(|n| (0..=n_max).map(|m| w[m][n]).sum()).collect();
        let unitarity_defect = column_sums.iter().map(|s| (1.0 - s).abs()).fold(0.0, f64::max);
        TransitionMatrix {
            n_max,
            w,
            column_sums,
            unitarity_defect,
            mode,
            normalization: None,
            amplitudes: None,
            warnings: Vec::new(),
        }
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.w[m][n]
    }

    /// `|1 − Σ_m W_mn|` for one column.
    pub fn column_defect(&self, n: usize) -> f64 {
        (1.0 - self.column_sums[n]).abs()
    }

    /// Geometric extrapolation of the probability missing beyond `n_max`
    /// in column `n`.
    pub fn tail_estimate(&self, n: usize) -> f64 {
        let col: Vec<f64> = (0..=self.n_max).map(|m| self.w[m][n]).collect();
        let nz: Vec<f64> = col.iter().rev().copied().filter(|&x| x > 0.0).take(3).collect();
        if nz.len() < 3 {
            return nz.first().copied().unwrap_or(0.0);
        }
        let r = (nz[0] / nz[2]).sqrt();
        if r >= 1.0 {
            f64::INFINITY
        } else {
            nz[0] * r / (1.0 - r)
        }
    }

    /// Largest entry-wise difference `|a − b|` and the largest relative
    /// difference `|a − b|/max(|a|, |b|)` over `m, n ≤ limit`.
    pub fn compare(&self, other: &TransitionMatrix, limit: usize) -> (f64, f64) {
        let lim = limit.min(self.n_max).min(other.n_max);
        let mut abs = 0.0f64;
        let mut rel = 0.0f64;
        for m in 0..=lim {
            for n in 0..=lim {
                let (a, b) = (self.w[m][n], other.w[m][n]);
                let diff = (a - b).abs();
                abs = abs.max(diff);
                let scale = a.abs().max(b.abs());
                if scale > 0.0 {
                    rel = rel.max(diff / scale);
                }
            }
        }
        (abs, rel)
    }

    /// Entries `m, n ≤ limit` violating `|a − b| ≤ rel·max(|a|, |b|) + floor`,
    /// as `(m, n, a, b)`, worst relative excess first.
    pub fn mismatches(
        &self,
        other: &TransitionMatrix,
        limit: usize,
        rel: f64,
        floor: f64,
    ) -> Vec<(usize, usize, f64, f64)> {
        let lim = limit.min(self.n_max).min(other.n_max);
        let mut bad = Vec::new();
        for m in 0..=lim {
            for n in 0..=lim {
                let (a, b) = (self.w[m][n], other.w[m][n]);
                let allowed = rel * a.abs().max(b.abs()) + floor;
                if (a - b).abs() > allowed {
                    bad.push(((a - b).abs() / allowed, (m, n, a, b)));
                }
            }
        }
        bad.sort_by(|x, y| y.0.total_cmp(&x.0));
        bad.into_iter().map(|(_, e)| e).collect()
    }

    /// Matrix CSV: `#` metadata lines, header of initial quantum numbers,
    /// one row per final state, then column sums and per-column defects.
    pub fn write_csv<W: Write>(&self, mut out: W, meta: &[(&str, String)]) -> io::Result<()> {
        for (k, v) in meta {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "# mode={}", self.mode)?;
        writeln!(out, "# normalization={}", self.normalization.map_or("none".to_string(), |n| n.to_string()))?;
        let header: Vec<String> = (0..=self.n_max).map(|n| n.to_string()).collect();
        writeln!(out, "m\\n,{}", header.join(","))?;
        for (m, r) in self.w.iter().enumerate() {
            writeln!(out, "{m},{}", row(r))?;
        }
        writeln!(out, "column_sum,{}", row(&self.column_sums))?;
        let defects: Vec<f64> = (0..=self.n_max).map(|n| self.column_defect(n)).collect();
        writeln!(out, "unitarity_defect,{}", row(&defects))?;
        writeln!(out, "# max_unitarity_defect={}", sci(self.unitarity_defect))?;
        Ok(())
    }
}

/// Fills `W` for `m, n ≤ n_max` through a closed form and checks its
/// column sums against the extrapolated truncation tail.
pub fn assemble_matrix(params: &ScatteringParameters, n_max: usize, route: ClosedForm) -> Result<TransitionMatrix> {
    let mut tm = match route {
        ClosedForm::Legendre => {
            let mut w = vec![vec![0.0; n_max + 1]; n_max + 1];
            for (m, r) in w.iter_mut().enumerate() {
                for (n, x) in r.iter_mut().enumerate() {
                    *x = transition_probability_parametric(params.theta, m, n)?;
                }
            }
            TransitionMatrix::from_probabilities(w, Mode::Legendre)
        }
        ClosedForm::Hermite(norm) => {
            if !(0.0..1.0).contains(&params.theta) {
                return Err(Error::domain(format!("theta must lie in [0, 1), got {}", params.theta)));
            }
            match norm {
                Normalization::Factorial => {
                    let amps = amplitude_table(params, n_max);
                    let w = amps.iter().map(|r| r.iter().map(|a| a.norm_sqr()).collect()).collect();
                    let mut tm = TransitionMatrix::from_probabilities(w, Mode::Hermite);
                    tm.amplitudes = Some(amps);
                    tm.normalization = Some(norm);
                    tm
                }
                Normalization::PaperLiteral => {
                    let w =
                        (0..=n_max).map(|m| (0..=n_max).map(|n| literal_probability(params, m, n)).collect()).collect();
                    let mut tm = TransitionMatrix::from_probabilities(w, Mode::Hermite);
                    tm.normalization = Some(norm);
                    tm
                }
            }
        }
    };
    for n in 0..=n_max {
        let defect = tm.column_defect(n);
        let tail = tm.tail_estimate(n);
        if defect > 10.0 * tail + 1e-12 {
            tm.warnings.push(format!(
                "column {n}: unitarity defect {defect:.3e} exceeds the estimated truncation tail {tail:.3e}"
            ));
        }
    }
    Ok(tm)
}

/// Semiclassical channel wavefunction `Ψ̃⁺(n; z, τ)` on a grid.
#[derive(Debug, Clone)]
pub struct SemiclassicalState {
    pub n: usize,
    /// `E_v^i = Ω_in (n + ½)`.
    pub e_v: f64,
    pub tau: f64,
    pub z_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Classical action `E_k^i τ + ∫ (½η̇² − ½Ω²η² + Fη) dτ'`.
    pub s_cl: f64,
    /// z-independent part of the effective action, `S_cl` minus the
    /// regularised vibrational phase.
    pub s_eff: f64,
}

impl SemiclassicalState {
    /// `∫ |Ψ|² dz` by the trapezoid rule (uniform grid assumed).
    pub fn norm(&self) -> f64 {
        let dz = self.z_grid.get(1).map_or(0.0, |z| z - self.z_grid[0]);
        let dens: Vec<f64> = self.values.iter().map(|v| v.norm_sqr()).collect();
        quad::trapezoid(&dens, dz)
    }
}

/// Evaluates
/// `Ψ̃⁺ = [(Ω_in/π)^{1/2}/(2^n n! |ξ|)]^{1/2} exp(iS_eff) H_n(√Ω_in (z − η)/|ξ|)` with
/// `S_eff = S_cl − E_v ∫(|ξ|^{-2} − 1)dτ' + η̇(z − η) + ½ (ξ̇/ξ)(z − η)²`.
///
/// Integrals run from the start of the profile, where the state reduces to
/// the in-channel eigenfunction with phase `E_k^i τ`.
pub fn evaluate_wavefunction(
    profile: &FrequencyProfile,
    solution: &OscillatorSolution,
    drive: Option<&DriveSolution>,
    n: usize,
    tau: f64,
    z_grid: &[f64],
) -> Result<SemiclassicalState> {
    let wi = solution.omega_in;
    let (xi, xid) = solution.xi_at(tau);
    let mod_xi = xi.norm();
    if !(mod_xi > 1e-300) {
        return Err(Error::FocalPoint { tau });
    }
    let t0 = profile.tau_in();
    let tol = 1e-13 * (tau - t0).abs().max(1.0);
    let vib =
        if tau > t0 { quad::adaptive(|t| solution.xi_at(t).0.norm_sqr().recip() - 1.0, t0, tau, tol) } else { 0.0 };
    let (eta, eta_dot, action) = match drive {
        Some(dr) if dr.nu() > 0.0 || dr.eta.iter().any(|&e| e != 0.0) => {
            let (eta, eta_dot, _) = dr.at(solution, profile, tau);
            let lagrangian = |t: f64| {
                let (e, ed, _) = dr.at(solution, profile, t);
                0.5 * ed * ed - 0.5 * profile.omega2_at(t) * e * e + profile.force_at(t) * e
            };
            let action = if tau > t0 { quad::adaptive(lagrangian, t0, tau, tol) } else { 0.0 };
            (eta, eta_dot, action)
        }
        _ => (0.0, 0.0, 0.0),
    };
    let e_v = wi * (n as f64 + 0.5);
    let s_cl = profile.e_kin * tau + action;
    let s_eff = s_cl - e_v * vib;
    let chirp = (xid / xi).re;
    let amp = (wi.sqrt() / mod_xi).sqrt();
    let values = z_grid
        .iter()
        .map(|&z| {
            let x = z - eta;
            let psi = hermite_functions(n, wi.sqrt() * x / mod_xi)[n];
            let phase = s_eff + eta_dot * x + 0.5 * chirp * x * x;
            Complex64::from_polar(amp * psi, phase)
        })
        .collect();
    Ok(SemiclassicalState { n, e_v, tau, z_grid: z_grid.to_vec(), values, s_cl, s_eff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_base_cases() {
        let x = Complex64::new(0.3, -1.2);
        let y = Complex64::new(-0.7, 0.4);
        assert_eq!(complex_hermite(0, 0, x, y), Complex64::new(1.0, 0.0));
        assert!((complex_hermite(1, 1, x, y) - (x * y - 1.0)).norm() < 1e-15);
        assert!((complex_hermite(3, 0, x, y) - x * x * x).norm() < 1e-14);
        assert!((complex_hermite(0, 2, x, y) - y * y).norm() < 1e-15);
    }

    #[test]
    fn legendre_closed_forms() {
        let x = 0.6f64;
        let s = (1.0 - x * x).sqrt();
        assert!((associated_legendre(1, 1, x).unwrap() + s).abs() < 1e-15);
        assert!((associated_legendre(2, 1, x).unwrap() + 3.0 * x * s).abs() < 1e-14);
        assert!((associated_legendre(3, 2, x).unwrap() - 15.0 * x * (1.0 - x * x)).abs() < 1e-13);
        assert!((associated_legendre(4, 2, x).unwrap() - 7.5 * (7.0 * x * x - 1.0) * (1.0 - x * x)).abs() < 1e-13);
        assert!(associated_legendre(2, 0, 1.5).is_err());
    }

    #[test]
    fn parametric_identity_at_zero_theta() {
        for m in 0..=10 {
            for n in 0..=10 {
                let w = transition_probability_parametric(0.0, m, n).unwrap();
                assert_eq!(w, if m == n { 1.0 } else { 0.0 }, "({m},{n})");
            }
        }
    }

    #[test]
    fn parametric_examples() {
        let w00 = transition_probability_parametric(0.5, 0, 0).unwrap();
        assert!((w00 - 0.5f64.sqrt()).abs() < 1e-15);
        // ½ θ sqrt(1 − θ) from |P_1^1|² = θ
        let w20 = transition_probability_parametric(0.5, 2, 0).unwrap();
        assert!((w20 - 0.1767766952966369).abs() < 1e-15);
        assert!(transition_probability_parametric(1.0, 0, 0).is_err());
        assert!(transition_probability_parametric(-0.1, 0, 0).is_err());
    }

    #[test]
    fn extract_trivial_and_polar() {
        let p = extract_parameters(
            Complex64::new(0.5f64.sqrt(), 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            1.0,
            2.0,
        )
        .unwrap();
        assert_eq!((p.theta, p.nu, p.delta1), (0.0, 0.0, 0.0));
        let q =
            extract_parameters(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.6, 0.8), 1.0, 1.0)
                .unwrap();
        assert!((q.nu - 1.0).abs() < 1e-15);
        assert!((q.beta - 0.8f64.atan2(0.6)).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_constants_rejected() {
        let r =
            extract_parameters(Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0), 1.0, 1.0);
        assert!(matches!(r, Err(Error::InconsistentConstants { .. })));
    }

    fn fact(n: usize) -> f64 {
        (1..=n).map(|j| j as f64).product()
    }

    #[test]
    fn generating_function_matches_legendre_without_drive() {
        for &theta in &[0.05, 0.3, 0.5, 0.8] {
            let p = ScatteringParameters::new(theta, 0.4, -1.1, 0.0, 0.0, 1.0, 2.0).unwrap();
            let t = amplitude_table(&p, 12);
            for m in 0..=12 {
                for n in 0..=12 {
                    let leg = transition_probability_parametric(theta, m, n).unwrap();
                    assert!((t[m][n].norm_sqr() - leg).abs() < 1e-13, "theta={theta} ({m},{n})");
                }
            }
        }
    }

    #[test]
    fn generating_function_matches_hermite_without_squeezing() {
        let p = ScatteringParameters::new(0.0, 0.3, 0.0, 0.7, 1.2, 1.0, 1.0).unwrap();
        let t = amplitude_table(&p, 8);
        for m in 0..=8 {
            for n in 0..=8 {
                // the Laguerre law of a displaced oscillator needs the sign of b2 flipped
                let h = complex_hermite(m, n, p.b1, -p.b2);
                let expected = (-p.nu).exp() * h.norm_sqr() / (fact(m) * fact(n));
                assert!((t[m][n].norm_sqr() - expected).abs() < 1e-14, "({m},{n})");
            }
        }
        // ground state goes to a Poisson distribution
        for m in 0..=8 {
            let poisson = (-0.7f64).exp() * 0.7f64.powi(m as i32) / fact(m);
            assert!((t[m][0].norm_sqr() - poisson).abs() < 1e-15);
        }
    }

    #[test]
    fn literal_convention_fails_poisson_limit() {
        let p = ScatteringParameters::new(0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let lit = transition_probability(&p, 2, 0, Normalization::PaperLiteral).unwrap();
        let fac = transition_probability(&p, 2, 0, Normalization::Factorial).unwrap();
        assert!((fac - (-1.0f64).exp() / 2.0).abs() < 1e-15);
        assert!((lit - (-1.0f64).exp() / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn driven_squeezed_columns_converge() {
        let p = ScatteringParameters::new(0.2, 0.5, 1.7, 0.6, -0.4, 1.0, 1.5).unwrap();
        let t = amplitude_table(&p, 80);
        for n in 0..=5 {
            let s: f64 = (0..=80).map(|m| t[m][n].norm_sqr()).sum();
            assert!((s - 1.0).abs() < 1e-10, "column {n}: {s}");
        }
    }

    #[test]
    fn parametric_reciprocity_and_parity() {
        let tm = assemble_matrix(&ScatteringParameters::parametric(0.4).unwrap(), 10, ClosedForm::Legendre).unwrap();
        for m in 0..=10 {
            for n in 0..=10 {
                assert_eq!(tm.get(m, n), tm.get(n, m));
                if (m + n) % 2 == 1 {
                    assert_eq!(tm.get(m, n), 0.0);
                }
            }
        }
    }

    #[test]
    fn csv_layout() {
        let tm = assemble_matrix(&ScatteringParameters::parametric(0.1).unwrap(), 2, ClosedForm::Legendre).unwrap();
        let mut buf = Vec::new();
        tm.write_csv(&mut buf, &[("theta", sci(0.1))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# theta=1.00000000000e-1");
        assert!(lines.iter().any(|l| l.starts_with("m\\n,0,1,2")));
        assert!(lines.iter().any(|l| l.starts_with("column_sum,")));
        assert!(lines.iter().any(|l| l.starts_with("unitarity_defect,")));
    }

    #[test]
    fn identity_matrix_without_coupling() {
        let p = ScatteringParameters::parametric(0.0).unwrap();
        for route in [ClosedForm::Legendre, ClosedForm::Hermite(Normalization::Factorial)] {
            let tm = assemble_matrix(&p, 7, route).unwrap();
            assert_eq!(tm.unitarity_defect, 0.0);
            for m in 0..=7 {
                for n in 0..=7 {
                    assert!((tm.get(m, n) - f64::from(m == n)).abs() < 1e-15);
                }
            }
        }
    }
}
