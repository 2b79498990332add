//! Collision system and model potential surfaces in mass-scaled
//! coordinates `(x, y)`.

use crate::error::{Error, Result};
use crate::spline::Bicubic;
use serde::{Deserialize, Serialize};

/// `sqrt(mA mB mC / (mA + mB + mC))`.
pub fn reduced_mass(m_a: f64, m_b: f64, m_c: f64) -> Result<f64> {
    if !(m_a > 0.0 && m_b > 0.0 && m_c > 0.0) {
        return Err(Error::domain(format!("masses must be positive, got ({m_a}, {m_b}, {m_c})")));
    }
    Ok((m_a * m_b * m_c / (m_a + m_b + m_c)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionSystem {
    pub m_a: f64,
    pub m_b: f64,
    pub m_c: f64,
    /// Total energy `E`.
    pub total_energy: f64,
    /// Initial translational energy `E_k^i`.
    pub collision_energy: f64,
    pub mu0: f64,
    pub hbar: f64,
}

impl CollisionSystem {
    pub fn new(m_a: f64, m_b: f64, m_c: f64, total_energy: f64, collision_energy: f64) -> Result<Self> {
        let mu0 = reduced_mass(m_a, m_b, m_c)?;
        let sys = CollisionSystem { m_a, m_b, m_c, total_energy, collision_energy, mu0, hbar: 1.0 };
        sys.validate()?;
        Ok(sys)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    /// Same system at another collision energy; the internal energy
    /// `E - E_k^i` is kept.
    pub fn at_collision_energy(&self, collision_energy: f64) -> Result<Self> {
        let mut s = *self;
        s.total_energy += collision_energy - self.collision_energy;
        s.collision_energy = collision_energy;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) {
            return Err(Error::domain("hbar must be positive"));
        }
        if !(self.collision_energy > 0.0 && self.collision_energy <= self.total_energy) {
            return Err(Error::domain(format!(
                "need 0 < E_k^i <= E, got E_k^i = {}, E = {}",
                self.collision_energy, self.total_energy
            )));
        }
        Ok(())
    }

    /// Asymptotic momentum `p_- = sqrt(2 mu0 E_k^i)`.
    pub fn p_minus(&self) -> f64 {
        (2.0 * self.mu0 * self.collision_energy).sqrt()
    }
}

/// Potential value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

#[derive(Debug, Clone)]
pub enum PotentialSurface {
    /// `V = ½ ω² y²`.
    FlatChannel {
        omega: f64,
    },
    /// `V = B(x) + ½ μ0 ω(x)² y²` with `ω(x) = ω_in + (ω_out − ω_in) σ(x/L)`,
    /// `σ(s) = (1 + tanh s)/2` and Eckart bump `B = h sech²(x/w)`.
    TwoChannelHarmonic(TwoChannel),
    Tabulated(Bicubic),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoChannel {
    pub mu0: f64,
    pub omega_in: f64,
    pub omega_out: f64,
    pub switch_length: f64,
    pub barrier_height: f64,
    pub barrier_width: f64,
}

impl TwoChannel {
    /// `ω(x)` and its first two derivatives.
    pub fn omega(&self, x: f64) -> (f64, f64, f64) {
        let l = self.switch_length;
        let delta = self.omega_out - self.omega_in;
        let t = (x / l).tanh();
        let sech2 = 1.0 - t * t;
        (self.omega_in + delta * 0.5 * (1.0 + t), delta * 0.5 * sech2 / l, -delta * t * sech2 / (l * l))
    }

    /// Barrier `B(x)` and its first two derivatives.
    pub fn barrier(&self, x: f64) -> (f64, f64, f64) {
        if self.barrier_height == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let (h, w) = (self.barrier_height, self.barrier_width);
        let t = (x / w).tanh();
        let sech2 = 1.0 - t * t;
        (h * sech2, -2.0 * h * sech2 * t / w, -2.0 * h * sech2 * (1.0 - 3.0 * t * t) / (w * w))
    }
}

impl PotentialSurface {
    pub fn flat_channel(omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::domain("flat-channel omega must be positive"));
        }
        Ok(PotentialSurface::FlatChannel { omega })
    }

    pub fn two_channel(params: TwoChannel) -> Result<Self> {
        if !(params.omega_in > 0.0 && params.omega_out > 0.0) {
            return Err(Error::domain("channel frequencies must be positive"));
        }
        if !(params.switch_length > 0.0 && params.barrier_width > 0.0 && params.mu0 > 0.0) {
            return Err(Error::domain("switch length, barrier width and mu0 must be positive"));
        }
        Ok(PotentialSurface::TwoChannelHarmonic(params))
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>, values: &[Vec<f64>]) -> Result<Self> {
        Ok(PotentialSurface::Tabulated(Bicubic::new(xs, ys, values)?))
    }

    pub fn family(&self) -> &'static str {
        match self {
            PotentialSurface::FlatChannel { .. } => "flat-channel",
            PotentialSurface::TwoChannelHarmonic(_) => "two-channel-harmonic",
            PotentialSurface::Tabulated(_) => "custom-tabulated",
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            PotentialSurface::Tabulated(b) => b.contains(x, y),
            _ => x.is_finite() && y.is_finite(),
        }
    }

    /// Range of `x` on which the surface is declared.
    pub fn x_range(&self) -> (f64, f64) {
        match self {
            PotentialSurface::Tabulated(b) => b.x_range(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn evaluate(&self, x: f64, y: f64) -> Result<Jet> {
        if !self.contains(x, y) {
            return Err(Error::domain(format!("point ({x}, {y}) outside the {} surface domain", self.family())));
        }
        Ok(match self {
            PotentialSurface::FlatChannel { omega } => {
                let k = omega * omega;
                Jet { value: 0.5 * k * y * y, grad: [0.0, k * y], hess: [[0.0, 0.0], [0.0, k]] }
            }
            PotentialSurface::TwoChannelHarmonic(tc) => {
                let (w, w1, w2) = tc.omega(x);
                let (b, b1, b2) = tc.barrier(x);
                let q = w * w;
                let q1 = 2.0 * w * w1;
                let q2 = 2.0 * (w1 * w1 + w * w2);
                let m = tc.mu0;
                Jet {
                    value: b + 0.5 * m * q * y * y,
                    grad: [b1 + 0.5 * m * q1 * y * y, m * q * y],
                    hess: [[b2 + 0.5 * m * q2 * y * y, m * q1 * y], [m * q1 * y, m * q]],
                }
            }
            PotentialSurface::Tabulated(b) => {
                let (value, grad, hess) = b.eval(x, y);
                Jet { value, grad, hess }
            }
        })
    }

    /// Location and height of the barrier top along the valley floor, when
    /// the family has one in closed form.
    pub fn barrier_top(&self) -> Option<(f64, f64)> {
        match self {
            PotentialSurface::TwoChannelHarmonic(tc) if tc.barrier_height != 0.0 => Some((0.0, tc.barrier_height)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_channel() -> PotentialSurface {
        PotentialSurface::two_channel(TwoChannel {
            mu0: 0.8,
            omega_in: 1.0,
            omega_out: 2.0,
            switch_length: 1.5,
            barrier_height: 0.3,
            barrier_width: 0.9,
        })
        .unwrap()
    }

    #[test]
    fn reduced_mass_examples() {
        assert!((reduced_mass(1.0, 1.0, 1.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((reduced_mass(1.0, 2.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((reduced_mass(2.0, 2.0, 2.0).unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(reduced_mass(0.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(reduced_mass(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn system_rejects_energy_above_total() {
        assert!(CollisionSystem::new(1.0, 1.0, 1.0, 1.0, 2.0).is_err());
        assert!(CollisionSystem::new(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        let s = CollisionSystem::new(1.0, 2.0, 3.0, 3.0, 2.0).unwrap();
        let t = s.at_collision_energy(1.0).unwrap();
        assert_eq!(t.total_energy, 2.0);
    }

    #[test]
    fn flat_channel_minimum() {
        let s = PotentialSurface::flat_channel(2.0).unwrap();
        let j = s.evaluate(5.0, 0.0).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, [0.0, 0.0]);
        assert_eq!(j.hess, [[0.0, 0.0], [0.0, 4.0]]);
    }

    #[test]
    fn two_channel_in_asymptote() {
        let s = PotentialSurface::two_channel(TwoChannel {
            mu0: 0.8,
            omega_in: 1.3,
            omega_out: 2.0,
            switch_length: 1.0,
            barrier_height: 0.0,
            barrier_width: 1.0,
        })
        .unwrap();
        let j = s.evaluate(-60.0, 0.0).unwrap();
        assert_eq!(j.value, 0.0);
        assert!((j.hess[1][1] - 0.8 * 1.3 * 1.3).abs() < 1e-14);
    }

    #[test]
    fn tabulated_domain_is_enforced() {
        let xs = vec![0.0, 1.0, 2.0];
        let ys = vec![-1.0, 0.0, 1.0];
        let vals = vec![vec![1.0, 0.0, 1.0]; 3];
        let s = PotentialSurface::tabulated(xs, ys, &vals).unwrap();
        assert!(s.evaluate(1.0, 0.5).is_ok());
        assert!(matches!(s.evaluate(3.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn analytic_gradient_matches_central_difference() {
        let s = two_channel();
        let h = 1e-5;
        for &(x, y) in &[(-1.2, 0.3), (0.1, -0.7), (2.5, 1.1), (0.0, 0.0)] {
            let j = s.evaluate(x, y).unwrap();
            let fx = (s.evaluate(x + h, y).unwrap().value - s.evaluate(x - h, y).unwrap().value) / (2.0 * h);
            let fy = (s.evaluate(x, y + h).unwrap().value - s.evaluate(x, y - h).unwrap().value) / (2.0 * h);
            let scale = j.grad[0].abs().max(j.grad[1].abs()).max(1e-3);
            assert!((fx - j.grad[0]).abs() / scale < 1e-6);
            assert!((fy - j.grad[1]).abs() / scale < 1e-6);
        }
    }
}
