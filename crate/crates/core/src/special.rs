//! Normalised Hermite functions by three-term recurrence.

use std::f64::consts::PI;

/// `ψ_0..=ψ_{n_max}` at `x`, where `ψ_n(x) = (2^n n! √π)^{-1/2} H_n(x) e^{-x²/2}`.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let psi0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    out.push(psi0);
    if n_max == 0 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * x * psi0);
    for n in 1..n_max {
        let next = (2.0 / (n + 1) as f64).sqrt() * x * out[n] - (n as f64 / (n + 1) as f64).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Eigenfunctions of the oscillator `−½∂² + ½ω²z²` sampled on `z`:
/// `φ_n(z) = ω^{1/4} ψ_n(√ω z)`, returned as `[n][i]`.
pub fn oscillator_states(n_max: usize, omega: f64, z: &[f64]) -> Vec<Vec<f64>> {
    let scale = omega.powf(0.25);
    let mut states = vec![Vec::with_capacity(z.len()); n_max + 1];
    for &zi in z {
        for (n, v) in hermite_functions(n_max, omega.sqrt() * zi).into_iter().enumerate() {
            states[n].push(scale * v);
        }
    }
    states
}
