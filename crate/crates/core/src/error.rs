use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("classically forbidden: p^2 = {p2:.6e} <= 0 at u = {u:.6}")]
    ClassicallyForbidden { u: f64, p2: f64 },
    #[error("no asymptote: {0}")]
    NoAsymptote(String),
    #[error("caustic at u = {u:.6}, v = {v:.6} (g22 = {g22:.3e})")]
    Caustic { u: f64, v: f64, g22: f64 },
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    Stiff { t: f64, h: f64 },
    #[error("tachyonic frequency: Omega^2 = {omega2:.6e} at tau = {tau:.6}")]
    TachyonicFrequency { tau: f64, omega2: f64 },
    #[error("bad asymptote: {0}")]
    BadAsymptote(String),
    #[error("integration drift {drift:.3e} exceeds tolerance {tol:.3e}")]
    IntegrationDrift { drift: f64, tol: f64 },
    #[error("non-integrable drive: |F| = {value:.3e} at tail tau = {tau:.6}")]
    NonIntegrableDrive { tau: f64, value: f64 },
    #[error("inconsistent constants: |c1|^2 - |c2|^2 = {wronskian:.12e}, expected {expected:.12e}")]
    InconsistentConstants { wronskian: f64, expected: f64 },
    #[error("focal point: |xi| = 0 at tau = {tau:.6}")]
    FocalPoint { tau: f64 },
    #[error("grid too small: |psi| = {edge:.3e} at the boundary")]
    GridTooSmall { edge: f64 },
    #[error("non-unitary step: norm drift {drift:.3e}")]
    NonunitaryStep { drift: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
