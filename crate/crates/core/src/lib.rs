//! Collinear three-body reactive scattering through the internal-time
//! reduction.
//!
//! The pipeline runs reaction-path geometry ([`geometry`]) on a model
//! surface ([`pes`]), builds the effective parametric oscillator
//! ([`oscillator`]) and evaluates closed-form transition probabilities
//! ([`amplitudes`]). [`oracle`] propagates the reduced wave equation on a
//! grid and projects onto outgoing channel states, independently of the
//! closed forms.

// NaN-rejecting `!(x > 0.0)` guards and index loops are deliberate here.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod amplitudes;
pub mod error;
pub mod geometry;
pub mod ode;
pub mod oracle;
pub mod oscillator;
pub mod pes;
pub mod quad;
pub mod special;
pub mod spline;
pub mod table;

pub use error::{Error, Result};
pub use num_complex::Complex64;
