//! Scenario configuration, the per-point pipeline and its CSV/JSON outputs.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod pipeline;
