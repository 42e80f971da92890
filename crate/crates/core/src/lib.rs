//! Stochastic transmission-expansion equilibrium with per-country welfare
//! accounting, compensation mechanisms and risk measures.

// `!(x >= 0.0)` is used on purpose so that NaN fails the check; the index
// loops walk several parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod analytic;
pub mod cli;
pub mod compensation;
pub mod equilibrium;
pub mod error;
pub mod ingest;
pub mod model;
pub mod qp;
pub mod risk;
pub mod welfare;

pub use error::{Error, Result};
