//! Fredholm index of real Cauchy–Riemann operators on punctured surfaces.
//!
//! The library computes every term of the index formula
//! `ind = n·X + μ_Mas + Σ₊ μCZ − Σ₋ μCZ` and checks it against numerical
//! kernel/cokernel counts of discretized operators on model domains.

pub mod error;
pub mod antilinear;
pub mod asymptotic;
pub mod cz_flow;
pub mod numerics;
pub mod random;
pub mod strip;
pub mod surface;
pub mod verify;

pub use error::{Error, Result};
