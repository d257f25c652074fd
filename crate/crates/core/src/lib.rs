//! Recurrence diagnostics for Markov chains with negative drift, and the
//! Benoist-Quint drift function on the space of unimodular lattices.
//!
//! The crate is organised bottom-up:
//!
//! - [`dist`]: finite-support distributions, standard realisations and
//!   first-order stochastic dominance.
//! - [`chain`]: generic Markov-chain simulation with return-time, mass-escape
//!   and occupation statistics.
//! - [`counterexamples`]: the two chains with drift `-1` and `L^1`-bounded
//!   increments that nevertheless lose mass.
//! - [`lattice`]: unimodular lattices, LLL, Fincke-Pohst enumeration and
//!   integer sublattice arithmetic.
//! - [`drift`]: Lyapunov exponents, `phi_A`, `f_A` and the drift checks.
//! - [`experiments`]: configuration, seeded runs and CSV artifacts.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to the precision used by the experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod chain;
pub mod counterexamples;
pub mod dist;
pub mod drift;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod linalg;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type FiniteDist = dist::FiniteDist<f64>;
pub type FiniteDist32 = dist::FiniteDist<f32>;
pub type StepRealisation = dist::StepRealisation<f64>;
pub type DriftSpec = dist::DriftSpec<f64>;

pub type Mat = linalg::Mat<f64>;
pub type Mat32 = linalg::Mat<f32>;

pub type LatticeBasis = lattice::LatticeBasis<f64>;
pub type LatticeBasis32 = lattice::LatticeBasis<f32>;

pub type MatrixMeasure = drift::MatrixMeasure<f64>;
pub type QuasiNormParams = drift::QuasiNormParams<f64>;
pub type QuasiNormParams32 = drift::QuasiNormParams<f32>;

/// Version string embedded in every artifact.
pub const VERSION: &str = concat!("driftwalk ", env!("CARGO_PKG_VERSION"));
