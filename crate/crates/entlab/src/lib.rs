//! Numerical laboratory for entanglement growth, and its absence, in
//! bipartite quantum systems.
//!
//! The crate is organised in four layers:
//!
//! * [`numerics`]: dense complex kernels (Kronecker products, partial traces,
//!   Hermitian matrix exponentials, Hilbert-Schmidt inner products).
//! * [`bipartite`]: states and operators on a finite `d_A (x) d_B` Hilbert
//!   space: Schmidt decomposition, purity, Hamiltonian factorisation, the
//!   product-coupling coefficient, and a two-qubit unitary classifier.
//! * [`dynamics`]: exact, density-matrix and mean-field propagation under
//!   piecewise-constant Hamiltonian schedules, with per-step instrumentation
//!   of purity, Schmidt weights, coupling and factorisation residuals.
//! * [`continuum`]: two particles on periodic 1D grids, propagated with a
//!   split-step Fourier method; centre-of-mass separation, time-dependent
//!   mean-field (Hartree) evolution, classical-limit and test-particle
//!   scenarios.
//!
//! [`random`] holds the seeded generators every scenario draws from, so runs
//! are reproducible from a single integer seed.

// Validation sites spell `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN, which must never pass a precondition.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bipartite;
pub mod continuum;
pub mod dynamics;
mod error;
pub mod numerics;
pub mod random;

pub use error::{Error, Result};

/// Complex double-precision scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
