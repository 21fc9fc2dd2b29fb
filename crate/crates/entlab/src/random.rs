//! Seeded random generators for states, Hamiltonians and density matrices.
//!
//! Every scenario and check in the crate draws from a single [`ChaCha8Rng`]
//! stream created by [`rng_from_seed`], so a run is fully reproducible from
//! one integer. Gaussian entries come from `rand_distr::StandardNormal`.

use ndarray::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{dagger, identity, kron, trace, vec_norm};
use crate::C64;

/// The one generator used everywhere. ChaCha8 is deterministic across
/// platforms, which the byte-identical-rerun contract relies on.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian: independent N(0,1) real and imaginary parts.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<C64> {
    Array2::from_shape_simple_fn((rows, cols), || complex_gaussian(rng))
}

pub fn complex_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<C64> {
    Array1::from_shape_simple_fn(n, || complex_gaussian(rng))
}

/// Normalised random state vector (complex Gaussian direction).
pub fn state_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<C64> {
    let v = complex_vector(rng, n);
    let norm = vec_norm(&v);
    v / C64::new(norm, 0.0)
}

/// Random Hermitian matrix `(G + G^dag)/2` with complex Gaussian `G`.
pub fn gaussian_hermitian(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let g = complex_matrix(rng, n, n);
    (&g + &dagger(&g)) * C64::new(0.5, 0.0)
}

/// Random Hamiltonian of the form `H_A (x) I + I (x) H_B`.
pub fn factorisable_hamiltonian(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize) -> Array2<C64> {
    let h_a = gaussian_hermitian(rng, d_a);
    let h_b = gaussian_hermitian(rng, d_b);
    kron(&h_a, &identity(d_b)).unwrap() + kron(&identity(d_a), &h_b).unwrap()
}

/// Pair of normalised local states.
pub fn product_state(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize) -> (Array1<C64>, Array1<C64>) {
    (state_vector(rng, d_a), state_vector(rng, d_b))
}

/// Full-rank random density matrix `G G^dag / Tr(G G^dag)` (Wishart draw).
pub fn density_matrix(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let g = complex_matrix(rng, n, n);
    let w = g.dot(&dagger(&g));
    let t = trace(&w).re;
    w / C64::new(t, 0.0)
}

/// Random unitary `exp(i H)` with a Gaussian Hermitian generator. Not Haar
/// distributed, which no caller needs; it is deterministic and unitary to
/// roundoff, which they do.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> Array2<C64> {
    let h = gaussian_hermitian(rng, n);
    crate::numerics::hermitian_expm(&h, 1.0).expect("Hermitian by construction")
}
