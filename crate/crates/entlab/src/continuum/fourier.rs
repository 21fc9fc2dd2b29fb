//! Cached fast-Fourier plans for the propagators, plus the spectral
//! observables that ride on them.

use ndarray::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::grid::Grid1D;
use crate::C64;

/// Forward/inverse plan pair of one length, with shared scratch.
pub(crate) struct FftPair {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl FftPair {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        }
    }

    pub(crate) fn forward_slice(&mut self, data: &mut [C64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Unnormalised inverse; callers divide by `n` once per round trip.
    pub(crate) fn inverse_slice(&mut self, data: &mut [C64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }
}

/// Row/column transform pair for `n_a x n_b` amplitude arrays.
pub(crate) struct Fft2D {
    axis_a: FftPair,
    axis_b: FftPair,
    column: Vec<C64>,
}

impl Fft2D {
    pub(crate) fn new(n_a: usize, n_b: usize) -> Self {
        Self {
            axis_a: FftPair::new(n_a),
            axis_b: FftPair::new(n_b),
            column: vec![C64::new(0.0, 0.0); n_a],
        }
    }

    fn transform(&mut self, m: &mut Array2<C64>, inverse: bool) {
        let (n_a, n_b) = m.dim();
        debug_assert_eq!((n_a, n_b), (self.axis_a.n(), self.axis_b.n()));
        let flat = m.as_slice_mut().expect("amplitudes are contiguous");
        for row in flat.chunks_exact_mut(n_b) {
            if inverse {
                self.axis_b.inverse_slice(row);
            } else {
                self.axis_b.forward_slice(row);
            }
        }
        for j in 0..n_b {
            for i in 0..n_a {
                self.column[i] = flat[i * n_b + j];
            }
            if inverse {
                self.axis_a.inverse_slice(&mut self.column);
            } else {
                self.axis_a.forward_slice(&mut self.column);
            }
            for i in 0..n_a {
                flat[i * n_b + j] = self.column[i];
            }
        }
    }

    pub(crate) fn forward(&mut self, m: &mut Array2<C64>) {
        self.transform(m, false);
    }

    /// Inverse including the `1/(n_a n_b)` normalisation, so
    /// `inverse(forward(m)) = m`.
    pub(crate) fn inverse(&mut self, m: &mut Array2<C64>) {
        self.transform(m, true);
        let scale = 1.0 / (self.axis_a.n() * self.axis_b.n()) as f64;
        m.mapv_inplace(|z| z * scale);
    }
}

/// Momentum expectation `<p>` of a 1D state via the discrete spectrum.
pub fn spectral_mean_p(grid: &Grid1D, psi: &Array1<C64>, hbar: f64) -> f64 {
    let mut hat = psi.to_vec();
    FftPair::new(grid.n()).forward_slice(&mut hat);
    let k = grid.wavenumbers();
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, z) in hat.iter().enumerate() {
        let w = z.norm_sqr();
        num += hbar * k[j] * w;
        den += w;
    }
    num / den
}

/// Kinetic energy expectation of a 1D state.
pub fn spectral_kinetic_energy(grid: &Grid1D, psi: &Array1<C64>, mass: f64, hbar: f64) -> f64 {
    let mut hat = psi.to_vec();
    FftPair::new(grid.n()).forward_slice(&mut hat);
    let k = grid.wavenumbers();
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, z) in hat.iter().enumerate() {
        let w = z.norm_sqr();
        num += (hbar * k[j]).powi(2) / (2.0 * mass) * w;
        den += w;
    }
    num / den
}
