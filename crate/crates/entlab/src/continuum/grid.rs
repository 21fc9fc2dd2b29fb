//! Uniform 1D position grids and their Fourier-conjugate momentum layout.

use ndarray::prelude::*;
use std::f64::consts::PI;

use crate::{Error, Result};

pub const MIN_POINTS: usize = 64;
pub const MAX_POINTS: usize = 1024;

/// Evenly spaced periodic grid `x_i = x_min + i dx`, `i = 0..n`.
///
/// The point count is restricted to powers of two so every transform hits
/// the radix-2 fast path, and capped so a full two-particle amplitude matrix
/// stays desk-sized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    x_min: f64,
    dx: f64,
}

impl Grid1D {
    pub fn new(n: usize, x_min: f64, dx: f64) -> Result<Self> {
        if !n.is_power_of_two() || !(MIN_POINTS..=MAX_POINTS).contains(&n) {
            return Err(Error::BadGrid(format!(
                "n = {n} must be a power of two between {MIN_POINTS} and {MAX_POINTS}"
            )));
        }
        if !dx.is_finite() || dx <= 0.0 || !x_min.is_finite() {
            return Err(Error::BadGrid(format!(
                "need finite x_min and dx > 0, got x_min = {x_min}, dx = {dx}"
            )));
        }
        Ok(Self { n, x_min, dx })
    }

    /// Grid of `n` points covering `[center - extent/2, center + extent/2)`.
    pub fn centered(n: usize, center: f64, extent: f64) -> Result<Self> {
        if !(extent > 0.0) {
            return Err(Error::BadGrid(format!(
                "extent = {extent} must be positive"
            )));
        }
        Self::new(n, center - extent / 2.0, extent / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Total length `n dx` of the periodic box.
    pub fn extent(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn positions(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.n, |i| self.x(i))
    }

    /// Angular wavenumbers in fast-transform order: `2 pi j / (n dx)` for
    /// `j < n/2`, then the negative branch.
    pub fn wavenumbers(&self) -> Array1<f64> {
        let step = 2.0 * PI / self.extent();
        Array1::from_shape_fn(self.n, |j| {
            let j_signed = if j < self.n / 2 {
                j as i64
            } else {
                j as i64 - self.n as i64
            };
            step * j_signed as f64
        })
    }

    /// Kinetic energy at the grid momentum cutoff `hbar pi / dx`, the scale
    /// that bounds usable step sizes.
    pub fn kinetic_cutoff(&self, mass: f64, hbar: f64) -> f64 {
        let p_max = hbar * PI / self.dx;
        p_max * p_max / (2.0 * mass)
    }
}
