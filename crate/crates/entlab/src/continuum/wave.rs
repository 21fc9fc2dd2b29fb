//! Two-particle grid wavefunctions, Gaussian packet preparation and the
//! discrete observables built from them.

use ndarray::prelude::*;

use super::grid::Grid1D;
use crate::{Error, Result, C64};

/// Gaussian packet parameters: `psi(x) ~ exp(-(x-x0)^2/(4 width^2)
/// + i p0 (x-x0)/hbar)`, so `width` is the position standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub x0: f64,
    pub p0: f64,
    pub width: f64,
}

impl GaussianSpec {
    pub fn new(x0: f64, p0: f64, width: f64) -> Self {
        Self { x0, p0, width }
    }
}

/// Normalized Gaussian packet sampled on a grid.
///
/// The packet must be resolvable (`width >= 2 dx`) and must sit at least
/// five widths from both box edges, so the periodic images it wraps into
/// are negligible at the 1e-10 norm scale.
pub fn init_gaussian(grid: &Grid1D, spec: &GaussianSpec, hbar: f64) -> Result<Array1<C64>> {
    let GaussianSpec { x0, p0, width } = *spec;
    if !(width >= 2.0 * grid.dx()) {
        return Err(Error::BadPacket(format!(
            "width {width} under the resolvable minimum {} (2 dx)",
            2.0 * grid.dx()
        )));
    }
    let margin = 5.0 * width;
    let x_max = grid.x_min() + grid.extent();
    if x0 - margin < grid.x_min() || x0 + margin > x_max {
        return Err(Error::BadPacket(format!(
            "packet at {x0} with width {width} is within five widths of the box [{}, {x_max})",
            grid.x_min()
        )));
    }
    if !(hbar > 0.0) {
        return Err(Error::BadScenario(format!(
            "hbar = {hbar} must be positive"
        )));
    }

    let mut psi = Array1::from_shape_fn(grid.n(), |i| {
        let x = grid.x(i) - x0;
        let envelope = (-x * x / (4.0 * width * width)).exp();
        C64::from_polar(envelope, p0 * x / hbar)
    });
    let norm = grid_norm(grid, &psi);
    psi.mapv_inplace(|z| z / norm);
    Ok(psi)
}

/// Discrete L2 norm `sqrt(sum |psi|^2 dx)`.
pub fn grid_norm(grid: &Grid1D, psi: &Array1<C64>) -> f64 {
    (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()).sqrt()
}

/// Position expectation against `|psi|^2 dx`.
pub fn grid_mean_x(grid: &Grid1D, psi: &Array1<C64>) -> f64 {
    let mut mean = 0.0;
    let mut weight = 0.0;
    for (i, z) in psi.iter().enumerate() {
        let p = z.norm_sqr();
        mean += grid.x(i) * p;
        weight += p;
    }
    mean / weight
}

/// Position variance against `|psi|^2 dx`.
pub fn grid_variance_x(grid: &Grid1D, psi: &Array1<C64>) -> f64 {
    let mu = grid_mean_x(grid, psi);
    let mut var = 0.0;
    let mut weight = 0.0;
    for (i, z) in psi.iter().enumerate() {
        let p = z.norm_sqr();
        let d = grid.x(i) - mu;
        var += d * d * p;
        weight += p;
    }
    var / weight
}

/// Pair of single-particle factors sharing one grid, the input shape for
/// the mean-field style propagators.
#[derive(Debug, Clone)]
pub struct FactorPair {
    pub grid: Grid1D,
    pub m_a: f64,
    pub m_b: f64,
    pub psi_a: Array1<C64>,
    pub psi_b: Array1<C64>,
}

impl FactorPair {
    pub fn new(
        grid: Grid1D,
        m_a: f64,
        m_b: f64,
        psi_a: Array1<C64>,
        psi_b: Array1<C64>,
    ) -> Result<Self> {
        require_masses(m_a, m_b)?;
        for psi in [&psi_a, &psi_b] {
            if psi.len() != grid.n() {
                return Err(Error::DimMismatch(format!(
                    "factor has {} samples on a {}-point grid",
                    psi.len(),
                    grid.n()
                )));
            }
            let norm = grid_norm(&grid, psi);
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalised {
                    norm,
                    tolerance: 1e-10,
                });
            }
        }
        Ok(Self {
            grid,
            m_a,
            m_b,
            psi_a,
            psi_b,
        })
    }
}

fn require_masses(m_a: f64, m_b: f64) -> Result<()> {
    for m in [m_a, m_b] {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::BadScenario(format!("mass {m} must be positive")));
        }
    }
    Ok(())
}

/// Two-particle amplitude array `psi[[i, j]] = Psi(x_A_i, x_B_j)` with
/// `sum |Psi|^2 dx_A dx_B = 1`.
#[derive(Debug, Clone)]
pub struct TwoParticleWavefunction {
    pub grid_a: Grid1D,
    pub grid_b: Grid1D,
    pub m_a: f64,
    pub m_b: f64,
    pub amplitudes: Array2<C64>,
}

impl TwoParticleWavefunction {
    pub fn new(
        grid_a: Grid1D,
        grid_b: Grid1D,
        m_a: f64,
        m_b: f64,
        amplitudes: Array2<C64>,
    ) -> Result<Self> {
        require_masses(m_a, m_b)?;
        if amplitudes.dim() != (grid_a.n(), grid_b.n()) {
            return Err(Error::DimMismatch(format!(
                "amplitudes are {:?}, grids want ({}, {})",
                amplitudes.dim(),
                grid_a.n(),
                grid_b.n()
            )));
        }
        let wf = Self {
            grid_a,
            grid_b,
            m_a,
            m_b,
            amplitudes,
        };
        let norm = wf.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalised {
                norm,
                tolerance: 1e-10,
            });
        }
        Ok(wf)
    }

    /// Product state `psi_A(x_A) psi_B(x_B)` from normalized factors.
    pub fn from_factors(pair: &FactorPair) -> Result<Self> {
        let amplitudes = Array2::from_shape_fn((pair.grid.n(), pair.grid.n()), |(i, j)| {
            pair.psi_a[i] * pair.psi_b[j]
        });
        Self::new(pair.grid, pair.grid, pair.m_a, pair.m_b, amplitudes)
    }

    pub fn norm(&self) -> f64 {
        let weight = self.grid_a.dx() * self.grid_b.dx();
        (self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * weight).sqrt()
    }

    pub fn renormalise(&mut self) {
        let norm = self.norm();
        self.amplitudes.mapv_inplace(|z| z / norm);
    }

    /// Marginal probability of particle A, integrated over B (includes the
    /// `dx_A` weight, so the entries sum to the squared norm).
    pub fn marginal_a(&self) -> Array1<f64> {
        let db = self.grid_b.dx();
        let da = self.grid_a.dx();
        Array1::from_shape_fn(self.grid_a.n(), |i| {
            self.amplitudes
                .row(i)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                * db
                * da
        })
    }

    pub fn mean_x_a(&self) -> f64 {
        let p = self.marginal_a();
        let total: f64 = p.sum();
        p.iter()
            .enumerate()
            .map(|(i, w)| self.grid_a.x(i) * w)
            .sum::<f64>()
            / total
    }

    pub fn mean_x_b(&self) -> f64 {
        let da = self.grid_a.dx();
        let db = self.grid_b.dx();
        let mut mean = 0.0;
        let mut total = 0.0;
        for j in 0..self.grid_b.n() {
            let w: f64 = self
                .amplitudes
                .column(j)
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                * da
                * db;
            mean += self.grid_b.x(j) * w;
            total += w;
        }
        mean / total
    }
}
