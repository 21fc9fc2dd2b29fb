//! Centre-of-mass factorisation for equal-mass pairs.
//!
//! With equal masses and an interaction depending only on the separation,
//! the generator splits into a free centre-of-mass part and a relative part
//! feeling the potential. A state prepared as a product in those coordinates
//! stays one, even while the same state entangles the two particle labels.
//! This module runs both pictures side by side: the full planar evolution,
//! and two 1D evolutions whose product is mapped back onto the plane.

use ndarray::prelude::*;

use super::entropy::entanglement_entropy;
use super::grid::Grid1D;
use super::potential::{PotentialSpec, PotentialTerm};
use super::split_step::{SplitStep1D, SplitStep2D};
use super::wave::{init_gaussian, GaussianSpec, TwoParticleWavefunction};
use crate::{Error, Result, C64};

/// Companion grids for the coordinates `x_cm = (x_a + x_b)/2` and
/// `x_rel = x_a - x_b`. Both use twice the point count, so every lattice
/// value of the mapped coordinates is itself a lattice point and the
/// change of picture involves no interpolation at all.
pub fn com_grids(grid: &Grid1D) -> Result<(Grid1D, Grid1D)> {
    let n = grid.n();
    let cm = Grid1D::new(2 * n, grid.x_min(), grid.dx() / 2.0)?;
    let rel = Grid1D::new(2 * n, -(n as f64) * grid.dx(), grid.dx())?;
    Ok((cm, rel))
}

fn product_on_plane(grid: &Grid1D, psi_cm: &Array1<C64>, psi_rel: &Array1<C64>) -> Array2<C64> {
    let n = grid.n();
    Array2::from_shape_fn((n, n), |(i, j)| psi_cm[i + j] * psi_rel[i + n - j])
}

fn renormalised(grid: &Grid1D, amplitudes: Array2<C64>) -> Result<TwoParticleWavefunction> {
    let weight: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    let scale = 1.0 / (weight * grid.dx() * grid.dx()).sqrt();
    TwoParticleWavefunction::new(*grid, *grid, 1.0, 1.0, amplitudes.mapv(|z| z * scale))
}

/// Two-particle state specified by centre-of-mass and relative packets.
/// Equal masses are implied; the mass argument fixes the kinetic scales
/// carried by the returned state.
pub fn from_com_factors(
    grid: &Grid1D,
    mass: f64,
    cm: &GaussianSpec,
    rel: &GaussianSpec,
    hbar: f64,
) -> Result<TwoParticleWavefunction> {
    if !(mass > 0.0) {
        return Err(Error::BadScenario(format!("mass {mass} must be positive")));
    }
    let (cm_grid, rel_grid) = com_grids(grid)?;
    let psi_cm = init_gaussian(&cm_grid, cm, hbar)?;
    let psi_rel = init_gaussian(&rel_grid, rel, hbar)?;
    let mut wf = renormalised(grid, product_on_plane(grid, &psi_cm, &psi_rel))?;
    wf.m_a = mass;
    wf.m_b = mass;
    Ok(wf)
}

pub struct ComSeparabilityReport {
    pub times: Vec<f64>,
    /// Discrete L2 distance between the planar evolution and the state
    /// rebuilt from the two factor evolutions, both normalised.
    pub l2_error: Vec<f64>,
    /// Entanglement entropy of the planar state across the particle cut.
    pub entropy_ab: Vec<f64>,
}

impl ComSeparabilityReport {
    pub fn max_l2_error(&self) -> f64 {
        self.l2_error.iter().cloned().fold(0.0, f64::max)
    }

    pub fn final_entropy(&self) -> f64 {
        *self.entropy_ab.last().expect("report has samples")
    }
}

/// Evolves the same initial data through both pictures and reports how far
/// apart they drift. The interaction may be absent; external one-particle
/// potentials would break the factorisation and are excluded by the
/// signature.
#[allow(clippy::too_many_arguments)]
pub fn com_separability_check(
    grid: &Grid1D,
    mass: f64,
    cm: &GaussianSpec,
    rel: &GaussianSpec,
    interaction: Option<PotentialTerm>,
    dt: f64,
    t_final: f64,
    hbar: f64,
    sample_every: usize,
) -> Result<ComSeparabilityReport> {
    if !(mass > 0.0) {
        return Err(Error::BadScenario(format!("mass {mass} must be positive")));
    }
    if sample_every == 0 {
        return Err(Error::BadScenario("sample_every must be at least 1".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if steps == 0 || (t_final - steps as f64 * dt).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::BadScenario(format!(
            "t_final = {t_final} is not a whole number of dt = {dt} steps"
        )));
    }

    let (cm_grid, rel_grid) = com_grids(grid)?;
    let mut psi_cm = init_gaussian(&cm_grid, cm, hbar)?;
    let mut psi_rel = init_gaussian(&rel_grid, rel, hbar)?;

    let spec = match interaction {
        Some(term) => PotentialSpec::with_interaction(term),
        None => PotentialSpec::free(),
    };
    let mut planar = renormalised(grid, product_on_plane(grid, &psi_cm, &psi_rel))?;
    planar.m_a = mass;
    planar.m_b = mass;
    let mut engine = SplitStep2D::for_wavefunction(&planar, &spec, dt, hbar)?;

    // Factor picture: the centre of mass is free with the total mass, the
    // relative coordinate carries the reduced mass and the interaction.
    let zero_v = Array1::zeros(cm_grid.n());
    let mut cm_engine = SplitStep1D::new(&cm_grid, 2.0 * mass, &zero_v, dt, hbar)?;
    let v_rel = match &spec.interaction {
        Some(term) => Array1::from_shape_fn(rel_grid.n(), |s| term.eval(rel_grid.x(s))),
        None => Array1::zeros(rel_grid.n()),
    };
    let mut rel_engine = SplitStep1D::new(&rel_grid, mass / 2.0, &v_rel, dt, hbar)?;

    let mut report = ComSeparabilityReport {
        times: Vec::new(),
        l2_error: Vec::new(),
        entropy_ab: Vec::new(),
    };
    let mut record = |t: f64,
                      planar: &TwoParticleWavefunction,
                      psi_cm: &Array1<C64>,
                      psi_rel: &Array1<C64>|
     -> Result<()> {
        let rebuilt = renormalised(grid, product_on_plane(grid, psi_cm, psi_rel))?;
        let mut sum = 0.0;
        for (a, b) in planar.amplitudes.iter().zip(rebuilt.amplitudes.iter()) {
            sum += (a - b).norm_sqr();
        }
        report.times.push(t);
        report.l2_error.push((sum * grid.dx() * grid.dx()).sqrt());
        report.entropy_ab.push(entanglement_entropy(planar)?);
        Ok(())
    };

    record(0.0, &planar, &psi_cm, &psi_rel)?;
    for step in 1..=steps {
        engine.step(&mut planar.amplitudes);
        cm_engine.step(&mut psi_cm);
        rel_engine.step(&mut psi_rel);
        if step % sample_every == 0 || step == steps {
            record(step as f64 * dt, &planar, &psi_cm, &psi_rel)?;
        }
    }
    Ok(report)
}
