//! Self-consistent product (Hartree) evolution of a two-particle pair.
//!
//! Each factor moves in its external potential plus the interaction averaged
//! over the partner's instantaneous density. The pair of coupled 1D problems
//! is the best product-state approximation to the planar dynamics, and its
//! failure modes are exactly the entangling ones.

use ndarray::prelude::*;

use super::fourier::{spectral_kinetic_energy, FftPair};
use super::grid::Grid1D;
use super::potential::{PotentialSpec, PotentialTerm};
use super::split_step::{apply_potential_phase, Kinetic1D};
use super::wave::{grid_norm, FactorPair, TwoParticleWavefunction};
use crate::{Error, Result, C64};

/// Partner-averaged interaction on the grid: `(dens * V)(x) dx` as a
/// circular convolution, valid while the densities stay clear of the box
/// edges. The kernel is sampled on signed separations, wrapping at n/2.
struct PartnerAverage {
    kernel_hat: Array1<C64>,
    plans: FftPair,
    dx: f64,
}

impl PartnerAverage {
    fn new(grid: &Grid1D, term: &PotentialTerm) -> Self {
        let n = grid.n();
        let mut kernel = Array1::from_shape_fn(n, |s| {
            let r = if s <= n / 2 {
                s as f64 * grid.dx()
            } else {
                (s as f64 - n as f64) * grid.dx()
            };
            C64::from(term.eval(r))
        });
        let mut plans = FftPair::new(n);
        plans.forward_slice(kernel.as_slice_mut().expect("contiguous"));
        Self {
            kernel_hat: kernel,
            plans,
            dx: grid.dx(),
        }
    }

    fn convolve(&mut self, density: &Array1<f64>) -> Array1<f64> {
        let mut hat = density.mapv(C64::from);
        let data = hat.as_slice_mut().expect("contiguous");
        self.plans.forward_slice(data);
        for (z, k) in data.iter_mut().zip(self.kernel_hat.iter()) {
            *z *= k;
        }
        self.plans.inverse_slice(data);
        let scale = self.dx / self.plans.n() as f64;
        hat.mapv(|z| z.re * scale)
    }
}

fn density(psi: &Array1<C64>) -> Array1<f64> {
    psi.mapv(|z| z.norm_sqr())
}

fn sampled_external(grid: &Grid1D, term: &Option<PotentialTerm>) -> Array1<f64> {
    match term {
        Some(t) => Array1::from_shape_fn(grid.n(), |i| t.eval(grid.x(i))),
        None => Array1::zeros(grid.n()),
    }
}

pub struct HartreeTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub norm_a: Vec<f64>,
    pub norm_b: Vec<f64>,
    /// Factor states at the sampled times, in step with `times`.
    pub snapshots: Vec<(Array1<C64>, Array1<C64>)>,
}

impl HartreeTrace {
    pub fn final_factors(&self) -> (&Array1<C64>, &Array1<C64>) {
        let (a, b) = self.snapshots.last().expect("trace has samples");
        (a, b)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / e0.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

/// Mean-field energy of a factor pair: both kinetic terms, both external
/// terms, and the doubly averaged interaction.
pub fn hartree_energy(pair: &FactorPair, v: &PotentialSpec, hbar: f64) -> f64 {
    let grid = &pair.grid;
    let dens_a = density(&pair.psi_a);
    let dens_b = density(&pair.psi_b);
    let mut total = spectral_kinetic_energy(grid, &pair.psi_a, pair.m_a, hbar)
        + spectral_kinetic_energy(grid, &pair.psi_b, pair.m_b, hbar);
    let ext_a = sampled_external(grid, &v.external_a);
    let ext_b = sampled_external(grid, &v.external_b);
    for i in 0..grid.n() {
        total += (dens_a[i] * ext_a[i] + dens_b[i] * ext_b[i]) * grid.dx();
    }
    if let Some(term) = &v.interaction {
        let mut avg = PartnerAverage::new(grid, term);
        let v_from_b = avg.convolve(&dens_b);
        for i in 0..grid.n() {
            total += dens_a[i] * v_from_b[i] * grid.dx();
        }
    }
    total
}

/// Propagates the coupled factor equations with a Strang split. The
/// effective potentials are rebuilt from fresh densities before every
/// half-kick, because the kinetic substep moves the densities the phases
/// were computed from.
pub fn hartree_propagate(
    pair: &FactorPair,
    v: &PotentialSpec,
    dt: f64,
    t_final: f64,
    hbar: f64,
    sample_every: usize,
) -> Result<HartreeTrace> {
    if sample_every == 0 {
        return Err(Error::BadScenario("sample_every must be at least 1".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if steps == 0 || (t_final - steps as f64 * dt).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::BadScenario(format!(
            "t_final = {t_final} is not a whole number of dt = {dt} steps"
        )));
    }
    let grid = &pair.grid;
    let mut psi_a = pair.psi_a.clone();
    let mut psi_b = pair.psi_b.clone();
    let mut kin_a = Kinetic1D::new(grid, pair.m_a, dt, hbar)?;
    let mut kin_b = Kinetic1D::new(grid, pair.m_b, dt, hbar)?;
    let ext_a = sampled_external(grid, &v.external_a);
    let ext_b = sampled_external(grid, &v.external_b);
    let mut avg = v
        .interaction
        .as_ref()
        .map(|term| PartnerAverage::new(grid, term));

    let mut trace = HartreeTrace {
        times: Vec::new(),
        energy: Vec::new(),
        norm_a: Vec::new(),
        norm_b: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut record = |t: f64, psi_a: &Array1<C64>, psi_b: &Array1<C64>| {
        let snapshot_pair = FactorPair {
            grid: *grid,
            m_a: pair.m_a,
            m_b: pair.m_b,
            psi_a: psi_a.clone(),
            psi_b: psi_b.clone(),
        };
        trace.times.push(t);
        trace.energy.push(hartree_energy(&snapshot_pair, v, hbar));
        trace.norm_a.push(grid_norm(grid, psi_a));
        trace.norm_b.push(grid_norm(grid, psi_b));
        trace.snapshots.push((psi_a.clone(), psi_b.clone()));
    };
    record(0.0, &psi_a, &psi_b);

    let half_kick =
        |psi_a: &mut Array1<C64>, psi_b: &mut Array1<C64>, avg: &mut Option<PartnerAverage>| {
            // Phase kicks leave both densities untouched, so one evaluation of
            // the effective potentials is exact for the whole half-step.
            let (mut v_eff_a, mut v_eff_b) = (ext_a.clone(), ext_b.clone());
            if let Some(avg) = avg.as_mut() {
                v_eff_a += &avg.convolve(&density(psi_b));
                v_eff_b += &avg.convolve(&density(psi_a));
            }
            apply_potential_phase(psi_a, &v_eff_a, dt / 2.0, hbar);
            apply_potential_phase(psi_b, &v_eff_b, dt / 2.0, hbar);
        };

    for step in 1..=steps {
        half_kick(&mut psi_a, &mut psi_b, &mut avg);
        kin_a.apply(&mut psi_a);
        kin_b.apply(&mut psi_b);
        half_kick(&mut psi_a, &mut psi_b, &mut avg);
        if step % sample_every == 0 || step == steps {
            record(step as f64 * dt, &psi_a, &psi_b);
        }
    }
    Ok(trace)
}

/// Squared overlap of a planar state with a product of factors, the figure
/// of merit for how much of the full dynamics a mean-field run captured.
pub fn product_fidelity(
    wf: &TwoParticleWavefunction,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
) -> Result<f64> {
    if psi_a.len() != wf.grid_a.n() || psi_b.len() != wf.grid_b.n() {
        return Err(Error::DimMismatch(format!(
            "factors of lengths {} and {} against a {}x{} state",
            psi_a.len(),
            psi_b.len(),
            wf.grid_a.n(),
            wf.grid_b.n()
        )));
    }
    let mut overlap = C64::from(0.0);
    for i in 0..wf.grid_a.n() {
        for j in 0..wf.grid_b.n() {
            overlap += (psi_a[i] * psi_b[j]).conj() * wf.amplitudes[[i, j]];
        }
    }
    overlap *= wf.grid_a.dx() * wf.grid_b.dx();
    Ok(overlap.norm_sqr())
}

/// Density-weighted residual of the mean-field closure for an arbitrary
/// pair potential: the part of `V(x_a, x_b)` that no sum of one-particle
/// potentials can reproduce, measured against the given densities.
/// Zero within roundoff exactly when `V` splits as `f(x_a) + g(x_b)` over
/// the occupied region.
pub fn hartree_consistency_residual(
    grid_a: &Grid1D,
    grid_b: &Grid1D,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
    v: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    if psi_a.len() != grid_a.n() || psi_b.len() != grid_b.n() {
        return Err(Error::DimMismatch(format!(
            "factors of lengths {} and {} on grids of {} and {} points",
            psi_a.len(),
            psi_b.len(),
            grid_a.n(),
            grid_b.n()
        )));
    }
    let mut dens_a = density(psi_a);
    let mut dens_b = density(psi_b);
    let (wa, wb): (f64, f64) = (dens_a.sum(), dens_b.sum());
    if wa <= 0.0 || wb <= 0.0 {
        return Err(Error::BadScenario("factor state has zero norm".into()));
    }
    dens_a /= wa;
    dens_b /= wb;

    let table = Array2::from_shape_fn((grid_a.n(), grid_b.n()), |(i, j)| {
        v(grid_a.x(i), grid_b.x(j))
    });
    let mean_over_b: Array1<f64> = table.dot(&dens_b);
    let mean_over_a: Array1<f64> = table.t().dot(&dens_a);
    let grand_mean: f64 = dens_a.dot(&mean_over_b);

    let mut residual = 0.0;
    for i in 0..grid_a.n() {
        for j in 0..grid_b.n() {
            let defect = table[[i, j]] - mean_over_b[i] - mean_over_a[j] + grand_mean;
            residual += dens_a[i] * dens_b[j] * defect * defect;
        }
    }
    Ok(residual.sqrt())
}
