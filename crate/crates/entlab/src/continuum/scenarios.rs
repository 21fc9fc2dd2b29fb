//! Packaged two-body runs: one struct of numbers in, one trace out.
//!
//! Everything here is a thin arrangement of the engines in the sibling
//! modules, so the CLI and the integration tests drive the same code paths
//! with the same defaults.

use super::classical::VerletPair;
use super::com::{com_separability_check, ComSeparabilityReport};
use super::entropy::entanglement_entropy;
use super::fourier::spectral_mean_p;
use super::grid::Grid1D;
use super::potential::{PotentialSpec, PotentialTerm};
use super::split_step::{total_energy, CosineMask, SplitStep2D};
use super::wave::{grid_mean_x, init_gaussian, FactorPair, GaussianSpec, TwoParticleWavefunction};
use crate::{Error, Result};

/// Edge absorber settings; see [`CosineMask`].
#[derive(Clone, Copy)]
pub struct AbsorberSpec {
    pub fraction: f64,
    pub rate: f64,
}

/// A complete two-particle run specification on a shared grid.
#[derive(Clone)]
pub struct TwoBodyScenario {
    pub grid: Grid1D,
    pub m_a: f64,
    pub m_b: f64,
    pub packet_a: GaussianSpec,
    pub packet_b: GaussianSpec,
    pub potential: PotentialSpec,
    pub dt: f64,
    pub t_final: f64,
    pub hbar: f64,
    pub sample_every: usize,
    pub absorber: Option<AbsorberSpec>,
}

pub struct TwoBodyRun {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub entropy: Vec<f64>,
    pub mean_a: Vec<f64>,
    pub mean_b: Vec<f64>,
    pub newton_a: Vec<f64>,
    pub newton_b: Vec<f64>,
    pub final_state: TwoParticleWavefunction,
}

impl TwoBodyRun {
    pub fn final_entropy(&self) -> f64 {
        *self.entropy.last().expect("run has samples")
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy
            .iter()
            .map(|e| (e - e0).abs() / e0.abs().max(1.0))
            .fold(0.0, f64::max)
    }
}

impl TwoBodyScenario {
    pub fn initial_pair(&self) -> Result<FactorPair> {
        let psi_a = init_gaussian(&self.grid, &self.packet_a, self.hbar)?;
        let psi_b = init_gaussian(&self.grid, &self.packet_b, self.hbar)?;
        FactorPair::new(self.grid, self.m_a, self.m_b, psi_a, psi_b)
    }

    pub fn steps(&self) -> Result<usize> {
        let steps = (self.t_final / self.dt).round() as usize;
        if steps == 0
            || (self.t_final - steps as f64 * self.dt).abs() > 1e-9 * self.t_final.max(1.0)
        {
            return Err(Error::BadScenario(format!(
                "t_final = {} is not a whole number of dt = {} steps",
                self.t_final, self.dt
            )));
        }
        Ok(steps)
    }

    /// Full planar evolution with a Newton trajectory riding along, sampled
    /// every `sample_every` steps plus the endpoints.
    pub fn run(&self) -> Result<TwoBodyRun> {
        if self.sample_every == 0 {
            return Err(Error::BadScenario("sample_every must be at least 1".into()));
        }
        let steps = self.steps()?;
        let pair = self.initial_pair()?;
        let mut wf = TwoParticleWavefunction::from_factors(&pair)?;
        let mut engine = SplitStep2D::for_wavefunction(&wf, &self.potential, self.dt, self.hbar)?;
        let mask = match &self.absorber {
            Some(spec) => Some(CosineMask::new(
                &self.grid,
                &self.grid,
                spec.fraction,
                spec.rate,
                self.dt,
            )?),
            None => None,
        };
        let mut newton = VerletPair::new(
            &self.potential,
            grid_mean_x(&self.grid, &pair.psi_a),
            spectral_mean_p(&self.grid, &pair.psi_a, self.hbar) / self.m_a,
            grid_mean_x(&self.grid, &pair.psi_b),
            spectral_mean_p(&self.grid, &pair.psi_b, self.hbar) / self.m_b,
            self.m_a,
            self.m_b,
        );

        let mut run = TwoBodyRun {
            times: Vec::new(),
            norm: Vec::new(),
            energy: Vec::new(),
            entropy: Vec::new(),
            mean_a: Vec::new(),
            mean_b: Vec::new(),
            newton_a: Vec::new(),
            newton_b: Vec::new(),
            final_state: wf.clone(),
        };
        let mut record =
            |t: f64, wf: &TwoParticleWavefunction, newton: &VerletPair| -> Result<()> {
                run.times.push(t);
                run.norm.push(wf.norm());
                run.energy
                    .push(total_energy(wf, &self.potential, self.hbar));
                run.entropy.push(entanglement_entropy(wf)?);
                run.mean_a.push(wf.mean_x_a());
                run.mean_b.push(wf.mean_x_b());
                run.newton_a.push(newton.x_a);
                run.newton_b.push(newton.x_b);
                Ok(())
            };
        record(0.0, &wf, &newton)?;
        for step in 1..=steps {
            engine.step(&mut wf.amplitudes);
            if let Some(mask) = &mask {
                mask.apply(&mut wf.amplitudes);
            }
            newton.step(&self.potential, self.dt);
            if step % self.sample_every == 0 || step == steps {
                record(step as f64 * self.dt, &wf, &newton)?;
            }
        }
        run.final_state = wf;
        Ok(run)
    }
}

/// Centre-of-mass factorisation run specification for equal masses.
#[derive(Clone)]
pub struct ComScenario {
    pub grid: Grid1D,
    pub mass: f64,
    pub cm: GaussianSpec,
    pub rel: GaussianSpec,
    pub interaction: Option<PotentialTerm>,
    pub dt: f64,
    pub t_final: f64,
    pub hbar: f64,
    pub sample_every: usize,
}

impl ComScenario {
    pub fn run(&self) -> Result<ComSeparabilityReport> {
        com_separability_check(
            &self.grid,
            self.mass,
            &self.cm,
            &self.rel,
            self.interaction,
            self.dt,
            self.t_final,
            self.hbar,
            self.sample_every,
        )
    }
}

/// Equal-mass pair scattering through a Gaussian barrier of the given
/// strength; the base case for coupling sweeps.
pub fn equal_mass_scattering(strength: f64) -> TwoBodyScenario {
    TwoBodyScenario {
        grid: Grid1D::centered(128, 0.0, 32.0).expect("static grid"),
        m_a: 1.0,
        m_b: 1.0,
        packet_a: GaussianSpec::new(-6.0, 1.0, 1.5),
        packet_b: GaussianSpec::new(6.0, -1.0, 1.5),
        potential: PotentialSpec::with_interaction(
            PotentialTerm::gaussian_bump(strength, 2.0).expect("static potential"),
        ),
        dt: 2e-3,
        t_final: 12.0,
        hbar: 1.0,
        sample_every: 250,
        absorber: None,
    }
}

/// Interaction strengths for the entropy-versus-coupling sweep, weakest
/// first.
pub const COUPLING_SWEEP_STRENGTHS: [f64; 3] = [0.04, 0.2, 0.8];

pub fn coupling_sweep() -> Vec<TwoBodyScenario> {
    COUPLING_SWEEP_STRENGTHS
        .iter()
        .map(|&s| equal_mass_scattering(s))
        .collect()
}

/// Two heavy packets thrown at each other below the barrier top, so the
/// relative motion reflects completely instead of splitting into a
/// transmitted and a reflected branch. The pair entangles strongly while
/// it sits on the wall (the wall chirps the relative coordinate while the
/// centre of mass coasts), but that correlation is a contact transient:
/// it dies away as the packets separate, and the run has to be long
/// enough to let it. Stopping mid-bounce would measure the transient
/// rather than the residue the packets actually carry away.
pub fn reflection_scenario() -> TwoBodyScenario {
    TwoBodyScenario {
        grid: Grid1D::centered(256, 0.0, 64.0).expect("static grid"),
        m_a: 4.0,
        m_b: 4.0,
        packet_a: GaussianSpec::new(-10.0, 6.0, 2.0),
        packet_b: GaussianSpec::new(10.0, -6.0, 2.0),
        potential: PotentialSpec::with_interaction(
            PotentialTerm::gaussian_bump(16.0, 5.0).expect("static potential"),
        ),
        dt: 4e-3,
        t_final: 16.0,
        hbar: 1.0,
        sample_every: 250,
        absorber: None,
    }
}

/// A light projectile against a heavy partner `mass_ratio` times its mass.
/// As the ratio grows the partner freezes into a static scatterer. The
/// projectile comes in fast enough that every momentum component clears
/// the barrier: a slow projectile would split into transmitted and
/// reflected branches, and the recoil difference between those branches
/// entangles it with the partner no matter how heavy the partner is.
pub fn test_particle_scenario(mass_ratio: f64) -> TwoBodyScenario {
    TwoBodyScenario {
        grid: Grid1D::centered(256, 0.0, 64.0).expect("static grid"),
        m_a: 1.0,
        m_b: mass_ratio,
        packet_a: GaussianSpec::new(-8.0, 4.0, 1.0),
        packet_b: GaussianSpec::new(0.0, 0.0, 0.5),
        potential: PotentialSpec::with_interaction(
            PotentialTerm::gaussian_bump(1.0, 2.5).expect("static potential"),
        ),
        dt: 2e-3,
        t_final: 5.0,
        hbar: 1.0,
        sample_every: 250,
        absorber: None,
    }
}

/// Equal-mass scattering prepared as a product of centre-of-mass and
/// relative packets, for checking that the two pictures stay in step while
/// the particles entangle.
pub fn separability_scenario() -> ComScenario {
    ComScenario {
        grid: Grid1D::centered(256, 0.0, 64.0).expect("static grid"),
        mass: 1.0,
        cm: GaussianSpec::new(0.0, 0.0, 1.0),
        rel: GaussianSpec::new(-8.0, 2.0, 2.0),
        interaction: Some(PotentialTerm::gaussian_bump(3.0, 1.0).expect("static potential")),
        dt: 2e-3,
        t_final: 4.0,
        hbar: 1.0,
        sample_every: 200,
    }
}
