//! Ehrenfest comparison: packet centroids against Newtonian point particles.
//!
//! The planar evolution is exact quantum mechanics; alongside it a velocity
//! Verlet integrator moves two point masses under the same forces, seeded
//! from the packet means. For packets narrow against the potential's length
//! scale the two descriptions agree until interference or packet splitting
//! sets in, which is precisely the regime boundary worth measuring.

use super::fourier::spectral_mean_p;
use super::potential::PotentialSpec;
use super::split_step::SplitStep2D;
use super::wave::{grid_mean_x, grid_variance_x, FactorPair, TwoParticleWavefunction};
use crate::{Error, Result};

/// Two point masses under the forces of a [`PotentialSpec`], advanced by
/// velocity Verlet. Positions and velocities are public so callers can seed
/// and inspect them directly.
pub struct VerletPair {
    pub x_a: f64,
    pub v_a: f64,
    pub x_b: f64,
    pub v_b: f64,
    m_a: f64,
    m_b: f64,
    accel: (f64, f64),
}

fn forces(v: &PotentialSpec, x_a: f64, x_b: f64) -> (f64, f64) {
    let mut f_a = 0.0;
    let mut f_b = 0.0;
    if let Some(term) = &v.interaction {
        let slope = term.derivative(x_a - x_b);
        f_a -= slope;
        f_b += slope;
    }
    if let Some(term) = &v.external_a {
        f_a -= term.derivative(x_a);
    }
    if let Some(term) = &v.external_b {
        f_b -= term.derivative(x_b);
    }
    (f_a, f_b)
}

impl VerletPair {
    pub fn new(
        v: &PotentialSpec,
        x_a: f64,
        v_a: f64,
        x_b: f64,
        v_b: f64,
        m_a: f64,
        m_b: f64,
    ) -> Self {
        let (f_a, f_b) = forces(v, x_a, x_b);
        Self {
            x_a,
            v_a,
            x_b,
            v_b,
            m_a,
            m_b,
            accel: (f_a / m_a, f_b / m_b),
        }
    }

    pub fn step(&mut self, v: &PotentialSpec, dt: f64) {
        let (a_a, a_b) = self.accel;
        self.x_a += self.v_a * dt + 0.5 * a_a * dt * dt;
        self.x_b += self.v_b * dt + 0.5 * a_b * dt * dt;
        let (f_a, f_b) = forces(v, self.x_a, self.x_b);
        let next = (f_a / self.m_a, f_b / self.m_b);
        self.v_a += 0.5 * (a_a + next.0) * dt;
        self.v_b += 0.5 * (a_b + next.1) * dt;
        self.accel = next;
    }
}

pub struct ClassicalComparison {
    pub times: Vec<f64>,
    pub mean_a: Vec<f64>,
    pub mean_b: Vec<f64>,
    pub newton_a: Vec<f64>,
    pub newton_b: Vec<f64>,
}

impl ClassicalComparison {
    /// Largest centroid-versus-Newton gap over both particles and all
    /// sampled times.
    pub fn max_gap(&self) -> f64 {
        self.mean_a
            .iter()
            .zip(self.newton_a.iter())
            .chain(self.mean_b.iter().zip(self.newton_b.iter()))
            .map(|(m, c)| (m - c).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs the planar quantum evolution and the pointwise Newton trajectory
/// from the same initial data and returns both centroid histories.
///
/// Requires packets narrow against the interaction range (a fifth of it at
/// most), since wide packets average the force over regions where it turns,
/// and no single classical trajectory describes that.
pub fn classical_limit_propagate(
    pair: &FactorPair,
    v: &PotentialSpec,
    dt: f64,
    t_final: f64,
    hbar: f64,
    sample_every: usize,
) -> Result<ClassicalComparison> {
    if sample_every == 0 {
        return Err(Error::BadScenario("sample_every must be at least 1".into()));
    }
    let steps = (t_final / dt).round() as usize;
    if steps == 0 || (t_final - steps as f64 * dt).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::BadScenario(format!(
            "t_final = {t_final} is not a whole number of dt = {dt} steps"
        )));
    }
    if let Some(term) = &v.interaction {
        let widest = grid_variance_x(&pair.grid, &pair.psi_a)
            .max(grid_variance_x(&pair.grid, &pair.psi_b))
            .sqrt();
        if widest > term.range / 5.0 {
            return Err(Error::BadPacket(format!(
                "packet width {widest:.3} exceeds a fifth of the interaction range {}; \
                 the centroid comparison is not meaningful there",
                term.range
            )));
        }
    }

    let mut wf = TwoParticleWavefunction::from_factors(pair)?;
    let mut engine = SplitStep2D::for_wavefunction(&wf, v, dt, hbar)?;
    let mut newton = VerletPair::new(
        v,
        grid_mean_x(&pair.grid, &pair.psi_a),
        spectral_mean_p(&pair.grid, &pair.psi_a, hbar) / pair.m_a,
        grid_mean_x(&pair.grid, &pair.psi_b),
        spectral_mean_p(&pair.grid, &pair.psi_b, hbar) / pair.m_b,
        pair.m_a,
        pair.m_b,
    );

    let mut cmp = ClassicalComparison {
        times: Vec::new(),
        mean_a: Vec::new(),
        mean_b: Vec::new(),
        newton_a: Vec::new(),
        newton_b: Vec::new(),
    };
    let mut record = |t: f64, wf: &TwoParticleWavefunction, newton: &VerletPair| {
        cmp.times.push(t);
        cmp.mean_a.push(wf.mean_x_a());
        cmp.mean_b.push(wf.mean_x_b());
        cmp.newton_a.push(newton.x_a);
        cmp.newton_b.push(newton.x_b);
    };
    record(0.0, &wf, &newton);
    for step in 1..=steps {
        engine.step(&mut wf.amplitudes);
        newton.step(v, dt);
        if step % sample_every == 0 || step == steps {
            record(step as f64 * dt, &wf, &newton);
        }
    }
    Ok(cmp)
}
