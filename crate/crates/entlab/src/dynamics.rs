//! Time evolution engines and the instruments that watch them.
//!
//! Three propagators share a [`HamiltonianSchedule`]: exact state evolution
//! ([`propagate_exact`]), von Neumann density evolution
//! ([`propagate_density`]) and the nonlinear mean-field flow generated by the
//! effective one-body Hamiltonians ([`propagate_mean_field`]). The exact
//! propagator records an [`EvolutionTrace`] with everything the analysis
//! cares about: purity, top Schmidt weights, the bi-orthogonal coupling
//! coefficient, the factorised-generator balance residual
//! ([`fichtre_residual`]) and the overlap with a co-integrated mean-field
//! trajectory.
//!
//! [`purity_rate_check`] verifies the short-time law: at a product state the
//! purity has zero slope and curvature `-4 C / hbar^2`, with `C` the
//! coupling coefficient of the instantaneous Hamiltonian.

use ndarray::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::bipartite::{self, BipartiteState};
use crate::numerics::{
    dagger, hermitian_expm, hs_norm, kron, kron_vec, partial_trace_a, partial_trace_b, trace,
    vec_norm, DEFAULT_HERMITICITY_TOL,
};
use crate::random;
use crate::{Error, Result, C64};

/// One piecewise-constant segment of a schedule.
#[derive(Debug, Clone)]
pub struct Segment {
    pub duration: f64,
    pub hamiltonian: Array2<C64>,
}

/// Piecewise-constant Hamiltonian `H(t)`.
///
/// Each segment's propagator is computed once per run, so there is no
/// time-ordering error: within a segment the evolution is exact up to
/// roundoff.
#[derive(Debug, Clone)]
pub struct HamiltonianSchedule {
    segments: Vec<Segment>,
    dim: usize,
}

impl HamiltonianSchedule {
    pub fn new(segments: Vec<(f64, Array2<C64>)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::BadSchedule("no segments".into()));
        }
        let dim = segments[0].1.nrows();
        for (idx, (duration, h)) in segments.iter().enumerate() {
            if !duration.is_finite() || *duration <= 0.0 {
                return Err(Error::BadSchedule(format!(
                    "segment {idx} has nonpositive duration {duration}"
                )));
            }
            if h.dim() != (dim, dim) {
                return Err(Error::BadSchedule(format!(
                    "segment {idx} is {:?}, expected ({dim},{dim})",
                    h.dim()
                )));
            }
            crate::numerics::require_hermitian(h, DEFAULT_HERMITICITY_TOL)?;
        }
        Ok(Self {
            segments: segments
                .into_iter()
                .map(|(duration, hamiltonian)| Segment {
                    duration,
                    hamiltonian,
                })
                .collect(),
            dim,
        })
    }

    /// Single-segment schedule.
    pub fn constant(hamiltonian: Array2<C64>, duration: f64) -> Result<Self> {
        Self::new(vec![(duration, hamiltonian)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Steps per segment for an exact run: `dt` must divide every duration
    /// to within 1e-9.
    fn exact_steps(&self, dt: f64) -> Result<Vec<usize>> {
        if !(dt > 0.0) {
            return Err(Error::BadSchedule(format!("dt = {dt} must be positive")));
        }
        self.segments
            .iter()
            .enumerate()
            .map(|(idx, seg)| {
                let n = (seg.duration / dt).round();
                if n < 1.0 || (seg.duration - n * dt).abs() > 1e-9 {
                    Err(Error::BadSchedule(format!(
                        "dt = {dt} does not divide segment {idx} duration {}",
                        seg.duration
                    )))
                } else {
                    Ok(n as usize)
                }
            })
            .collect()
    }
}

/// Product ansatz carried by the mean-field propagator.
#[derive(Debug, Clone)]
pub struct MeanFieldState {
    pub psi_a: Array1<C64>,
    pub psi_b: Array1<C64>,
    pub time: f64,
}

impl MeanFieldState {
    pub fn new(psi_a: Array1<C64>, psi_b: Array1<C64>) -> Result<Self> {
        for psi in [&psi_a, &psi_b] {
            let norm = vec_norm(psi);
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalised {
                    norm,
                    tolerance: 1e-10,
                });
            }
        }
        Ok(Self {
            psi_a,
            psi_b,
            time: 0.0,
        })
    }
}

/// Per-step observables of an exact run.
///
/// Once the state entangles there is no longer a unique product reference,
/// so the columns fix one: `coupling_c` is evaluated at the leading Schmidt
/// pair of the current state, and `fichtre_residual` at the product of the
/// current reduced density matrices. Both coincide with the obvious
/// definitions as long as the state stays a product.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub purity: Vec<f64>,
    pub schmidt_top2: Vec<(f64, f64)>,
    pub coupling_c: Vec<f64>,
    pub fichtre_residual: Vec<f64>,
    pub fidelity_meanfield: Vec<f64>,
}

impl EvolutionTrace {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            purity: Vec::with_capacity(n),
            schmidt_top2: Vec::with_capacity(n),
            coupling_c: Vec::with_capacity(n),
            fichtre_residual: Vec::with_capacity(n),
            fidelity_meanfield: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn min_purity(&self) -> f64 {
        self.purity.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_fidelity(&self) -> f64 {
        self.fidelity_meanfield
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_coupling(&self) -> f64 {
        self.coupling_c.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_fichtre_residual(&self) -> f64 {
        self.fichtre_residual.iter().copied().fold(0.0, f64::max)
    }
}

/// Times and density-matrix snapshots from [`propagate_density`].
#[derive(Debug, Clone)]
pub struct DensityTrace {
    pub times: Vec<f64>,
    pub states: Vec<Array2<C64>>,
}

/// Mean-field trajectory from [`propagate_mean_field`].
#[derive(Debug, Clone)]
pub struct MeanFieldTrace {
    pub states: Vec<MeanFieldState>,
}

fn require_dim(h: &Array2<C64>, dim: usize) -> Result<()> {
    if h.dim() != (dim, dim) {
        return Err(Error::DimMismatch(format!(
            "operator is {:?}, expected ({dim},{dim})",
            h.dim()
        )));
    }
    Ok(())
}

/// Effective one-body generators of the mean-field flow at the product state
/// `psi_A (x) psi_B`:
///
/// `v_A = (I (x) <psi_B|) H (psi_A (x) psi_B)`
/// `v_B = (<psi_A| (x) I) H (psi_A (x) psi_B) - <H> psi_B`
///
/// The expectation is subtracted on the B side only, so that
/// `v_A (x) psi_B + psi_A (x) v_B = H (psi_A (x) psi_B)` exactly when the
/// coupling coefficient vanishes.
pub fn effective_generators(
    h: &Array2<C64>,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
) -> Result<(Array1<C64>, Array1<C64>)> {
    let (d_a, d_b) = (psi_a.len(), psi_b.len());
    require_dim(h, d_a * d_b)?;

    let w_flat = h.dot(&kron_vec(psi_a, psi_b));
    let w = Array2::from_shape_vec((d_a, d_b), w_flat.to_vec()).expect("dims match");

    let pb_conj = psi_b.mapv(|z| z.conj());
    let v_a = w.dot(&pb_conj);

    let pa_conj = psi_a.mapv(|z| z.conj());
    let row = pa_conj.dot(&w);
    let expectation: C64 = row.iter().zip(pb_conj.iter()).map(|(r, c)| r * c).sum();
    let v_b = &row - &(psi_b * expectation);

    Ok((v_a, v_b))
}

/// One RK4 step of the coupled mean-field equations
/// `i hbar d/dt psi_X = v_X(psi_A, psi_B)`, without renormalisation.
fn rk4_mean_field(
    h: &Array2<C64>,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
    dt: f64,
    hbar: f64,
) -> Result<(Array1<C64>, Array1<C64>)> {
    let factor = C64::new(0.0, -1.0 / hbar);
    let deriv = |a: &Array1<C64>, b: &Array1<C64>| -> Result<(Array1<C64>, Array1<C64>)> {
        let (va, vb) = effective_generators(h, a, b)?;
        Ok((va * factor, vb * factor))
    };

    let (k1a, k1b) = deriv(psi_a, psi_b)?;
    let half = C64::new(dt / 2.0, 0.0);
    let (k2a, k2b) = deriv(&(psi_a + &(&k1a * half)), &(psi_b + &(&k1b * half)))?;
    let (k3a, k3b) = deriv(&(psi_a + &(&k2a * half)), &(psi_b + &(&k2b * half)))?;
    let full = C64::new(dt, 0.0);
    let (k4a, k4b) = deriv(&(psi_a + &(&k3a * full)), &(psi_b + &(&k3b * full)))?;

    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let a = psi_a + &((k1a + &k2a * two + &k3a * two + k4a) * sixth);
    let b = psi_b + &((k1b + &k2b * two + &k3b * two + k4b) * sixth);
    Ok((a, b))
}

/// Advances a mean-field factor pair one step: RK4, norm-drift check,
/// renormalisation. The drift bound rejects steps the integrator cannot
/// resolve rather than silently hiding them behind the renormalisation.
fn mean_field_step(
    h: &Array2<C64>,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
    dt: f64,
    hbar: f64,
) -> Result<(Array1<C64>, Array1<C64>)> {
    let (mut a, mut b) = rk4_mean_field(h, psi_a, psi_b, dt, hbar)?;
    let (na, nb) = (vec_norm(&a), vec_norm(&b));
    for n in [na, nb] {
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::StepTooLarge(format!(
                "mean-field norm drifted to {n} in one step; reduce dt"
            )));
        }
    }
    a.mapv_inplace(|z| z / na);
    b.mapv_inplace(|z| z / nb);
    Ok((a, b))
}

/// Exact Schrödinger propagation of `psi0` under the schedule, sampling the
/// full instrument set every step (including t = 0).
///
/// Each segment's step propagator `exp(-i dt H / hbar)` is built once by
/// eigendecomposition, so norms survive to roundoff. A mean-field trajectory
/// seeded from the leading Schmidt factors of `psi0` is co-integrated at the
/// same step size to fill the `fidelity_meanfield` column; `dt` therefore has
/// to resolve the mean-field flow as well (the co-integration rejects steps
/// whose RK4 norm drift exceeds 1e-6).
pub fn propagate_exact(
    schedule: &HamiltonianSchedule,
    psi0: &BipartiteState,
    dt: f64,
    hbar: f64,
) -> Result<EvolutionTrace> {
    let (d_a, d_b) = (psi0.d_a(), psi0.d_b());
    if schedule.dim() != d_a * d_b {
        return Err(Error::DimMismatch(format!(
            "schedule dim {} vs state dim {}",
            schedule.dim(),
            d_a * d_b
        )));
    }
    require_hbar(hbar)?;
    let steps = schedule.exact_steps(dt)?;
    let total_steps: usize = steps.iter().sum();

    // Mean-field reference starts from the best product approximation.
    let dec = bipartite::schmidt_decompose(psi0)?;
    let mut mf_a = dec.left_basis[0].clone();
    let mut mf_b = dec.right_basis[0].clone();

    let mut psi = psi0.amplitudes().clone();
    let mut trace = EvolutionTrace::with_capacity(total_steps + 1);
    let mut t = 0.0;
    record_sample(
        &mut trace,
        t,
        &psi,
        d_a,
        d_b,
        &mf_a,
        &mf_b,
        &schedule.segments()[0].hamiltonian,
    )?;

    for (seg, &n_steps) in schedule.segments().iter().zip(steps.iter()) {
        let u = hermitian_expm(&seg.hamiltonian, -dt / hbar)?;
        for _ in 0..n_steps {
            psi = u.dot(&psi);
            let (a, b) = mean_field_step(&seg.hamiltonian, &mf_a, &mf_b, dt, hbar)?;
            mf_a = a;
            mf_b = b;
            t += dt;
            record_sample(
                &mut trace,
                t,
                &psi,
                d_a,
                d_b,
                &mf_a,
                &mf_b,
                &seg.hamiltonian,
            )?;
        }
    }
    Ok(trace)
}

#[allow(clippy::too_many_arguments)]
fn record_sample(
    trace: &mut EvolutionTrace,
    t: f64,
    psi: &Array1<C64>,
    d_a: usize,
    d_b: usize,
    mf_a: &Array1<C64>,
    mf_b: &Array1<C64>,
    h: &Array2<C64>,
) -> Result<()> {
    let m = Array2::from_shape_vec((d_a, d_b), psi.to_vec()).expect("dims match");

    // Purity via the Gram route; Schmidt weights and leading pair via SVD.
    let rho_a = m.dot(&dagger(&m));
    let purity = hs_norm(&rho_a).powi(2);

    use ndarray_linalg::SVD;
    let (u, sigma, vt) = m.svd(true, true)?;
    let u = u.expect("requested");
    let vt = vt.expect("requested");
    let top2 = (sigma[0], if sigma.len() > 1 { sigma[1] } else { 0.0 });
    let lead_a = u.column(0).to_owned();
    let lead_b = vt.row(0).to_owned();

    let coupling = bipartite::coupling_coefficient(h, &lead_a, &lead_b)?;

    let rho_b = m.t().dot(&m.mapv(|z| z.conj()));
    let residual = fichtre_residual(h, &rho_a, &rho_b)?;

    // Overlap <mf_A (x) mf_B | psi> without forming the product state.
    let overlap: C64 = {
        let tmp = m.dot(&mf_b.mapv(|z| z.conj()));
        mf_a.iter().zip(tmp.iter()).map(|(x, y)| x.conj() * y).sum()
    };

    trace.times.push(t);
    trace.purity.push(purity);
    trace.schmidt_top2.push(top2);
    trace.coupling_c.push(coupling);
    trace.fichtre_residual.push(residual);
    trace.fidelity_meanfield.push(overlap.norm_sqr());
    Ok(())
}

fn require_hbar(hbar: f64) -> Result<()> {
    if !(hbar > 0.0) || !hbar.is_finite() {
        return Err(Error::BadScenario(format!(
            "hbar = {hbar} must be positive"
        )));
    }
    Ok(())
}

fn require_density(rho: &Array2<C64>, label: &str) -> Result<()> {
    let dev = crate::numerics::hermiticity_deviation(rho);
    if dev > 1e-10 {
        return Err(Error::NotDensity(format!(
            "{label} not Hermitian (deviation {dev:.3e})"
        )));
    }
    let tr = trace(rho).re;
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::NotDensity(format!("{label} has trace {tr}")));
    }
    let (vals, _) = crate::numerics::hermitian_eigh(rho)?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        return Err(Error::NotDensity(format!(
            "{label} has negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

/// Von Neumann propagation `rho -> U rho U^dag` with the same stepping rules
/// as [`propagate_exact`]. Snapshots are recorded every step.
pub fn propagate_density(
    schedule: &HamiltonianSchedule,
    rho0: &Array2<C64>,
    dt: f64,
    hbar: f64,
) -> Result<DensityTrace> {
    require_dim(rho0, schedule.dim())?;
    require_hbar(hbar)?;
    require_density(rho0, "rho0")?;
    let steps = schedule.exact_steps(dt)?;

    let mut rho = rho0.clone();
    let mut out = DensityTrace {
        times: vec![0.0],
        states: vec![rho.clone()],
    };
    let mut t = 0.0;
    for (seg, &n_steps) in schedule.segments().iter().zip(steps.iter()) {
        let u = hermitian_expm(&seg.hamiltonian, -dt / hbar)?;
        let u_dag = dagger(&u);
        for _ in 0..n_steps {
            rho = u.dot(&rho).dot(&u_dag);
            t += dt;
            out.times.push(t);
            out.states.push(rho.clone());
        }
    }
    Ok(out)
}

/// Integrates the mean-field equations on their own, one RK4 step at a time.
///
/// `dt` need not divide the segment durations: each segment is covered by
/// full `dt` steps plus one shorter remainder step when needed, so schedules
/// and steps can be mixed freely.
pub fn propagate_mean_field(
    schedule: &HamiltonianSchedule,
    mf0: &MeanFieldState,
    dt: f64,
    hbar: f64,
) -> Result<MeanFieldTrace> {
    let (d_a, d_b) = (mf0.psi_a.len(), mf0.psi_b.len());
    if schedule.dim() != d_a * d_b {
        return Err(Error::DimMismatch(format!(
            "schedule dim {} vs product dims {d_a}x{d_b}",
            schedule.dim()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::BadSchedule(format!("dt = {dt} must be positive")));
    }
    require_hbar(hbar)?;

    let mut a = mf0.psi_a.clone();
    let mut b = mf0.psi_b.clone();
    let mut t = mf0.time;
    let mut states = vec![MeanFieldState {
        psi_a: a.clone(),
        psi_b: b.clone(),
        time: t,
    }];

    for seg in schedule.segments() {
        let mut remaining = seg.duration;
        while remaining > 1e-12 {
            let step = dt.min(remaining);
            let (na, nb) = mean_field_step(&seg.hamiltonian, &a, &b, step, hbar)?;
            a = na;
            b = nb;
            t += step;
            remaining -= step;
            states.push(MeanFieldState {
                psi_a: a.clone(),
                psi_b: b.clone(),
                time: t,
            });
        }
    }
    Ok(MeanFieldTrace { states })
}

/// Residual of the factorised-generator balance at the product density
/// `rho_A (x) rho_B`:
///
/// `|| H rho - E_A (x) rho_B - rho_A (x) E_B ||_HS`
///
/// with `rho = rho_A (x) rho_B`, `E_A = Tr_B(H rho)` and
/// `E_B = Tr_A(H rho) - Tr(H rho) rho_B`. A vanishing residual means the
/// product of the reductions already carries the full action of `H`, so a
/// factorised state stays factorised under von Neumann evolution.
pub fn fichtre_residual(h: &Array2<C64>, rho_a: &Array2<C64>, rho_b: &Array2<C64>) -> Result<f64> {
    let (d_a, d_b) = (rho_a.nrows(), rho_b.nrows());
    require_dim(h, d_a * d_b)?;
    require_density(rho_a, "rho_A")?;
    require_density(rho_b, "rho_B")?;

    let rho = kron(rho_a, rho_b)?;
    let h_rho = h.dot(&rho);
    let e_a = partial_trace_b(&h_rho, d_a, d_b)?;
    let full_trace = trace(&h_rho);
    let e_b = partial_trace_a(&h_rho, d_a, d_b)? - rho_b * full_trace;

    let residual = &h_rho - &kron(&e_a, rho_b)? - &kron(rho_a, &e_b)?;
    Ok(hs_norm(&residual))
}

/// Finite-difference verification of the short-time purity law at a product
/// state, produced by [`purity_rate_check`].
#[derive(Debug, Clone)]
pub struct PurityRateCheck {
    pub delta_ts: Vec<f64>,
    /// Central first-derivative estimates `(P(+dt) - P(-dt)) / 2 dt`.
    pub first_derivative: Vec<f64>,
    /// Central curvature estimates `(P(+dt) - 2 P(0) + P(-dt)) / dt^2`.
    pub curvature: Vec<f64>,
    /// Two-level Richardson extrapolation of the two finest curvatures.
    pub curvature_richardson: f64,
    /// `-4 C / hbar^2` with `C` the coupling coefficient.
    pub analytic_curvature: f64,
}

impl PurityRateCheck {
    /// Least-squares slope of `ln|dP/dt|` against `ln dt`. Returns `None`
    /// when any estimate is exactly zero (time-symmetric dynamics), where
    /// the slope is meaningless.
    pub fn first_derivative_slope(&self) -> Option<f64> {
        if self.first_derivative.contains(&0.0) {
            return None;
        }
        let xs: Vec<f64> = self.delta_ts.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = self.first_derivative.iter().map(|d| d.abs().ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| (x - mx) * (y - my))
            .sum();
        Some(sxy / sxx)
    }
}

/// Propagates `psi_A (x) psi_B` exactly for `+dt` and `-dt` at each step
/// size and differences the purities. The step sizes must descend by exact
/// factors of two (relative tolerance 1e-12) so the Richardson combination
/// `(4 D(dt/2) - D(dt)) / 3` removes the leading error term.
pub fn purity_rate_check(
    h: &Array2<C64>,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
    hbar: f64,
    delta_ts: &[f64],
) -> Result<PurityRateCheck> {
    let (d_a, d_b) = (psi_a.len(), psi_b.len());
    require_dim(h, d_a * d_b)?;
    require_hbar(hbar)?;
    if delta_ts.len() < 2 {
        return Err(Error::BadScenario("need at least two step sizes".into()));
    }
    for w in delta_ts.windows(2) {
        if !(w[0] > 0.0) || (w[1] / w[0] - 0.5).abs() > 1e-12 {
            return Err(Error::BadScenario(format!(
                "step sizes must descend by factors of two, got {} then {}",
                w[0], w[1]
            )));
        }
    }

    let psi0 = kron_vec(psi_a, psi_b);
    let purity_of = |psi: &Array1<C64>| -> f64 {
        let m = Array2::from_shape_vec((d_a, d_b), psi.to_vec()).expect("dims match");
        let rho_a = m.dot(&dagger(&m));
        hs_norm(&rho_a).powi(2)
    };
    let p0 = purity_of(&psi0);

    let mut first = Vec::with_capacity(delta_ts.len());
    let mut curv = Vec::with_capacity(delta_ts.len());
    for &delta in delta_ts {
        let u_plus = hermitian_expm(h, -delta / hbar)?;
        let u_minus = hermitian_expm(h, delta / hbar)?;
        let p_plus = purity_of(&u_plus.dot(&psi0));
        let p_minus = purity_of(&u_minus.dot(&psi0));
        first.push((p_plus - p_minus) / (2.0 * delta));
        curv.push((p_plus - 2.0 * p0 + p_minus) / (delta * delta));
    }

    let n = curv.len();
    let curvature_richardson = (4.0 * curv[n - 1] - curv[n - 2]) / 3.0;
    let c = bipartite::coupling_coefficient(h, psi_a, psi_b)?;
    Ok(PurityRateCheck {
        delta_ts: delta_ts.to_vec(),
        first_derivative: first,
        curvature: curv,
        curvature_richardson,
        analytic_curvature: -4.0 * c / (hbar * hbar),
    })
}

/// Random search for a product state the Hamiltonian actually couples:
/// draws up to `max_attempts` seeded product states and returns the first
/// with coupling coefficient above `threshold`.
pub fn find_coupled_product_state(
    h: &Array2<C64>,
    d_a: usize,
    d_b: usize,
    max_attempts: usize,
    threshold: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(Array1<C64>, Array1<C64>, f64)> {
    for _ in 0..max_attempts {
        let (psi_a, psi_b) = random::product_state(rng, d_a, d_b);
        if let Ok(c) = bipartite::coupling_coefficient(h, &psi_a, &psi_b) {
            if c > threshold {
                return Some((psi_a, psi_b, c));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::{minus_x, plus_x, sigma_zz};
    use crate::numerics::identity;
    use approx::assert_abs_diff_eq;

    fn plus_plus() -> BipartiteState {
        BipartiteState::from_product(&plus_x(), &plus_x()).unwrap()
    }

    #[test]
    fn schedule_validation_rejects_bad_inputs() {
        assert!(matches!(
            HamiltonianSchedule::new(vec![]),
            Err(Error::BadSchedule(_))
        ));
        assert!(matches!(
            HamiltonianSchedule::constant(sigma_zz(), -1.0),
            Err(Error::BadSchedule(_))
        ));
        let non_hermitian = array![
            [C64::new(0., 0.), C64::new(1., 0.)],
            [C64::new(0., 0.), C64::new(0., 0.)]
        ];
        assert!(HamiltonianSchedule::constant(non_hermitian, 1.0).is_err());

        let sched = HamiltonianSchedule::constant(sigma_zz(), 1.0).unwrap();
        assert!(sched.exact_steps(0.3).is_err());
        assert_eq!(sched.exact_steps(0.25).unwrap(), vec![4]);
    }

    #[test]
    fn zero_hamiltonian_freezes_the_state() {
        let sched = HamiltonianSchedule::constant(Array2::zeros((4, 4)), 1.0).unwrap();
        let psi0 = plus_plus();
        let trace = propagate_exact(&sched, &psi0, 0.1, 1.0).unwrap();
        assert_eq!(trace.len(), 11);
        for k in 0..trace.len() {
            assert_abs_diff_eq!(trace.purity[k], 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(trace.fidelity_meanfield[k], 1.0, epsilon = 1e-13);
        }
    }

    /// Closed-form reference for the sigma_z (x) sigma_z quench on |+x,+x>:
    /// psi(t) = cos(t/hbar) |++> - i sin(t/hbar) |-->.
    #[test]
    fn sigma_zz_quench_matches_closed_form() {
        let hbar = 1.0;
        let dt = 1e-2;
        let t_final = 2.0;
        let sched = HamiltonianSchedule::constant(sigma_zz(), t_final).unwrap();
        let trace = propagate_exact(&sched, &plus_plus(), dt, hbar).unwrap();

        let pp = kron_vec(&plus_x(), &plus_x());
        let mm = kron_vec(&minus_x(), &minus_x());

        // Spot-check the state itself at a few sampled times.
        let u = hermitian_expm(&sigma_zz(), -dt / hbar).unwrap();
        let mut psi = plus_plus().amplitudes().clone();
        for step in 1..=200 {
            psi = u.dot(&psi);
            if step % 50 == 0 {
                let t = dt * step as f64;
                let expected = &pp * C64::new(t.cos(), 0.0) + &mm * C64::new(0.0, -t.sin());
                let dev = psi
                    .iter()
                    .zip(expected.iter())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0_f64, f64::max);
                assert!(dev <= 1e-12, "state deviates by {dev} at t = {t}");
            }
        }

        for (k, &t) in trace.times.iter().enumerate() {
            let expected_purity = 1.0 - 0.5 * (2.0 * t).sin().powi(2);
            assert_abs_diff_eq!(trace.purity[k], expected_purity, epsilon = 1e-10);
            // Mean field is frozen by symmetry, so the overlap is cos^2.
            assert_abs_diff_eq!(
                trace.fidelity_meanfield[k],
                t.cos().powi(2),
                epsilon = 1e-10
            );
        }

        // The frozen mean field is exact: v_A = v_B = 0 at |+x,+x>.
        let (va, vb) = effective_generators(&sigma_zz(), &plus_x(), &plus_x()).unwrap();
        assert!(vec_norm(&va) <= 1e-15);
        assert!(vec_norm(&vb) <= 1e-15);
    }

    #[test]
    fn noninteracting_schedules_preserve_products() {
        let mut rng = random::rng_from_seed(61);
        for _ in 0..5 {
            let segments = (0..3)
                .map(|_| (0.2, random::factorisable_hamiltonian(&mut rng, 2, 3)))
                .collect();
            let sched = HamiltonianSchedule::new(segments).unwrap();
            let (a, b) = random::product_state(&mut rng, 2, 3);
            let psi0 = BipartiteState::from_product(&a, &b).unwrap();
            let trace = propagate_exact(&sched, &psi0, 1e-3, 1.0).unwrap();

            assert!(trace.min_purity() >= 1.0 - 1e-10);
            assert!(trace.max_coupling() <= 1e-20);
            assert!(trace.max_fichtre_residual() <= 1e-11);
            // Lemma contract: fidelity >= 1 - 1e-8 per unit time at dt = 1e-3.
            assert!(trace.min_fidelity() >= 1.0 - 1e-8 * sched.total_duration());
        }
    }

    #[test]
    fn norm_is_preserved_along_exact_runs() {
        let mut rng = random::rng_from_seed(62);
        let h = random::gaussian_hermitian(&mut rng, 6);
        let sched = HamiltonianSchedule::constant(h, 1.0).unwrap();
        let psi0 = BipartiteState::new(2, 3, random::state_vector(&mut rng, 6)).unwrap();

        let u = hermitian_expm(&sched.segments()[0].hamiltonian, -1e-3).unwrap();
        let mut psi = psi0.amplitudes().clone();
        for _ in 0..1000 {
            psi = u.dot(&psi);
        }
        assert!((vec_norm(&psi) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn effective_generators_match_direct_substitution() {
        let mut rng = random::rng_from_seed(63);
        let (d_a, d_b) = (3, 2);
        let h_a = random::gaussian_hermitian(&mut rng, d_a);
        let h_b = random::gaussian_hermitian(&mut rng, d_b);
        let h = kron(&h_a, &identity(d_b)).unwrap() + kron(&identity(d_a), &h_b).unwrap();
        let (psi_a, psi_b) = random::product_state(&mut rng, d_a, d_b);

        let (va, vb) = effective_generators(&h, &psi_a, &psi_b).unwrap();

        let exp_b: C64 = {
            let hb_psi = h_b.dot(&psi_b);
            psi_b
                .iter()
                .zip(hb_psi.iter())
                .map(|(p, q)| p.conj() * q)
                .sum()
        };
        let va_expected = h_a.dot(&psi_a) + &psi_a * exp_b;
        let vb_expected = h_b.dot(&psi_b) - &psi_b * exp_b;
        let dev_a = va
            .iter()
            .zip(va_expected.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0_f64, f64::max);
        let dev_b = vb
            .iter()
            .zip(vb_expected.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0_f64, f64::max);
        assert!(dev_a <= 1e-12 && dev_b <= 1e-12);

        // Reconstruction identity: C = 0 here, so the generators carry the
        // whole action of H on the product.
        let lhs = h.dot(&kron_vec(&psi_a, &psi_b));
        let rhs = kron_vec(&va, &psi_b) + kron_vec(&psi_a, &vb);
        let dev = lhs
            .iter()
            .zip(rhs.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0_f64, f64::max);
        assert!(dev <= 1e-12);
    }

    #[test]
    fn reconstruction_identity_holds_whenever_coupling_vanishes() {
        let mut rng = random::rng_from_seed(64);
        for _ in 0..100 {
            let h = random::factorisable_hamiltonian(&mut rng, 2, 2);
            let (psi_a, psi_b) = random::product_state(&mut rng, 2, 2);
            let c = bipartite::coupling_coefficient(&h, &psi_a, &psi_b).unwrap();
            assert!(c <= 1e-14);
            let (va, vb) = effective_generators(&h, &psi_a, &psi_b).unwrap();
            let lhs = h.dot(&kron_vec(&psi_a, &psi_b));
            let rhs = kron_vec(&va, &psi_b) + kron_vec(&psi_a, &vb);
            let dev = lhs
                .iter()
                .zip(rhs.iter())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0_f64, f64::max);
            assert!(dev <= 1e-10);
        }
    }

    #[test]
    fn mean_field_matches_exact_for_noninteracting_schedules() {
        let mut rng = random::rng_from_seed(65);
        let h = random::factorisable_hamiltonian(&mut rng, 2, 2);
        let sched = HamiltonianSchedule::constant(h.clone(), 1.0).unwrap();
        let (a0, b0) = random::product_state(&mut rng, 2, 2);
        let mf0 = MeanFieldState::new(a0.clone(), b0.clone()).unwrap();

        let mf = propagate_mean_field(&sched, &mf0, 1e-3, 1.0).unwrap();
        let last = mf.states.last().unwrap();
        assert_abs_diff_eq!(last.time, 1.0, epsilon = 1e-9);

        let u = hermitian_expm(&h, -1.0).unwrap();
        let exact = u.dot(&kron_vec(&a0, &b0));
        let product = kron_vec(&last.psi_a, &last.psi_b);
        let overlap: C64 = product
            .iter()
            .zip(exact.iter())
            .map(|(p, e)| p.conj() * e)
            .sum();
        assert!(overlap.norm_sqr() >= 1.0 - 1e-8);
    }

    #[test]
    fn mean_field_rejects_oversized_steps() {
        let mut rng = random::rng_from_seed(66);
        let h = random::gaussian_hermitian(&mut rng, 4) * C64::new(50.0, 0.0);
        let sched = HamiltonianSchedule::constant(h, 1.0).unwrap();
        let (a0, b0) = random::product_state(&mut rng, 2, 2);
        let mf0 = MeanFieldState::new(a0, b0).unwrap();
        assert!(matches!(
            propagate_mean_field(&sched, &mf0, 0.5, 1.0),
            Err(Error::StepTooLarge(_))
        ));
    }

    #[test]
    fn density_of_projector_follows_the_pure_state() {
        let mut rng = random::rng_from_seed(67);
        let h = random::gaussian_hermitian(&mut rng, 4);
        let sched = HamiltonianSchedule::constant(h, 0.5).unwrap();
        let psi0 = BipartiteState::new(2, 2, random::state_vector(&mut rng, 4)).unwrap();

        let dens = propagate_density(&sched, &psi0.density(), 1e-2, 1.0).unwrap();
        // Re-run the pure state and compare projectors at every sample.
        let u = hermitian_expm(&sched.segments()[0].hamiltonian, -1e-2).unwrap();
        let mut psi = psi0.amplitudes().clone();
        for k in 1..dens.times.len() {
            psi = u.dot(&psi);
            let proj = Array2::from_shape_fn((4, 4), |(r, c)| psi[r] * psi[c].conj());
            let dist = hs_norm(&(&dens.states[k] - &proj));
            assert!(dist <= 1e-10, "snapshot {k} deviates by {dist}");
        }
    }

    #[test]
    fn density_propagation_rejects_invalid_inputs() {
        let sched = HamiltonianSchedule::constant(sigma_zz(), 1.0).unwrap();
        let not_normalised = identity(4);
        assert!(matches!(
            propagate_density(&sched, &not_normalised, 0.1, 1.0),
            Err(Error::NotDensity(_))
        ));
    }

    #[test]
    fn stationary_counterexample_violates_the_balance() {
        // H equal to a mixed product density: the state never moves, yet the
        // factorised-generator balance fails, so stationarity is not
        // explained by the balance holding.
        let mut rng = random::rng_from_seed(68);
        let rho_a = random::density_matrix(&mut rng, 2);
        let rho_b = random::density_matrix(&mut rng, 2);
        let rho = kron(&rho_a, &rho_b).unwrap();
        let sched = HamiltonianSchedule::constant(rho.clone(), 1.0).unwrap();

        let trace = propagate_density(&sched, &rho, 1e-2, 1.0).unwrap();
        for state in &trace.states {
            assert!(hs_norm(&(state - &rho)) <= 1e-10);
        }

        let residual = fichtre_residual(&rho, &rho_a, &rho_b).unwrap();
        assert!(residual > 1e-3, "residual {residual} unexpectedly small");
    }

    #[test]
    fn maximally_mixed_state_is_stationary_under_any_hamiltonian() {
        let mut rng = random::rng_from_seed(69);
        let h = random::gaussian_hermitian(&mut rng, 6);
        let sched = HamiltonianSchedule::constant(h, 0.4).unwrap();
        let rho0 = identity(6) / C64::new(6.0, 0.0);
        let trace = propagate_density(&sched, &rho0, 1e-2, 1.0).unwrap();
        for state in &trace.states {
            assert!(hs_norm(&(state - &rho0)) <= 1e-12);
        }
    }

    #[test]
    fn balance_residual_vanishes_for_noninteracting_hamiltonians() {
        let mut rng = random::rng_from_seed(70);
        for _ in 0..20 {
            let h = random::factorisable_hamiltonian(&mut rng, 2, 3);
            let rho_a = random::density_matrix(&mut rng, 2);
            let rho_b = random::density_matrix(&mut rng, 3);
            let residual = fichtre_residual(&h, &rho_a, &rho_b).unwrap();
            assert!(residual <= 1e-11, "residual {residual}");
        }
    }

    #[test]
    fn balance_residual_vanishes_for_pure_products_with_zero_coupling() {
        // Independent cross-check against the vector identity: for pure
        // rho's the balance is equivalent to the generator reconstruction.
        let mut rng = random::rng_from_seed(71);
        for _ in 0..10 {
            let (psi_a, psi_b) = random::product_state(&mut rng, 2, 2);
            let proj = |v: &Array1<C64>| {
                Array2::from_shape_fn((v.len(), v.len()), |(r, c)| v[r] * v[c].conj())
            };
            let h = random::factorisable_hamiltonian(&mut rng, 2, 2);
            let c = bipartite::coupling_coefficient(&h, &psi_a, &psi_b).unwrap();
            assert!(c <= 1e-14);
            let residual = fichtre_residual(&h, &proj(&psi_a), &proj(&psi_b)).unwrap();
            assert!(residual <= 1e-11);
        }
    }

    #[test]
    fn purity_rate_for_sigma_zz_hits_the_analytic_curvature() {
        let check = purity_rate_check(
            &sigma_zz(),
            &plus_x(),
            &plus_x(),
            1.0,
            &[0.02, 0.01, 0.005, 0.0025],
        )
        .unwrap();
        assert_abs_diff_eq!(check.analytic_curvature, -4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(check.curvature_richardson, -4.0, epsilon = 1e-8);
        // P(t) = 1 - sin^2(2t)/2 is even in t, so the central first
        // derivative vanishes identically and the slope is undefined.
        for d in &check.first_derivative {
            assert!(d.abs() <= 1e-10);
        }
    }

    #[test]
    fn purity_rate_for_noninteracting_hamiltonian_is_flat() {
        let mut rng = random::rng_from_seed(72);
        let h = random::factorisable_hamiltonian(&mut rng, 2, 2);
        let (psi_a, psi_b) = random::product_state(&mut rng, 2, 2);
        let check = purity_rate_check(&h, &psi_a, &psi_b, 1.0, &[0.08, 0.04, 0.02]).unwrap();
        // The coupling coefficient is a sum of squared residuals, so it only
        // reaches zero up to squared roundoff.
        assert!(check.analytic_curvature.abs() <= 1e-20);
        for d in &check.first_derivative {
            assert!(d.abs() <= 1e-10);
        }
        assert!(check.curvature_richardson.abs() <= 1e-10);
    }

    #[test]
    fn purity_rate_matches_coupling_on_random_instances() {
        let mut rng = random::rng_from_seed(73);
        for _ in 0..3 {
            let h = random::gaussian_hermitian(&mut rng, 9);
            let (psi_a, psi_b) = random::product_state(&mut rng, 3, 3);
            let check =
                purity_rate_check(&h, &psi_a, &psi_b, 1.0, &[0.02, 0.01, 0.005, 0.0025]).unwrap();
            let rel = (check.curvature_richardson - check.analytic_curvature).abs()
                / check.analytic_curvature.abs();
            assert!(rel <= 1e-4, "relative curvature error {rel}");
            let slope = check.first_derivative_slope().expect("generic complex H");
            assert!((slope - 2.0).abs() <= 0.2, "slope {slope}");
        }
    }

    #[test]
    fn purity_rate_validates_the_step_list() {
        let h = sigma_zz();
        let err = purity_rate_check(&h, &plus_x(), &plus_x(), 1.0, &[0.02, 0.015]);
        assert!(matches!(err, Err(Error::BadScenario(_))));
    }

    #[test]
    fn coupled_product_states_are_easy_to_find_for_interacting_hamiltonians() {
        let mut rng = random::rng_from_seed(74);
        for _ in 0..5 {
            let h = random::gaussian_hermitian(&mut rng, 6);
            let dec = bipartite::factorise_hamiltonian(&h, 2, 3).unwrap();
            assert!(dec.coupling_norm > 0.1, "random draw degenerate");
            let found = find_coupled_product_state(&h, 2, 3, 200, 1e-6, &mut rng);
            assert!(found.is_some());
        }
    }

    #[test]
    fn hbar_scales_the_clock() {
        // Doubling hbar halves the phase advanced per unit time.
        let sched = HamiltonianSchedule::constant(sigma_zz(), 1.0).unwrap();
        let trace_fast = propagate_exact(&sched, &plus_plus(), 1e-2, 1.0).unwrap();
        let trace_slow = propagate_exact(&sched, &plus_plus(), 1e-2, 2.0).unwrap();
        let p_fast = trace_fast.purity.last().unwrap();
        let expected_fast = 1.0 - 0.5 * (2.0_f64).sin().powi(2);
        let p_slow = trace_slow.purity.last().unwrap();
        let expected_slow = 1.0 - 0.5 * (1.0_f64).sin().powi(2);
        assert_abs_diff_eq!(*p_fast, expected_fast, epsilon = 1e-10);
        assert_abs_diff_eq!(*p_slow, expected_slow, epsilon = 1e-10);
    }
}
