//! From validated config to finished run: build the physics objects,
//! propagate, grade the requested checks, and write the outputs.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;

use entlab::bipartite::{plus_x, sigma_zz, BipartiteState};
use entlab::continuum::{
    AbsorberSpec, GaussianSpec, Grid1D, PotentialSpec, PotentialTerm, TwoBodyScenario,
};
use entlab::dynamics::{propagate_exact, purity_rate_check, HamiltonianSchedule};
use entlab::random;
use entlab::C64;

use crate::config::{
    CheckKind, HamiltonianSpec, Mode, ScenarioConfig, StateSpec, TermConfig, TermKind,
    OUTPUT_DIR_ENV,
};
use crate::report::{continuum_csv, finite_csv, write_atomic, CheckRecord, RunReport};

/// Step sizes for the curvature check, descending by exact halves so the
/// Richardson combination is well defined.
const CURVATURE_DELTA_TS: [f64; 3] = [0.08, 0.04, 0.02];

/// Failure modes that map to distinct process exit codes. A run whose
/// checks fail is not an error; it comes back as a report with
/// `passed = false` and exits with code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unusable configuration or input data; exit code 2.
    #[error("{0}")]
    Config(String),
    /// A numerical precondition failed (non-Hermitian matrix, unstable
    /// step size, packet off the grid); exit code 3.
    #[error("{0}")]
    Numerical(#[from] entlab::Error),
    /// Filesystem trouble; exit code 4.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

/// `ENTLAB_OUTPUT_DIR` wins over the configured directory, which wins over
/// the working directory.
pub fn resolve_output_dir(configured: Option<&Path>) -> PathBuf {
    if let Ok(dir) = env::var(OUTPUT_DIR_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    configured
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs a finite or continuum scenario end to end: propagate, grade the
/// requested checks, write the CSV trace and then the JSON report. Nothing
/// is written until the run itself has succeeded, and each file lands
/// atomically, so a crash never leaves a half-written table behind.
pub fn run_scenario(config: &ScenarioConfig, scenario_id: &str) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let (checks, csv) = match config.mode {
        Mode::Finite => run_finite(config)?,
        Mode::Continuum => run_continuum(config)?,
        Mode::Verify => {
            return Err(CliError::Config(
                "verify-mode configs are dispatched to the check suites, not run_scenario".into(),
            ))
        }
    };

    let dir = resolve_output_dir(config.output.dir.as_deref());
    fs::create_dir_all(&dir).map_err(CliError::io(format!(
        "cannot create output directory {}",
        dir.display()
    )))?;
    let stem = config
        .output
        .stem
        .clone()
        .unwrap_or_else(|| config.mode.to_string());
    let csv_path = dir.join(format!("{stem}.csv"));
    let report_path = dir.join(format!("{stem}.report.json"));

    write_atomic(&csv_path, &csv)
        .map_err(CliError::io(format!("cannot write {}", csv_path.display())))?;
    let outputs = vec![
        csv_path.display().to_string(),
        report_path.display().to_string(),
    ];
    let report = RunReport::new(
        scenario_id,
        started.elapsed().as_secs_f64(),
        checks,
        outputs,
    );
    write_atomic(&report_path, &report.to_json()).map_err(CliError::io(format!(
        "cannot write {}",
        report_path.display()
    )))?;
    Ok(report)
}

fn run_finite(config: &ScenarioConfig) -> Result<(Vec<CheckRecord>, String), CliError> {
    let finite = config.finite.as_ref().expect("mode checked by validation");
    let [d_a, d_b] = finite.dims;
    let mut rng = random::rng_from_seed(config.seed);

    let h = match &finite.hamiltonian {
        HamiltonianSpec::Named(name) => match name.as_str() {
            "random-hermitian" => random::gaussian_hermitian(&mut rng, d_a * d_b),
            "random-factorisable" => random::factorisable_hamiltonian(&mut rng, d_a, d_b),
            "sigma-zz" => sigma_zz(),
            other => return Err(CliError::Config(format!("unknown hamiltonian \"{other}\""))),
        },
        HamiltonianSpec::File { file } => read_matrix_file(file, d_a, d_b)?,
    };

    let (psi_a, psi_b) = match finite.initial_state {
        StateSpec::RandomProduct => random::product_state(&mut rng, d_a, d_b),
        StateSpec::PlusPlus => (plus_x(), plus_x()),
    };

    let schedule = HamiltonianSchedule::constant(h.clone(), finite.t_final)?;
    let state = BipartiteState::from_product(&psi_a, &psi_b)?;
    let trace = propagate_exact(&schedule, &state, finite.dt, config.hbar)?;

    let tol = &config.tolerances;
    let mut checks = Vec::with_capacity(finite.checks.len());
    for kind in &finite.checks {
        checks.push(match kind {
            CheckKind::PurityBounds => {
                let floor = 1.0 / d_a.min(d_b) as f64;
                let excursion = trace
                    .purity
                    .iter()
                    .map(|p| (p - 1.0).max(floor - p).max(0.0))
                    .fold(0.0, f64::max);
                CheckRecord::upper_bound(kind.name(), excursion, tol.purity_bounds)
            }
            CheckKind::PurityInvariance => CheckRecord::upper_bound(
                kind.name(),
                1.0 - trace.min_purity(),
                tol.purity_invariance,
            ),
            CheckKind::CurvatureClosedForm => {
                let rate = purity_rate_check(&h, &psi_a, &psi_b, config.hbar, &CURVATURE_DELTA_TS)?;
                CheckRecord::within(
                    kind.name(),
                    rate.curvature_richardson,
                    rate.analytic_curvature,
                    tol.curvature_abs,
                )
            }
            other => {
                return Err(CliError::Config(format!(
                    "check \"{}\" slipped past validation in finite mode",
                    other.name()
                )))
            }
        });
    }
    Ok((checks, finite_csv(&trace)))
}

fn build_term(config: &TermConfig) -> Result<PotentialTerm, CliError> {
    let term = match config.kind {
        TermKind::GaussianBump => PotentialTerm::gaussian_bump(config.strength, config.range),
        TermKind::SoftCoulomb => PotentialTerm::soft_coulomb(config.strength, config.range),
        TermKind::Harmonic => PotentialTerm::harmonic(config.strength, config.range),
    };
    Ok(term?)
}

fn run_continuum(config: &ScenarioConfig) -> Result<(Vec<CheckRecord>, String), CliError> {
    let c = config
        .continuum
        .as_ref()
        .expect("mode checked by validation");
    let grid = Grid1D::centered(c.grid.n, c.grid.center, c.grid.extent)?;
    let potential = PotentialSpec {
        interaction: c
            .potential
            .interaction
            .as_ref()
            .map(build_term)
            .transpose()?,
        external_a: c
            .potential
            .external_a
            .as_ref()
            .map(build_term)
            .transpose()?,
        external_b: c
            .potential
            .external_b
            .as_ref()
            .map(build_term)
            .transpose()?,
    };
    let scenario = TwoBodyScenario {
        grid,
        m_a: c.mass_a,
        m_b: c.mass_b,
        packet_a: GaussianSpec::new(c.packet_a.x0, c.packet_a.p0, c.packet_a.width),
        packet_b: GaussianSpec::new(c.packet_b.x0, c.packet_b.p0, c.packet_b.width),
        potential,
        dt: c.dt,
        t_final: c.t_final,
        hbar: config.hbar,
        sample_every: c.sample_every,
        absorber: c.absorber.map(|a| AbsorberSpec {
            fraction: a.fraction,
            rate: a.rate,
        }),
    };
    let run = scenario.run()?;

    let tol = &config.tolerances;
    let mut checks = Vec::with_capacity(c.checks.len());
    for kind in &c.checks {
        checks.push(match kind {
            CheckKind::NormConservation => {
                CheckRecord::upper_bound(kind.name(), run.max_norm_drift(), tol.norm_drift)
            }
            CheckKind::EnergyDrift => {
                CheckRecord::upper_bound(kind.name(), run.max_energy_drift(), tol.energy_drift)
            }
            CheckKind::EntropyMax => {
                CheckRecord::upper_bound(kind.name(), run.final_entropy(), tol.entropy_max)
            }
            CheckKind::CentroidGap => {
                let dx = scenario.grid.dx();
                let gap = (0..run.times.len())
                    .map(|i| {
                        let ga = (run.mean_a[i] - run.newton_a[i]).abs();
                        let gb = (run.mean_b[i] - run.newton_b[i]).abs();
                        ga.max(gb)
                    })
                    .fold(0.0, f64::max)
                    / dx;
                CheckRecord::upper_bound(kind.name(), gap, tol.centroid_gap_dx)
            }
            other => {
                return Err(CliError::Config(format!(
                    "check \"{}\" slipped past validation in continuum mode",
                    other.name()
                )))
            }
        });
    }
    Ok((checks, continuum_csv(&run)))
}

fn read_matrix_file(path: &Path, d_a: usize, d_b: usize) -> Result<Array2<C64>, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(format!(
        "cannot read hamiltonian file {}",
        path.display()
    )))?;
    parse_matrix(&text, d_a, d_b)
        .map_err(|msg| CliError::Config(format!("{}: {msg}", path.display())))
}

/// Dense matrix text format: first line `d_A d_B`, then one line per row
/// with real and imaginary parts alternating (`2 * d_A * d_B` numbers per
/// row). Blank lines and `#` comments are skipped. Hermiticity is not
/// checked here; the propagator rejects non-Hermitian input itself.
fn parse_matrix(text: &str, d_a: usize, d_b: usize) -> Result<Array2<C64>, String> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or("matrix file is empty")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| format!("bad dimension token \"{t}\""))
        })
        .collect::<Result<_, _>>()?;
    if dims != [d_a, d_b] {
        return Err(format!(
            "file declares dims {dims:?}, config wants [{d_a}, {d_b}]"
        ));
    }

    let d = d_a * d_b;
    let mut m = Array2::zeros((d, d));
    for i in 0..d {
        let line = lines
            .next()
            .ok_or(format!("expected {d} matrix rows, found {i}"))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| format!("row {i}: bad number \"{t}\""))
            })
            .collect::<Result<_, _>>()?;
        if values.len() != 2 * d {
            return Err(format!(
                "row {i} has {} numbers, expected {}",
                values.len(),
                2 * d
            ));
        }
        for j in 0..d {
            m[[i, j]] = C64::new(values[2 * j], values[2 * j + 1]);
        }
    }
    if lines.next().is_some() {
        return Err(format!("trailing content after {d} matrix rows"));
    }
    Ok(m)
}
