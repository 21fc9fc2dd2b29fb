//! Scenario configuration: a TOML document with one table per mode.
//!
//! Every field is checked before any computation starts, and unknown keys
//! are rejected outright, so a typo in a config fails the run instead of
//! silently falling back to a default.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Environment variable that, when set, overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "ENTLAB_OUTPUT_DIR";

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Finite,
    Continuum,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Finite => write!(f, "finite"),
            Mode::Continuum => write!(f, "continuum"),
            Mode::Verify => write!(f, "verify"),
        }
    }
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub seed: u64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub output: OutputConfig,
    pub finite: Option<FiniteConfig>,
    pub continuum: Option<ContinuumConfig>,
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Deserialize, Clone, Default, Debug)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for CSV and report files; default is the working
    /// directory, and [`OUTPUT_DIR_ENV`] overrides whatever stands here.
    pub dir: Option<PathBuf>,
    /// File name stem; default is the mode name.
    pub stem: Option<String>,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct FiniteConfig {
    /// Local dimensions `[d_A, d_B]`.
    pub dims: [usize; 2],
    pub hamiltonian: HamiltonianSpec,
    #[serde(default)]
    pub initial_state: StateSpec,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_finite_checks")]
    pub checks: Vec<CheckKind>,
}

fn default_finite_checks() -> Vec<CheckKind> {
    vec![CheckKind::PurityBounds]
}

/// A Hamiltonian is either one of the named generators or a dense matrix
/// read from a text file (first line `d_A d_B`, then one row per line with
/// real and imaginary parts alternating).
#[derive(Deserialize, Clone, Debug)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    Named(String),
    File { file: PathBuf },
}

pub const HAMILTONIAN_NAMES: [&str; 3] = ["random-hermitian", "random-factorisable", "sigma-zz"];

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, Debug, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StateSpec {
    #[default]
    RandomProduct,
    /// `|+x>|+x>`; two qubits only.
    PlusPlus,
}

#[derive(Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ContinuumConfig {
    pub grid: GridConfig,
    pub mass_a: f64,
    pub mass_b: f64,
    pub packet_a: PacketConfig,
    pub packet_b: PacketConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    pub absorber: Option<AbsorberConfig>,
    #[serde(default = "default_continuum_checks")]
    pub checks: Vec<CheckKind>,
}

fn default_sample_every() -> usize {
    100
}

fn default_continuum_checks() -> Vec<CheckKind> {
    vec![CheckKind::NormConservation]
}

#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Number of points; a power of two between 64 and 1024.
    pub n: usize,
    pub center: f64,
    pub extent: f64,
}

#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub x0: f64,
    pub p0: f64,
    pub width: f64,
}

#[derive(Deserialize, Clone, Default, Debug)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub interaction: Option<TermConfig>,
    pub external_a: Option<TermConfig>,
    pub external_b: Option<TermConfig>,
}

#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub kind: TermKind,
    pub strength: f64,
    pub range: f64,
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    GaussianBump,
    SoftCoulomb,
    Harmonic,
}

#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(deny_unknown_fields)]
pub struct AbsorberConfig {
    pub fraction: f64,
    pub rate: f64,
}

#[derive(Deserialize, Clone, Default, Debug)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Case-insensitive substring selecting which check suites run.
    pub filter: Option<String>,
}

/// Pass thresholds, each with a documented default. A config only ever
/// tightens or relaxes the checks it actually requested.
#[derive(Deserialize, Clone, Copy, Debug)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// `purity-bounds`: farthest excursion of Tr rho_A^2 outside
    /// [1/min(d), 1].
    pub purity_bounds: f64,
    /// `purity-invariance`: 1 minus the smallest sampled purity.
    pub purity_invariance: f64,
    /// `curvature-closed-form`: |Richardson curvature - (-4C/hbar^2)|.
    pub curvature_abs: f64,
    /// `norm-conservation`: max |norm - 1| over samples.
    pub norm_drift: f64,
    /// `energy-drift`: max relative energy drift over samples.
    pub energy_drift: f64,
    /// `entropy-max`: entanglement entropy at the final sample.
    pub entropy_max: f64,
    /// `centroid-gap`: max |<x> - x_Newton| in units of the grid spacing.
    pub centroid_gap_dx: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            purity_bounds: 1e-10,
            purity_invariance: 1e-9,
            curvature_abs: 1e-3,
            norm_drift: 1e-10,
            energy_drift: 1e-6,
            entropy_max: 0.05,
            centroid_gap_dx: 2.0,
        }
    }
}

/// The quantities a run can be graded on. Finite and continuum modes each
/// accept their own subset; asking for a check the mode cannot evaluate is
/// a config error.
#[derive(Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    PurityBounds,
    PurityInvariance,
    CurvatureClosedForm,
    NormConservation,
    EnergyDrift,
    EntropyMax,
    CentroidGap,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::PurityBounds => "purity-bounds",
            CheckKind::PurityInvariance => "purity-invariance",
            CheckKind::CurvatureClosedForm => "curvature-closed-form",
            CheckKind::NormConservation => "norm-conservation",
            CheckKind::EnergyDrift => "energy-drift",
            CheckKind::EntropyMax => "entropy-max",
            CheckKind::CentroidGap => "centroid-gap",
        }
    }

    fn is_finite(&self) -> bool {
        matches!(
            self,
            CheckKind::PurityBounds | CheckKind::PurityInvariance | CheckKind::CurvatureClosedForm
        )
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, String> {
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
    validate(&config)?;
    Ok(config)
}

fn positive(name: &str, value: f64) -> Result<(), String> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(format!("{name} = {value} must be positive and finite"));
    }
    Ok(())
}

fn validate_term(name: &str, term: &TermConfig) -> Result<(), String> {
    if !term.strength.is_finite() {
        return Err(format!(
            "{name}.strength = {} must be finite",
            term.strength
        ));
    }
    positive(&format!("{name}.range"), term.range)
}

fn validate(config: &ScenarioConfig) -> Result<(), String> {
    positive("hbar", config.hbar)?;

    let tol = &config.tolerances;
    for (name, value) in [
        ("tolerances.purity_bounds", tol.purity_bounds),
        ("tolerances.purity_invariance", tol.purity_invariance),
        ("tolerances.curvature_abs", tol.curvature_abs),
        ("tolerances.norm_drift", tol.norm_drift),
        ("tolerances.energy_drift", tol.energy_drift),
        ("tolerances.entropy_max", tol.entropy_max),
        ("tolerances.centroid_gap_dx", tol.centroid_gap_dx),
    ] {
        positive(name, value)?;
    }

    let expect_section = |mode: Mode, present: bool, name: &str| -> Result<(), String> {
        if (config.mode == mode) != present {
            if present {
                return Err(format!(
                    "[{name}] section is only valid with mode = \"{mode}\""
                ));
            }
            return Err(format!("mode = \"{mode}\" requires a [{name}] section"));
        }
        Ok(())
    };
    expect_section(Mode::Finite, config.finite.is_some(), "finite")?;
    expect_section(Mode::Continuum, config.continuum.is_some(), "continuum")?;
    if config.verify.is_some() && config.mode != Mode::Verify {
        return Err("[verify] section is only valid with mode = \"verify\"".into());
    }
    if config.mode == Mode::Verify && config.hbar != 1.0 {
        return Err("verify mode runs its check suites at hbar = 1".into());
    }

    if let Some(finite) = &config.finite {
        validate_finite(finite)?;
    }
    if let Some(continuum) = &config.continuum {
        validate_continuum(continuum)?;
    }
    Ok(())
}

fn validate_finite(finite: &FiniteConfig) -> Result<(), String> {
    let [d_a, d_b] = finite.dims;
    if d_a < 2 || d_b < 2 {
        return Err(format!(
            "dims = [{d_a}, {d_b}]: both factors need dimension at least 2"
        ));
    }
    if d_a * d_b > 64 {
        return Err(format!(
            "dims = [{d_a}, {d_b}]: composite dimension {} exceeds the dense-solver limit of 64",
            d_a * d_b
        ));
    }
    positive("finite.dt", finite.dt)?;
    positive("finite.t_final", finite.t_final)?;
    match &finite.hamiltonian {
        HamiltonianSpec::Named(name) => {
            if !HAMILTONIAN_NAMES.contains(&name.as_str()) {
                return Err(format!(
                    "unknown hamiltonian \"{name}\"; expected one of {HAMILTONIAN_NAMES:?} \
                     or {{ file = \"path\" }}"
                ));
            }
            if name == "sigma-zz" && finite.dims != [2, 2] {
                return Err("hamiltonian \"sigma-zz\" requires dims = [2, 2]".into());
            }
        }
        HamiltonianSpec::File { .. } => {}
    }
    if finite.initial_state == StateSpec::PlusPlus && finite.dims != [2, 2] {
        return Err("initial_state \"plus-plus\" requires dims = [2, 2]".into());
    }
    for check in &finite.checks {
        if !check.is_finite() {
            return Err(format!(
                "check \"{}\" is not available in finite mode",
                check.name()
            ));
        }
    }
    Ok(())
}

fn validate_continuum(continuum: &ContinuumConfig) -> Result<(), String> {
    let grid = &continuum.grid;
    if !grid.n.is_power_of_two() || grid.n < 64 || grid.n > 1024 {
        return Err(format!(
            "grid.n = {} must be a power of two between 64 and 1024",
            grid.n
        ));
    }
    if !grid.center.is_finite() {
        return Err(format!("grid.center = {} must be finite", grid.center));
    }
    positive("grid.extent", grid.extent)?;
    positive("mass_a", continuum.mass_a)?;
    positive("mass_b", continuum.mass_b)?;
    for (name, packet) in [
        ("packet_a", &continuum.packet_a),
        ("packet_b", &continuum.packet_b),
    ] {
        if !packet.x0.is_finite() || !packet.p0.is_finite() {
            return Err(format!("{name}: x0 and p0 must be finite"));
        }
        positive(&format!("{name}.width"), packet.width)?;
    }
    if let Some(term) = &continuum.potential.interaction {
        validate_term("potential.interaction", term)?;
    }
    if let Some(term) = &continuum.potential.external_a {
        validate_term("potential.external_a", term)?;
    }
    if let Some(term) = &continuum.potential.external_b {
        validate_term("potential.external_b", term)?;
    }
    positive("continuum.dt", continuum.dt)?;
    positive("continuum.t_final", continuum.t_final)?;
    if continuum.sample_every == 0 {
        return Err("continuum.sample_every must be at least 1".into());
    }
    if let Some(absorber) = &continuum.absorber {
        if !(absorber.fraction > 0.0 && absorber.fraction <= 0.5) {
            return Err(format!(
                "absorber.fraction = {} must lie in (0, 0.5]",
                absorber.fraction
            ));
        }
        if !(absorber.rate >= 0.0) || !absorber.rate.is_finite() {
            return Err(format!(
                "absorber.rate = {} must be nonnegative",
                absorber.rate
            ));
        }
    }
    for check in &continuum.checks {
        if check.is_finite() {
            return Err(format!(
                "check \"{}\" is not available in continuum mode",
                check.name()
            ));
        }
        if matches!(check, CheckKind::NormConservation | CheckKind::EnergyDrift)
            && continuum.absorber.is_some()
        {
            return Err(format!(
                "check \"{}\" is meaningless with an absorber configured",
                check.name()
            ));
        }
    }
    Ok(())
}
