//! Bundled scenario configurations.
//!
//! Each preset is an ordinary TOML config, stored as text so that
//! `presets show <name>` prints exactly what `run` would parse. A unit
//! test below round-trips every preset through the config parser, which
//! keeps the bundled texts from drifting away from the schema.

use crate::config::{parse_config, ScenarioConfig};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "factorisable_invariance",
        summary: "product state under a factorisable Hamiltonian stays pure for 1000 steps",
        text: r#"mode = "finite"
seed = 11

[output]
stem = "factorisable_invariance"

[finite]
dims = [3, 3]
hamiltonian = "random-factorisable"
initial_state = "random-product"
dt = 1e-3
t_final = 1.0
checks = ["purity-bounds", "purity-invariance"]
"#,
    },
    Preset {
        name: "sigma_zz_rate",
        summary:
            "sigma_z x sigma_z coupling from |+x>|+x>: purity curvature against the closed form",
        text: r#"mode = "finite"
seed = 1

[output]
stem = "sigma_zz_rate"

[finite]
dims = [2, 2]
hamiltonian = "sigma-zz"
initial_state = "plus-plus"
dt = 0.01
t_final = 3.0
checks = ["purity-bounds", "curvature-closed-form"]
"#,
    },
    Preset {
        name: "equal_mass_scattering",
        summary: "two equal-mass Gaussian packets scatter off a soft interaction bump",
        text: r#"mode = "continuum"
seed = 3

[output]
stem = "equal_mass_scattering"

[continuum]
mass_a = 1.0
mass_b = 1.0
dt = 2e-3
t_final = 12.0
sample_every = 250
checks = ["norm-conservation", "energy-drift"]

[continuum.grid]
n = 128
center = 0.0
extent = 32.0

[continuum.packet_a]
x0 = -6.0
p0 = 1.0
width = 1.5

[continuum.packet_b]
x0 = 6.0
p0 = -1.0
width = 1.5

[continuum.potential.interaction]
kind = "gaussian-bump"
strength = 0.2
range = 2.0
"#,
    },
    Preset {
        name: "barrier_reflection",
        summary: "narrow heavy packets bounce off a tall wide bump and track Newtonian centroids",
        text: r#"mode = "continuum"
seed = 5

[output]
stem = "barrier_reflection"

[continuum]
mass_a = 4.0
mass_b = 4.0
dt = 4e-3
t_final = 16.0
sample_every = 250
checks = ["norm-conservation", "energy-drift", "centroid-gap", "entropy-max"]

[continuum.grid]
n = 256
center = 0.0
extent = 64.0

[continuum.packet_a]
x0 = -10.0
p0 = 6.0
width = 2.0

[continuum.packet_b]
x0 = 10.0
p0 = -6.0
width = 2.0

[continuum.potential.interaction]
kind = "gaussian-bump"
strength = 16.0
range = 5.0
"#,
    },
    Preset {
        name: "test_particle",
        summary: "light packet scatters off a particle a thousand times heavier",
        text: r#"mode = "continuum"
seed = 9

[output]
stem = "test_particle"

[continuum]
mass_a = 1.0
mass_b = 1000.0
dt = 2e-3
t_final = 5.0
sample_every = 250
checks = ["norm-conservation", "energy-drift", "entropy-max"]

[continuum.grid]
n = 256
center = 0.0
extent = 64.0

[continuum.packet_a]
x0 = -8.0
p0 = 4.0
width = 1.0

[continuum.packet_b]
x0 = 0.0
p0 = 0.0
width = 0.5

[continuum.potential.interaction]
kind = "gaussian-bump"
strength = 1.0
range = 2.5
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Parse a preset's bundled text, which is expected to always succeed.
pub fn parse(preset: &Preset) -> Result<ScenarioConfig, String> {
    parse_config(preset.text)
        .map_err(|e| format!("bundled preset {} failed to parse: {e}", preset.name))
}
