//! Two distinguishable particles on a periodic 1D grid.
//!
//! The submodules layer up from a grid and sampled potentials through FFT
//! plumbing to the Strang-split propagators, and from there to the
//! measurement side: Schmidt entropy across the particle cut, the
//! centre-of-mass picture, the Hartree product approximation, and centroid
//! tracking against Newtonian point particles.

pub mod classical;
pub mod com;
pub mod entropy;
pub mod fourier;
pub mod grid;
pub mod hartree;
pub mod potential;
pub mod scenarios;
pub mod split_step;
pub mod wave;

pub use classical::{classical_limit_propagate, ClassicalComparison, VerletPair};
pub use com::{com_grids, com_separability_check, from_com_factors, ComSeparabilityReport};
pub use entropy::{entanglement_entropy, schmidt_purity, schmidt_values};
pub use fourier::{spectral_kinetic_energy, spectral_mean_p};
pub use grid::Grid1D;
pub use hartree::{
    hartree_consistency_residual, hartree_energy, hartree_propagate, product_fidelity, HartreeTrace,
};
pub use potential::{PotentialKind, PotentialSpec, PotentialTerm};
pub use scenarios::{
    coupling_sweep, equal_mass_scattering, reflection_scenario, separability_scenario,
    test_particle_scenario, AbsorberSpec, ComScenario, TwoBodyRun, TwoBodyScenario,
    COUPLING_SWEEP_STRENGTHS,
};
pub use split_step::{split_step, total_energy, CosineMask, SplitStep1D, SplitStep2D};
pub use wave::{
    grid_mean_x, grid_norm, grid_variance_x, init_gaussian, FactorPair, GaussianSpec,
    TwoParticleWavefunction,
};
