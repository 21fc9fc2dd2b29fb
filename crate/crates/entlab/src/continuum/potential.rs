//! Potential shapes for two-particle runs: an interaction term in the
//! relative coordinate plus optional per-particle external terms.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// `strength * exp(-r^2 / (2 range^2))`.
    GaussianBump,
    /// `strength / sqrt(r^2 + range^2)`: Coulomb tail without the on-axis
    /// singularity.
    SoftCoulomb,
    /// `strength/2 * (r/range)^2`.
    Harmonic,
}

/// One analytic potential term with its energy and length scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerm {
    pub kind: PotentialKind,
    pub strength: f64,
    pub range: f64,
}

impl PotentialTerm {
    pub fn new(kind: PotentialKind, strength: f64, range: f64) -> Result<Self> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::BadScenario(format!(
                "range = {range} must be positive"
            )));
        }
        if !strength.is_finite() {
            return Err(Error::BadScenario(format!(
                "strength = {strength} must be finite"
            )));
        }
        Ok(Self {
            kind,
            strength,
            range,
        })
    }

    pub fn gaussian_bump(strength: f64, range: f64) -> Result<Self> {
        Self::new(PotentialKind::GaussianBump, strength, range)
    }

    pub fn soft_coulomb(strength: f64, range: f64) -> Result<Self> {
        Self::new(PotentialKind::SoftCoulomb, strength, range)
    }

    pub fn harmonic(strength: f64, range: f64) -> Result<Self> {
        Self::new(PotentialKind::Harmonic, strength, range)
    }

    pub fn eval(&self, r: f64) -> f64 {
        let q = r / self.range;
        match self.kind {
            PotentialKind::GaussianBump => self.strength * (-0.5 * q * q).exp(),
            PotentialKind::SoftCoulomb => self.strength / (r * r + self.range * self.range).sqrt(),
            PotentialKind::Harmonic => 0.5 * self.strength * q * q,
        }
    }

    /// `dV/dr`, used by the linearized propagator and the Newtonian
    /// reference trajectories.
    pub fn derivative(&self, r: f64) -> f64 {
        let r2 = self.range * self.range;
        match self.kind {
            PotentialKind::GaussianBump => -self.strength * r / r2 * (-0.5 * r * r / r2).exp(),
            PotentialKind::SoftCoulomb => -self.strength * r / (r * r + r2).powf(1.5),
            PotentialKind::Harmonic => self.strength * r / r2,
        }
    }
}

/// Full potential of a two-particle run:
/// `V(x_A, x_B) = V_AB(x_A - x_B) + V_A(x_A) + V_B(x_B)`, every term
/// optional.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialSpec {
    pub interaction: Option<PotentialTerm>,
    pub external_a: Option<PotentialTerm>,
    pub external_b: Option<PotentialTerm>,
}

impl PotentialSpec {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn with_interaction(term: PotentialTerm) -> Self {
        Self {
            interaction: Some(term),
            ..Self::default()
        }
    }

    pub fn eval(&self, x_a: f64, x_b: f64) -> f64 {
        let mut v = 0.0;
        if let Some(t) = &self.interaction {
            v += t.eval(x_a - x_b);
        }
        if let Some(t) = &self.external_a {
            v += t.eval(x_a);
        }
        if let Some(t) = &self.external_b {
            v += t.eval(x_b);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_validation() {
        assert!(PotentialTerm::gaussian_bump(1.0, 0.0).is_err());
        assert!(PotentialTerm::gaussian_bump(f64::INFINITY, 1.0).is_err());
        assert!(PotentialTerm::gaussian_bump(-2.0, 1.0).is_ok());
    }

    #[test]
    fn shapes_take_their_stated_values() {
        let bump = PotentialTerm::gaussian_bump(3.0, 2.0).unwrap();
        assert_eq!(bump.eval(0.0), 3.0);
        assert!((bump.eval(2.0) - 3.0 * (-0.5f64).exp()).abs() <= 1e-14);

        let sc = PotentialTerm::soft_coulomb(1.0, 0.5).unwrap();
        assert_eq!(sc.eval(0.0), 2.0);
        assert!((sc.eval(10.0) - 1.0 / (100.25f64).sqrt()).abs() <= 1e-14);

        let h = PotentialTerm::harmonic(2.0, 1.0).unwrap();
        assert_eq!(h.eval(0.0), 0.0);
        assert!((h.eval(3.0) - 9.0).abs() <= 1e-14);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let terms = [
            PotentialTerm::gaussian_bump(2.5, 1.3).unwrap(),
            PotentialTerm::soft_coulomb(-1.2, 0.7).unwrap(),
            PotentialTerm::harmonic(0.8, 2.0).unwrap(),
        ];
        let eps = 1e-6;
        for t in terms {
            for r in [-3.0, -0.4, 0.0, 0.9, 4.2] {
                let fd = (t.eval(r + eps) - t.eval(r - eps)) / (2.0 * eps);
                assert!(
                    (t.derivative(r) - fd).abs() <= 1e-7 * (1.0 + fd.abs()),
                    "{:?} at r = {r}",
                    t.kind
                );
            }
        }
    }

    #[test]
    fn spec_sums_its_parts() {
        let spec = PotentialSpec {
            interaction: Some(PotentialTerm::gaussian_bump(1.0, 1.0).unwrap()),
            external_a: Some(PotentialTerm::harmonic(2.0, 1.0).unwrap()),
            external_b: None,
        };
        let expected = 1.0 * (-0.5f64 * 4.0).exp() + 0.5 * 2.0 * 9.0;
        assert!((spec.eval(3.0, 1.0) - expected).abs() <= 1e-13);
        assert_eq!(PotentialSpec::free().eval(1.0, -2.0), 0.0);
    }
}
