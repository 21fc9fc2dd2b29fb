//! States and operators on a finite bipartite Hilbert space
//! `C^{d_A} (x) C^{d_B}`.
//!
//! This module answers structural questions about a single instant: how
//! entangled a pure state is (Schmidt spectrum, purity), whether a
//! Hamiltonian splits into noninteracting parts, how strongly a Hamiltonian
//! couples a given product state to its bi-orthogonal complement, and which
//! of the three classes a two-qubit unitary belongs to.

use ndarray::prelude::*;
use ndarray_linalg::SVD;

use crate::numerics::{
    self, dagger, hs_norm, identity, kron, kron_vec, max_abs_diff, partial_trace_a,
    partial_trace_b, trace, vec_norm, DEFAULT_HERMITICITY_TOL,
};
use crate::{Error, Result, C64};

/// Default tolerance below which a second Schmidt coefficient counts as zero.
pub const DEFAULT_PRODUCT_TOL: f64 = 1e-8;

/// Default relative tolerance on the second operator-Schmidt coefficient in
/// [`classify_unitary_2q`].
pub const DEFAULT_CLASSIFIER_TOL: f64 = 1e-8;

const NORMALISATION_TOL: f64 = 1e-12;

/// Pure state of a `d_A (x) d_B` system.
///
/// Amplitudes are stored flat with the composite index `i * d_B + j`; the
/// amplitude matrix view has A along rows and B along columns.
#[derive(Debug, Clone)]
pub struct BipartiteState {
    d_a: usize,
    d_b: usize,
    amplitudes: Array1<C64>,
}

impl BipartiteState {
    /// Wraps an amplitude vector, checking length and normalisation
    /// (`| ||psi|| - 1 | <= 1e-12`).
    pub fn new(d_a: usize, d_b: usize, amplitudes: Array1<C64>) -> Result<Self> {
        if d_a == 0 || d_b == 0 || amplitudes.len() != d_a * d_b {
            return Err(Error::DimMismatch(format!(
                "amplitude vector of length {} for d_A={d_a}, d_B={d_b}",
                amplitudes.len()
            )));
        }
        let norm = vec_norm(&amplitudes);
        if (norm - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::NotNormalised {
                norm,
                tolerance: NORMALISATION_TOL,
            });
        }
        Ok(Self {
            d_a,
            d_b,
            amplitudes,
        })
    }

    /// Builds the product state `psi_A (x) psi_B` from normalised factors.
    pub fn from_product(psi_a: &Array1<C64>, psi_b: &Array1<C64>) -> Result<Self> {
        for psi in [psi_a, psi_b] {
            let norm = vec_norm(psi);
            if (norm - 1.0).abs() > NORMALISATION_TOL {
                return Err(Error::NotNormalised {
                    norm,
                    tolerance: NORMALISATION_TOL,
                });
            }
        }
        Self::new(psi_a.len(), psi_b.len(), kron_vec(psi_a, psi_b))
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    /// Amplitudes reshaped to the `d_A x d_B` matrix `Psi[i, j]`.
    pub fn matrix(&self) -> Array2<C64> {
        Array2::from_shape_vec((self.d_a, self.d_b), self.amplitudes.to_vec())
            .expect("length checked at construction")
    }

    /// Reduced density matrix of A: `rho_A = Psi Psi^dag`.
    pub fn rho_a(&self) -> Array2<C64> {
        let m = self.matrix();
        m.dot(&dagger(&m))
    }

    /// Reduced density matrix of B: `[rho_B]_{j,j'} = sum_i Psi[i,j] conj(Psi[i,j'])`.
    pub fn rho_b(&self) -> Array2<C64> {
        let m = self.matrix();
        let mc = m.mapv(|z| z.conj());
        m.t().dot(&mc).t().to_owned().mapv(|z| z.conj())
    }

    /// Full density matrix `|psi><psi|`.
    pub fn density(&self) -> Array2<C64> {
        let n = self.amplitudes.len();
        Array2::from_shape_fn((n, n), |(r, c)| {
            self.amplitudes[r] * self.amplitudes[c].conj()
        })
    }
}

/// Result of [`schmidt_decompose`].
///
/// `left_basis` holds `d_A` orthonormal vectors and `right_basis` holds
/// `d_B`; only the first `min(d_A, d_B)` of each carry coefficients, the rest
/// complete the bases. The state is `sum_k coefficients[k] l_k (x) r_k`.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub left_basis: Vec<Array1<C64>>,
    pub right_basis: Vec<Array1<C64>>,
}

impl SchmidtDecomposition {
    /// Rebuilds the amplitude vector from coefficients and basis vectors.
    pub fn reconstruct(&self) -> Array1<C64> {
        let d_a = self.left_basis[0].len();
        let d_b = self.right_basis[0].len();
        let mut out = Array1::zeros(d_a * d_b);
        for (k, &alpha) in self.coefficients.iter().enumerate() {
            let term = kron_vec(&self.left_basis[k], &self.right_basis[k]);
            out.zip_mut_with(&term, |o, &t| *o += alpha * t);
        }
        out
    }
}

/// Schmidt decomposition of a pure bipartite state via SVD of the amplitude
/// matrix.
///
/// Coefficients come out descending (LAPACK order). The phase gauge is fixed
/// by making the first nonvanishing component of every left vector real and
/// positive; the compensating phase moves to the partnered right vector so
/// the reconstruction is untouched.
pub fn schmidt_decompose(state: &BipartiteState) -> Result<SchmidtDecomposition> {
    let m = state.matrix();
    let (u, sigma, vt) = m.svd(true, true)?;
    let u = u.expect("requested");
    let vt = vt.expect("requested");
    let d_min = state.d_a.min(state.d_b);

    let mut left: Vec<Array1<C64>> = (0..state.d_a).map(|k| u.column(k).to_owned()).collect();
    let mut right: Vec<Array1<C64>> = (0..state.d_b).map(|k| vt.row(k).to_owned()).collect();

    for (k, l) in left.iter_mut().enumerate() {
        let lead = match l.iter().find(|z| z.norm() > 1e-14) {
            Some(z) => *z,
            None => continue,
        };
        let phase = lead / lead.norm();
        let correction = phase.conj();
        l.mapv_inplace(|z| z * correction);
        if k < d_min {
            right[k].mapv_inplace(|z| z * phase);
        }
    }
    // Unpartnered right vectors get the same gauge for determinism; nothing
    // depends on their phase.
    for r in right.iter_mut().skip(d_min) {
        if let Some(&lead) = r.iter().find(|z| z.norm() > 1e-14) {
            let correction = (lead / lead.norm()).conj();
            r.mapv_inplace(|z| z * correction);
        }
    }

    Ok(SchmidtDecomposition {
        coefficients: sigma.to_vec(),
        left_basis: left,
        right_basis: right,
    })
}

/// Purity `Tr rho_A^2` of the reduction, computed from the Gram matrix
/// `Psi Psi^dag` without any spectral decomposition. Equals the sum of
/// fourth powers of the Schmidt coefficients.
pub fn purity(state: &BipartiteState) -> f64 {
    let rho_a = state.rho_a();
    let f = hs_norm(&rho_a);
    f * f
}

/// True iff the second Schmidt coefficient is strictly below `tol`.
///
/// A coefficient exactly at `tol` counts as entangled. States with
/// `min(d_A, d_B) = 1` have no second coefficient and are always products.
pub fn is_product(state: &BipartiteState, tol: f64) -> bool {
    if state.d_a.min(state.d_b) < 2 {
        return true;
    }
    let m = state.matrix();
    let (_, sigma, _) = m.svd(false, false).expect("SVD of finite matrix");
    sigma[1] < tol
}

/// Splitting of a Hermitian `H` on the composite space into
/// `local_A (x) I + I (x) local_B + scalar * I + coupling`.
///
/// The locals are traceless and the coupling has vanishing partial traces,
/// which makes the four parts pairwise Hilbert-Schmidt orthogonal and the
/// decomposition unique. `coupling_norm` is zero exactly when `H` generates
/// no interaction between the factors.
#[derive(Debug, Clone)]
pub struct HamiltonianDecomposition {
    pub scalar: f64,
    pub local_a: Array2<C64>,
    pub local_b: Array2<C64>,
    pub coupling: Array2<C64>,
    pub coupling_norm: f64,
}

impl HamiltonianDecomposition {
    /// `local_A (x) I + I (x) local_B + scalar I + coupling`.
    pub fn reconstruct(&self) -> Array2<C64> {
        let d_a = self.local_a.nrows();
        let d_b = self.local_b.nrows();
        let mut h = kron(&self.local_a, &identity(d_b)).expect("small dims")
            + kron(&identity(d_a), &self.local_b).expect("small dims")
            + &self.coupling;
        for i in 0..d_a * d_b {
            h[[i, i]] += C64::new(self.scalar, 0.0);
        }
        h
    }
}

/// Orthogonal projection of `H` onto local, scalar and interacting parts.
pub fn factorise_hamiltonian(
    h: &Array2<C64>,
    d_a: usize,
    d_b: usize,
) -> Result<HamiltonianDecomposition> {
    if h.dim() != (d_a * d_b, d_a * d_b) {
        return Err(Error::DimMismatch(format!(
            "Hamiltonian is {:?}, expected square of dim {}",
            h.dim(),
            d_a * d_b
        )));
    }
    numerics::require_hermitian(h, DEFAULT_HERMITICITY_TOL)?;

    let dim = (d_a * d_b) as f64;
    let scalar = trace(h).re / dim;
    let mut local_a = partial_trace_b(h, d_a, d_b)? / C64::new(d_b as f64, 0.0);
    let mut local_b = partial_trace_a(h, d_a, d_b)? / C64::new(d_a as f64, 0.0);
    for i in 0..d_a {
        local_a[[i, i]] -= C64::new(scalar, 0.0);
    }
    for j in 0..d_b {
        local_b[[j, j]] -= C64::new(scalar, 0.0);
    }

    let mut coupling = h - kron(&local_a, &identity(d_b))? - kron(&identity(d_a), &local_b)?;
    for i in 0..d_a * d_b {
        coupling[[i, i]] -= C64::new(scalar, 0.0);
    }
    let coupling_norm = hs_norm(&coupling);

    Ok(HamiltonianDecomposition {
        scalar,
        local_a,
        local_b,
        coupling,
        coupling_norm,
    })
}

/// Strength with which `H` couples the product state `psi_A (x) psi_B` to
/// states bi-orthogonal to both factors:
/// `C = || (Q_A (x) Q_B) H (psi_A (x) psi_B) ||^2` with `Q_X = I - |psi_X><psi_X|`.
///
/// `C` carries units of energy squared. It vanishes for every product state
/// exactly when the evolution generated by `H` cannot entangle products at
/// leading order.
pub fn coupling_coefficient(
    h: &Array2<C64>,
    psi_a: &Array1<C64>,
    psi_b: &Array1<C64>,
) -> Result<f64> {
    let (d_a, d_b) = (psi_a.len(), psi_b.len());
    if h.dim() != (d_a * d_b, d_a * d_b) {
        return Err(Error::DimMismatch(format!(
            "Hamiltonian is {:?}, expected square of dim {}",
            h.dim(),
            d_a * d_b
        )));
    }
    for psi in [psi_a, psi_b] {
        let norm = vec_norm(psi);
        if (norm - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::NotNormalised {
                norm,
                tolerance: NORMALISATION_TOL,
            });
        }
    }

    let w_flat = h.dot(&kron_vec(psi_a, psi_b));
    let w = Array2::from_shape_vec((d_a, d_b), w_flat.to_vec()).expect("dims match");

    // Project out everything reachable without leaving span{psi_A} or
    // span{psi_B}: W -> W - |psi_A>a - b<psi_B| + s |psi_A><psi_B| with
    // a = psi_A^dag W, b = W conj(psi_B), s = psi_A^dag W conj(psi_B).
    let a: Array1<C64> = {
        let pa = psi_a.mapv(|z| z.conj());
        pa.dot(&w)
    };
    let b: Array1<C64> = w.dot(&psi_b.mapv(|z| z.conj()));
    let s: C64 = psi_a
        .iter()
        .zip(b.iter())
        .map(|(pa, bi)| pa.conj() * bi)
        .sum();

    let mut c = 0.0;
    for i in 0..d_a {
        for j in 0..d_b {
            let proj = w[[i, j]] - psi_a[i] * a[j] - b[i] * psi_b[j] + s * psi_a[i] * psi_b[j];
            c += proj.norm_sqr();
        }
    }
    Ok(c)
}

/// The three classes a product-preserving analysis distinguishes for a
/// two-qubit unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitaryKind {
    /// `U = U_A (x) U_B`.
    Local,
    /// `U = (U_A (x) U_B) . SWAP`.
    SwapLocal,
    /// Everything else; such a `U` entangles some product state.
    Entangling,
}

/// Classification result: the tag plus the operator-Schmidt coefficients of
/// `U` itself (descending; they always satisfy `sum sigma^2 = 4` for a
/// two-qubit unitary).
#[derive(Debug, Clone)]
pub struct UnitaryClass {
    pub kind: UnitaryKind,
    pub operator_schmidt_coefficients: Vec<f64>,
}

/// Two-qubit SWAP gate.
pub fn swap_gate() -> Array2<C64> {
    let mut m = Array2::zeros((4, 4));
    let one = C64::new(1.0, 0.0);
    m[[0, 0]] = one;
    m[[1, 2]] = one;
    m[[2, 1]] = one;
    m[[3, 3]] = one;
    m
}

/// CNOT with qubit A as control.
pub fn cnot_gate() -> Array2<C64> {
    let mut m = Array2::zeros((4, 4));
    let one = C64::new(1.0, 0.0);
    m[[0, 0]] = one;
    m[[1, 1]] = one;
    m[[2, 3]] = one;
    m[[3, 2]] = one;
    m
}

pub fn pauli_x() -> Array2<C64> {
    array![
        [C64::new(0., 0.), C64::new(1., 0.)],
        [C64::new(1., 0.), C64::new(0., 0.)]
    ]
}

pub fn pauli_y() -> Array2<C64> {
    array![
        [C64::new(0., 0.), C64::new(0., -1.)],
        [C64::new(0., 1.), C64::new(0., 0.)]
    ]
}

pub fn pauli_z() -> Array2<C64> {
    array![
        [C64::new(1., 0.), C64::new(0., 0.)],
        [C64::new(0., 0.), C64::new(-1., 0.)]
    ]
}

/// `sigma_z (x) sigma_z`, the workhorse entangling Hamiltonian in tests and
/// presets.
pub fn sigma_zz() -> Array2<C64> {
    kron(&pauli_z(), &pauli_z()).expect("4x4")
}

/// `|+x>`, the +1 eigenvector of `sigma_x`.
pub fn plus_x() -> Array1<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    array![C64::new(r, 0.), C64::new(r, 0.)]
}

/// `|-x>`, the -1 eigenvector of `sigma_x`.
pub fn minus_x() -> Array1<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    array![C64::new(r, 0.), C64::new(-r, 0.)]
}

/// Operator-Schmidt coefficients of a 4x4 operator on qubit (x) qubit:
/// singular values of the realigned matrix `R[(i,j),(k,l)] = U[(i,k),(j,l)]`.
fn operator_schmidt_coefficients(u: &Array2<C64>) -> Result<Vec<f64>> {
    let mut r = Array2::zeros((4, 4));
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    r[[i * 2 + j, k * 2 + l]] = u[[i * 2 + k, j * 2 + l]];
                }
            }
        }
    }
    let (_, sigma, _) = r.svd(false, false)?;
    Ok(sigma.to_vec())
}

/// Classifies a two-qubit unitary as `Local`, `SwapLocal` or `Entangling`.
///
/// `tol` is relative: the operator-Schmidt rank counts as 1 when the second
/// coefficient is strictly below `tol` times the first. Use
/// [`DEFAULT_CLASSIFIER_TOL`] unless there is a reason not to.
pub fn classify_unitary_2q(u: &Array2<C64>, tol: f64) -> Result<UnitaryClass> {
    if u.dim() != (4, 4) {
        return Err(Error::DimMismatch(format!(
            "expected 4x4 unitary, got {:?}",
            u.dim()
        )));
    }
    let deviation = max_abs_diff(&dagger(u).dot(u), &identity(4));
    if deviation > 1e-10 {
        return Err(Error::NotUnitary {
            deviation,
            tolerance: 1e-10,
        });
    }

    let coeffs = operator_schmidt_coefficients(u)?;
    let rank_one = |c: &[f64]| c[1] < tol * c[0];

    let kind = if rank_one(&coeffs) {
        UnitaryKind::Local
    } else if rank_one(&operator_schmidt_coefficients(&u.dot(&swap_gate()))?) {
        UnitaryKind::SwapLocal
    } else {
        UnitaryKind::Entangling
    };

    Ok(UnitaryClass {
        kind,
        operator_schmidt_coefficients: coeffs,
    })
}
