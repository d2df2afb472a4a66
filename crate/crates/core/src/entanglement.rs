//! Entanglement measures and the partial-transpose separability test.

use serde::{Deserialize, Serialize};

use crate::numerics::{hermitian_eigen, kron, positivity_check, singular_values, CMat};
use crate::states::{ls_to_density, LSDecomposition, SchmidtState, TwoQubitDensity};
use crate::tolerance;

/// Whichever measures apply to the input kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_entropy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_measure: Option<f64>,
}

impl EntanglementReport {
    pub fn for_pure(s: &SchmidtState) -> Self {
        Self {
            linear_entropy: Some(linear_entropy(s)),
            ..Self::default()
        }
    }

    pub fn for_density(rho: &TwoQubitDensity) -> Self {
        Self {
            concurrence: Some(concurrence(rho)),
            ..Self::default()
        }
    }

    pub fn for_ls(dec: &LSDecomposition) -> Self {
        Self {
            linear_entropy: None,
            concurrence: Some(concurrence(&ls_to_density(dec))),
            e_measure: Some(e_measure(dec)),
        }
    }
}

/// `S(ψ) = 2[1 - Tr ρ_A^2] = 4 α² β²`.
pub fn linear_entropy(s: &SchmidtState) -> f64 {
    4.0 * s.alpha_sq() * s.beta_sq()
}

/// `σ_y ⊗ σ_y`.
pub fn spin_flip_operator() -> CMat {
    kron(&CMat::pauli_y(), &CMat::pauli_y())
}

/// `ρ̃ = (σ_y ⊗ σ_y) ρ* (σ_y ⊗ σ_y)`.
pub fn spin_flip(rho: &TwoQubitDensity) -> CMat {
    let y = spin_flip_operator();
    &(&y * &rho.as_mat().conj()) * &y
}

/// Square root of a density matrix through its eigendecomposition.
///
/// Eigenvalues at or below [`tolerance::SQRT_CLAMP`] are set to zero; this
/// covers the small negative values rounding leaves on singular input.
pub fn sqrt_density(rho: &TwoQubitDensity) -> CMat {
    let eig = hermitian_eigen(rho.as_mat()).expect("density matrices are Hermitian");
    eig.map_values(|x| if x <= tolerance::SQRT_CLAMP { 0.0 } else { x.sqrt() })
}

/// The descending `λ_i`: square roots of the eigenvalues of `√ρ ρ̃ √ρ`.
///
/// Since `√ρ ρ̃ √ρ = M M†` with `M = √ρ (σ_y⊗σ_y) √ρ*`, these are the singular
/// values of `M`, which is how they are computed.
pub fn wootters_lambdas(rho: &TwoQubitDensity) -> Vec<f64> {
    let root = sqrt_density(rho);
    let m = &(&root * &spin_flip_operator()) * &root.conj();
    singular_values(&m)
}

/// Wootters concurrence `max(0, λ1 - λ2 - λ3 - λ4)`.
pub fn concurrence(rho: &TwoQubitDensity) -> f64 {
    let l = wootters_lambdas(rho);
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

/// `E(ρ) = (1 - λ) S(ψ)`.
pub fn e_measure(dec: &LSDecomposition) -> f64 {
    (1.0 - dec.lambda()) * linear_entropy(dec.pure())
}

/// Transpose on system B: `(ia ib),(ja jb) -> (ia jb),(ja ib)`.
pub fn partial_transpose_b(rho: &TwoQubitDensity) -> CMat {
    partial_transpose_b_mat(rho.as_mat())
}

pub fn partial_transpose_b_mat(m: &CMat) -> CMat {
    assert_eq!((m.rows(), m.cols()), (4, 4));
    let mut out = CMat::zeros(4, 4);
    for ia in 0..2 {
        for ib in 0..2 {
            for ja in 0..2 {
                for jb in 0..2 {
                    out.set(2 * ia + ib, 2 * ja + jb, m.get(2 * ia + jb, 2 * ja + ib));
                }
            }
        }
    }
    out
}

/// Positive-partial-transpose test; exact separability criterion for two qubits.
pub fn ppt_check(rho: &TwoQubitDensity) -> bool {
    positivity_check(&partial_transpose_b(rho)).expect("partial transpose preserves Hermiticity")
}
