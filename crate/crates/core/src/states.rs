//! Pure states in Schmidt form, two-qubit density matrices, and the
//! separable-plus-pure decomposition used for mixed inputs.

use serde::{Deserialize, Serialize};

use crate::entanglement;
use crate::error::{check_range, Error, Result};
use crate::numerics::{positivity_check, CMat, C64};
use crate::tolerance;

/// `alpha |0>|φ0> + beta |1>|φ1>` on a 2 x d system.
///
/// `|φ0>, |φ1>` are the first two computational basis vectors of system B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchmidt")]
pub struct SchmidtState {
    alpha: f64,
    beta: f64,
    d: usize,
}

#[derive(Deserialize)]
struct RawSchmidt {
    alpha: f64,
    beta: f64,
    #[serde(default = "two")]
    d: usize,
}

fn two() -> usize {
    2
}

impl TryFrom<RawSchmidt> for SchmidtState {
    type Error = Error;

    fn try_from(raw: RawSchmidt) -> Result<Self> {
        SchmidtState::new(raw.alpha, raw.beta, raw.d)
    }
}

impl SchmidtState {
    pub fn new(alpha: f64, beta: f64, d: usize) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidState(format!(
                "Schmidt coefficients must be non-negative (alpha = {alpha}, beta = {beta})"
            )));
        }
        if (alpha * alpha + beta * beta - 1.0).abs() > tolerance::NORMALIZATION {
            return Err(Error::InvalidState(format!(
                "alpha^2 + beta^2 = {} is not 1",
                alpha * alpha + beta * beta
            )));
        }
        if d < 2 {
            return Err(Error::InvalidState(format!("system B dimension {d} < 2")));
        }
        Ok(Self { alpha, beta, d })
    }

    /// Two-qubit state from `alpha^2`.
    pub fn from_alpha_sq(alpha_sq: f64) -> Result<Self> {
        Self::from_alpha_sq_dim(alpha_sq, 2)
    }

    pub fn from_alpha_sq_dim(alpha_sq: f64, d: usize) -> Result<Self> {
        check_range("alpha_sq", alpha_sq, 0.0, 1.0, "[0, 1]")?;
        Self::new(alpha_sq.sqrt(), (1.0 - alpha_sq).sqrt(), d)
    }

    /// The state with linear entropy `s` on the `beta >= alpha` branch.
    pub fn from_linear_entropy(s: f64) -> Result<Self> {
        check_range("linear_entropy", s, 0.0, 1.0, "[0, 1]")?;
        Self::from_alpha_sq(0.5 * (1.0 - (1.0 - s).sqrt()))
    }

    /// Normalizes a pair of non-negative amplitudes.
    pub(crate) fn normalized(alpha: f64, beta: f64, d: usize) -> Result<Self> {
        let norm = alpha.hypot(beta);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState(format!(
                "cannot normalize amplitudes ({alpha}, {beta})"
            )));
        }
        Self::new(alpha / norm, beta / norm, d)
    }

    pub fn maximally_entangled(d: usize) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(h, h, d)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta * self.beta
    }

    /// Same state with the roles of the two Schmidt terms exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            d: self.d,
        }
    }

    /// Amplitude vector in `C^2 ⊗ C^d`, system A first.
    pub fn to_vector(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); 2 * self.d];
        v[0] = C64::new(self.alpha, 0.0);
        v[self.d + 1] = C64::new(self.beta, 0.0);
        v
    }
}

/// Two-qubit density matrix, ordering `|00>, |01>, |10>, |11>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityJson", into = "DensityJson")]
pub struct TwoQubitDensity {
    mat: CMat,
}

/// JSON layout: `{"real": [[..4]; 4], "imag": [[..4]; 4]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityJson {
    pub real: [[f64; 4]; 4],
    pub imag: [[f64; 4]; 4],
}

impl TryFrom<DensityJson> for TwoQubitDensity {
    type Error = Error;

    fn try_from(raw: DensityJson) -> Result<Self> {
        let data = (0..16)
            .map(|k| C64::new(raw.real[k / 4][k % 4], raw.imag[k / 4][k % 4]))
            .collect();
        TwoQubitDensity::new(CMat::from_vec(4, 4, data)?)
    }
}

impl From<TwoQubitDensity> for DensityJson {
    fn from(rho: TwoQubitDensity) -> Self {
        let mut real = [[0.0; 4]; 4];
        let mut imag = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let z = rho.mat.get(i, j);
                real[i][j] = z.re;
                imag[i][j] = z.im;
            }
        }
        DensityJson { real, imag }
    }
}

impl TwoQubitDensity {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.rows() != 4 || mat.cols() != 4 {
            return Err(Error::DimensionMismatch {
                expected: "4x4".into(),
                found: format!("{}x{}", mat.rows(), mat.cols()),
            });
        }
        let deviation = mat.hermitian_deviation();
        if deviation > tolerance::HERMITIAN {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tolerance::TRACE || tr.im.abs() > tolerance::TRACE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        if !positivity_check(&mat)? {
            return Err(Error::InvalidState("matrix is not positive semidefinite".into()));
        }
        Ok(Self {
            mat: mat.hermitize(),
        })
    }

    /// Wraps the output of a completely positive map after dividing by its
    /// trace. The caller guarantees positivity; Hermiticity is restored.
    pub(crate) fn from_cp_output(mat: CMat, trace: f64) -> Self {
        Self {
            mat: mat.hermitize().scale_real(1.0 / trace),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            mat: CMat::from_diag(&[0.25; 4]),
        }
    }

    /// Projector onto a computational basis state `|ab>` (index `2a + b`).
    pub fn basis(index: usize) -> Self {
        let mut diag = [0.0; 4];
        diag[index] = 1.0;
        Self {
            mat: CMat::from_diag(&diag),
        }
    }

    pub fn as_mat(&self) -> &CMat {
        &self.mat
    }

    pub fn into_mat(self) -> CMat {
        self.mat
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    /// `λ a + (1 - λ) b`.
    pub fn mix(lambda: f64, a: &Self, b: &Self) -> Self {
        Self {
            mat: &a.mat.scale_real(lambda) + &b.mat.scale_real(1.0 - lambda),
        }
    }
}

/// `λ ρ_s + (1 - λ) |ψ><ψ|` with `ρ_s` separable and `ψ` two-qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLs")]
pub struct LSDecomposition {
    lambda: f64,
    separable: TwoQubitDensity,
    pure: SchmidtState,
}

#[derive(Deserialize)]
struct RawLs {
    lambda: f64,
    separable: TwoQubitDensity,
    pure: SchmidtState,
}

impl TryFrom<RawLs> for LSDecomposition {
    type Error = Error;

    fn try_from(raw: RawLs) -> Result<Self> {
        LSDecomposition::new(raw.lambda, raw.separable, raw.pure)
    }
}

impl LSDecomposition {
    pub fn new(lambda: f64, separable: TwoQubitDensity, pure: SchmidtState) -> Result<Self> {
        check_range("lambda", lambda, 0.0, 1.0, "[0, 1]")?;
        if pure.d() != 2 {
            return Err(Error::DimensionMismatch {
                expected: "d = 2".into(),
                found: format!("d = {}", pure.d()),
            });
        }
        if !entanglement::ppt_check(&separable) {
            return Err(Error::InvalidState("separable part fails the PPT test".into()));
        }
        Ok(Self {
            lambda,
            separable,
            pure,
        })
    }

    /// Skips the PPT test; for parts produced by local operations on an
    /// already-validated separable state.
    pub(crate) fn new_unchecked(lambda: f64, separable: TwoQubitDensity, pure: SchmidtState) -> Self {
        Self {
            lambda,
            separable,
            pure,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn separable(&self) -> &TwoQubitDensity {
        &self.separable
    }

    pub fn pure(&self) -> &SchmidtState {
        &self.pure
    }
}

pub fn schmidt_to_density(s: &SchmidtState) -> Result<TwoQubitDensity> {
    if s.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "d = 2".into(),
            found: format!("d = {}", s.d()),
        });
    }
    Ok(TwoQubitDensity {
        mat: CMat::outer(&s.to_vector()),
    })
}

/// `Tr_B |ψ><ψ| = diag(alpha^2, beta^2)`.
pub fn reduced_density_a(s: &SchmidtState) -> CMat {
    CMat::from_diag(&[s.alpha_sq(), s.beta_sq()])
}

pub fn ls_to_density(dec: &LSDecomposition) -> TwoQubitDensity {
    let pure = schmidt_to_density(&dec.pure).expect("LS pure part has d = 2");
    TwoQubitDensity::mix(dec.lambda, &dec.separable, &pure)
}

/// Partial trace over system B of a `2d x 2d` operator.
pub fn partial_trace_b(m: &CMat, d: usize) -> CMat {
    assert_eq!(m.rows(), 2 * d);
    let mut out = CMat::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            let sum: C64 = (0..d).map(|k| m.get(i * d + k, j * d + k)).sum();
            out.set(i, j, sum);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::linear_entropy;
    use proptest::prelude::*;

    #[test]
    fn schmidt_validation() {
        assert!(SchmidtState::new(0.6, 0.8, 2).is_ok());
        assert!(SchmidtState::new(0.6, 0.7, 2).is_err());
        assert!(SchmidtState::new(-0.6, 0.8, 2).is_err());
        assert!(SchmidtState::new(0.6, 0.8, 1).is_err());
        assert!(SchmidtState::from_alpha_sq(1.2).is_err());
    }

    #[test]
    fn schmidt_density_examples() {
        let product = schmidt_to_density(&SchmidtState::new(1.0, 0.0, 2).unwrap()).unwrap();
        assert_eq!(product.as_mat(), &CMat::from_diag(&[1.0, 0.0, 0.0, 0.0]));

        let bell = schmidt_to_density(&SchmidtState::maximally_entangled(2).unwrap()).unwrap();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((bell.as_mat().get(i, j).re - 0.5).abs() < 1e-15);
        }

        let s = SchmidtState::from_alpha_sq(0.4).unwrap();
        let rho = schmidt_to_density(&s).unwrap();
        let m = rho.as_mat();
        assert!((m.get(0, 0).re - 0.4).abs() < 1e-15);
        assert!((m.get(3, 3).re - 0.6).abs() < 1e-15);
        assert!((m.get(0, 3).re - 0.24f64.sqrt()).abs() < 1e-15);
        assert!((m.get(0, 3).re - 0.489898).abs() < 1e-6);
        assert!(TwoQubitDensity::new(m.clone()).is_ok());

        let wide = SchmidtState::from_alpha_sq_dim(0.4, 3).unwrap();
        assert!(matches!(schmidt_to_density(&wide), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn reduced_density_matches_partial_trace() {
        for (alpha_sq, d) in [(0.5, 2), (1.0, 2), (0.4, 2), (0.4, 5)] {
            let s = SchmidtState::from_alpha_sq_dim(alpha_sq, d).unwrap();
            let full = CMat::outer(&s.to_vector());
            let oracle = partial_trace_b(&full, d);
            assert!(oracle.max_abs_diff(&reduced_density_a(&s)) < 1e-15);
        }
        let r = reduced_density_a(&SchmidtState::from_alpha_sq(0.4).unwrap());
        assert!(r.max_abs_diff(&CMat::from_diag(&[0.4, 0.6])) < 1e-15);
    }

    #[test]
    fn ls_density_examples() {
        let s = SchmidtState::from_alpha_sq(0.4).unwrap();
        let mm = TwoQubitDensity::maximally_mixed();

        let pure_limit = LSDecomposition::new(0.0, mm.clone(), s).unwrap();
        assert!(ls_to_density(&pure_limit).max_abs_diff(&schmidt_to_density(&s).unwrap()) < 1e-15);

        let sep_limit = LSDecomposition::new(1.0, mm.clone(), s).unwrap();
        assert!(ls_to_density(&sep_limit).max_abs_diff(&mm) < 1e-15);

        let half = ls_to_density(&LSDecomposition::new(0.5, mm.clone(), s).unwrap());
        let m = half.as_mat();
        let want_diag = [0.125 + 0.2, 0.125, 0.125, 0.125 + 0.3];
        for (k, w) in want_diag.iter().enumerate() {
            assert!((m.get(k, k).re - w).abs() < 1e-12);
        }
        assert!((m.get(0, 3).re - 0.5 * 0.24f64.sqrt()).abs() < 1e-12);
        assert!(TwoQubitDensity::new(m.clone()).is_ok());
    }

    #[test]
    fn ls_rejects_entangled_separable_part() {
        let bell = schmidt_to_density(&SchmidtState::maximally_entangled(2).unwrap()).unwrap();
        let s = SchmidtState::from_alpha_sq(0.4).unwrap();
        assert!(LSDecomposition::new(0.5, bell, s).is_err());
        assert!(LSDecomposition::new(1.5, TwoQubitDensity::maximally_mixed(), s).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(TwoQubitDensity::new(CMat::from_diag(&[0.5, 0.6, -0.1, 0.0])).is_err());
        assert!(TwoQubitDensity::new(CMat::from_diag(&[0.5, 0.6, 0.1, 0.0])).is_err());
        assert!(TwoQubitDensity::new(CMat::identity(2)).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = SchmidtState::from_alpha_sq(0.4).unwrap();
        let dec = LSDecomposition::new(0.3, TwoQubitDensity::basis(1), s).unwrap();
        let text = serde_json::to_string(&dec).unwrap();
        let back: LSDecomposition = serde_json::from_str(&text).unwrap();
        assert!(ls_to_density(&back).max_abs_diff(&ls_to_density(&dec)) < 1e-15);

        let bad = r#"{"alpha": 0.5, "beta": 0.5, "d": 2}"#;
        assert!(serde_json::from_str::<SchmidtState>(bad).is_err());
    }

    proptest! {
        #[test]
        fn schmidt_density_is_valid(alpha_sq in 0.0f64..=1.0) {
            let s = SchmidtState::from_alpha_sq(alpha_sq).unwrap();
            let rho = schmidt_to_density(&s).unwrap();
            prop_assert!(TwoQubitDensity::new(rho.as_mat().clone()).is_ok());
            // purity of the reduced state is 1 - S/2
            let ra = reduced_density_a(&s);
            let purity = (&ra * &ra).trace().re;
            prop_assert!((purity - (1.0 - linear_entropy(&s) / 2.0)).abs() < 1e-12);
        }
    }
}
