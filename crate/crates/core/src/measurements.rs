//! Local two-outcome measurements on system A and their action on pure,
//! mixed, and decomposed states.
//!
//! Every family here is diagonal in the computational basis of A, so each
//! outcome operator is `diag(√w0, √w1)` for a pair of POVM weights.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::numerics::{kron, CMat};
use crate::states::{ls_to_density, schmidt_to_density, LSDecomposition, SchmidtState, TwoQubitDensity};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Outcome {
    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// A two-outcome measurement on A whose operators are diagonal.
pub trait DiagonalMeasurement {
    /// POVM weights `(<0|E|0>, <1|E|1>)` of the effect for `outcome`.
    fn weights(&self, outcome: Outcome) -> [f64; 2];

    fn operator(&self, outcome: Outcome) -> CMat {
        let [w0, w1] = self.weights(outcome);
        CMat::from_diag(&[w0.sqrt(), w1.sqrt()])
    }

    /// `(O_+, O_-)`.
    fn operators(&self) -> (CMat, CMat) {
        (self.operator(Outcome::Plus), self.operator(Outcome::Minus))
    }

    /// Max entrywise deviation of `O_+†O_+ + O_-†O_-` from the identity.
    fn completeness_residual(&self) -> f64 {
        let (p, m) = self.operators();
        let sum = &(&p.adjoint() * &p) + &(&m.adjoint() * &m);
        sum.max_abs_diff(&CMat::identity(2))
    }
}

/// Symmetric weak measurement `M_±(ε) = √((1±ε)/2)|0><0| + √((1∓ε)/2)|1><1|`.
///
/// The complement `1 - ε` is carried separately so strengths extremely close
/// to one keep their relative precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeak")]
pub struct WeakMeasurement {
    epsilon: f64,
    #[serde(skip_serializing)]
    complement: f64,
}

#[derive(Deserialize)]
struct RawWeak {
    epsilon: f64,
}

impl TryFrom<RawWeak> for WeakMeasurement {
    type Error = Error;

    fn try_from(raw: RawWeak) -> Result<Self> {
        WeakMeasurement::new(raw.epsilon)
    }
}

impl WeakMeasurement {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_range("epsilon", epsilon, 0.0, 1.0, "[0, 1]")?;
        Ok(Self {
            epsilon,
            complement: 1.0 - epsilon,
        })
    }

    /// Builds the measurement from `1 - ε`.
    pub fn from_complement(complement: f64) -> Result<Self> {
        check_range("1 - epsilon", complement, 0.0, 1.0, "[0, 1]")?;
        Ok(Self {
            epsilon: 1.0 - complement,
            complement,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn complement(&self) -> f64 {
        self.complement
    }

    /// `(M_+, M_-)`.
    pub fn weak_operators(&self) -> (CMat, CMat) {
        self.operators()
    }
}

impl DiagonalMeasurement for WeakMeasurement {
    fn weights(&self, outcome: Outcome) -> [f64; 2] {
        let strong = 0.5 * (1.0 + self.epsilon);
        let weak = 0.5 * self.complement;
        match outcome {
            Outcome::Plus => [strong, weak],
            Outcome::Minus => [weak, strong],
        }
    }
}

/// `M_1 = √p|0><0| + √q|1><1|`, `M_2 = √(1-p)|0><0| + √(1-q)|1><1|`.
///
/// `Outcome::Plus` selects `M_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedMeasurement {
    pub p: f64,
    pub q: f64,
}

impl GeneralizedMeasurement {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        check_range("q", q, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { p, q })
    }

    /// The symmetric family: `p = (1+ε)/2`, `q = (1-ε)/2`.
    pub fn from_weak(m: &WeakMeasurement) -> Self {
        let [p, q] = m.weights(Outcome::Plus);
        Self { p, q }
    }

    /// Partial-collapse pair `K_1 = √k|1><1|`, `K_2 = |0><0| + √(1-k)|1><1|`.
    ///
    /// Maps to `p = 1, q = 1 - k`: `M_1 = K_2` (the keep outcome) and
    /// `M_2 = K_1` (the discard outcome).
    pub fn partial_collapse(k: f64) -> Result<Self> {
        check_range("k", k, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { p: 1.0, q: 1.0 - k })
    }

    pub fn generalized_operators(&self) -> (CMat, CMat) {
        self.operators()
    }
}

impl DiagonalMeasurement for GeneralizedMeasurement {
    fn weights(&self, outcome: Outcome) -> [f64; 2] {
        match outcome {
            Outcome::Plus => [self.p, self.q],
            Outcome::Minus => [1.0 - self.p, 1.0 - self.q],
        }
    }
}

/// `M*,± = √((1±δ0)/2)|0><0| + √((1±δ1)/2)|1><1|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPartialMeasurement {
    pub delta0: f64,
    pub delta1: f64,
}

impl GeneralizedPartialMeasurement {
    pub fn new(delta0: f64, delta1: f64) -> Result<Self> {
        check_range("delta0", delta0, -1.0, 1.0, "[-1, 1]")?;
        check_range("delta1", delta1, -1.0, 1.0, "[-1, 1]")?;
        Ok(Self { delta0, delta1 })
    }
}

impl DiagonalMeasurement for GeneralizedPartialMeasurement {
    fn weights(&self, outcome: Outcome) -> [f64; 2] {
        let s = match outcome {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        };
        [0.5 * (1.0 + s * self.delta0), 0.5 * (1.0 + s * self.delta1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureOutcome {
    pub state: SchmidtState,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedOutcome {
    pub state: TwoQubitDensity,
    pub probability: f64,
    /// Separable weight of the post-measurement state, for decomposed input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_plus: Option<f64>,
    /// Post-measurement state in separable-plus-pure form, for decomposed input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<LSDecomposition>,
}

fn probability_floor(probability: f64, floor: f64) -> Result<f64> {
    if probability > floor && probability.is_finite() {
        Ok(probability)
    } else {
        Err(Error::ZeroProbabilityOutcome { probability })
    }
}

/// Probability of `outcome` on a Schmidt state.
pub fn pure_probability<M: DiagonalMeasurement>(m: &M, s: &SchmidtState, outcome: Outcome) -> f64 {
    let [w0, w1] = m.weights(outcome);
    s.alpha_sq() * w0 + s.beta_sq() * w1
}

/// Conditional Schmidt state after `outcome`; valid for any `d`.
pub fn apply_pure<M: DiagonalMeasurement>(m: &M, s: &SchmidtState, outcome: Outcome) -> Result<PureOutcome> {
    let probability = probability_floor(pure_probability(m, s, outcome), tolerance::MIN_PROBABILITY)?;
    let [w0, w1] = m.weights(outcome);
    let state = SchmidtState::normalized(s.alpha() * w0.sqrt(), s.beta() * w1.sqrt(), s.d())?;
    Ok(PureOutcome { state, probability })
}

/// `(O ⊗ I_2) ρ (O ⊗ I_2)†` for a 2x2 operator `O` on A.
pub fn local_sandwich(op: &CMat, rho: &CMat) -> CMat {
    kron(op, &CMat::identity(2)).sandwich(rho)
}

pub fn apply_mixed<M: DiagonalMeasurement>(m: &M, rho: &TwoQubitDensity, outcome: Outcome) -> Result<MixedOutcome> {
    apply_mixed_with_floor(m, rho, outcome, tolerance::MIN_PROBABILITY)
}

/// As [`apply_mixed`], rejecting only outcomes with probability `<= floor`.
///
/// Repeated protocols condition on outcomes whose probabilities shrink
/// doubly exponentially; they pass `f64::MIN_POSITIVE` here.
pub fn apply_mixed_with_floor<M: DiagonalMeasurement>(
    m: &M,
    rho: &TwoQubitDensity,
    outcome: Outcome,
    floor: f64,
) -> Result<MixedOutcome> {
    let numerator = local_sandwich(&m.operator(outcome), rho.as_mat());
    let probability = probability_floor(numerator.trace().re, floor)?;
    Ok(MixedOutcome {
        state: TwoQubitDensity::from_cp_output(numerator, probability),
        probability,
        lambda_plus: None,
        decomposition: None,
    })
}

/// `Σ_σ (O_σ ⊗ I) ρ (O_σ ⊗ I)†`, the unconditioned output.
pub fn unconditioned<M: DiagonalMeasurement>(m: &M, rho: &TwoQubitDensity) -> CMat {
    let (p, q) = m.operators();
    &local_sandwich(&p, rho.as_mat()) + &local_sandwich(&q, rho.as_mat())
}

/// `tr[(E ⊗ I) ρ_s]` for the effect of `outcome`.
pub fn separable_weight<M: DiagonalMeasurement>(m: &M, rho_s: &TwoQubitDensity, outcome: Outcome) -> f64 {
    let [w0, w1] = m.weights(outcome);
    let r = rho_s.as_mat();
    w0 * (r.get(0, 0).re + r.get(1, 1).re) + w1 * (r.get(2, 2).re + r.get(3, 3).re)
}

/// Measures a decomposed state and tracks the separable weight:
/// `λ_σ = λ w_{s,σ} / R_σ`.
pub fn apply_ls<M: DiagonalMeasurement>(m: &M, dec: &LSDecomposition, outcome: Outcome) -> Result<MixedOutcome> {
    apply_ls_with_floor(m, dec, outcome, tolerance::MIN_PROBABILITY)
}

pub fn apply_ls_with_floor<M: DiagonalMeasurement>(
    m: &M,
    dec: &LSDecomposition,
    outcome: Outcome,
    floor: f64,
) -> Result<MixedOutcome> {
    let mut out = apply_mixed_with_floor(m, &ls_to_density(dec), outcome, floor)?;
    let lambda = dec.lambda();
    let w_s = separable_weight(m, dec.separable(), outcome);
    let p_psi = pure_probability(m, dec.pure(), outcome);
    let total = lambda * w_s + (1.0 - lambda) * p_psi;
    let lambda_plus = if lambda == 0.0 || w_s <= 0.0 {
        0.0
    } else if lambda == 1.0 || p_psi <= 0.0 {
        1.0
    } else {
        (lambda * w_s / total).clamp(0.0, 1.0)
    };

    let separable = if w_s > 0.0 {
        let numerator = local_sandwich(&m.operator(outcome), dec.separable().as_mat());
        TwoQubitDensity::from_cp_output(numerator, w_s)
    } else {
        dec.separable().clone()
    };
    let pure = if p_psi > 0.0 {
        let [w0, w1] = m.weights(outcome);
        SchmidtState::normalized(dec.pure().alpha() * w0.sqrt(), dec.pure().beta() * w1.sqrt(), 2)?
    } else {
        *dec.pure()
    };

    out.lambda_plus = Some(lambda_plus);
    out.decomposition = Some(LSDecomposition::new_unchecked(lambda_plus, separable, pure));
    Ok(out)
}

/// Result of tuning the generalized two-outcome measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Tuning {
    Feasible { p: f64, q: f64 },
    Infeasible,
}

/// Chooses `(p, q)` so that `M_1` maps `s` to the maximally entangled state
/// (`p α² = q β²`) with the largest single-shot success probability.
///
/// With `a_sz` given, the separable weight must not grow:
/// `(p - q)(β² - α² + A_{s,z}) <= 0`. For `β > α` this reads
/// `(p - q)(√(1 - S) + A_{s,z}) <= 0`; for `α > β` the sign of the
/// `√(1 - S)` term flips.
pub fn generalized_tuning(s: &SchmidtState, a_sz: Option<f64>) -> Result<Tuning> {
    if s.alpha() <= 0.0 || s.beta() <= 0.0 {
        return Err(Error::InvalidState(
            "generalized tuning needs both Schmidt coefficients positive".into(),
        ));
    }
    let (p, q) = if s.beta() >= s.alpha() {
        (1.0, s.alpha_sq() / s.beta_sq())
    } else {
        (s.beta_sq() / s.alpha_sq(), 1.0)
    };
    if let Some(a) = a_sz {
        check_range("a_sz", a, -1.0, 1.0, "[-1, 1]")?;
        let signed_gap = s.beta_sq() - s.alpha_sq();
        if (p - q) * (signed_gap + a) > tolerance::CRITERION {
            return Ok(Tuning::Infeasible);
        }
    }
    Ok(Tuning::Feasible { p, q })
}

/// Single-shot partial measurement equivalent to the whole repeated
/// protocol: `δ0 = 1`, `β √((1+δ1)/2) = α`.
pub fn asymptotic_operators(s: &SchmidtState) -> Result<GeneralizedPartialMeasurement> {
    if s.beta() < s.alpha() - tolerance::MAXIMAL {
        return Err(Error::OrderingViolation {
            alpha: s.alpha(),
            beta: s.beta(),
        });
    }
    let delta1 = (2.0 * s.alpha_sq() / s.beta_sq() - 1.0).clamp(-1.0, 1.0);
    GeneralizedPartialMeasurement::new(1.0, delta1)
}

/// Convenience: density matrix of the post-measurement pure state.
pub fn pure_outcome_density(out: &PureOutcome) -> Result<TwoQubitDensity> {
    schmidt_to_density(&out.state)
}
