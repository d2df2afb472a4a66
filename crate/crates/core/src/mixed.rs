//! Mixed two-qubit inputs: noisy versions of a Schmidt state, the
//! `A_{s,z}` criterion, and single-shot and repeated amplification.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence, e_measure};
use crate::error::{check_range, Error, Result};
use crate::measurements::{apply_ls, local_sandwich, MixedOutcome, Outcome, WeakMeasurement};
use crate::numerics::{kron, CMat};
use crate::output::fmt_f64;
use crate::protocol::{build_schedule, initial_strength, swap_convention};
use crate::states::{ls_to_density, schmidt_to_density, LSDecomposition, SchmidtState, TwoQubitDensity};
use crate::tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// `ρ -> (1-u) ρ + u (σ_z⊗I) ρ (σ_z⊗I)`, `0 <= u <= 1/2`.
    Dephasing,
    /// Decay `|1> -> |0>` on A with survival amplitude `√u`, `0 <= u <= 1`.
    AmplitudeDamping,
    /// `λ I/4 + (1-λ) |ψ><ψ|`.
    MaximallyMixedAdmixture,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dephasing => "dephasing",
            Self::AmplitudeDamping => "amplitude_damping",
            Self::MaximallyMixedAdmixture => "maximally_mixed_admixture",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct ChannelSpec {
    kind: ChannelKind,
    u_or_lambda: f64,
}

#[derive(Deserialize)]
struct RawChannel {
    kind: ChannelKind,
    u_or_lambda: f64,
}

impl TryFrom<RawChannel> for ChannelSpec {
    type Error = Error;

    fn try_from(raw: RawChannel) -> Result<Self> {
        ChannelSpec::new(raw.kind, raw.u_or_lambda)
    }
}

impl ChannelSpec {
    pub fn new(kind: ChannelKind, u_or_lambda: f64) -> Result<Self> {
        match kind {
            ChannelKind::Dephasing => check_range("u", u_or_lambda, 0.0, 0.5, "[0, 1/2]")?,
            ChannelKind::AmplitudeDamping => check_range("u", u_or_lambda, 0.0, 1.0, "[0, 1]")?,
            ChannelKind::MaximallyMixedAdmixture => check_range("lambda", u_or_lambda, 0.0, 1.0, "[0, 1]")?,
        };
        Ok(Self { kind, u_or_lambda })
    }

    pub fn dephasing(u: f64) -> Result<Self> {
        Self::new(ChannelKind::Dephasing, u)
    }

    pub fn amplitude_damping(u: f64) -> Result<Self> {
        Self::new(ChannelKind::AmplitudeDamping, u)
    }

    pub fn admixture(lambda: f64) -> Result<Self> {
        Self::new(ChannelKind::MaximallyMixedAdmixture, lambda)
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn value(&self) -> f64 {
        self.u_or_lambda
    }

    /// Kraus operators on A, for the two channels that have them.
    pub fn kraus(&self) -> Option<[CMat; 2]> {
        let u = self.u_or_lambda;
        match self.kind {
            ChannelKind::Dephasing => Some([
                CMat::identity(2).scale_real((1.0 - u).sqrt()),
                CMat::pauli_z().scale_real(u.sqrt()),
            ]),
            ChannelKind::AmplitudeDamping => Some([
                CMat::from_diag(&[1.0, u.sqrt()]),
                CMat::from_real(2, &[0.0, (1.0 - u).sqrt(), 0.0, 0.0]).expect("2x2"),
            ]),
            ChannelKind::MaximallyMixedAdmixture => None,
        }
    }
}

fn require_qubit(s: &SchmidtState) -> Result<()> {
    if s.d() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "d = 2".into(),
            found: format!("d = {}", s.d()),
        });
    }
    Ok(())
}

/// Noisy state in separable-plus-pure form, built from the closed forms.
pub fn apply_channel(spec: &ChannelSpec, s: &SchmidtState) -> Result<LSDecomposition> {
    require_qubit(s)?;
    let v = spec.u_or_lambda;
    let dec = match spec.kind {
        ChannelKind::Dephasing => {
            // μ = αβ(1 - 2u), so λ = 1 - μ/(αβ) = 2u.
            let separable = TwoQubitDensity::from_cp_output(CMat::from_diag(&[s.alpha_sq(), 0.0, 0.0, s.beta_sq()]), 1.0);
            LSDecomposition::new_unchecked(2.0 * v, separable, *s)
        }
        ChannelKind::AmplitudeDamping => {
            let lambda = (1.0 - v) * s.beta_sq();
            let pure = if lambda < 1.0 {
                SchmidtState::normalized(s.alpha(), v.sqrt() * s.beta(), 2)?
            } else {
                *s
            };
            LSDecomposition::new_unchecked(lambda, TwoQubitDensity::basis(1), pure)
        }
        ChannelKind::MaximallyMixedAdmixture => LSDecomposition::new_unchecked(v, TwoQubitDensity::maximally_mixed(), *s),
    };
    Ok(dec)
}

/// The same noisy state computed directly from the channel on `|ψ><ψ|`.
pub fn channel_map(spec: &ChannelSpec, s: &SchmidtState) -> Result<TwoQubitDensity> {
    let rho = schmidt_to_density(s)?;
    match spec.kraus() {
        Some([k1, k2]) => {
            let out = &local_sandwich(&k1, rho.as_mat()) + &local_sandwich(&k2, rho.as_mat());
            Ok(TwoQubitDensity::from_cp_output(out, 1.0))
        }
        None => Ok(TwoQubitDensity::mix(
            spec.u_or_lambda,
            &TwoQubitDensity::maximally_mixed(),
            &rho,
        )),
    }
}

/// `A_{s,z} = tr[(σ_z ⊗ I) ρ_s]`.
pub fn a_sz(rho_s: &TwoQubitDensity) -> f64 {
    let z = kron(&CMat::pauli_z(), &CMat::identity(2));
    (&z * rho_s.as_mat()).trace().re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub a_sz: f64,
    /// `α² - β²` of the pure part.
    pub threshold: f64,
    pub satisfied: bool,
    /// `α > β`: the roles of the outcomes are exchanged and the inequality
    /// reads `A_{s,z} >= α² - β²`.
    pub mirrored: bool,
}

/// Sufficient condition for the `+` outcome not to increase the separable
/// weight: `A_{s,z} <= α² - β²`.
pub fn criterion(dec: &LSDecomposition) -> CriterionReport {
    let a = a_sz(dec.separable());
    let threshold = dec.pure().alpha_sq() - dec.pure().beta_sq();
    let mirrored = dec.pure().alpha() > dec.pure().beta();
    let satisfied = if mirrored {
        a >= threshold - tolerance::CRITERION
    } else {
        a <= threshold + tolerance::CRITERION
    };
    CriterionReport {
        a_sz: a,
        threshold,
        satisfied,
        mirrored,
    }
}

/// Sign of a concurrence change with a zero band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(delta: f64) -> Self {
        if delta > tolerance::CONCURRENCE_ZERO {
            Self::Positive
        } else if delta < -tolerance::CONCURRENCE_ZERO {
            Self::Negative
        } else {
            Self::Zero
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Self::Negative => -1,
            Self::Zero => 0,
            Self::Positive => 1,
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        s.as_i8()
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Self::Negative),
            0 => Ok(Self::Zero),
            1 => Ok(Self::Positive),
            other => Err(format!("sign must be -1, 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleShot {
    /// Outcome that maximally entangles the pure part.
    pub outcome: Outcome,
    pub output: MixedOutcome,
    pub c_before: f64,
    pub c_after: f64,
    pub delta: f64,
    pub sign: Sign,
    pub lambda: f64,
    pub lambda_plus: f64,
    pub e_before: f64,
    pub e_after: f64,
}

/// One weak measurement of strength `|β² - α²|` of the pure part,
/// conditioned on the outcome that equalizes its Schmidt coefficients.
pub fn single_shot(dec: &LSDecomposition) -> Result<SingleShot> {
    let epsilon = initial_strength(dec.pure())?;
    let (_, mirrored) = swap_convention(dec.pure());
    let outcome = if mirrored { Outcome::Minus } else { Outcome::Plus };
    let m = WeakMeasurement::new(epsilon)?;
    let output = apply_ls(&m, dec, outcome)?;

    let c_before = concurrence(&ls_to_density(dec));
    let c_after = concurrence(&output.state);
    let delta = c_after - c_before;
    let after = output.decomposition.as_ref().expect("decomposed input");
    let lambda_plus = after.lambda();
    let e_after = e_measure(after);
    Ok(SingleShot {
        outcome,
        c_before,
        c_after,
        delta,
        sign: Sign::of(delta),
        lambda: dec.lambda(),
        lambda_plus,
        e_before: e_measure(dec),
        e_after,
        output,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeatedStep {
    pub n: usize,
    /// Concurrence of the state entering measurement `n`.
    pub c_input: f64,
    /// Concurrence after outcome `+` at measurement `n`.
    pub c_success: f64,
    /// Probability of that outcome given the input state.
    pub p_success: f64,
}

/// Runs the pure-state schedule on the dephased state, following the
/// failure branch.
///
/// The measurements are diagonal, so the state entering step `n` is
/// `D ρ_1 D` for the product `D` of the failure operators so far. `D` is
/// kept as log weights: its entries shrink doubly exponentially and the
/// intermediate states underflow long before the success states, whose
/// Schmidt coefficients are balanced, lose precision.
pub fn repeated_dephasing(s: &SchmidtState, u: f64, steps: usize) -> Result<Vec<RepeatedStep>> {
    let spec = ChannelSpec::dephasing(u)?;
    let (oriented, swapped) = swap_convention(s);
    let schedule = build_schedule(&oriented, steps)?;
    let rho1 = ls_to_density(&apply_channel(&spec, s)?);
    let r = rho1.as_mat();
    let marginal = [r.get(0, 0).re + r.get(1, 1).re, r.get(2, 2).re + r.get(3, 3).re];
    let mut log_d = [0.0f64; 2];
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let strong = (0.5 * (1.0 + schedule.epsilons()[k])).ln();
        let weak = schedule.log_complements()[k] - std::f64::consts::LN_2;
        // log POVM weights on (|0>, |1>) of the two outcomes, before relabeling
        let (log_win, log_lose) = if swapped {
            ([weak, strong], [strong, weak])
        } else {
            ([strong, weak], [weak, strong])
        };

        let top = log_d[0].max(log_d[1]);
        let x = [(log_d[0] - top).exp() * marginal[0], (log_d[1] - top).exp() * marginal[1]];
        let p_success = (log_win[0].exp() * x[0] + log_win[1].exp() * x[1]) / (x[0] + x[1]);

        let after_win = [log_d[0] + log_win[0], log_d[1] + log_win[1]];
        out.push(RepeatedStep {
            n: k + 1,
            c_input: concurrence(&diagonal_conjugate(&rho1, log_d)?),
            c_success: concurrence(&diagonal_conjugate(&rho1, after_win)?),
            p_success,
        });
        log_d = [log_d[0] + log_lose[0], log_d[1] + log_lose[1]];
    }
    Ok(out)
}

/// `D ρ D / tr(D ρ D)` with `D = diag(e^{l0/2}, e^{l1/2}) ⊗ I`.
fn diagonal_conjugate(rho: &TwoQubitDensity, log_w: [f64; 2]) -> Result<TwoQubitDensity> {
    let top = log_w[0].max(log_w[1]);
    let op = CMat::from_diag(&[(0.5 * (log_w[0] - top)).exp(), (0.5 * (log_w[1] - top)).exp()]);
    let numerator = local_sandwich(&op, rho.as_mat());
    let trace = numerator.trace().re;
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::ZeroProbabilityOutcome { probability: trace });
    }
    Ok(TwoQubitDensity::from_cp_output(numerator, trace))
}

/// One point of a concurrence-change map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub s_value: f64,
    pub weight: f64,
    pub c_before: f64,
    pub c_after: f64,
    pub sign: Sign,
}

pub const SWEEP_CSV_HEADER: &str = "s_value,weight,c_before,c_after,sign";

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.s_value),
            fmt_f64(r.weight),
            fmt_f64(r.c_before),
            fmt_f64(r.c_after),
            r.sign
        )?;
    }
    Ok(())
}

/// `points` interior values `i / (points + 1)`, `i = 1..=points`.
pub fn interior_grid(points: usize) -> Vec<f64> {
    (1..=points).map(|i| i as f64 / (points + 1) as f64).collect()
}

fn sweep_row(s_value: f64, weight: f64, dec: &LSDecomposition) -> Result<SweepRow> {
    let shot = single_shot(dec)?;
    Ok(SweepRow {
        s_value,
        weight,
        c_before: shot.c_before,
        c_after: shot.c_after,
        sign: shot.sign,
    })
}

/// Schmidt state with `4α²β² = s_value` and `β >= α`.
fn state_for_entropy(s_value: f64) -> Result<SchmidtState> {
    SchmidtState::from_linear_entropy(s_value)
}

/// Dephased state at `S(ψ)` and weight `λ = 2u`.
pub fn dephasing_point(s: &SchmidtState, u: f64) -> Result<SweepRow> {
    let dec = apply_channel(&ChannelSpec::dephasing(u)?, s)?;
    sweep_row(4.0 * s.alpha_sq() * s.beta_sq(), dec.lambda(), &dec)
}

/// Admixture of `I/4` over the grid `S(ψ) × λ`; rows ordered by `S` then `λ`.
pub fn admixture_sweep(s_grid: &[f64], lambda_grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid_pairs(s_grid, lambda_grid)
        .into_par_iter()
        .map(|(sv, lambda)| {
            let dec = apply_channel(&ChannelSpec::admixture(lambda)?, &state_for_entropy(sv)?)?;
            sweep_row(sv, lambda, &dec)
        })
        .collect()
}

/// Input `(α², u)` of the amplitude-damping channel whose output has
/// pure part with linear entropy `s_tilde` and separable weight `w`.
///
/// Closed form: `α² = α̃² (1 - w)`, `u = 1 - w / β²`. Solvable for every
/// `s_tilde ∈ [0, 1]`, `w ∈ [0, 1)`.
pub fn amplitude_damping_inverse(s_tilde: f64, w: f64) -> Result<(SchmidtState, f64)> {
    check_range("s_tilde", s_tilde, 0.0, 1.0, "[0, 1]")?;
    check_range("weight", w, 0.0, 1.0 - f64::EPSILON, "[0, 1)")?;
    let alpha_tilde_sq = 0.5 * (1.0 - (1.0 - s_tilde).sqrt());
    let alpha_sq = alpha_tilde_sq * (1.0 - w);
    let beta_sq = 1.0 - alpha_sq;
    let u = (1.0 - w / beta_sq).clamp(0.0, 1.0);
    Ok((SchmidtState::from_alpha_sq(alpha_sq)?, u))
}

/// Amplitude damping over the grid `S(ψ̃) × (1-u)β²`; rows ordered by `S`
/// then weight.
pub fn amplitude_damping_sweep(s_grid: &[f64], weight_grid: &[f64]) -> Result<Vec<SweepRow>> {
    grid_pairs(s_grid, weight_grid)
        .into_par_iter()
        .map(|(sv, w)| {
            let (s, u) = amplitude_damping_inverse(sv, w)?;
            let dec = apply_channel(&ChannelSpec::amplitude_damping(u)?, &s)?;
            sweep_row(sv, w, &dec)
        })
        .collect()
}

fn grid_pairs(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}
