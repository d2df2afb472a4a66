//! Random separable two-qubit states at fixed `A_{s,z}` and the Monte Carlo
//! map of mean concurrence change.
//!
//! A separable state is written
//! `ρ_s = ¼(I + Σ a_i σ_i⊗I + Σ b_j I⊗σ_j + Σ c_ij σ_i⊗σ_j)`. With `a_z`
//! pinned, every valid state has its other 14 parameters in `[-1, 1]`, so
//! drawing them uniformly from that box and rejecting invalid candidates
//! targets the uniform distribution on the convex slice of states that
//! are positive and have a positive partial transpose. The default sampler
//! reaches the same distribution by hit-and-run inside the slice; the box
//! rejection sampler is kept for comparison and for small slices where it
//! is practical.

use std::io::{self, Write};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{concurrence, partial_transpose_b_mat, ppt_check};
use crate::error::{check_range, Error, Result};
use crate::mixed::{single_shot, Sign};
use crate::numerics::{hermitian_eigen, hermitian_eigenvalues, kron, CMat};
use crate::output::fmt_f64;
use crate::states::{LSDecomposition, SchmidtState, TwoQubitDensity};
use crate::tolerance;

pub type StreamRng = ChaCha8Rng;

/// ChaCha8 keyed by `master_seed`, on stream `index`.
pub fn rng_stream(master_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Rejections allowed per sample by the box sampler.
pub const REJECTION_BUDGET: u64 = 1_000_000;

/// Bloch-type parameters of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [[f64; 3]; 3],
}

/// `σ_i⊗I`, `I⊗σ_j`, `σ_i⊗σ_j` in the order `a, b, c` (row-major).
fn generators() -> &'static [CMat; 15] {
    static GENERATORS: OnceLock<[CMat; 15]> = OnceLock::new();
    GENERATORS.get_or_init(|| {
        let paulis = [CMat::pauli_x(), CMat::pauli_y(), CMat::pauli_z()];
        let id = CMat::identity(2);
        std::array::from_fn(|k| match k {
            0..=2 => kron(&paulis[k], &id),
            3..=5 => kron(&id, &paulis[k - 3]),
            _ => kron(&paulis[(k - 6) / 3], &paulis[(k - 6) % 3]),
        })
    })
}

fn combination(coords: &[f64; 15], with_identity: bool) -> CMat {
    let mut m = if with_identity {
        CMat::identity(4)
    } else {
        CMat::zeros(4, 4)
    };
    for (g, &x) in generators().iter().zip(coords) {
        if x != 0.0 {
            m = &m + &g.scale_real(x);
        }
    }
    m.scale_real(0.25)
}

impl SeparableParams {
    fn from_coords(x: &[f64; 15]) -> Self {
        Self {
            a: [x[0], x[1], x[2]],
            b: [x[3], x[4], x[5]],
            c: [[x[6], x[7], x[8]], [x[9], x[10], x[11]], [x[12], x[13], x[14]]],
        }
    }

    fn coords(&self) -> [f64; 15] {
        let mut x = [0.0; 15];
        x[..3].copy_from_slice(&self.a);
        x[3..6].copy_from_slice(&self.b);
        for i in 0..3 {
            x[6 + 3 * i..9 + 3 * i].copy_from_slice(&self.c[i]);
        }
        x
    }

    /// `A_{s,z}`.
    pub fn a_sz(&self) -> f64 {
        self.a[2]
    }

    pub fn to_matrix(&self) -> CMat {
        combination(&self.coords(), true)
    }

    /// Validated density matrix; fails if the parameters are not a state.
    pub fn to_density(&self) -> Result<TwoQubitDensity> {
        TwoQubitDensity::new(self.to_matrix())
    }

    /// Inverse of [`Self::to_matrix`]: `x_k = tr(G_k ρ)`.
    pub fn from_density(rho: &TwoQubitDensity) -> Self {
        let x = std::array::from_fn(|k| (&generators()[k] * rho.as_mat()).trace().re);
        Self::from_coords(&x)
    }

    /// Positive and PPT under the Newton test.
    pub fn is_separable_state(&self) -> bool {
        match self.to_density() {
            Ok(rho) => ppt_check(&rho),
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Proposal {
    HitAndRun,
    BoxRejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub proposal: Proposal,
    /// Hit-and-run steps discarded before the first sample.
    pub burn_in: usize,
    /// Hit-and-run steps between successive samples.
    pub thinning: usize,
    /// Rejections allowed per sample by the box sampler.
    pub rejection_budget: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            proposal: Proposal::HitAndRun,
            burn_in: 200,
            thinning: 10,
            rejection_budget: REJECTION_BUDGET,
        }
    }
}

/// Box proposal: `a_z` fixed, 14 parameters uniform on `[-1, 1]`, accept
/// when positive and PPT. Returns the sample and the rejections spent.
pub fn sample_box_rejection(a_sz: f64, rng: &mut StreamRng, budget: u64) -> Result<(SeparableParams, u64)> {
    check_range("a_sz", a_sz, -1.0, 1.0, "[-1, 1]")?;
    let mut rejections = 0;
    loop {
        let mut x: [f64; 15] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        x[2] = a_sz;
        let params = SeparableParams::from_coords(&x);
        if params.is_separable_state() {
            return Ok((params, rejections));
        }
        rejections += 1;
        if rejections >= budget {
            return Err(Error::RejectionBudgetExceeded { a_sz, rejections });
        }
    }
}

/// Hit-and-run chain on the slice `{ρ ⪰ 0, ρ^Γ ⪰ 0, A_{s,z} = a_sz}`.
///
/// Each step draws an isotropic direction in the 14 free coordinates and a
/// uniform point on the chord through the current state. At `|a_sz| = 1`
/// the slice is `|k><k| ⊗ ½(I + b·σ)` with `|b| <= 1` and `b` is drawn
/// uniformly from the ball instead.
pub struct HitAndRun {
    x: [f64; 15],
    rng: StreamRng,
    thinning: usize,
}

impl HitAndRun {
    pub fn new(a_sz: f64, rng: StreamRng, burn_in: usize, thinning: usize) -> Result<Self> {
        check_range("a_sz", a_sz, -1.0, 1.0, "[-1, 1]")?;
        let mut x = [0.0; 15];
        x[2] = a_sz;
        let mut chain = Self {
            x,
            rng,
            thinning: thinning.max(1),
        };
        if a_sz.abs() < 1.0 {
            for _ in 0..burn_in {
                chain.step()?;
            }
        }
        Ok(chain)
    }

    pub fn next_sample(&mut self) -> Result<SeparableParams> {
        if self.x[2].abs() == 1.0 {
            return Ok(self.pole_sample());
        }
        loop {
            for _ in 0..self.thinning {
                self.step()?;
            }
            let params = SeparableParams::from_coords(&self.x);
            if params.is_separable_state() {
                return Ok(params);
            }
        }
    }

    fn pole_sample(&mut self) -> SeparableParams {
        let b = loop {
            let b: [f64; 3] = std::array::from_fn(|_| self.rng.random_range(-1.0..=1.0));
            if b.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
                break b;
            }
        };
        let k = self.x[2];
        let mut x = [0.0; 15];
        x[2] = k;
        x[3..6].copy_from_slice(&b);
        for j in 0..3 {
            x[12 + j] = k * b[j];
        }
        SeparableParams::from_coords(&x)
    }

    fn step(&mut self) -> Result<()> {
        let mut d: [f64; 15] = std::array::from_fn(|_| self.rng.sample(StandardNormal));
        d[2] = 0.0;
        let current = combination(&self.x, true);
        let direction = combination(&d, false);
        let (lo1, hi1) = chord(&current, &direction)?;
        let (lo2, hi2) = chord(&partial_transpose_b_mat(&current), &partial_transpose_b_mat(&direction))?;
        let (lo, hi) = (lo1.max(lo2), hi1.min(hi2));
        if hi > lo {
            let t = self.rng.random_range(lo..hi);
            for k in 0..15 {
                self.x[k] += t * d[k];
            }
        }
        Ok(())
    }
}

/// `{t : a + t d ⪰ 0}` for positive definite `a`, as `(t_min, t_max)`.
///
/// With `w = a^{-1/2}`, `a + t d = w^{-1}(I + t w d w)w^{-1}`, so the
/// endpoints are `-1/μ` over the eigenvalues `μ` of `w d w`.
fn chord(a: &CMat, d: &CMat) -> Result<(f64, f64)> {
    let eig = hermitian_eigen(a)?;
    let floor = eig.values.last().copied().unwrap_or(0.0);
    if floor <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let w = eig.map_values(|v| 1.0 / v.sqrt());
    let mu = hermitian_eigenvalues(&(&(&w * d) * &w).hermitize())?;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for m in mu {
        if m > 0.0 {
            lo = lo.max(-1.0 / m);
        } else if m < 0.0 {
            hi = hi.min(-1.0 / m);
        }
    }
    Ok((lo, hi))
}

/// Draws samples with the configured proposal from one RNG stream.
pub enum SeparableSampler {
    HitAndRun(HitAndRun),
    BoxRejection { a_sz: f64, rng: StreamRng, budget: u64 },
}

impl SeparableSampler {
    pub fn new(a_sz: f64, rng: StreamRng, config: &SamplerConfig) -> Result<Self> {
        check_range("a_sz", a_sz, -1.0, 1.0, "[-1, 1]")?;
        Ok(match config.proposal {
            Proposal::HitAndRun => Self::HitAndRun(HitAndRun::new(a_sz, rng, config.burn_in, config.thinning)?),
            Proposal::BoxRejection => Self::BoxRejection {
                a_sz,
                rng,
                budget: config.rejection_budget,
            },
        })
    }

    pub fn next_sample(&mut self) -> Result<SeparableParams> {
        match self {
            Self::HitAndRun(chain) => chain.next_sample(),
            Self::BoxRejection { a_sz, rng, budget } => sample_box_rejection(*a_sz, rng, *budget).map(|(p, _)| p),
        }
    }
}

/// One separable state with `A_{s,z} = a_sz`, from stream 0 of `seed`.
pub fn sample_separable(a_sz: f64, seed: u64) -> Result<SeparableParams> {
    sample_separable_with(a_sz, seed, &SamplerConfig::default())
}

pub fn sample_separable_with(a_sz: f64, seed: u64, config: &SamplerConfig) -> Result<SeparableParams> {
    SeparableSampler::new(a_sz, rng_stream(seed, 0), config)?.next_sample()
}

/// Sufficient-criterion boundary `S = 1 - A_{s,z}²`; cells with larger `S`
/// satisfy it. `None` for `a_sz > 0`, where no cell does.
pub fn criterion_entropy(a_sz: f64) -> Option<f64> {
    (a_sz <= 0.0).then_some(1.0 - a_sz * a_sz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCell {
    pub s_value: f64,
    pub lambda: f64,
    pub a_sz: f64,
    pub n_samples: usize,
    pub mean_c_before: f64,
    pub mean_c_after: f64,
    pub sign: Sign,
}

pub const MONTE_CARLO_CSV_HEADER: &str = "s_value,lambda,n_samples,mean_c_before,mean_c_after,sign";

pub fn write_monte_carlo_csv<W: Write>(cells: &[MonteCarloCell], mut w: W) -> io::Result<()> {
    writeln!(w, "{MONTE_CARLO_CSV_HEADER}")?;
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(c.s_value),
            fmt_f64(c.lambda),
            c.n_samples,
            fmt_f64(c.mean_c_before),
            fmt_f64(c.mean_c_after),
            c.sign
        )?;
    }
    Ok(())
}

/// Mean single-shot concurrence change over `n` separable parts at the
/// cell `(S(ψ), λ)`. The cell draws from stream `cell_index` of `seed`.
pub fn monte_carlo_cell(
    a_sz: f64,
    s_value: f64,
    lambda: f64,
    n: usize,
    seed: u64,
    cell_index: u64,
    config: &SamplerConfig,
) -> Result<MonteCarloCell> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n_samples",
            value: 0.0,
            range: ">= 1",
        });
    }
    check_range("lambda", lambda, 0.0, 1.0, "[0, 1]")?;
    let pure = SchmidtState::from_linear_entropy(s_value)?;
    let mut sampler = SeparableSampler::new(a_sz, rng_stream(seed, cell_index), config)?;

    let (mut sum_before, mut sum_after) = (0.0, 0.0);
    let mut all_zero = true;
    for _ in 0..n {
        let rho_s = sampler.next_sample()?.to_density()?;
        let dec = LSDecomposition::new_unchecked(lambda, rho_s, pure);
        let shot = single_shot(&dec)?;
        all_zero &= shot.c_before <= tolerance::CONCURRENCE_ZERO && shot.c_after <= tolerance::CONCURRENCE_ZERO;
        sum_before += shot.c_before;
        sum_after += shot.c_after;
    }
    let mean_c_before = sum_before / n as f64;
    let mean_c_after = sum_after / n as f64;
    Ok(MonteCarloCell {
        s_value,
        lambda,
        a_sz,
        n_samples: n,
        mean_c_before,
        mean_c_after,
        sign: if all_zero {
            Sign::Zero
        } else {
            Sign::of(mean_c_after - mean_c_before)
        },
    })
}

/// All cells of `s_grid × lambda_grid`, ordered by `S` then `λ`. Cell `k`
/// in that order uses stream `k`, so the output does not depend on how the
/// cells are scheduled.
pub fn monte_carlo_map(
    a_sz: f64,
    s_grid: &[f64],
    lambda_grid: &[f64],
    n: usize,
    seed: u64,
    config: &SamplerConfig,
) -> Result<Vec<MonteCarloCell>> {
    monte_carlo_cells(a_sz, s_grid, lambda_grid, n, seed, config)
        .into_iter()
        .collect()
}

/// As [`monte_carlo_map`], keeping per-cell failures.
pub fn monte_carlo_cells(
    a_sz: f64,
    s_grid: &[f64],
    lambda_grid: &[f64],
    n: usize,
    seed: u64,
    config: &SamplerConfig,
) -> Vec<Result<MonteCarloCell>> {
    let width = lambda_grid.len();
    (0..s_grid.len() * width)
        .into_par_iter()
        .map(|k| {
            monte_carlo_cell(
                a_sz,
                s_grid[k / width],
                lambda_grid[k % width],
                n,
                seed,
                k as u64,
                config,
            )
        })
        .collect()
}

/// `C(ρ_s) <= 1e-9` for the reconstructed state.
pub fn has_zero_concurrence(params: &SeparableParams) -> Result<bool> {
    Ok(concurrence(&params.to_density()?) <= tolerance::CONCURRENCE_ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed::a_sz as a_sz_of;
    use rand::RngCore;

    #[test]
    fn streams_differ_and_repeat() {
        let mut a = rng_stream(42, 0);
        let mut b = rng_stream(42, 1);
        let mut a2 = rng_stream(42, 0);
        let first = a.next_u64();
        assert_ne!(first, b.next_u64());
        assert_eq!(first, a2.next_u64());
        assert_ne!(rng_stream(43, 0).next_u64(), first);
    }

    #[test]
    fn chi_square_uniformity() {
        // df = 99, p = 0.001 critical value, from scipy.stats.chi2.ppf(0.999, 99)
        const CRITICAL: f64 = 148.23035916510173;
        let mut rng = rng_stream(2024, 7);
        let mut bins = [0u64; 100];
        let draws = 1_000_000;
        for _ in 0..draws {
            let x: f64 = rng.random();
            bins[(x * 100.0) as usize] += 1;
        }
        let expected = draws as f64 / 100.0;
        let stat: f64 = bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        assert!(stat < CRITICAL, "chi-square {stat}");
    }

    #[test]
    fn parameters_roundtrip() {
        let zero = SeparableParams::from_coords(&[0.0; 15]);
        assert_eq!(zero.to_density().unwrap(), TwoQubitDensity::maximally_mixed());
        assert!(zero.is_separable_state());

        let p = sample_separable(-0.3, 9).unwrap();
        let back = SeparableParams::from_density(&p.to_density().unwrap());
        for (x, y) in p.coords().iter().zip(back.coords()) {
            assert!((x - y).abs() < 1e-12);
        }
        // |01><01|: a_z = 1, b_z = -1, c_zz = -1
        let basis = SeparableParams::from_density(&TwoQubitDensity::basis(1));
        assert_eq!(basis.a, [0.0, 0.0, 1.0]);
        assert_eq!(basis.b, [0.0, 0.0, -1.0]);
        assert_eq!(basis.c[2][2], -1.0);
    }

    #[test]
    fn sampler_is_deterministic() {
        assert_eq!(sample_separable(0.0, 5).unwrap(), sample_separable(0.0, 5).unwrap());
        assert_ne!(sample_separable(0.0, 5).unwrap(), sample_separable(0.0, 6).unwrap());
    }

    #[test]
    fn samples_are_separable_with_exact_a_sz() {
        for &a in &[-1.0, -0.95, -0.5, 0.0, 0.4, 0.95, 1.0] {
            let mut sampler = SeparableSampler::new(a, rng_stream(11, 3), &SamplerConfig::default()).unwrap();
            for _ in 0..40 {
                let p = sampler.next_sample().unwrap();
                assert_eq!(p.a_sz(), a);
                let rho = p.to_density().unwrap();
                assert!((a_sz_of(&rho) - a).abs() < 1e-12);
                assert!(ppt_check(&rho));
                assert!(has_zero_concurrence(&p).unwrap());
                assert!(p.coords().iter().all(|v| v.abs() <= 1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn hit_and_run_explores_the_slice() {
        // Means of the free parameters vanish by symmetry; spread is nonzero.
        let mut sampler = SeparableSampler::new(0.0, rng_stream(3, 0), &SamplerConfig::default()).unwrap();
        let n = 2000;
        let mut mean = [0.0; 15];
        let mut sq = [0.0; 15];
        for _ in 0..n {
            let x = sampler.next_sample().unwrap().coords();
            for k in 0..15 {
                mean[k] += x[k] / n as f64;
                sq[k] += x[k] * x[k] / n as f64;
            }
        }
        for k in (0..15).filter(|&k| k != 2) {
            assert!(mean[k].abs() < 0.05, "coordinate {k}: mean {}", mean[k]);
            assert!(sq[k] > 0.01, "coordinate {k}: second moment {}", sq[k]);
        }
    }

    #[test]
    fn box_rejection_budget() {
        let config = SamplerConfig {
            proposal: Proposal::BoxRejection,
            rejection_budget: 1000,
            ..SamplerConfig::default()
        };
        match sample_separable_with(0.0, 1, &config) {
            Err(Error::RejectionBudgetExceeded { a_sz, rejections }) => {
                assert_eq!(a_sz, 0.0);
                assert_eq!(rejections, 1000);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
        let err = sample_box_rejection(-0.95, &mut rng_stream(1, 0), 10).unwrap_err();
        assert_eq!(err, Error::RejectionBudgetExceeded { a_sz: -0.95, rejections: 10 });
    }

    #[test]
    fn criterion_entropy_boundary() {
        assert!((criterion_entropy(-0.95).unwrap() - 0.0975).abs() < 1e-15);
        assert_eq!(criterion_entropy(0.5), None);
        assert_eq!(criterion_entropy(0.0), Some(1.0));
    }

    #[test]
    fn criterion_cells_do_not_lose_concurrence() {
        let s_grid = [0.2, 0.5, 0.9];
        let l_grid = [0.1, 0.5, 0.9];
        let cells = monte_carlo_map(-0.95, &s_grid, &l_grid, 40, 77, &SamplerConfig::default()).unwrap();
        assert_eq!(cells.len(), 9);
        assert_eq!((cells[1].s_value, cells[1].lambda), (0.2, 0.5));
        for c in &cells {
            assert!(c.s_value > criterion_entropy(-0.95).unwrap());
            assert!(c.mean_c_after >= c.mean_c_before - 1e-9, "{c:?}");
        }
        assert!(cells.iter().filter(|c| c.sign == Sign::Positive).count() >= 6);
    }

    #[test]
    fn pure_limit_rows_amplify() {
        let cells = monte_carlo_map(0.6, &[0.2, 0.6, 0.95], &[1e-6], 5, 1, &SamplerConfig::default()).unwrap();
        assert!(cells.iter().all(|c| c.sign == Sign::Positive));
    }

    #[test]
    fn map_is_order_independent() {
        let config = SamplerConfig::default();
        let map = monte_carlo_map(0.2, &[0.3, 0.7], &[0.2, 0.6], 6, 13, &config).unwrap();
        for (k, cell) in map.iter().enumerate() {
            let alone = monte_carlo_cell(0.2, cell.s_value, cell.lambda, 6, 13, k as u64, &config).unwrap();
            assert_eq!(&alone, cell);
        }
    }

    #[test]
    fn csv_layout() {
        let cells = monte_carlo_map(0.0, &[0.5], &[0.5], 3, 2, &SamplerConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_monte_carlo_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], MONTE_CARLO_CSV_HEADER);
        assert!(lines[1].starts_with("5.0000000000000000e-1,5.0000000000000000e-1,3,"));
    }

    #[test]
    fn invalid_inputs() {
        assert!(sample_separable(1.5, 0).is_err());
        assert!(monte_carlo_cell(0.0, 0.5, 0.5, 0, 1, 0, &SamplerConfig::default()).is_err());
        assert!(SeparableParams::from_coords(&[1.0; 15]).to_density().is_err());
    }
}
