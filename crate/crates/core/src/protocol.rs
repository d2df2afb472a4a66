//! Repeated weak-measurement distillation of a pure state.
//!
//! Measurement `n` has strength `ε_n`, with `ε_1 = √(1 - S(ψ))` and
//! `ε_n = 2ε_{n-1} / (1 + ε_{n-1}²)`. Outcome `+` at any step leaves the
//! maximally entangled state; outcome `-` leaves a state whose own
//! `√(1 - S)` is the next strength in the schedule, so the process can
//! continue. The cumulative success probability tends to `2α²`.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{pure_probability, DiagonalMeasurement, Outcome, WeakMeasurement};
use crate::output::fmt_f64;
use crate::sampling::{rng_stream, StreamRng};
use crate::states::SchmidtState;
use crate::tolerance;

/// Measurement strengths `ε_1..ε_N`.
///
/// Each `1 - ε_n` is propagated through its own recurrence
/// `1 - ε_n = (1 - ε_{n-1})² / (1 + ε_{n-1}²)` so late steps, where `ε_n`
/// rounds to one, keep exact success probabilities. `ln(1 - ε_n)` is
/// tracked as well, for runs long enough that the complement underflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    epsilons: Vec<f64>,
    complements: Vec<f64>,
    log_complements: Vec<f64>,
}

impl Schedule {
    pub fn from_first(epsilon1: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: 0.0,
                range: ">= 1",
            });
        }
        if !(epsilon1 > 0.0 && epsilon1 <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "epsilon1",
                value: epsilon1,
                range: "(0, 1]",
            });
        }
        let mut epsilons = Vec::with_capacity(steps);
        let mut complements = Vec::with_capacity(steps);
        let mut log_complements = Vec::with_capacity(steps);
        let (mut eps, mut comp) = (epsilon1, 1.0 - epsilon1);
        let mut log_comp = comp.ln();
        for _ in 0..steps {
            epsilons.push(eps);
            complements.push(comp);
            log_complements.push(log_comp);
            log_comp = 2.0 * log_comp - (eps * eps).ln_1p();
            (eps, comp) = next_strength(eps, comp);
        }
        Ok(Self {
            epsilons,
            complements,
            log_complements,
        })
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    /// `1 - ε_n` for each step.
    pub fn complements(&self) -> &[f64] {
        &self.complements
    }

    /// `ln(1 - ε_n)` for each step; finite after `1 - ε_n` underflows.
    pub fn log_complements(&self) -> &[f64] {
        &self.log_complements
    }

    /// Measurement used at zero-based step `k`.
    pub fn measurement(&self, k: usize) -> WeakMeasurement {
        WeakMeasurement::from_complement(self.complements[k]).expect("complement in [0, 1]")
    }

    /// `P_n = (1 - ε_n²) / 2` at zero-based step `k`.
    pub fn success_probability(&self, k: usize) -> f64 {
        0.5 * self.complements[k] * (1.0 + self.epsilons[k])
    }
}

fn next_strength(eps: f64, comp: f64) -> (f64, f64) {
    let denom = 1.0 + eps * eps;
    (2.0 * eps / denom, comp * comp / denom)
}

/// Relabels the state so that `β >= α`; the flag says whether the roles of
/// the outcomes are mirrored.
pub fn swap_convention(s: &SchmidtState) -> (SchmidtState, bool) {
    if s.alpha() > s.beta() {
        (s.swapped(), true)
    } else {
        (*s, false)
    }
}

/// `ε = |β² - α²| = √(1 - S(ψ))`.
pub fn initial_strength(s: &SchmidtState) -> Result<f64> {
    if (s.alpha() - s.beta()).abs() < tolerance::MAXIMAL {
        return Err(Error::AlreadyMaximal);
    }
    Ok((s.beta_sq() - s.alpha_sq()).abs())
}

pub fn build_schedule(s: &SchmidtState, steps: usize) -> Result<Schedule> {
    Schedule::from_first(initial_strength(s)?, steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub n: usize,
    pub epsilon_n: f64,
    pub p_n: f64,
    pub p_net_n: f64,
    pub p_s_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTrace {
    pub steps: Vec<TraceStep>,
    /// `P^s_N`.
    pub total_success: f64,
    /// Whether `|P^s_N - P^s_{N-1}| < 1e-12`.
    pub converged: bool,
    /// State left after `N` consecutive `-` outcomes, in the input labeling.
    pub residual_state: SchmidtState,
    pub swapped: bool,
}

pub const TRACE_CSV_HEADER: &str = "n,epsilon_n,p_n,p_net_n,p_s_n";

impl ProtocolTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for step in &self.steps {
            writeln!(
                w,
                "{},{},{},{},{}",
                step.n,
                fmt_f64(step.epsilon_n),
                fmt_f64(step.p_n),
                fmt_f64(step.p_net_n),
                fmt_f64(step.p_s_n)
            )?;
        }
        Ok(())
    }
}

/// Closed-form per-step, net, and cumulative success probabilities.
///
/// `P^s_n` is accumulated as the sum of net probabilities.
pub fn analytic_trace(s: &SchmidtState, steps: usize) -> Result<ProtocolTrace> {
    let (oriented, swapped) = swap_convention(s);
    let schedule = build_schedule(&oriented, steps)?;

    let mut trace = Vec::with_capacity(steps);
    let mut survival = 1.0;
    let mut cumulative = 0.0;
    for k in 0..steps {
        let eps = schedule.epsilons[k];
        let p_n = schedule.success_probability(k);
        let p_net = p_n * survival;
        cumulative += p_net;
        survival *= 0.5 * (1.0 + eps * eps);
        trace.push(TraceStep {
            n: k + 1,
            epsilon_n: eps,
            p_n,
            p_net_n: p_net,
            p_s_n: cumulative,
        });
    }

    let converged = steps >= 2 && (trace[steps - 1].p_s_n - trace[steps - 2].p_s_n).abs() < tolerance::CONVERGENCE;

    // After N failures the state satisfies β² - α² = ε_{N+1}.
    let (_, comp_next) = next_strength(schedule.epsilons[steps - 1], schedule.complements[steps - 1]);
    let alpha_sq = 0.5 * comp_next;
    let mut residual = SchmidtState::new(alpha_sq.sqrt(), (1.0 - alpha_sq).sqrt(), s.d())?;
    if swapped {
        residual = residual.swapped();
    }

    Ok(ProtocolTrace {
        total_success: cumulative,
        converged,
        steps: trace,
        residual_state: residual,
        swapped,
    })
}

/// One sampled run of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResult {
    pub success: bool,
    pub steps_used: usize,
    pub final_state: SchmidtState,
    pub rng_seed: u64,
    pub stream: u64,
}

/// Runs the protocol once on stream 0 of `seed`.
pub fn run_trajectory(s: &SchmidtState, steps: usize, seed: u64) -> Result<TrajectoryResult> {
    run_trajectory_stream(s, steps, seed, 0)
}

pub fn run_trajectory_stream(s: &SchmidtState, steps: usize, seed: u64, stream: u64) -> Result<TrajectoryResult> {
    let (oriented, swapped) = swap_convention(s);
    let schedule = build_schedule(&oriented, steps)?;
    let mut rng = rng_stream(seed, stream);
    let (success, steps_used, state) = sample_run(&schedule, oriented, &mut rng)?;
    Ok(TrajectoryResult {
        success,
        steps_used,
        final_state: if swapped { state.swapped() } else { state },
        rng_seed: seed,
        stream,
    })
}

fn conditioned(m: &WeakMeasurement, s: &SchmidtState, outcome: Outcome) -> Result<SchmidtState> {
    let [w0, w1] = m.weights(outcome);
    SchmidtState::normalized(s.alpha() * w0.sqrt(), s.beta() * w1.sqrt(), s.d())
}

fn sample_run(schedule: &Schedule, mut state: SchmidtState, rng: &mut StreamRng) -> Result<(bool, usize, SchmidtState)> {
    for k in 0..schedule.len() {
        let m = schedule.measurement(k);
        let p_success = pure_probability(&m, &state, Outcome::Plus);
        if rng.random::<f64>() < p_success {
            return Ok((true, k + 1, conditioned(&m, &state, Outcome::Plus)?));
        }
        state = conditioned(&m, &state, Outcome::Minus)?;
    }
    Ok((false, schedule.len(), state))
}

/// Aggregate of many independent trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBatch {
    pub runs: u64,
    pub successes: u64,
    pub success_fraction: f64,
    /// Mean index of the successful measurement; `None` without successes.
    pub mean_steps_to_success: Option<f64>,
    pub standard_error: f64,
    /// `success_fraction ± 3 standard errors`, clipped to `[0, 1]`.
    pub confidence_interval: [f64; 2],
    pub master_seed: u64,
}

/// Runs `runs` trajectories; trajectory `i` uses stream `i` of `master_seed`,
/// so the result does not depend on the number of worker threads.
pub fn run_trajectories(s: &SchmidtState, steps: usize, runs: u64, master_seed: u64) -> Result<TrajectoryBatch> {
    if runs == 0 {
        return Err(Error::InvalidParameter {
            name: "runs",
            value: 0.0,
            range: ">= 1",
        });
    }
    let (oriented, _) = swap_convention(s);
    let schedule = build_schedule(&oriented, steps)?;

    let (successes, step_sum) = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(master_seed, i);
            sample_run(&schedule, oriented, &mut rng).map(|(ok, used, _)| if ok { (1u64, used as u64) } else { (0, 0) })
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let n = runs as f64;
    let fraction = successes as f64 / n;
    let standard_error = (fraction * (1.0 - fraction) / n).sqrt();
    Ok(TrajectoryBatch {
        runs,
        successes,
        success_fraction: fraction,
        mean_steps_to_success: (successes > 0).then(|| step_sum as f64 / successes as f64),
        standard_error,
        confidence_interval: [
            (fraction - 3.0 * standard_error).max(0.0),
            (fraction + 3.0 * standard_error).min(1.0),
        ],
        master_seed,
    })
}

/// `(S(ψ), total success)` at `points` interior grid values of `S`, using a
/// trace long enough to converge at every point.
pub fn entropy_sweep(points: usize, max_steps: usize) -> Result<Vec<(f64, f64)>> {
    (1..=points)
        .map(|i| {
            let s_value = i as f64 / (points + 1) as f64;
            let state = SchmidtState::from_linear_entropy(s_value)?;
            let trace = analytic_trace(&state, max_steps)?;
            Ok((s_value, trace.total_success))
        })
        .collect()
}
