use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use weakdistill::mixed::{
    admixture_sweep, amplitude_damping_sweep, dephasing_point, interior_grid, write_sweep_csv, SweepRow,
};
use weakdistill::output::fmt_f64;
use weakdistill::protocol::{analytic_trace, entropy_sweep, run_trajectories, TrajectoryBatch};
use weakdistill::sampling::{criterion_entropy, monte_carlo_cells, write_monte_carlo_csv, SamplerConfig};
use weakdistill::SchmidtState;

use crate::config::{Channel, CommandKind, Format, RunConfig};
use crate::CliError;

pub const ENTROPY_CSV_HEADER: &str = "s_value,total_success";
pub const TRAJECTORY_CSV_HEADER: &str =
    "runs,successes,success_fraction,mean_steps_to_success,standard_error,ci_low,ci_high,master_seed";

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    status: &'static str,
    outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    maps: Vec<MapEntry>,
    elapsed_seconds: f64,
}

#[derive(Serialize)]
struct MapEntry {
    a_sz: f64,
    seed: u64,
    /// Smallest `S(ψ)` at which the criterion holds; absent for `a_sz > 0`.
    criterion_s_value: Option<f64>,
    file: PathBuf,
    cells: usize,
    failed_cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_error: Option<String>,
}

#[derive(Serialize)]
struct EntropyRow {
    s_value: f64,
    total_success: f64,
}

pub fn dispatch(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    if cfg.command == CommandKind::MixedSweep && cfg.channel == Some(Channel::MonteCarlo) {
        return monte_carlo(cfg, start);
    }
    let mut out = open_output(cfg.out.as_deref())?;
    match cfg.command {
        CommandKind::Pure => pure(cfg, &mut out)?,
        CommandKind::Trajectory => trajectory(cfg, &mut out)?,
        CommandKind::MixedSweep => sweep(cfg, &mut out)?,
    }
    out.flush()?;
    if let Some(path) = &cfg.out {
        let manifest = Manifest {
            tool: "weakdistill",
            version: env!("CARGO_PKG_VERSION"),
            config: cfg,
            status: "complete",
            outputs: vec![path.clone()],
            maps: Vec::new(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        };
        write_json(&manifest_path(path), &manifest)?;
    }
    Ok(())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `trace.csv` -> `trace.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn json_line<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn state(cfg: &RunConfig) -> Result<SchmidtState, CliError> {
    Ok(SchmidtState::from_alpha_sq(cfg.alpha_sq)?)
}

fn pure(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    if cfg.sweep_entropy {
        let rows = entropy_sweep(cfg.points, cfg.steps)?;
        match cfg.format {
            Format::Csv => {
                writeln!(out, "{ENTROPY_CSV_HEADER}")?;
                for (s_value, total) in rows {
                    writeln!(out, "{},{}", fmt_f64(s_value), fmt_f64(total))?;
                }
            }
            Format::Json => {
                let rows: Vec<EntropyRow> = rows
                    .into_iter()
                    .map(|(s_value, total_success)| EntropyRow { s_value, total_success })
                    .collect();
                json_line(out, &rows)?;
            }
        }
        return Ok(());
    }
    let trace = analytic_trace(&state(cfg)?, cfg.steps)?;
    match cfg.format {
        Format::Csv => trace.write_csv(out)?,
        Format::Json => json_line(out, &trace)?,
    }
    Ok(())
}

fn trajectory(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let batch = run_trajectories(&state(cfg)?, cfg.steps, cfg.samples, cfg.seed)?;
    match cfg.format {
        Format::Json => json_line(out, &batch)?,
        Format::Csv => write_batch_csv(&batch, out)?,
    }
    Ok(())
}

fn write_batch_csv(b: &TrajectoryBatch, out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        b.runs,
        b.successes,
        fmt_f64(b.success_fraction),
        weakdistill::output::fmt_opt(b.mean_steps_to_success),
        fmt_f64(b.standard_error),
        fmt_f64(b.confidence_interval[0]),
        fmt_f64(b.confidence_interval[1]),
        b.master_seed
    )
}

fn sweep(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = interior_grid(cfg.grid);
    let rows: Vec<SweepRow> = match cfg.channel {
        Some(Channel::Dephasing) => vec![dephasing_point(&state(cfg)?, cfg.u)?],
        Some(Channel::AmplitudeDamping) => amplitude_damping_sweep(&grid, &grid)?,
        Some(Channel::Admixture) => match cfg.lambda {
            Some(lambda) => {
                let s = state(cfg)?;
                admixture_sweep(&[4.0 * s.alpha_sq() * s.beta_sq()], &[lambda])?
            }
            None => admixture_sweep(&grid, &grid)?,
        },
        Some(Channel::MonteCarlo) | None => unreachable!("resolved before dispatch"),
    };
    match cfg.format {
        Format::Csv => write_sweep_csv(&rows, out)?,
        Format::Json => json_line(out, &rows)?,
    }
    Ok(())
}

/// One map per `a_sz` value under the `--out` directory, plus
/// `manifest.json`. Map `j` uses master seed `seed + j`.
fn monte_carlo(cfg: &RunConfig, start: Instant) -> Result<(), CliError> {
    let dir = cfg.out.clone().expect("validated");
    fs::create_dir_all(&dir)?;
    let grid = interior_grid(cfg.grid);
    let sampler = SamplerConfig {
        proposal: cfg.proposal.into(),
        rejection_budget: cfg.rejection_budget,
        ..SamplerConfig::default()
    };
    let ext = match cfg.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };

    let (mut maps, mut outputs) = (Vec::new(), Vec::new());
    let (mut failed, mut total) = (0, 0);
    for (j, &a_sz) in cfg.a_sz.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(j as u64);
        let results = monte_carlo_cells(a_sz, &grid, &grid, cfg.samples as usize, seed, &sampler);
        let mut cells = Vec::with_capacity(results.len());
        let mut first_error = None;
        let mut map_failed = 0;
        for r in results {
            match r {
                Ok(c) => cells.push(c),
                Err(e @ weakdistill::Error::RejectionBudgetExceeded { .. }) => {
                    map_failed += 1;
                    first_error.get_or_insert_with(|| e.to_string());
                }
                Err(e) => return Err(e.into()),
            }
        }
        let file = dir.join(format!("a_sz_{a_sz:+.4}.{ext}"));
        let mut w = open_output(Some(&file))?;
        match cfg.format {
            Format::Csv => write_monte_carlo_csv(&cells, &mut w)?,
            Format::Json => json_line(&mut w, &cells)?,
        }
        w.flush()?;

        failed += map_failed;
        total += grid.len() * grid.len();
        outputs.push(file.clone());
        maps.push(MapEntry {
            a_sz,
            seed,
            criterion_s_value: criterion_entropy(a_sz),
            file,
            cells: cells.len(),
            failed_cells: map_failed,
            first_error,
        });
    }

    let manifest = Manifest {
        tool: "weakdistill",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        status: if failed == 0 { "complete" } else { "partial" },
        outputs,
        maps,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    if failed > 0 {
        return Err(CliError::PartialMap {
            failed,
            total,
            dir: dir.display().to_string(),
        });
    }
    Ok(())
}
