use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use weakdistill::sampling::Proposal;

use crate::CliError;

/// Entanglement amplification by repeated weak measurements: traces,
/// trajectory statistics and mixed-state sweeps.
///
/// Settings are resolved in the order: command-line flag, environment
/// variable, `--config` file, built-in default.
#[derive(Debug, Parser)]
#[command(name = "weakdistill", version)]
pub struct Cli {
    /// Flat TOML file whose keys are the flag names with `_` for `-`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed for every random stream.
    #[arg(long, global = true, env = "WEAKDISTILL_SEED")]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "WEAKDISTILL_THREADS")]
    pub threads: Option<usize>,

    /// Output file (a directory for `mixed-sweep --channel monte-carlo`).
    /// Without it data goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-step trace of the pure-state protocol, or total success versus
    /// initial linear entropy.
    Pure(PureArgs),
    /// Sampled runs of the pure-state protocol.
    Trajectory(TrajectoryArgs),
    /// Single-shot amplification of noisy states.
    MixedSweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct PureArgs {
    #[arg(long)]
    pub alpha_sq: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Emit `(S, total success)` over an interior grid of `S` instead.
    #[arg(long)]
    pub sweep_entropy: bool,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub alpha_sq: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Number of trajectories.
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub channel: Option<Channel>,
    #[arg(long)]
    pub alpha_sq: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Points per axis of the interior grid `i / (grid + 1)`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Fixed `A_{s,z}` values for the Monte Carlo map.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a_sz: Option<Vec<f64>>,
    /// Separable samples per Monte Carlo cell.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, value_enum)]
    pub proposal: Option<ProposalArg>,
    #[arg(long)]
    pub rejection_budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    Dephasing,
    AmplitudeDamping,
    Admixture,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalArg {
    HitAndRun,
    BoxRejection,
}

impl From<ProposalArg> for Proposal {
    fn from(p: ProposalArg) -> Self {
        match p {
            ProposalArg::HitAndRun => Proposal::HitAndRun,
            ProposalArg::BoxRejection => Proposal::BoxRejection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Pure,
    Trajectory,
    MixedSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub alpha_sq: Option<f64>,
    pub steps: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub a_sz: Option<OneOrMany>,
    pub grid: Option<usize>,
    pub channel: Option<Channel>,
    pub u: Option<f64>,
    pub lambda: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub points: Option<usize>,
    pub sweep_entropy: Option<bool>,
    pub proposal: Option<ProposalArg>,
    pub rejection_budget: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub const DEFAULT_SEED: u64 = 20240611;

/// Fully resolved settings for one run; echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub alpha_sq: f64,
    pub steps: usize,
    pub samples: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub a_sz: Vec<f64>,
    pub grid: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<Channel>,
    pub u: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub points: usize,
    pub sweep_entropy: bool,
    pub proposal: ProposalArg,
    pub rejection_budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let file = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let file_a_sz = file.a_sz.clone().map(|v| match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        });

        let mut cfg = RunConfig {
            command: CommandKind::Pure,
            alpha_sq: file.alpha_sq.unwrap_or(0.4),
            steps: file.steps.unwrap_or(0),
            samples: file.samples.unwrap_or(0),
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            threads: cli.threads.or(file.threads),
            a_sz: file_a_sz.unwrap_or_else(|| vec![-0.95]),
            grid: file.grid.unwrap_or(0),
            channel: file.channel,
            u: file.u.unwrap_or(0.25),
            lambda: file.lambda,
            points: file.points.unwrap_or(99),
            sweep_entropy: file.sweep_entropy.unwrap_or(false),
            proposal: file.proposal.unwrap_or(ProposalArg::HitAndRun),
            rejection_budget: file.rejection_budget.unwrap_or(weakdistill::sampling::REJECTION_BUDGET),
            out: cli.out.clone().or(file.out),
            format: cli.format.or(file.format).unwrap_or(Format::Csv),
        };

        match &cli.command {
            Command::Pure(a) => {
                cfg.command = CommandKind::Pure;
                set(&mut cfg.alpha_sq, a.alpha_sq);
                cfg.steps = a.steps.or(file.steps).unwrap_or(40);
                set(&mut cfg.points, a.points);
                cfg.sweep_entropy |= a.sweep_entropy;
            }
            Command::Trajectory(a) => {
                cfg.command = CommandKind::Trajectory;
                set(&mut cfg.alpha_sq, a.alpha_sq);
                cfg.steps = a.steps.or(file.steps).unwrap_or(30);
                cfg.samples = a.samples.or(file.samples).unwrap_or(100_000);
                cfg.format = cli.format.or(file.format).unwrap_or(Format::Json);
            }
            Command::MixedSweep(a) => {
                cfg.command = CommandKind::MixedSweep;
                cfg.channel = a.channel.or(file.channel);
                let channel = cfg
                    .channel
                    .ok_or_else(|| CliError::Config("mixed-sweep needs --channel".into()))?;
                set(&mut cfg.alpha_sq, a.alpha_sq);
                set(&mut cfg.u, a.u);
                cfg.lambda = a.lambda.or(cfg.lambda);
                let default_grid = if channel == Channel::MonteCarlo { 41 } else { 101 };
                cfg.grid = a.grid.or(file.grid).unwrap_or(default_grid);
                if let Some(v) = &a.a_sz {
                    cfg.a_sz = v.clone();
                }
                cfg.samples = a.samples.or(file.samples).unwrap_or(1000);
                set(&mut cfg.proposal, a.proposal);
                set(&mut cfg.rejection_budget, a.rejection_budget);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(0.0..=1.0).contains(&self.alpha_sq) {
            return bad(format!("alpha_sq = {} is outside [0, 1]", self.alpha_sq));
        }
        if self.steps == 0 && self.command != CommandKind::MixedSweep {
            return bad("steps must be at least 1".into());
        }
        if self.samples == 0 && self.command != CommandKind::Pure {
            return bad("samples must be at least 1".into());
        }
        if self.points == 0 {
            return bad("points must be at least 1".into());
        }
        if self.command == CommandKind::MixedSweep {
            if self.grid == 0 {
                return bad("grid must be at least 1".into());
            }
            if let Some(a) = self.a_sz.iter().find(|a| !(-1.0..=1.0).contains(*a)) {
                return bad(format!("a_sz = {a} is outside [-1, 1]"));
            }
            if self.a_sz.is_empty() {
                return bad("a_sz list is empty".into());
            }
            if self.channel == Some(Channel::MonteCarlo) && self.out.is_none() {
                return bad("monte-carlo sweeps need --out <directory>".into());
            }
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("weakdistill").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults_per_command() {
        let pure = RunConfig::resolve(&parse(&["pure"])).unwrap();
        assert_eq!((pure.steps, pure.format, pure.alpha_sq), (40, Format::Csv, 0.4));
        let traj = RunConfig::resolve(&parse(&["trajectory"])).unwrap();
        assert_eq!((traj.steps, traj.samples, traj.format), (30, 100_000, Format::Json));
        let mc = RunConfig::resolve(&parse(&["mixed-sweep", "--channel", "monte-carlo", "--out", "x"])).unwrap();
        assert_eq!((mc.grid, mc.samples), (41, 1000));
        let ad = RunConfig::resolve(&parse(&["mixed-sweep", "--channel", "amplitude-damping"])).unwrap();
        assert_eq!(ad.grid, 101);
    }

    #[test]
    fn negative_a_sz_list() {
        let cfg = RunConfig::resolve(&parse(&[
            "mixed-sweep",
            "--channel",
            "monte-carlo",
            "--a-sz",
            "-0.95,0,0.5",
            "--out",
            "d",
        ]))
        .unwrap();
        assert_eq!(cfg.a_sz, vec![-0.95, 0.0, 0.5]);
    }

    #[test]
    fn validation_failures() {
        assert!(RunConfig::resolve(&parse(&["trajectory", "--samples", "0"])).is_err());
        assert!(RunConfig::resolve(&parse(&["pure", "--alpha-sq", "1.5"])).is_err());
        assert!(RunConfig::resolve(&parse(&["mixed-sweep"])).is_err());
        assert!(RunConfig::resolve(&parse(&["mixed-sweep", "--channel", "monte-carlo"])).is_err());
    }

    #[test]
    fn file_values_yield_to_flags() {
        let dir = std::env::temp_dir().join(format!("weakdistill-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "alpha_sq = 0.3\nsteps = 7\nseed = 5\na_sz = -0.5\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = RunConfig::resolve(&parse(&["--config", p, "pure", "--steps", "9"])).unwrap();
        assert_eq!((cfg.alpha_sq, cfg.steps, cfg.seed), (0.3, 9, 5));
        assert_eq!(cfg.a_sz, vec![-0.5]);

        std::fs::write(&path, "alpha = 0.3\n").unwrap();
        assert!(matches!(
            RunConfig::resolve(&parse(&["--config", p, "pure"])),
            Err(CliError::Config(_))
        ));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn run_config_roundtrips_through_toml() {
        let cfg = RunConfig::resolve(&parse(&[
            "--seed",
            "77",
            "mixed-sweep",
            "--channel",
            "admixture",
            "--lambda",
            "0.3",
            "--alpha-sq",
            "0.1",
        ]))
        .unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}
