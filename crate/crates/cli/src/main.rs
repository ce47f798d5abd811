//! `levymaps` command line: sample, build, dimension, spine-check and
//! experiment stages over artifacts on disk.

mod config;
mod output;
mod plot;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use config::{parse_thetas, ExperimentConfig, Family, Stage};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] levymaps::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("replica {replica}: bijection audit failed on {check}")]
    Audit { replica: usize, check: &'static str },
    #[error("spine check: worst relative error {worst:.4} exceeds {tolerance}")]
    Tolerance { worst: f64, tolerance: f64 },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    fn exit_code(&self) -> u8 {
        use levymaps::Error as E;
        match self {
            CliError::Config(_) | CliError::Audit { .. } | CliError::Tolerance { .. } => 2,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::Validation(_)
                | E::InvalidPath(_)
                | E::Format(_)
                | E::InvalidTriplet(_)
                | E::InvalidExponent(_)
                | E::DegenerateGrid(_)
                | E::OutOfRange { .. }
                | E::FiniteVariation => 2,
                E::ParityInfeasible(_)
                | E::InfeasibleConditioning(_)
                | E::InvalidStepLaw(_)
                | E::NonAdmissibleWeights(_)
                | E::GammaPole => 3,
                E::Budget(_) | E::RejectionBudget { .. } => 4,
                _ => 1,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "levymaps", version, about = "Random looptrees and bipartite maps from Lukasiewicz excursions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample conditioned excursions.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Also write every path as one JSON line.
        #[arg(long)]
        ndjson: bool,
    },
    /// Build looptrees, labels and maps from sampled paths.
    Build {
        #[command(flatten)]
        common: Common,
    },
    /// Run the metric estimators on built artifacts.
    Dimension {
        #[command(flatten)]
        common: Common,
        /// Run on an analytic fixture instead of built artifacts.
        #[arg(long, value_enum)]
        fixture: Option<Fixture>,
    },
    /// Compare the empirical spine exponents with their targets.
    SpineCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        marksets: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Full pipeline for each drift value, with a summary table.
    Experiment {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Segment,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of edges.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum)]
    family: Option<Family>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Drift value, or a comma separated list for `experiment`.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Mass of the zero step in the stable family.
    #[arg(long)]
    zero_mass: Option<f64>,
    /// Largest step of the stable and explicit laws.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    sample_points: Option<usize>,
    /// Ball-volume centres per replica.
    #[arg(long)]
    centers: Option<usize>,
    /// BFS work allowed per sampled distance matrix.
    #[arg(long)]
    budget: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn config(&self, theta_list: bool) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.out {
            cfg.outputs = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.n {
            cfg.n = v;
        }
        if let Some(v) = self.family {
            cfg.model.family = v;
        }
        if let Some(v) = self.alpha {
            cfg.model.alpha = v;
        }
        if let Some(v) = self.zero_mass {
            cfg.model.zero_mass = v;
        }
        if let Some(v) = self.k_max {
            cfg.model.k_max = v;
        }
        if let Some(v) = self.replicas {
            cfg.replicas = v;
        }
        if let Some(v) = self.sample_points {
            cfg.sample_points = v;
        }
        if let Some(v) = self.centers {
            cfg.centers = v;
        }
        if let Some(v) = self.budget {
            cfg.budget = Some(v);
        }
        if let Some(s) = &self.theta {
            let t = parse_thetas(s)?;
            if theta_list {
                cfg.thetas = t;
            } else if let [one] = t[..] {
                cfg.model.theta = Some(one);
            } else {
                return Err(CliError::Config("only `experiment` takes a list of theta values".into()));
            }
        }
        Ok(cfg)
    }

    fn out(&self) -> Result<PathBuf, CliError> {
        match (&self.out, &self.config) {
            (Some(o), _) => Ok(o.clone()),
            (None, Some(p)) => Ok(ExperimentConfig::load(p)?.outputs),
            (None, None) => Err(CliError::Config("--out is required".into())),
        }
    }

    fn jobs(&self) -> Result<(), CliError> {
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build_global()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample { common, ndjson } => {
            common.jobs()?;
            let mut cfg = common.config(false)?;
            cfg.stages.retain(|s| *s != Stage::Dimension);
            stages::sample(&cfg, ndjson)
        }
        Command::Build { common } => {
            common.jobs()?;
            stages::build(&common.out()?)
        }
        Command::Dimension { common, fixture } => {
            common.jobs()?;
            let out = common.out()?;
            match fixture {
                Some(Fixture::Segment) => {
                    let fx = stages::segment_fixture(&out, common.n.unwrap_or(4096), common.sample_points.unwrap_or(512))?;
                    println!("segment: graph cover {:.3}, sample cover {:.3}", fx.graph_cover.fit.slope, fx.sample_cover.fit.slope);
                }
                None => {
                    let over = stages::DimensionOverrides {
                        sample_points: common.sample_points,
                        centers: common.centers,
                        budget: common.budget,
                    };
                    let s = stages::dimension(&out, &over)?;
                    println!(
                        "looptree_dim {:.3} ± {:.3}, map_dim {:.3} ± {:.3} over {} replicas",
                        s.looptree_dim.mean, s.looptree_dim.stderr, s.map_dim.mean, s.map_dim.stderr, s.replicas
                    );
                }
            }
            Ok(())
        }
        Command::SpineCheck { common, marksets, beta, horizon, x_min, tolerance } => {
            common.jobs()?;
            let mut cfg = common.config(false)?;
            let s = &mut cfg.spine;
            s.marksets = marksets.unwrap_or(s.marksets);
            s.beta = beta.unwrap_or(s.beta);
            s.horizon = horizon.unwrap_or(s.horizon);
            s.x_min = x_min.unwrap_or(s.x_min);
            s.tolerance = tolerance.unwrap_or(s.tolerance);
            let r = stages::spine_check(&cfg)?;
            println!("spine exponents: worst relative error {:.4}", r.worst_relative_error);
            Ok(())
        }
        Command::Experiment { common } => {
            common.jobs()?;
            stages::experiment(&common.config(true)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
