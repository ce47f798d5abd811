use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use levymaps::experiment::Regime;
use levymaps::levy::{JumpFamily, LevyTriplet};
use levymaps::path_codec::{explicit_stable_log_weights, k_n_for_theta, nu_from_log_weights, StepLaw};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Critical law with a power tail of index alpha.
    Stable,
    /// Steps in {-1, +1}: quadrangulations.
    PlusMinusOne,
    /// Explicit Boltzmann weights of index alpha.
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Path,
    Looptree,
    Labels,
    Map,
    Dimension,
    Spine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Model {
    pub family: Family,
    pub alpha: f64,
    /// Drift parameter of the biconditioned regime; `None` conditions on
    /// the edge count only.
    pub theta: Option<f64>,
    pub zero_mass: f64,
    pub k_max: usize,
}

impl Default for Model {
    fn default() -> Self {
        Model { family: Family::Stable, alpha: 1.5, theta: None, zero_mass: 0.1, k_max: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpineConfig {
    pub beta: f64,
    pub horizon: f64,
    pub x_min: f64,
    pub marksets: usize,
    pub lambdas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for SpineConfig {
    fn default() -> Self {
        SpineConfig { beta: 0.3, horizon: 1.0, x_min: 0.01, marksets: 100_000, lambdas: vec![0.5, 1.0, 2.0], tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: Model,
    /// Number of edges.
    pub n: usize,
    pub replicas: usize,
    pub sample_points: usize,
    pub centers: usize,
    /// BFS work allowed per sampled distance matrix.
    pub budget: Option<u64>,
    /// Drift values of an experiment battery.
    pub thetas: Vec<f64>,
    /// Index of this run inside a battery; selects a disjoint block of
    /// rng streams.
    pub stream_block: u64,
    pub outputs: PathBuf,
    pub stages: Vec<Stage>,
    pub spine: SpineConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            model: Model::default(),
            n: 1024,
            replicas: 1,
            sample_points: 512,
            centers: 32,
            budget: None,
            thetas: Vec::new(),
            stream_block: 0,
            outputs: PathBuf::from("out"),
            stages: vec![Stage::Path, Stage::Looptree, Stage::Labels, Stage::Map, Stage::Dimension],
            spine: SpineConfig::default(),
        }
    }
}

pub const MAX_REPLICAS: usize = 1 << 24;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if self.replicas < 1 || self.replicas >= MAX_REPLICAS {
            return bad(format!("replicas must lie in [1, {MAX_REPLICAS})"));
        }
        if self.stages.contains(&Stage::Dimension) && self.sample_points > self.n {
            return bad(format!("sample_points = {} exceeds n = {}", self.sample_points, self.n));
        }
        if self.stream_block >= 256 {
            return bad("stream_block must be below 256".into());
        }
        let m = &self.model;
        if m.family != Family::PlusMinusOne && !(m.alpha > 1.0 && m.alpha < 2.0) {
            return bad(format!("alpha = {} must lie in (1, 2)", m.alpha));
        }
        if m.family == Family::PlusMinusOne && (m.theta.is_some() || !self.thetas.is_empty()) {
            return bad("theta needs a stable-type family".into());
        }
        Ok(())
    }

    pub fn step_law(&self) -> Result<StepLaw, CliError> {
        let m = &self.model;
        Ok(match m.family {
            Family::Stable => StepLaw::stable_domain(m.alpha, m.zero_mass, m.k_max)?,
            Family::PlusMinusOne => StepLaw::plus_minus_one(),
            Family::Explicit => nu_from_log_weights(&explicit_stable_log_weights(m.alpha, m.k_max)?)?,
        })
    }

    pub fn regime(&self, law: &StepLaw) -> Result<Regime, CliError> {
        Ok(match self.model.theta {
            None => Regime::Edges,
            Some(theta) => Regime::Vertices { k: k_n_for_theta(law, self.model.alpha, theta, self.n)?.k },
        })
    }

    pub fn triplet(&self) -> Result<LevyTriplet, CliError> {
        Ok(LevyTriplet::new(0.0, self.spine.beta, JumpFamily::Stable { alpha: self.model.alpha, scale: 1.0 })?)
    }
}

/// Stream of a given stage, battery block and replica.
pub fn stream_id(stage: u64, block: u64, replica: usize) -> u64 {
    (stage << 32) | (block << 24) | replica as u64
}

pub const PATH_STREAM: u64 = 0;
pub const LABEL_STREAM: u64 = 1;
pub const ESTIMATOR_STREAM: u64 = 2;
pub const SPINE_STREAM: u64 = 3;

pub fn parse_thetas(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad theta value {t:?}"))))
        .collect()
}
