use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::TrainConfig;
use crate::mpalm::DEFAULT_STEP_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Lasso,
    Ot,
}

/// Baseline switches for `eval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Baselines {
    pub ista: bool,
    pub oracle: bool,
    pub sinkhorn_iters: usize,
}

impl Default for Baselines {
    fn default() -> Self {
        Self {
            ista: true,
            oracle: true,
            sinkhorn_iters: 1000,
        }
    }
}

/// Experiment configuration as read from `--config`. Every field is
/// optional; unset dims and budgets fall back to per-problem defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Option<Problem>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub count: Option<usize>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
    #[serde(rename = "K")]
    pub iters: Option<usize>,
    #[serde(rename = "K0")]
    pub segment_length: Option<usize>,
    pub tau: Option<f64>,
    pub sigmas: Vec<f64>,
    pub schedule: Option<PathBuf>,
    pub lambdas: Vec<f64>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// CSV of OT marginal pairs; random marginals when unset.
    pub marginals: Option<PathBuf>,
    pub train: Option<TrainOverrides>,
    pub baselines: Baselines,
}

/// Training fields that may be set in the config file or on the command
/// line.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOverrides {
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long = "batch-size", global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub beta1: Option<f64>,
    #[arg(long, global = true)]
    pub beta2: Option<f64>,
    /// Number of schedule segments `J`.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long = "fd-step", global = true)]
    pub fd_step: Option<f64>,
    #[arg(long = "weight-decay", global = true)]
    pub weight_decay: Option<f64>,
}

impl TrainOverrides {
    fn merge(self, over: TrainOverrides) -> Self {
        Self {
            epochs: over.epochs.or(self.epochs),
            batch_size: over.batch_size.or(self.batch_size),
            lr: over.lr.or(self.lr),
            beta1: over.beta1.or(self.beta1),
            beta2: over.beta2.or(self.beta2),
            restarts: over.restarts.or(self.restarts),
            fd_step: over.fd_step.or(self.fd_step),
            weight_decay: over.weight_decay.or(self.weight_decay),
        }
    }
}

/// Command-line overrides of [`ExperimentConfig`].
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON experiment configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub problem: Option<Problem>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub count: Option<usize>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long = "K", global = true)]
    pub iters: Option<usize>,
    #[arg(long = "K0", global = true)]
    pub segment_length: Option<usize>,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Fixed penalty; repeat for several.
    #[arg(long = "sigma", global = true)]
    pub sigmas: Vec<f64>,
    /// Learned schedule JSON.
    #[arg(long, global = true)]
    pub schedule: Option<PathBuf>,
    /// Sinkhorn regularization; repeat for several.
    #[arg(long = "lambda", global = true)]
    pub lambdas: Vec<f64>,
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub marginals: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainOverrides,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
    }

    /// Applies command-line values on top of this configuration.
    pub fn merged(mut self, o: &Overrides) -> Self {
        macro_rules! take {
            ($($field:ident),*) => {
                $( if o.$field.is_some() { self.$field = o.$field.clone(); } )*
            };
        }
        take!(problem, m, n, count, mu, seed, iters, segment_length, tau, schedule, dataset, out, marginals);
        if !o.sigmas.is_empty() {
            self.sigmas = o.sigmas.clone();
        }
        if !o.lambdas.is_empty() {
            self.lambdas = o.lambdas.clone();
        }
        self.train = Some(self.train.unwrap_or_default().merge(o.train));
        self
    }

    pub fn problem(&self) -> Problem {
        self.problem.unwrap_or(Problem::Lasso)
    }

    pub fn dims(&self) -> (usize, usize) {
        let (m, n) = match self.problem() {
            Problem::Lasso => (10, 20),
            Problem::Ot => (10, 10),
        };
        (self.m.unwrap_or(m), self.n.unwrap_or(n))
    }

    pub fn count(&self) -> usize {
        self.count.unwrap_or(match self.problem() {
            Problem::Lasso => 500,
            Problem::Ot => 100,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu.unwrap_or(crate::lasso::DEFAULT_MU)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn iters(&self) -> usize {
        self.iters.unwrap_or(match self.problem() {
            Problem::Lasso => 64,
            Problem::Ot => 100,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau.unwrap_or(DEFAULT_STEP_SIZE)
    }

    pub fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Validation("no dataset given (use --dataset)".into()))
    }

    /// Training configuration; `K0` when set fixes `J = ceil(K / K0)`.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = self.train.unwrap_or_default();
        let d = TrainConfig::default();
        let mut restarts = t.restarts.unwrap_or(match self.problem() {
            Problem::Lasso => 8,
            Problem::Ot => 4,
        });
        if let Some(k0) = self.segment_length {
            if k0 == 0 || k0 > self.iters().max(1) {
                return Err(Error::Validation(format!("K0 = {k0} must lie in 1..=K")));
            }
            restarts = self.iters().div_ceil(k0).max(1);
        }
        Ok(TrainConfig {
            lr: t.lr.unwrap_or(d.lr),
            beta1: t.beta1.unwrap_or(d.beta1),
            beta2: t.beta2.unwrap_or(d.beta2),
            epochs: t.epochs.unwrap_or(d.epochs),
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            restarts,
            fd_step: t.fd_step.unwrap_or(d.fd_step),
            weight_decay: t.weight_decay.unwrap_or(d.weight_decay),
            seed: self.seed(),
        })
    }
}
