use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpalm::PenaltySchedule;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::erm::{erm_loss, fd_gradient, Sample, ScheduleParams, SolverConfig};
use super::metrics::schedule_nmse;
use super::solver::ScheduleSolver;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Number of schedule segments `J`.
    pub restarts: usize,
    /// Relative central-difference step in `log σ`.
    pub fd_step: f64,
    pub weight_decay: f64,
    /// Seed of the mini-batch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epochs: 50,
            batch_size: 50,
            restarts: 8,
            fd_step: 1e-4,
            weight_decay: adam.weight_decay,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self, train_size: usize) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("lr must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1)")));
            }
        }
        if self.restarts == 0 {
            return Err(Error::invalid("restarts must be at least 1"));
        }
        if self.batch_size == 0 || self.batch_size > train_size {
            return Err(Error::invalid(format!(
                "batch size {} must lie in 1..={train_size}",
                self.batch_size
            )));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::invalid("fd_step must be positive"));
        }
        if !self.weight_decay.is_finite() {
            return Err(Error::invalid("weight_decay must be finite"));
        }
        Ok(())
    }
}

/// Per-epoch training record and the selected schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Train ERM loss and test NMSE of the all-ones starting schedule.
    pub initial_train_loss: f64,
    pub initial_test_nmse: f64,
    /// Full train-set loss after each epoch.
    pub loss_history: Vec<f64>,
    /// Held-out NMSE after each epoch.
    pub test_nmse_history: Vec<f64>,
    /// Epoch of the selected schedule; 0 means the starting schedule.
    pub best_epoch: usize,
    pub final_params: ScheduleParams,
    pub final_sigmas: Vec<f64>,
}

impl TrainReport {
    pub fn final_schedule(&self, cfg: &SolverConfig) -> Result<PenaltySchedule> {
        self.final_params.schedule(cfg)
    }
}

/// Learns a piecewise-constant penalty schedule by minimizing the ERM loss
/// with finite-difference gradients and AdamW. The schedule with the best
/// held-out NMSE (starting point included) is returned.
pub fn train<S: ScheduleSolver>(
    trainset: &[Sample<S::Instance>],
    testset: &[Sample<S::Instance>],
    solver: &S,
    solver_cfg: &SolverConfig,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate(trainset.len())?;
    if testset.is_empty() {
        return Err(Error::invalid("test set is empty"));
    }
    let train_refs: Vec<&Sample<S::Instance>> = trainset.iter().collect();
    let test_refs: Vec<&Sample<S::Instance>> = testset.iter().collect();
    let adam = cfg.adam();

    let mut params = ScheduleParams::ones(cfg.restarts);
    let mut state = AdamState::new(cfg.restarts);
    let initial_train_loss = erm_loss(&params, &train_refs, solver, solver_cfg)?;
    let initial_test_nmse = schedule_nmse(&params.schedule(solver_cfg)?, &test_refs, solver)?;
    let mut best = (initial_test_nmse, 0, params.clone());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..trainset.len()).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);
    let mut test_nmse_history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Sample<S::Instance>> = chunk.iter().map(|&i| &trainset[i]).collect();
            let grad = fd_gradient(&params, &batch, solver, solver_cfg, cfg.fd_step)?;
            adam_step(&mut state, &mut params.theta, &grad, &adam);
        }
        let loss = erm_loss(&params, &train_refs, solver, solver_cfg)?;
        let test = schedule_nmse(&params.schedule(solver_cfg)?, &test_refs, solver)?;
        loss_history.push(loss);
        test_nmse_history.push(test);
        if test < best.0 {
            best = (test, epoch, params.clone());
        }
    }
    let (_, best_epoch, final_params) = best;
    Ok(TrainReport {
        initial_train_loss,
        initial_test_nmse,
        loss_history,
        test_nmse_history,
        best_epoch,
        final_sigmas: final_params.sigmas(),
        final_params,
    })
}

/// The constant penalty from `grid` with the smallest ERM loss on
/// `trainset`; ties go to the smaller penalty.
pub fn grid_search<S: ScheduleSolver>(
    trainset: &[Sample<S::Instance>],
    solver: &S,
    solver_cfg: &SolverConfig,
    grid: &[f64],
) -> Result<(f64, PenaltySchedule)> {
    if grid.is_empty() {
        return Err(Error::invalid("grid is empty"));
    }
    if grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("grid penalties must be positive and finite"));
    }
    let refs: Vec<&Sample<S::Instance>> = trainset.iter().collect();
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64, PenaltySchedule)> = None;
    for sigma in sorted {
        let schedule = PenaltySchedule::constant(sigma, solver_cfg.iters, solver_cfg.tau)?;
        let loss = super::erm::schedule_loss(&schedule, &refs, solver)?;
        if best.as_ref().is_none_or(|(l, _, _)| loss < *l) {
            best = Some((loss, sigma, schedule));
        }
    }
    let (_, sigma, schedule) = best.expect("grid is nonempty");
    Ok((sigma, schedule))
}
