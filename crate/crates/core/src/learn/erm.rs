use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dist2;
use crate::mpalm::{PenaltySchedule, DEFAULT_STEP_SIZE};

use super::solver::ScheduleSolver;

/// An instance together with its oracle solution `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<I> {
    pub instance: I,
    pub solution: Vec<f64>,
}

/// Iteration budget and step size shared by every schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Total iterations `K`.
    pub iters: usize,
    /// Multiplier step size `τ`.
    pub tau: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iters: 64,
            tau: DEFAULT_STEP_SIZE,
        }
    }
}

/// Log-penalties `θ_j = log σ_j`, one per restart segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub theta: Vec<f64>,
}

impl ScheduleParams {
    /// `σ_j = 1` for every segment.
    pub fn ones(restarts: usize) -> Self {
        Self {
            theta: vec![0.0; restarts],
        }
    }

    pub fn from_sigmas(sigmas: &[f64]) -> Result<Self> {
        if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid("penalties must be positive and finite"));
        }
        Ok(Self {
            theta: sigmas.iter().map(|s| s.ln()).collect(),
        })
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t.exp()).collect()
    }

    pub fn schedule(&self, cfg: &SolverConfig) -> Result<PenaltySchedule> {
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("schedule parameters must be finite"));
        }
        PenaltySchedule::with_restarts(self.sigmas(), cfg.iters, cfg.tau)
    }
}

/// Mean squared error `(1/|batch|) Σ ‖x^K − x*‖²` of the solver outputs under
/// a fixed schedule. Instances run in parallel; the sum is taken in index
/// order.
pub fn schedule_loss<S: ScheduleSolver>(
    schedule: &PenaltySchedule,
    batch: &[&Sample<S::Instance>],
    solver: &S,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let errs: Vec<f64> = batch
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let x = solver.terminal(&s.instance, schedule).map_err(|e| e.at_instance(i))?;
            Ok(dist2(&x, &s.solution))
        })
        .collect::<Result<_>>()?;
    Ok(errs.iter().sum::<f64>() / batch.len() as f64)
}

/// ERM loss of the schedule `exp(θ)`.
pub fn erm_loss<S: ScheduleSolver>(
    params: &ScheduleParams,
    batch: &[&Sample<S::Instance>],
    solver: &S,
    cfg: &SolverConfig,
) -> Result<f64> {
    schedule_loss(&params.schedule(cfg)?, batch, solver)
}

/// Central differences of `loss` at `theta` with step
/// `h_j = fd_step·max(1, |θ_j|)`.
pub fn fd_gradient_with(
    theta: &[f64],
    fd_step: f64,
    mut loss: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<Vec<f64>> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::invalid(format!("fd_step must be positive, got {fd_step}")));
    }
    let mut probe = theta.to_vec();
    let mut grad = Vec::with_capacity(theta.len());
    for j in 0..theta.len() {
        let h = fd_step * theta[j].abs().max(1.0);
        probe[j] = theta[j] + h;
        let up = loss(&probe)?;
        probe[j] = theta[j] - h;
        let down = loss(&probe)?;
        probe[j] = theta[j];
        let g = (up - down) / (2.0 * h);
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient { index: j });
        }
        grad.push(g);
    }
    Ok(grad)
}

/// Finite-difference gradient of [`erm_loss`] in `θ`.
pub fn fd_gradient<S: ScheduleSolver>(
    params: &ScheduleParams,
    batch: &[&Sample<S::Instance>],
    solver: &S,
    cfg: &SolverConfig,
    fd_step: f64,
) -> Result<Vec<f64>> {
    fd_gradient_with(&params.theta, fd_step, |theta| {
        let p = ScheduleParams {
            theta: theta.to_vec(),
        };
        erm_loss(&p, batch, solver, cfg)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let theta = [0.3, -1.7, 4.0];
        let g = fd_gradient_with(&theta, 1e-4, |t| Ok(t.iter().map(|v| v * v).sum())).unwrap();
        for (gi, ti) in g.iter().zip(&theta) {
            assert!((gi - 2.0 * ti).abs() <= 1e-6 * (1.0 + (2.0 * ti).abs()));
        }
    }

    #[test]
    fn non_finite_probe_names_the_coordinate() {
        let err = fd_gradient_with(&[0.0, 0.0], 1e-4, |t| {
            Ok(if t[1] > 0.0 { f64::INFINITY } else { 0.0 })
        })
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteGradient { index: 1 }));
    }

    #[test]
    fn params_round_trip_sigmas() {
        let p = ScheduleParams::from_sigmas(&[0.5, 2.0]).unwrap();
        let s = p.sigmas();
        assert!((s[0] - 0.5).abs() <= 1e-15 && (s[1] - 2.0).abs() <= 1e-15);
        assert!(ScheduleParams::from_sigmas(&[0.0]).is_err());
        assert_eq!(ScheduleParams::ones(3).sigmas(), vec![1.0; 3]);
    }
}
