//! Learning penalty schedules by empirical risk minimization.

mod adam;
mod erm;
mod metrics;
mod solver;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use erm::{
    erm_loss, fd_gradient, fd_gradient_with, schedule_loss, Sample, ScheduleParams, SolverConfig,
};
pub use metrics::{
    average_curves, nmse, nmse_curve, relative_error_db, schedule_nmse, NMSE_FLOOR,
};
pub use solver::{LassoSolver, OtSolver, ScheduleSolver};
pub use train::{grid_search, train, TrainConfig, TrainReport};

/// Fixed penalties `{1e-2, 1e-1, 1, 1e1, 1e2}` used as baselines.
pub const SIGMA_GRID: [f64; 5] = [1e-2, 1e-1, 1.0, 1e1, 1e2];
