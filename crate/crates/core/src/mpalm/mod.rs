//! Generic symmetric Gauss-Seidel majorized proximal ALM on dense
//! multi-block instances.

mod driver;
mod instance;
mod kkt;
mod schedule;
mod sgs;

pub use driver::{mpalm_run, SolverTrajectory};
pub use instance::{
    random_instance, soft_threshold, BlockDiagonal, DenseBlockInstance, GSpec, RandomSpec,
};
pub use kkt::{kkt_residual, KktResidual};
pub use schedule::{PenaltySchedule, DEFAULT_STEP_SIZE};
pub use sgs::{
    build_sgs, check_assumptions, sgs_sweep, subproblem_linear_term, AssumptionReport,
    SgsDecomposition,
};
