//! Discrete optimal transport: the proximal ALM on the dual LP, the
//! Sinkhorn baseline and an exact network-simplex oracle.

mod exact;
mod problem;
mod sinkhorn;
mod solver;

pub use exact::{ot_exact, ExactTransport};
pub use problem::{
    cost_matrix, gen_marginals, parse_marginals, read_marginals, OtInstance, TransportPlan,
};
pub(crate) use problem::row_col_sums;
pub use sinkhorn::{default_lambda_grid, sinkhorn, sinkhorn_observe, SinkhornResult};
pub use solver::{
    ot_block_instance, ot_kkt, ot_mpalm_final, ot_mpalm_observe, ot_mpalm_run, OtDualState,
};
