//! Lasso `min ½‖Dw − ξ‖² + μ‖w‖₁` solved through its dual with the
//! proximal ALM, plus the ISTA baseline and a coordinate-descent oracle.

mod ista;
mod oracle;
mod problem;
mod solver;

pub use ista::ista_run;
pub use oracle::{dual_certificate, duality_gap, lasso_oracle, LassoCertificate};
pub use problem::{
    gen_dictionary, inv_apply, project_box, LassoInstance, LassoProblem, SpectralCache,
};
pub use solver::{
    lasso_block_instance, lasso_kkt, lasso_mpalm_final, lasso_mpalm_observe, lasso_mpalm_run,
    LassoDualState,
};

/// Default regularization weight.
pub const DEFAULT_MU: f64 = 0.1;
