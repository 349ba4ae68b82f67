//! Seeded Lasso and OT datasets with certified oracle solutions, stored as
//! a JSON manifest plus CSV payloads.

mod build;
mod storage;

pub use build::{
    build_lasso_dataset, build_ot_dataset, split_indices, Dataset, DatasetKind, OtSource, Shared,
    CERTIFICATE_TOL, ORACLE_TOL, PLAN_FEASIBILITY_TOL,
};
pub(crate) use storage::write_atomic;
pub use storage::{load_dataset, read_manifest, save_dataset, Manifest, Split, FORMAT_VERSION, MANIFEST};
