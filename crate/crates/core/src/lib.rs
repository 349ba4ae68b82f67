pub mod cli;
pub mod datasets;
pub mod error;
pub mod linalg;
pub mod lasso;
pub mod learn;
pub mod mpalm;
pub mod ot;

pub use error::{Error, Result};
