#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod numerics;
pub mod overlap;
pub mod sde;
pub mod spectral;

pub use error::{Error, Result};
pub use faer::Mat;
