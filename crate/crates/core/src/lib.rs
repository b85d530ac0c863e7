//! Planar toolkit for the maximum distance problem: minimum-spanning-tree
//! objectives over ball-center configurations, certified coverage checks,
//! constructive prong and spoke covers, and a σ_n local-search optimizer.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructive;
pub mod coverage;
pub mod demo;
pub mod error;
pub mod geom;
pub mod io;
pub mod optimizer;
pub mod skeleton;
pub mod spanning;

pub use error::{Error, Result};
