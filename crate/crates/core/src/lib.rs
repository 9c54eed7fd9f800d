//! Credit default swap valuation under trilateral default risk.
//!
//! The buyer (A), seller (B) and reference entity (C) can all default. Their
//! hazard rates follow CIR diffusions; default dependence is layered on each
//! payment period through pairwise correlations and a third-order
//! comrelation. Contracts are valued by backward induction with
//! least-squares continuation estimates, with or without full
//! collateralization.

pub mod error;
pub mod experiments;
pub mod hazard;
pub mod joint_default;
pub mod market_data;
pub mod optim;
pub mod pricer;
pub mod schedule;

pub use error::{Error, Result};
