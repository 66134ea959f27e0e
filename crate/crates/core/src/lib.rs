//! Individually and group fair randomized threshold classifiers for
//! strategic binary classification.
//!
//! Agents with score `l(x)` best-respond to a threshold `t` by paying
//! `g(t - l)` whenever the gap is at most `cap = g^{-1}(1 / lambda)`. A
//! randomized classifier draws `t` from a piecewise-constant density; capping
//! that density bounds how fast the expected outcome and the expected
//! best-response cost can change between nearby individuals. The optimal
//! capped density is the solution of a small linear program.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod data;
pub mod error;
pub mod estimation;
pub mod experiment;
mod linalg;
pub mod lp;
pub mod metrics;
pub mod policy;
pub mod response;
pub mod score_cost;

pub use error::{Error, Result};
