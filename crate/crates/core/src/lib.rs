#![no_std]
// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod analysis;
pub mod coupling;
pub mod error;
pub mod exec;
pub mod graph;
pub mod magnetization;
pub mod stochastic;
pub mod sw;

pub use error::{Error, Result};
