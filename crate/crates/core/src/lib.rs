#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod cli;
pub mod data;
pub mod error;
pub mod field;
pub mod kernels;
pub mod norms;
pub mod scheme;
pub mod witness;

pub use error::{Error, Result};
