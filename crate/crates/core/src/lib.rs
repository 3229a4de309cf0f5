#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fixedpoint;
pub mod gauge;
pub mod kkm;
pub mod mnc;
pub mod pcore;
pub mod retract;
pub mod sampling;
pub mod vector;

pub use error::{Error, Result};
