// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dp;
pub mod error;
pub mod exec;
pub mod exp_quantile;
pub mod histogram;
pub mod numeric;
pub mod posterior;
pub mod precise;
pub mod rng;
pub mod sensitivity;

pub use error::{Error, Result};
