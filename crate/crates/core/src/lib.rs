#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod jet;
pub mod linalg;
pub mod nullcone;
pub mod operators;
pub mod par;
pub mod quadrature;
pub mod rate;
pub mod record;
pub mod sokhotski;
pub mod spectral;
pub mod suites;
pub mod trace;

pub use error::{Error, Result};
