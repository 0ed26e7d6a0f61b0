pub mod bart;
pub mod cart;
pub mod config;
pub mod data;
pub mod diagnostics;
pub mod dgp;
pub mod error;
pub mod estimands;
pub mod gibbs;
pub mod kernels;
pub mod outcome;
pub mod strata;

pub use error::{Error, Result};
