pub mod cli;
pub mod config;
pub mod error;
pub mod fixedpoint;
pub mod homcrypt;
pub mod poly;
pub mod presets;
pub mod realization;
pub mod runtime;
pub mod simloop;

pub use error::{Error, Result};
