pub mod cli;
pub mod data;
pub mod error;
pub mod metrics;
pub mod postprocessing;
pub mod preprocessing;
pub mod reductions;
pub mod report;

pub use error::{Error, Result};
