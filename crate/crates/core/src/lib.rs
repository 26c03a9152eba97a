pub mod dataset;
pub mod diagnose;
pub mod error;
pub mod metrics;
pub mod mutscan;
pub mod qpn;
pub mod seqio;

pub use error::{Error, Result};
