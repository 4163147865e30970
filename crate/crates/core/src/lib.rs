//! Boundary detection with a learned half-disk histogram metric.

pub mod cli;
pub mod error;
pub mod data;
pub mod detect;
pub mod eval;
pub mod features;
pub mod imgproc;
pub mod io_util;
pub mod metric;
pub mod pipeline;
pub mod postproc;
pub mod training;

pub use error::{Error, Result};
