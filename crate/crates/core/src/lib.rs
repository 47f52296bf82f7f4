pub mod app;
pub mod complementarity;
pub mod config;
pub mod error;
pub mod expr;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod report;
pub mod search;
pub mod seed;
pub mod span;
pub mod synth;

pub use error::{Error, Result};
