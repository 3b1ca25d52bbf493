//! Library side of the `negscale` binary: configuration, backend wiring,
//! results files, analysis, reports and the staged pipeline.

pub mod analyze;
pub mod backends;
pub mod config;
pub mod pipeline;
pub mod report;
pub mod results;
