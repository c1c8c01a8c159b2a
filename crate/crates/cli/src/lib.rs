//! Library surface behind the `alertgate` binary: run configuration,
//! frame-level metrics, and the subcommand implementations. Kept as a lib
//! so integration tests can drive the pipeline without spawning processes.

pub mod commands;
pub mod config;
pub mod frame_metrics;

pub use config::{MapMode, MapSide, RunConfig, Variant};
pub use frame_metrics::{frame_metrics, FrameMetrics};
