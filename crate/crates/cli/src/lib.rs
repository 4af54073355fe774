//! Configuration and pipelines behind the `treig` command-line tool.

pub mod config;
pub mod pipeline;

pub use config::{ConfigError, ExperimentConfig};
pub use pipeline::{solve, track, write_track, RunError, TrackRun};

/// Disk preset shipped with the repository, used by `selftest`.
pub const DISK_PRESET: &str = include_str!("../../../presets/disk_m0.conf");
