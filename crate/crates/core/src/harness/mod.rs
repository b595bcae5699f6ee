//! Synthetic tasks, file formats, run configuration and the drivers behind
//! the command-line tool.

pub mod config;
pub mod dataset;
pub mod events;
pub mod gradcheck;
pub mod run;

pub use config::RunConfig;
pub use dataset::{gen_latency_task, gen_rate_task, Dataset, LatencyTaskParams, Sample};
pub use events::{load_events, save_events};
