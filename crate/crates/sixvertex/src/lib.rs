//! Std companion to `sixvertex-core`: parallel sweeps, file formats, JSON configuration
//! and the `sixvertex` command-line driver.
//!
//! * [`sweep`]: rayon sweeps of the commutation identities with per-point error isolation.
//! * [`surface`]: column-parallel surface tabulation and the versioned text format.
//! * [`config`]: schema-versioned JSON run configuration.
//! * [`commands`] and [`cli`]: one pipeline per subcommand, CSV data and JSON summaries.
//!
//! The worker count comes from `--workers`, the config, or `SIXVERTEX_WORKERS`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pool;
pub mod surface;
pub mod sweep;

pub use error::{AppError, AppResult};
pub use sixvertex_core;
