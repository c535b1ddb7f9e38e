//! Batch front-end for `latspec-core`: JSON configuration in, CSV/JSON artifacts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Command, RunConfig};
pub use error::{CliError, Result};

/// Loads the config, runs the command and writes its artifacts.
///
/// `out` overrides the config's `output`; with neither, files go to the current directory.
pub fn run(command: Command, config: &Path, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let cfg = config::load(config, command)?;
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    log::info!("{command}: window {}, writing to {}", cfg.window, dir.display());
    let artifacts = commands::run(&cfg)?;
    output::emit(&dir, &cfg.echo(), &artifacts)
}
