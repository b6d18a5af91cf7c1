//! Subcommand implementations. Each returns `Ok(())` for a clean exit
//! (code 0) or a [`PipelineError`] that the binary maps to exit code 2
//! (configuration) or 3 (internal failure).

pub mod convergence;
pub mod diagnose;
pub mod evolve;
pub mod oracle;
pub mod sweep;

use std::path::Path;

use crate::config::{parse_config, RunConfig};
use crate::pipeline::PipelineError;

/// Reads and parses a run configuration, keeping the raw text for
/// manifest hashing and byte-exact copying.
pub fn load_config(path: &Path) -> Result<(String, RunConfig), PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("read {}: {e}", path.display())))?;
    let config = parse_config(&text).map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok((text, config))
}

/// Renders an optional breakdown-time estimate for tables and summaries.
pub fn fmt_t_star(t: Option<f64>) -> String {
    match t {
        Some(v) => format!("{v:.9e}"),
        None => "n/a".to_string(),
    }
}
