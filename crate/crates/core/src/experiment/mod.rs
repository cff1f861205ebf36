//! Batch experiments: configuration, initial data, runs, persistence and fits.

pub mod checkpoint;
pub mod config;
pub mod fit;
pub mod initial;
pub mod modes;
pub mod run;
pub mod series;

use std::io::Write;
use std::path::Path;

pub use checkpoint::{checkpoint_read, checkpoint_write, CheckpointError};
pub use config::{BackgroundSpec, ConfigError, Mode, RunConfig};
pub use fit::{fit_decay, fit_samples, DecayFit, FitError, FitOutcome, Quantity, DECAY_FLOOR};
pub use initial::synthesize_initial_data;
pub use run::{execute, run_simulation, RunError, RunOutputs, RunRecord, RunSummary};
pub use series::{read_series, write_series, SeriesError};

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
