//! Fixtures shared by the benchmarks.

use magstab_core::experiment::{synthesize_initial_data, RunConfig};
use magstab_core::{BackgroundField, FlowState};

/// Admissible state at the default amplitude on an `m × m` lattice.
pub fn fixture(m: usize) -> (FlowState, BackgroundField) {
    let cfg = RunConfig {
        modes: m,
        ..RunConfig::default()
    };
    (synthesize_initial_data(&cfg), cfg.background())
}
