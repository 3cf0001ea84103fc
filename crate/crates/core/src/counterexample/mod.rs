//! A BV-threshold counterexample: an unstable Hill equation, the singular metric built
//! from its decaying solution, quasimodes localized at a point, and the failure of
//! Strichartz bounds they force.

pub mod hill;
pub mod metric;
pub mod quasimode;

pub use hill::{floquet_mode, monodromy, tune_phase, FloquetSolution, HillCoefficient, Monodromy};
pub use metric::{build_metric, Cutoff, MetricReport, ScaleNorms, SingularMetric};
pub use quasimode::{blowup_experiment, build_quasimode, BlowupConfig, BlowupRow, BlowupTable, Quasimode, QuasimodeSummary};

/// Amplitude of the named profile.
pub const DEFAULT_DELTA: f64 = 0.9;

/// The named profile: `δ = 0.9`, phase tuned so the decaying mode is even.
pub fn default_profile() -> crate::Result<HillCoefficient> {
    tune_phase(DEFAULT_DELTA)
}
