//! Experiment harness: configs, sweeps, CSV output, rate fits, reference
//! bounds and the lemma diagnostics.

pub mod bounds;
pub mod config;
pub mod diagnostics;
pub mod fit;
pub mod plots;
pub mod sandwich;
pub mod sweep;

pub use bounds::{lower_bound_value, LowerBoundKind, LowerBoundQuery};
pub use config::{EstimatorSpec, GeometrySpec, GridPoint, ProblemSpec, ScheduleSpec, SweepConfig};
pub use diagnostics::{dominance_check, lipschitz_diff_moment_check, DominanceResult, LipschitzTable};
pub use fit::{fit_log_log, fit_rate, mean_gap_by, FitResult, XField};
pub use plots::emit_plots;
pub use sandwich::{sandwich_report, SandwichRow};
pub use sweep::{
    read_csv, read_csv_file, row_seed, run_point, run_sweep, workers_from_env, write_csv, write_csv_file,
    SweepRow, CSV_HEADER,
};
