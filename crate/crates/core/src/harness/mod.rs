//! Data ingestion, synthetic instances, baselines and experiment runs.

mod baselines;
mod experiment;
mod libsvm;
mod synth;

pub use baselines::{
    baseline_curve, baseline_selection, objective_at_budget, run_baseline, BaselineKind,
    CurvePoint, SOLVER_NODE,
};
pub use experiment::{
    load_problem, run_experiment, write_report, write_trace, DatasetSpec, ExperimentConfig,
    ExperimentReport, Mode, Problem, Summary, TRACE_COLUMNS,
};
pub use libsvm::{load_libsvm, matrix_rows, read_libsvm, write_libsvm, LibsvmData};
pub use synth::{
    density_count, lasso_fista, synth_lasso, LambdaMaxRule, SynthLasso, SynthLassoParams,
};

use crate::error::Error;

/// Process exit status: the run converged.
pub const EXIT_OK: i32 = 0;
/// The run finished without reaching the gap tolerance.
pub const EXIT_NOT_CONVERGED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFinite { .. } | Error::Protocol(_) | Error::EmptyGradient => EXIT_NUMERICAL,
        Error::Csv(_) | Error::Json(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_CONFIG,
    }
}
