//! Synthetic data, metrics, and the reproducible benchmark runner.

mod generate;
mod metrics;
mod report;
mod runner;
mod solvers;
mod spec;

pub use generate::{
    gen_block_sparse, gen_block_sparse_mmv, gen_correlated_mmv, gen_phantom_rf, pulse_template,
    PhantomParams,
};
pub use metrics::{mse, psnr, psnr_with_peak, Psnr, EXACT_MSE};
pub use report::{BenchReport, ReportRow, REPORT_HEADER};
pub use runner::{recover_lines, run_benchmark, LinesOutcome, RunOptions};
pub use solvers::{top_support, ResolvedSolver, SolverKind, SolverSpec};
pub use spec::{ExperimentSpec, InputSpec, PsnrDomain, SPEC_VERSION};
