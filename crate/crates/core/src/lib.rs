//! Structured sparse recovery for compressively sensed line data.
//!
//! Each scan line of an RF frame is transformed with an orthonormal DCT,
//! measured with a seeded Gaussian operator, and recovered with block sparse
//! Bayesian learning (BSBL-EM, BSBL-BO, ST-SBL, T-MSBL) or reweighted least
//! squares (IRLS, BIRLS, M-FOCUSS). Greedy and exhaustive baselines and a
//! reproducible benchmark runner are included.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod io;
pub mod irls;
mod linalg;
pub mod rng;
pub mod sbl;
pub mod sensing;
pub mod transforms;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    make_block_partition, ratio_to_measurements, search_space_size, BModeImage, BlockPartition,
    IterationRecord, MmvProblem, RecoveryResult, RfFrame, SamplingRatio, SensingOperator,
    SensingScheme, SmvProblem, SolverConfig,
};
