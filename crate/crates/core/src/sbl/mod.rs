//! Structured sparse Bayesian learning.
//!
//! Every solver here shares one Gaussian model: the active blocks of `x`
//! have prior covariance `gamma_i * B` (a single intra-block correlation `B`
//! shared by all blocks), measurements add white noise of variance
//! `noise_var`, and hyperparameters are learnt by maximizing the evidence.
//! All posterior quantities are computed in the `N x N` measurement space,
//! so the prior covariance is never formed densely.

mod block;
mod tmsbl;

pub use block::{bsbl_bo, bsbl_em, st_sbl};
pub use tmsbl::t_msbl;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{factor_with_retry, lower_solve, select_columns};
use crate::types::{make_block_partition, BlockPartition};

/// Hyperparameters of the block prior.
#[derive(Debug, Clone, PartialEq)]
pub struct SbState {
    /// Per-block scales; zero for pruned blocks.
    pub gamma: Vec<f64>,
    /// Intra-block correlation (`d x d`), shared across blocks.
    pub intra_corr: DMatrix<f64>,
    /// Correlation across jointly processed columns (`L' x L'`).
    pub inter_corr: DMatrix<f64>,
    pub active: Vec<bool>,
}

impl SbState {
    /// Uninformative start: unit scales, identity correlations, nothing pruned.
    pub fn initial(partition: &BlockPartition, columns: usize) -> Self {
        let g = partition.num_blocks();
        Self {
            gamma: vec![1.0; g],
            intra_corr: DMatrix::identity(partition.block_len(), partition.block_len()),
            inter_corr: DMatrix::identity(columns, columns),
            active: vec![true; g],
        }
    }

    fn partition_for(&self, m: usize) -> Result<BlockPartition> {
        let d = self.intra_corr.nrows();
        if self.intra_corr.ncols() != d || self.active.len() != self.gamma.len() {
            return Err(Error::Dimension("inconsistent hyperparameter state".into()));
        }
        let p = make_block_partition(m, d)?;
        if p.num_blocks() != self.gamma.len() {
            return Err(Error::Dimension(format!(
                "state has {} block scales but M={m} with d={d} gives {} blocks",
                self.gamma.len(),
                p.num_blocks()
            )));
        }
        Ok(p)
    }
}

/// Posterior mean and the diagonal blocks of the posterior covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMoments {
    /// `M x L'` (one column per measurement vector).
    pub mean: DMatrix<f64>,
    /// `d x d` covariance of each block; zero for pruned blocks.
    pub block_covs: Vec<DMatrix<f64>>,
}

/// Gaussian posterior of `x` given `y` under the block prior in `state`.
/// Columns of `y` are treated as independent draws sharing the prior.
pub fn posterior_moments(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    state: &SbState,
    noise_var: f64,
) -> Result<PosteriorMoments> {
    if y.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "measurements have {} rows but A has {}",
            y.nrows(),
            a.nrows()
        )));
    }
    let partition = state.partition_for(a.ncols())?;
    let ev = Evidence::compute(
        a,
        y,
        &partition,
        &state.gamma,
        &state.active,
        &state.intra_corr,
        noise_var,
        None,
    )?;
    Ok(PosteriorMoments {
        mean: ev.mean,
        block_covs: ev.block_covs,
    })
}

/// Everything one hyperparameter update needs from a posterior evaluation.
pub(crate) struct Evidence {
    pub mean: DMatrix<f64>,
    pub block_covs: Vec<DMatrix<f64>>,
    /// `A_iᵀ Σy⁻¹ A_i` for active blocks (empty matrix otherwise).
    pub gram: Vec<DMatrix<f64>>,
    /// `A_iᵀ Σy⁻¹ Y` for active blocks (empty matrix otherwise).
    pub proj: Vec<DMatrix<f64>>,
    pub neg_log_evidence: f64,
}

impl Evidence {
    #[allow(clippy::too_many_arguments)]
    pub fn compute(
        a: &DMatrix<f64>,
        y: &DMatrix<f64>,
        partition: &BlockPartition,
        gamma: &[f64],
        active: &[bool],
        intra: &DMatrix<f64>,
        noise_var: f64,
        context: Option<usize>,
    ) -> Result<Self> {
        let (n, m) = a.shape();
        let cols = y.ncols();
        let d = partition.block_len();
        let g = partition.num_blocks();
        let act: Vec<usize> = (0..g).filter(|&i| active[i]).collect();
        let empty = || DMatrix::zeros(0, 0);

        let mut mean = DMatrix::zeros(m, cols);
        let mut block_covs = vec![DMatrix::zeros(d, d); g];
        let mut gram = vec![empty(); g];
        let mut proj = vec![empty(); g];

        let columns: Vec<usize> = act.iter().flat_map(|&i| partition.range(i)).collect();
        let a_act = select_columns(a, &columns);

        // Σy = λI + Σ_i γ_i A_i B A_iᵀ, built as A_act · (Σ0 A_actᵀ).
        let mut prior_at = DMatrix::zeros(columns.len(), n);
        for (k, &i) in act.iter().enumerate() {
            let ai = a_act.columns(k * d, d);
            prior_at
                .rows_mut(k * d, d)
                .gemm_tr(gamma[i], intra, &ai.transpose(), 0.0);
        }
        let mut base = &a_act * &prior_at;
        base = (&base + base.transpose()) * 0.5;
        let (chol, _) = factor_with_retry(&base, noise_var, context)?;

        let z = chol.solve(y);
        let lower = chol.l_dirty().lower_triangle();
        let white = lower_solve(&lower, &a_act)
            .ok_or_else(|| Error::conditioning(context, "triangular solve failed"))?;

        for (k, &i) in act.iter().enumerate() {
            let ai = a_act.columns(k * d, d);
            let wi = white.columns(k * d, d);
            let gi = wi.transpose() * wi;
            let pi = ai.transpose() * &z;
            let bi = intra * gamma[i];
            mean.rows_mut(i * d, d).copy_from(&(&bi * &pi));
            let cov = &bi - &bi * &gi * &bi;
            block_covs[i] = (&cov + cov.transpose()) * 0.5;
            gram[i] = gi;
            proj[i] = pi;
        }

        let logdet: f64 = 2.0 * lower.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let quad = y.dot(&z);
        let neg_log_evidence = 0.5
            * (cols as f64 * logdet + quad + (n * cols) as f64 * (2.0 * std::f64::consts::PI).ln());

        Ok(Self {
            mean,
            block_covs,
            gram,
            proj,
            neg_log_evidence,
        })
    }
}

/// Negative log evidence `-log N(Y; 0, λI + AΣ0Aᵀ)` summed over columns.
pub fn neg_log_evidence(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    state: &SbState,
    noise_var: f64,
) -> Result<f64> {
    let partition = state.partition_for(a.ncols())?;
    Evidence::compute(
        a,
        y,
        &partition,
        &state.gamma,
        &state.active,
        &state.intra_corr,
        noise_var,
        None,
    )
    .map(|e| e.neg_log_evidence)
}

/// Largest hyperparameter change relative to the largest previous value.
pub(crate) fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let scale = old.iter().cloned().fold(0.0, f64::max);
    let diff = old
        .iter()
        .zip(new)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Blocks that a threshold would prune from a given scale vector.
pub fn pruned_by(gamma: &[f64], threshold: f64) -> Vec<usize> {
    gamma
        .iter()
        .enumerate()
        .filter(|(_, &g)| g < threshold)
        .map(|(i, _)| i)
        .collect()
}
