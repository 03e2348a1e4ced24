use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{full_rank_least_squares, min_norm_least_squares, select_columns};
use crate::types::{BlockPartition, RecoveryResult, SmvProblem};

/// Block orthogonal matching pursuit. Selects `k_blocks` blocks one at a
/// time by the largest `‖A_iᵀ r‖₂` (lowest index on ties) and refits by
/// least squares on the selected union after each pick. Unselected blocks
/// are exactly zero.
///
/// A selection with no more columns than measurements must have full
/// column rank; wider selections use the minimum-norm fit.
pub fn bomp(
    problem: &SmvProblem<'_>,
    partition: &BlockPartition,
    k_blocks: usize,
) -> Result<RecoveryResult> {
    let start = Instant::now();
    let a = problem.a;
    let (n, m) = a.shape();
    partition.check_len(m)?;
    let g = partition.num_blocks();
    if k_blocks == 0 || k_blocks > g {
        return Err(Error::Range(format!(
            "k_blocks must be in 1..={g}, got {k_blocks}"
        )));
    }
    let y = &problem.y;
    let y_norm = y.norm();
    let mut selected = vec![false; g];
    let mut residual = y.clone();
    let mut estimate = DVector::zeros(m);
    let mut iterations = 0;

    while iterations < k_blocks && residual.norm() > 1e-14 * y_norm {
        iterations += 1;
        let corr = a.transpose() * &residual;
        let mut best = None;
        let mut best_score = -1.0;
        for b in (0..g).filter(|&b| !selected[b]) {
            let score = corr
                .rows(b * partition.block_len(), partition.block_len())
                .norm();
            if score > best_score {
                best_score = score;
                best = Some(b);
            }
        }
        let Some(b) = best else { break };
        selected[b] = true;

        let cols: Vec<usize> = (0..g)
            .filter(|&i| selected[i])
            .flat_map(|i| partition.range(i))
            .collect();
        let sub = select_columns(a, &cols);
        let coef = if cols.len() <= n {
            full_rank_least_squares(&sub, y).map_err(|e| match e {
                Error::Conditioning { detail, .. } => Error::Conditioning {
                    block: Some(b),
                    detail,
                },
                other => other,
            })?
        } else {
            min_norm_least_squares(&sub, y)?
        };
        estimate.fill(0.0);
        for (k, &j) in cols.iter().enumerate() {
            estimate[j] = coef[k];
        }
        residual = y - &sub * &coef;
    }

    let active: Vec<usize> = (0..g).filter(|&i| selected[i]).collect();
    Ok(RecoveryResult {
        estimate: DMatrix::from_column_slice(m, 1, estimate.as_slice()),
        iterations,
        converged: true,
        runtime_seconds: start.elapsed().as_secs_f64(),
        all_pruned: false,
        active_blocks: Some(active),
        exact: None,
        trace: Vec::new(),
    })
}
