//! Element-wise multiple-vector SBL with learnt correlation across columns.

use std::time::Instant;

use nalgebra::DMatrix;

use super::{relative_change, Evidence};
use crate::error::Result;
use crate::linalg::{ar1_regularize, inverse_spd};
use crate::types::{
    make_block_partition, IterationRecord, MmvProblem, RecoveryResult, SolverConfig,
};

/// T-MSBL: rows of `X` share a support, each row is a correlated sequence
/// with a common `L x L` correlation that is learnt (AR(1)-regularized,
/// unit diagonal) and compensated for in the scale updates.
pub fn t_msbl(problem: &MmvProblem<'_>, config: &SolverConfig) -> Result<RecoveryResult> {
    config.validate()?;
    let start = Instant::now();
    let m = problem.signal_len();
    let l = problem.columns();
    let partition = make_block_partition(m, 1)?;
    let y = &problem.y;

    if y.iter().all(|&v| v == 0.0) {
        let mut out = RecoveryResult::zeros(m, l);
        out.iterations = 1;
        out.active_blocks = Some((0..m).collect());
        return Ok(out);
    }

    let unit = DMatrix::identity(1, 1);
    let mut gamma = vec![1.0; m];
    let mut active = vec![true; m];
    let mut inter = DMatrix::<f64>::identity(l, l);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        iterations += 1;
        let ev = Evidence::compute(
            problem.a,
            y,
            &partition,
            &gamma,
            &active,
            &unit,
            problem.noise_var,
            None,
        )?;
        let inter_inv = inverse_spd(&inter)?;
        let mut new_gamma = gamma.clone();
        let mut acc = DMatrix::zeros(l, l);
        for i in (0..m).filter(|&i| active[i]) {
            let row = ev.mean.row(i);
            let quad = (row * &inter_inv * row.transpose())[(0, 0)];
            new_gamma[i] = quad / l as f64 + ev.block_covs[i][(0, 0)];
            if config.learn_inter_corr {
                acc += row.transpose() * row / gamma[i];
            }
        }
        if config.learn_inter_corr && l > 1 {
            inter = ar1_regularize(&acc);
        }
        for i in 0..m {
            if active[i] && !(new_gamma[i] >= config.prune_threshold) {
                active[i] = false;
                new_gamma[i] = 0.0;
            }
        }
        let change = relative_change(&gamma, &new_gamma);
        gamma = new_gamma;
        if config.trace {
            let mut iterate = ev.mean.clone();
            for i in (0..active.len()).filter(|&i| !active[i]) {
                iterate.row_mut(i).fill(0.0);
            }
            trace.push(IterationRecord {
                group: 0,
                hyper: gamma.clone(),
                active: active.clone(),
                iterate,
                objective: Some(ev.neg_log_evidence),
            });
        }
        if !active.iter().any(|&a| a) || change < config.tol {
            converged = true;
            break;
        }
    }

    let estimate = if active.iter().any(|&a| a) {
        let ev = Evidence::compute(
            problem.a,
            y,
            &partition,
            &gamma,
            &active,
            &unit,
            problem.noise_var,
            None,
        )?;
        ev.mean
    } else {
        DMatrix::zeros(m, l)
    };
    let active_rows: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
    Ok(RecoveryResult {
        estimate,
        iterations,
        converged,
        runtime_seconds: start.elapsed().as_secs_f64(),
        all_pruned: active_rows.is_empty(),
        active_blocks: Some(active_rows),
        exact: None,
        trace,
    })
}
