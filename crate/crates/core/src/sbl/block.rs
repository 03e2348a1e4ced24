//! Block-structured SBL: BSBL-EM and BSBL-BO for single vectors, and the
//! spatiotemporal variant for groups of jointly processed columns.

use std::time::Instant;

use nalgebra::DMatrix;

use super::{relative_change, Evidence};
use crate::error::{Error, Result};
use crate::linalg::{ar1_regularize, inverse_spd, sqrt_and_inv_sqrt};
use crate::types::{
    BlockPartition, IterationRecord, MmvProblem, RecoveryResult, SmvProblem, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScaleRule {
    /// Expectation-maximization fixed point.
    Em,
    /// Bound-optimization fixed point (faster, not monotone in general).
    BoundOpt,
}

struct GroupOutcome {
    estimate: DMatrix<f64>,
    iterations: usize,
    converged: bool,
    active: Vec<bool>,
    trace: Vec<IterationRecord>,
}

/// BSBL with expectation-maximization updates of the block scales.
pub fn bsbl_em(
    problem: &SmvProblem<'_>,
    partition: &BlockPartition,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    run_smv(problem, partition, config, ScaleRule::Em)
}

/// BSBL with the bound-optimization scale update
/// `γ_i ← γ_i ‖B^{1/2} A_iᵀ Σy⁻¹ y‖ / sqrt(tr(A_iᵀ Σy⁻¹ A_i B))`.
pub fn bsbl_bo(
    problem: &SmvProblem<'_>,
    partition: &BlockPartition,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    run_smv(problem, partition, config, ScaleRule::BoundOpt)
}

fn run_smv(
    problem: &SmvProblem<'_>,
    partition: &BlockPartition,
    config: &SolverConfig,
    rule: ScaleRule,
) -> Result<RecoveryResult> {
    config.validate()?;
    partition.check_len(problem.signal_len())?;
    let start = Instant::now();
    let y = DMatrix::from_column_slice(problem.y.len(), 1, problem.y.as_slice());
    let out = run_group(
        problem.a,
        &y,
        partition,
        config,
        rule,
        false,
        problem.noise_var,
        0,
    )?;
    Ok(finish(vec![out], partition, start))
}

/// Spatiotemporal SBL. Columns are processed in independent groups of
/// `config.column_block_size`; within a group the columns share the block
/// support, blocks carry the intra-block correlation, and the correlation
/// across the group's columns is learnt and whitened away.
pub fn st_sbl(
    problem: &MmvProblem<'_>,
    partition: &BlockPartition,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    config.validate()?;
    partition.check_len(problem.signal_len())?;
    let l = problem.columns();
    let width = config.column_block_size;
    if !l.is_multiple_of(width) {
        return Err(Error::Dimension(format!(
            "column block size {width} does not divide the number of columns {l}"
        )));
    }
    let start = Instant::now();
    let mut outcomes = Vec::with_capacity(l / width);
    for group in 0..l / width {
        let y = problem.y.columns(group * width, width).into_owned();
        outcomes.push(run_group(
            problem.a,
            &y,
            partition,
            config,
            ScaleRule::Em,
            config.learn_inter_corr,
            problem.noise_var,
            group,
        )?);
    }
    Ok(finish(outcomes, partition, start))
}

fn finish(
    outcomes: Vec<GroupOutcome>,
    partition: &BlockPartition,
    start: Instant,
) -> RecoveryResult {
    let m = partition.signal_len();
    let l: usize = outcomes.iter().map(|o| o.estimate.ncols()).sum();
    let mut estimate = DMatrix::zeros(m, l);
    let mut col = 0;
    let mut active = vec![false; partition.num_blocks()];
    let mut iterations = 0;
    let mut converged = true;
    let mut trace = Vec::new();
    for o in outcomes {
        estimate
            .columns_mut(col, o.estimate.ncols())
            .copy_from(&o.estimate);
        col += o.estimate.ncols();
        for (acc, a) in active.iter_mut().zip(&o.active) {
            *acc |= *a;
        }
        iterations = iterations.max(o.iterations);
        converged &= o.converged;
        trace.extend(o.trace);
    }
    let active_blocks: Vec<usize> = (0..active.len()).filter(|&i| active[i]).collect();
    RecoveryResult {
        estimate,
        iterations,
        converged,
        runtime_seconds: start.elapsed().as_secs_f64(),
        all_pruned: active_blocks.is_empty(),
        active_blocks: Some(active_blocks),
        exact: None,
        trace,
    }
}

/// One column group (a single column for BSBL).
#[allow(clippy::too_many_arguments)]
fn run_group(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    partition: &BlockPartition,
    config: &SolverConfig,
    rule: ScaleRule,
    learn_inter: bool,
    noise_var: f64,
    group: usize,
) -> Result<GroupOutcome> {
    let m = partition.signal_len();
    let g = partition.num_blocks();
    let d = partition.block_len();
    let cols = y.ncols();

    if y.iter().all(|&v| v == 0.0) {
        return Ok(GroupOutcome {
            estimate: DMatrix::zeros(m, cols),
            iterations: 1,
            converged: true,
            active: vec![true; g],
            trace: Vec::new(),
        });
    }

    let mut gamma = vec![1.0; g];
    let mut active = vec![true; g];
    let mut intra = DMatrix::identity(d, d);
    let mut inter = DMatrix::identity(cols, cols);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        iterations += 1;
        let (inter_sqrt, inter_isqrt) = if learn_inter && cols > 1 {
            sqrt_and_inv_sqrt(&inter)?
        } else {
            (DMatrix::identity(cols, cols), DMatrix::identity(cols, cols))
        };
        let white_y = if learn_inter && cols > 1 {
            y * &inter_isqrt
        } else {
            y.clone()
        };
        let ev = Evidence::compute(
            a,
            &white_y,
            partition,
            &gamma,
            &active,
            &intra,
            noise_var,
            Some(group),
        )?;

        let intra_inv = inverse_spd(&intra)?;
        let lf = cols as f64;
        let mut new_gamma = gamma.clone();
        let mut intra_acc = DMatrix::zeros(d, d);
        let mut inter_acc = DMatrix::zeros(cols, cols);
        let mut n_active = 0usize;
        for i in (0..g).filter(|&i| active[i]) {
            let mu = ev.mean.rows(i * d, d);
            let cov = &ev.block_covs[i];
            let second = cov * lf + mu * mu.transpose();
            new_gamma[i] = match rule {
                ScaleRule::Em => (&intra_inv * &second).trace() / (d as f64 * lf),
                ScaleRule::BoundOpt => {
                    let p = &ev.proj[i];
                    let num = (p.transpose() * &intra * p).trace() / lf;
                    let den = (&ev.gram[i] * &intra).trace();
                    gamma[i] * (num.max(0.0) / den).sqrt()
                }
            };
            intra_acc += second / (lf * gamma[i]);
            if learn_inter && cols > 1 {
                // E[X̃_iᵀ (γ_i B)⁻¹ X̃_i] for the whitened block.
                let prec = &intra_inv / gamma[i];
                let mut s = mu.transpose() * &prec * mu;
                let t = (&prec * cov).trace();
                for c in 0..cols {
                    s[(c, c)] += t;
                }
                inter_acc += s;
            }
            n_active += 1;
        }

        if config.learn_intra_corr && n_active > 0 {
            intra = ar1_regularize(&(intra_acc / n_active as f64));
        }
        if learn_inter && cols > 1 && n_active > 0 {
            let est = &inter_sqrt * inter_acc * &inter_sqrt;
            inter = ar1_regularize(&est);
        }

        for i in 0..g {
            if active[i] && !(new_gamma[i] >= config.prune_threshold) {
                active[i] = false;
                new_gamma[i] = 0.0;
            }
        }
        let change = relative_change(&gamma, &new_gamma);
        gamma = new_gamma;

        if config.trace {
            let mut iterate = &ev.mean * &inter_sqrt;
            for i in (0..g).filter(|&i| !active[i]) {
                iterate.rows_mut(i * d, d).fill(0.0);
            }
            trace.push(IterationRecord {
                group,
                hyper: gamma.clone(),
                active: active.clone(),
                iterate,
                objective: Some(ev.neg_log_evidence),
            });
        }

        if !active.iter().any(|&x| x) {
            converged = true;
            break;
        }
        if change < config.tol {
            converged = true;
            break;
        }
    }

    let estimate = if active.iter().any(|&x| x) {
        let (inter_sqrt, inter_isqrt) = if learn_inter && cols > 1 {
            sqrt_and_inv_sqrt(&inter)?
        } else {
            (DMatrix::identity(cols, cols), DMatrix::identity(cols, cols))
        };
        let white_y = if learn_inter && cols > 1 {
            y * &inter_isqrt
        } else {
            y.clone()
        };
        let ev = Evidence::compute(
            a,
            &white_y,
            partition,
            &gamma,
            &active,
            &intra,
            noise_var,
            Some(group),
        )?;
        let mut est = &ev.mean * &inter_sqrt;
        for i in (0..g).filter(|&i| !active[i]) {
            est.rows_mut(i * d, d).fill(0.0);
        }
        est
    } else {
        DMatrix::zeros(m, cols)
    };

    Ok(GroupOutcome {
        estimate,
        iterations,
        converged,
        active,
        trace,
    })
}
