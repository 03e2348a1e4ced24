//! Iteratively reweighted least squares for lp minimization, its block and
//! multiple-vector variants, plus the greedy and exhaustive baselines.
//!
//! Every IRLS iterate is the weighted minimum-norm solution
//! `x = W⁻¹Aᵀ(AW⁻¹Aᵀ)⁻¹y` with weights `w = (e + ε)^{p/2 - 1}`, where `e` is
//! the squared magnitude of an entry, a block, or a row. The smoothing `ε`
//! starts at one and is divided by ten whenever the iterate stalls
//! (`‖Δx‖ < √ε/100`); the solver stops once it falls below the configured
//! floor. `ε` is measured relative to the largest energy of the initial
//! minimum-norm solution, which makes the iteration scale equivariant.
//!
//! Known-support indices carry weight exactly zero. Their coefficients are
//! free: the weighted minimum-norm problem is solved for the remaining
//! entries on the orthogonal complement of the known columns' span, and the
//! known coefficients then absorb what is left of `y` by least squares.

mod greedy;
mod oracle;

pub use greedy::bomp;
pub use oracle::{ksparse_approx, l0_bruteforce, L0_MAX_K, L0_MAX_M};

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::select_columns;
use crate::types::{
    check_p, BlockPartition, IterationRecord, MmvProblem, RecoveryResult, SmvProblem, SolverConfig,
};

/// How entries are grouped when computing weights.
enum Grouping<'a> {
    /// One weight per entry; listed indices are left unpenalized.
    Entries { support: &'a [usize] },
    /// One weight per block, from the block's summed energy.
    Blocks(&'a BlockPartition),
    /// One weight per row, shared across all columns.
    Rows,
}

/// IRLS for lp minimization with an optional known-support prior. Indices
/// in `support_prior` are unpenalized (zero weight). The known columns must
/// be linearly independent.
pub fn irls_lp(
    problem: &SmvProblem<'_>,
    p: f64,
    support_prior: Option<&[usize]>,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    let m = problem.signal_len();
    let support = support_prior.unwrap_or(&[]);
    if let Some(&bad) = support.iter().find(|&&i| i >= m) {
        return Err(Error::Range(format!("support index {bad} outside 0..{m}")));
    }
    let y = DMatrix::from_column_slice(problem.y.len(), 1, problem.y.as_slice());
    reweighted(problem.a, &y, Grouping::Entries { support }, p, config)
}

/// Block IRLS: one weight per block from the block's summed squared
/// magnitude. No support prior.
pub fn birls(
    problem: &SmvProblem<'_>,
    p: f64,
    partition: &BlockPartition,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    partition.check_len(problem.signal_len())?;
    let y = DMatrix::from_column_slice(problem.y.len(), 1, problem.y.as_slice());
    reweighted(problem.a, &y, Grouping::Blocks(partition), p, config)
}

/// M-FOCUSS: joint reweighting of all columns by row energy.
pub fn mfocuss(problem: &MmvProblem<'_>, p: f64, config: &SolverConfig) -> Result<RecoveryResult> {
    reweighted(problem.a, &problem.y, Grouping::Rows, p, config)
}

fn reweighted(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    grouping: Grouping<'_>,
    p: f64,
    config: &SolverConfig,
) -> Result<RecoveryResult> {
    check_p(p)?;
    config.validate()?;
    let start = Instant::now();
    let (n, m) = a.shape();
    let l = y.ncols();
    if y.nrows() != n {
        return Err(Error::Dimension(format!(
            "measurements have {} rows but A has {n}",
            y.nrows()
        )));
    }

    let solver = match &grouping {
        Grouping::Entries { support } if !support.is_empty() => {
            MinNorm::Split(Box::new(FreeSplit::new(a, support)?))
        }
        _ => MinNorm::Plain(a.transpose()),
    };
    let mut q = vec![1.0; m];
    let mut x = solver.solve(a, y, &q)?;
    let scale = energies(&x, &grouping).into_iter().fold(0.0, f64::max);
    if scale == 0.0 {
        let mut out = RecoveryResult::zeros(m, l);
        out.iterations = 1;
        out.runtime_seconds = start.elapsed().as_secs_f64();
        return Ok(out);
    }

    let exponent = 1.0 - p / 2.0;
    let mut eps = 1.0;
    let mut iterations = 1;
    let mut converged = false;
    let mut trace = Vec::new();

    while iterations < config.max_iters {
        iterations += 1;
        let eps_abs = eps * scale;
        let energy = energies(&x, &grouping);
        inverse_weights(&energy, eps_abs, exponent, &grouping, &mut q);
        let next = solver.solve(a, y, &q)?;
        let step = (&next - &x).norm();
        x = next;
        if config.trace {
            trace.push(IterationRecord {
                group: 0,
                hyper: q.iter().map(|v| 1.0 / v).collect(),
                active: vec![true; m],
                iterate: x.clone(),
                objective: None,
            });
        }
        if step < eps_abs.sqrt() / 100.0 {
            eps /= 10.0;
            if eps < config.eps_floor {
                converged = true;
                break;
            }
        }
    }

    Ok(RecoveryResult {
        estimate: x,
        iterations,
        converged,
        runtime_seconds: start.elapsed().as_secs_f64(),
        active_blocks: None,
        all_pruned: false,
        exact: None,
        trace,
    })
}

/// Squared magnitude per weight unit, broadcast back to entries.
fn energies(x: &DMatrix<f64>, grouping: &Grouping<'_>) -> Vec<f64> {
    let m = x.nrows();
    match grouping {
        Grouping::Entries { .. } => (0..m).map(|i| x[(i, 0)].powi(2)).collect(),
        Grouping::Rows => (0..m).map(|i| x.row(i).norm_squared()).collect(),
        Grouping::Blocks(part) => {
            let mut e = vec![0.0; m];
            for b in 0..part.num_blocks() {
                let r = part.range(b);
                let s: f64 = r.clone().map(|i| x[(i, 0)].powi(2)).sum();
                e[r].fill(s);
            }
            e
        }
    }
}

/// `q = w⁻¹ = (e + ε)^{1 - p/2}`; known-support entries have zero weight,
/// recorded as infinite `q` (the split solver never reads them).
fn inverse_weights(
    energy: &[f64],
    eps: f64,
    exponent: f64,
    grouping: &Grouping<'_>,
    q: &mut [f64],
) {
    for (qi, e) in q.iter_mut().zip(energy) {
        *qi = (e + eps).powf(exponent);
    }
    if let Grouping::Entries { support } = grouping {
        for &i in support.iter() {
            q[i] = f64::INFINITY;
        }
    }
}

enum MinNorm {
    /// Holds `Aᵀ`.
    Plain(DMatrix<f64>),
    Split(Box<FreeSplit>),
}

impl MinNorm {
    fn solve(&self, a: &DMatrix<f64>, y: &DMatrix<f64>, q: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            MinNorm::Plain(at) => weighted_min_norm(a, at, y, q),
            MinNorm::Split(split) => split.solve(y, q),
        }
    }
}

/// Precomputed factorization for a known support `S`: `A_S = U R` and an
/// orthonormal basis `V` of the complement of `span(A_S)` (both stored
/// transposed).
struct FreeSplit {
    support: Vec<usize>,
    rest: Vec<usize>,
    ut: DMatrix<f64>,
    r: DMatrix<f64>,
    /// `Vᵀ A_rest` and its transpose.
    projected: DMatrix<f64>,
    projected_t: DMatrix<f64>,
    a_rest: DMatrix<f64>,
    vt: DMatrix<f64>,
}

impl FreeSplit {
    fn new(a: &DMatrix<f64>, support: &[usize]) -> Result<Self> {
        let (n, m) = a.shape();
        let mut support = support.to_vec();
        support.sort_unstable();
        support.dedup();
        let k = support.len();
        if k > n {
            return Err(Error::conditioning(
                None,
                format!("{k} known-support columns cannot be independent with {n} measurements"),
            ));
        }
        let mut known = vec![false; m];
        for &i in &support {
            known[i] = true;
        }
        let rest: Vec<usize> = (0..m).filter(|&i| !known[i]).collect();
        let a_s = select_columns(a, &support);
        let qr = a_s.clone().qr();
        let (u, r) = (qr.q(), qr.r());
        let top = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        if (0..k).any(|i| r[(i, i)].abs() <= top * 1e-12 * n as f64) {
            return Err(Error::conditioning(
                None,
                "known-support columns are linearly dependent",
            ));
        }
        // Completing U with the identity yields the complement in the trailing columns.
        let mut stacked = DMatrix::zeros(n, k + n);
        stacked.columns_mut(0, k).copy_from(&u);
        stacked.columns_mut(k, n).fill_with_identity();
        let full = stacked.qr().q();
        let v = full.columns(k, n - k).into_owned();
        let a_rest = select_columns(a, &rest);
        let projected = v.transpose() * &a_rest;
        Ok(Self {
            support,
            rest,
            ut: u.transpose(),
            r,
            projected_t: projected.transpose(),
            projected,
            a_rest,
            vt: v.transpose(),
        })
    }

    fn solve(&self, y: &DMatrix<f64>, q: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.support.len() + self.rest.len();
        let mut x = DMatrix::zeros(m, y.ncols());
        let x_rest = if self.vt.nrows() == 0 {
            DMatrix::zeros(self.rest.len(), y.ncols())
        } else {
            let q_rest: Vec<f64> = self.rest.iter().map(|&i| q[i]).collect();
            weighted_min_norm(&self.projected, &self.projected_t, &(&self.vt * y), &q_rest)?
        };
        let left = y - &self.a_rest * &x_rest;
        let x_s = self
            .r
            .solve_upper_triangular(&(&self.ut * left))
            .ok_or_else(|| Error::conditioning(None, "triangular solve failed"))?;
        for (k, &i) in self.rest.iter().enumerate() {
            x.row_mut(i).copy_from(&x_rest.row(k));
        }
        for (k, &i) in self.support.iter().enumerate() {
            x.row_mut(i).copy_from(&x_s.row(k));
        }
        Ok(x)
    }
}

/// `Q Aᵀ (A Q Aᵀ)⁻¹ Y` for diagonal `Q`, given `at = Aᵀ`.
fn weighted_min_norm(
    a: &DMatrix<f64>,
    at: &DMatrix<f64>,
    y: &DMatrix<f64>,
    q: &[f64],
) -> Result<DMatrix<f64>> {
    let mut qat = at.clone();
    for (i, &qi) in q.iter().enumerate() {
        qat.row_mut(i).scale_mut(qi);
    }
    let mut gram = a * &qat;
    gram = (&gram + gram.transpose()) * 0.5;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::conditioning(None, "weighted Gram matrix A W⁻¹ Aᵀ is singular"))?;
    Ok(qat * chol.solve(y))
}
