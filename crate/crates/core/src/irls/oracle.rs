use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{full_rank_least_squares, select_columns};
use crate::types::{RecoveryResult, SmvProblem};

/// Largest signal length the exhaustive search accepts.
pub const L0_MAX_M: usize = 24;
/// Largest support size the exhaustive search accepts.
pub const L0_MAX_K: usize = 4;

/// Best k-term approximation: keeps the `k` largest-magnitude entries
/// (lowest index wins ties) and zeros the rest. `k` is clamped to the length.
pub fn ksparse_approx(c: &DVector<f64>, k: usize) -> DVector<f64> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].abs().total_cmp(&c[i].abs()).then(i.cmp(&j)));
    let mut out = DVector::zeros(c.len());
    for &i in order.iter().take(k.min(c.len())) {
        out[i] = c[i];
    }
    out
}

/// Exhaustive l0 search: tries supports of size `0..=k_max` in increasing
/// size (lexicographic within a size) and returns the first whose
/// restricted least-squares residual is at most `1e-8 ‖y‖`. Without such a
/// support, returns the smallest-residual candidate with `exact = false`.
pub fn l0_bruteforce(problem: &SmvProblem<'_>, k_max: usize) -> Result<RecoveryResult> {
    let start = Instant::now();
    let a = problem.a;
    let (n, m) = a.shape();
    if m > L0_MAX_M || k_max > L0_MAX_K {
        return Err(Error::Scale(format!(
            "exhaustive search limited to M <= {L0_MAX_M} and k <= {L0_MAX_K}, got M={m}, k={k_max}"
        )));
    }
    let y = &problem.y;
    let target = 1e-8 * y.norm();
    let mut best: (f64, Vec<usize>, DVector<f64>) = (y.norm(), Vec::new(), DVector::zeros(0));
    let mut tried = 0usize;

    let finish = |support: &[usize], coef: &DVector<f64>, exact: bool, tried: usize| {
        let mut x = DMatrix::zeros(m, 1);
        for (k, &j) in support.iter().enumerate() {
            x[(j, 0)] = coef[k];
        }
        RecoveryResult {
            estimate: x,
            iterations: tried,
            converged: exact,
            runtime_seconds: start.elapsed().as_secs_f64(),
            active_blocks: Some(support.to_vec()),
            all_pruned: false,
            exact: Some(exact),
            trace: Vec::new(),
        }
    };

    for size in 0..=k_max.min(m) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            tried += 1;
            if size <= n {
                let sub = select_columns(a, &combo);
                if let Ok(coef) = full_rank_least_squares(&sub, y) {
                    let res = (y - &sub * &coef).norm();
                    if res <= target {
                        return Ok(finish(&combo, &coef, true, tried));
                    }
                    if res < best.0 {
                        best = (res, combo.clone(), coef);
                    }
                }
            }
            if !next_combination(&mut combo, m) {
                break;
            }
        }
    }
    let (_, support, coef) = best;
    Ok(finish(&support, &coef, false, tried))
}

/// Advances `combo` to the next k-subset of `0..m` in lexicographic order.
fn next_combination(combo: &mut [usize], m: usize) -> bool {
    let k = combo.len();
    for i in (0..k).rev() {
        if combo[i] < m - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
