//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles are deliberately naive (dense matrices, explicit sums, full
//! enumeration) and share no code with the library paths they check.

#![allow(dead_code)]

use std::f64::consts::PI;

use csrecon::bench::gen_block_sparse;
use csrecon::rng::SeededRng;
use csrecon::sensing::make_gaussian_operator;
use nalgebra::{DMatrix, DVector};

/// Seeded `n x m` Gaussian operator as a plain matrix.
pub fn gaussian(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    make_gaussian_operator(n, m, seed as u32)
        .unwrap()
        .matrix()
        .clone()
}

/// `k`-sparse vector of length `m` with standard normal nonzeros.
pub fn sparse_vector(m: usize, k: usize, seed: u64) -> DVector<f64> {
    let mut rng = SeededRng::new(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5EED);
    let support = rng.choose(m, k);
    let mut x = DVector::zeros(m);
    for i in support {
        x[i] = rng.gaussian();
    }
    x
}

/// Noiseless instance `(A, x, y = A x)` with a `k`-sparse `x`.
pub fn sparse_instance(
    m: usize,
    n: usize,
    k: usize,
    seed: u64,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let a = gaussian(n, m, seed);
    let x = sparse_vector(m, k, seed);
    let y = &a * &x;
    (a, x, y)
}

/// Noiseless block-sparse instance with AR(1) blocks (`r = 0.5`).
pub fn block_instance(
    m: usize,
    n: usize,
    d: usize,
    active: usize,
    seed: u64,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let a = gaussian(n, m, seed);
    let x = gen_block_sparse(m, d, active, 0.5, seed + 1000).unwrap();
    let y = &a * &x;
    (a, x, y)
}

pub fn rel_err(est: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (est - truth).norm() / truth.norm()
}

/// Orthonormal DCT-II matrix built entry by entry.
pub fn dct_matrix(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |k, n| {
        let s = if k == 0 {
            (1.0 / m as f64).sqrt()
        } else {
            (2.0 / m as f64).sqrt()
        };
        s * (PI * (n as f64 + 0.5) * k as f64 / m as f64).cos()
    })
}

/// Envelope by an explicit O(M²) DFT: double positive frequencies, zero
/// negative ones, keep DC (and Nyquist for even M), inverse DFT, modulus.
pub fn naive_envelope(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let spec: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let ang = -2.0 * PI * (k * t) as f64 / m as f64;
                (re + v * ang.cos(), im + v * ang.sin())
            })
        })
        .collect();
    let h = |k: usize| -> f64 {
        if k == 0 || (m.is_multiple_of(2) && k == m / 2) {
            1.0
        } else if k < m.div_ceil(2) {
            2.0
        } else {
            0.0
        }
    };
    (0..m)
        .map(|t| {
            let (mut re, mut im) = (0.0, 0.0);
            for (k, &(sr, si)) in spec.iter().enumerate() {
                let ang = 2.0 * PI * (k * t) as f64 / m as f64;
                let (c, s) = (ang.cos(), ang.sin());
                re += h(k) * (sr * c - si * s);
                im += h(k) * (sr * s + si * c);
            }
            (re * re + im * im).sqrt() / m as f64
        })
        .collect()
}

/// `r^{|i-j|}`.
pub fn toeplitz(d: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| r.powi((i as i32 - j as i32).abs()))
}

/// Posterior mean and full covariance with the prior covariance formed
/// explicitly and the M x M posterior precision inverted directly.
pub fn dense_posterior(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    gamma: &[f64],
    b: &DMatrix<f64>,
    noise_var: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let d = b.nrows();
    let m = a.ncols();
    let mut prior = DMatrix::zeros(m, m);
    for (i, &g) in gamma.iter().enumerate() {
        prior.view_mut((i * d, i * d), (d, d)).copy_from(&(b * g));
    }
    // Σx = Σ0 - Σ0 Aᵀ (λI + A Σ0 Aᵀ)⁻¹ A Σ0, written out with a general inverse.
    let sy = DMatrix::identity(a.nrows(), a.nrows()) * noise_var + a * &prior * a.transpose();
    let sy_inv = sy.try_inverse().unwrap();
    let gain = &prior * a.transpose() * &sy_inv;
    let mean = &gain * y;
    let cov = &prior - &gain * a * &prior;
    (mean, cov)
}

/// Least squares restricted to `cols`, embedded in a length-`m` vector, and
/// its residual norm.
pub fn restricted_ls(a: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> (DVector<f64>, f64) {
    let m = a.ncols();
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]);
    let coef = (sub.transpose() * &sub).try_inverse().unwrap() * sub.transpose() * y;
    let mut x = DVector::zeros(m);
    for (j, &c) in cols.iter().enumerate() {
        x[c] = coef[j];
    }
    let res = (y - &sub * coef).norm();
    (x, res)
}

/// Every `k`-subset of `0..n`, lexicographic.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best `k`-term approximation by trying every support.
pub fn best_k_term(c: &DVector<f64>, k: usize) -> DVector<f64> {
    let m = c.len();
    let k = k.min(m);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for s in subsets(m, k) {
        let mut v = DVector::zeros(m);
        for &i in &s {
            v[i] = c[i];
        }
        let err = (c - &v).norm_squared();
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, v));
        }
    }
    best.unwrap().1
}

/// Exhaustive l0 solution: smallest support (up to `k_max`) whose least
/// squares fit is exact to `1e-8 ‖y‖`.
pub fn l0_oracle(a: &DMatrix<f64>, y: &DVector<f64>, k_max: usize) -> Option<DVector<f64>> {
    if y.norm() == 0.0 {
        return Some(DVector::zeros(a.ncols()));
    }
    for k in 1..=k_max {
        for s in subsets(a.ncols(), k) {
            let (x, res) = restricted_ls(a, y, &s);
            if res <= 1e-8 * y.norm() {
                return Some(x);
            }
        }
    }
    None
}

/// Sample lag-1 correlation of consecutive pairs pooled over sequences.
pub fn lag1_corr(seqs: &[Vec<f64>]) -> f64 {
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for s in seqs {
        for w in s.windows(2) {
            sxy += w[0] * w[1];
            sxx += w[0] * w[0];
        }
    }
    sxy / sxx
}
