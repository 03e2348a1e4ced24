//! Seeded synthetic signals: block-sparse vectors, row-sparse correlated
//! matrices, and an RF phantom standing in for ultrasound frames.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::types::RfFrame;

/// Zero-mean Gaussian block-sparse vector: `n_active` blocks of length `d`
/// chosen uniformly, each an AR(1) sequence with covariance `r^{|i-j|}`.
pub fn gen_block_sparse(
    m: usize,
    d: usize,
    n_active: usize,
    intra_r: f64,
    seed: u64,
) -> Result<DVector<f64>> {
    if d == 0 || !m.is_multiple_of(d) {
        return Err(Error::Range(format!(
            "block length {d} does not divide {m}"
        )));
    }
    if n_active > m / d {
        return Err(Error::Range(format!(
            "{n_active} active blocks requested but only {} exist",
            m / d
        )));
    }
    check_corr(intra_r)?;
    let mut rng = SeededRng::new(seed);
    let blocks = rng.choose(m / d, n_active);
    let mut x = DVector::zeros(m);
    for b in blocks {
        let seq = ar1_sequence(&mut rng, d, intra_r);
        x.rows_mut(b * d, d).copy_from_slice(&seq);
    }
    Ok(x)
}

/// Row-sparse `M x L` matrix: `row_support_size` rows chosen uniformly, each
/// an AR(1) sequence across columns with coefficient `inter_r`.
pub fn gen_correlated_mmv(
    m: usize,
    l: usize,
    row_support_size: usize,
    inter_r: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if row_support_size > m {
        return Err(Error::Range(format!(
            "support of {row_support_size} rows exceeds M={m}"
        )));
    }
    if l == 0 {
        return Err(Error::Range("need at least one column".into()));
    }
    check_corr(inter_r)?;
    let mut rng = SeededRng::new(seed);
    let rows = rng.choose(m, row_support_size);
    let mut x = DMatrix::zeros(m, l);
    for i in rows {
        let seq = ar1_sequence(&mut rng, l, inter_r);
        for (j, v) in seq.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

/// Block-sparse `M x L` matrix whose active blocks are shared by all
/// columns: each block has AR(1) correlation `intra_r` along depth and
/// `inter_r` across columns.
pub fn gen_block_sparse_mmv(
    m: usize,
    d: usize,
    l: usize,
    n_active: usize,
    intra_r: f64,
    inter_r: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if d == 0 || !m.is_multiple_of(d) || n_active > m / d || l == 0 {
        return Err(Error::Range(format!(
            "invalid block-sparse MMV shape: M={m}, d={d}, L={l}, active={n_active}"
        )));
    }
    check_corr(intra_r)?;
    check_corr(inter_r)?;
    let mut rng = SeededRng::new(seed);
    let blocks = rng.choose(m / d, n_active);
    let mut x = DMatrix::zeros(m, l);
    let s_in = (1.0 - intra_r * intra_r).sqrt();
    let s_across = (1.0 - inter_r * inter_r).sqrt();
    for b in blocks {
        // Separable AR(1) field: filter white noise along depth, then across columns.
        let mut field = DMatrix::zeros(d, l);
        for v in field.iter_mut() {
            *v = rng.gaussian();
        }
        for j in 0..l {
            for i in 1..d {
                field[(i, j)] = intra_r * field[(i - 1, j)] + s_in * field[(i, j)];
            }
        }
        for j in 1..l {
            for i in 0..d {
                field[(i, j)] = inter_r * field[(i, j - 1)] + s_across * field[(i, j)];
            }
        }
        x.rows_mut(b * d, d).copy_from(&field);
    }
    Ok(x)
}

fn check_corr(r: f64) -> Result<()> {
    if !(r.abs() < 1.0) {
        return Err(Error::Range(format!(
            "correlation must satisfy |r| < 1, got {r}"
        )));
    }
    Ok(())
}

fn ar1_sequence(rng: &mut SeededRng, len: usize, r: f64) -> Vec<f64> {
    let innov = (1.0 - r * r).sqrt();
    let mut out = Vec::with_capacity(len);
    let mut prev = rng.gaussian();
    out.push(prev);
    for _ in 1..len {
        prev = r * prev + innov * rng.gaussian();
        out.push(prev);
    }
    out
}

/// Parameters of the synthetic RF phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    pub depth: usize,
    pub lines: usize,
    pub scatterers: usize,
    /// Pulse length in carrier periods (the Gaussian window spans about
    /// `±2σ` of this many periods).
    pub pulse_cycles: f64,
    /// Carrier frequency in cycles per sample, in `(0, 0.5)`.
    pub center_freq: f64,
    pub seed: u64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            depth: 512,
            lines: 64,
            scatterers: 40,
            pulse_cycles: 3.0,
            center_freq: 0.15,
            seed: 0,
        }
    }
}

/// Gaussian-windowed cosine pulse, centered at index `(len - 1) / 2`.
pub fn pulse_template(pulse_cycles: f64, center_freq: f64) -> Result<Vec<f64>> {
    if !(pulse_cycles > 0.0) || !(center_freq > 0.0 && center_freq < 0.5) {
        return Err(Error::Range(format!(
            "pulse needs cycles > 0 and centre frequency in (0, 0.5), got {pulse_cycles}, {center_freq}"
        )));
    }
    let sigma = pulse_cycles / (4.0 * center_freq);
    let half = (4.0 * sigma).ceil() as isize;
    Ok((-half..=half)
        .map(|t| {
            let t = t as f64;
            (-(t * t) / (2.0 * sigma * sigma)).exp()
                * (2.0 * std::f64::consts::PI * center_freq * t).cos()
        })
        .collect())
}

/// Synthetic RF frame. Each scatterer has a depth that drifts slowly and
/// linearly across lines and an amplitude that follows an AR(1) sequence
/// (coefficient 0.9) across lines, so neighbouring lines are correlated.
/// Each line is its sparse reflectivity convolved with [`pulse_template`].
/// Depths are rounded to whole samples, so an isolated scatterer produces an
/// exact scaled copy of the template.
pub fn gen_phantom_rf(params: &PhantomParams) -> Result<RfFrame> {
    let PhantomParams {
        depth: m,
        lines: l,
        scatterers,
        pulse_cycles,
        center_freq,
        seed,
    } = *params;
    if m == 0 || l == 0 {
        return Err(Error::Range(
            "phantom needs positive depth and line count".into(),
        ));
    }
    let pulse = pulse_template(pulse_cycles, center_freq)?;
    let half = (pulse.len() / 2) as isize;
    let mut rng = SeededRng::new(seed);
    let mut frame = DMatrix::zeros(m, l);
    for _ in 0..scatterers {
        let depth0 = rng.uniform() * m as f64;
        let slope = rng.uniform() - 0.5;
        let amps = ar1_sequence(&mut rng, l, 0.9);
        for (j, amp) in amps.into_iter().enumerate() {
            let centre = (depth0 + slope * j as f64).round() as isize;
            for (k, p) in pulse.iter().enumerate() {
                let i = centre + k as isize - half;
                if (0..m as isize).contains(&i) {
                    frame[(i as usize, j)] += amp * p;
                }
            }
        }
    }
    Ok(RfFrame::new(frame)?.with_meta(format!(
        "phantom depth={m} lines={l} scatterers={scatterers} cycles={pulse_cycles} f0={center_freq} seed={seed}"
    )))
}
