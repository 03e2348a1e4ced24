//! Per-line transforms: orthonormal DCT-II and its inverse, analytic-signal
//! envelope detection, and B-mode image formation.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::types::{BModeImage, RfFrame};

/// Reusable orthonormal DCT-II / DCT-III pair of a fixed length, computed
/// with one complex FFT of the same length (Makhoul's reordering).
pub struct DctPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // e^{-i pi k / 2M}
    twiddles: Vec<Complex64>,
}

impl DctPlan {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Input("DCT length must be at least 1".into()));
        }
        let mut planner = FftPlanner::new();
        let twiddles = (0..len)
            .map(|k| {
                Complex64::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2 * len) as f64)
            })
            .collect();
        Ok(Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            twiddles,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let n = self.len;
        let mut v = vec![Complex64::default(); n];
        for i in 0..n.div_ceil(2) {
            v[i] = Complex64::new(x[2 * i], 0.0);
        }
        for i in 0..n / 2 {
            v[n - 1 - i] = Complex64::new(x[2 * i + 1], 0.0);
        }
        self.forward.process(&mut v);
        let s0 = (1.0 / n as f64).sqrt();
        let sk = (2.0 / n as f64).sqrt();
        Ok(v.iter()
            .zip(&self.twiddles)
            .enumerate()
            .map(|(k, (vk, w))| (vk * w).re * if k == 0 { s0 } else { sk })
            .collect())
    }

    pub fn inverse(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check(c)?;
        let n = self.len;
        let s0 = (n as f64).sqrt();
        let sk = (n as f64 / 2.0).sqrt();
        let raw = |k: usize| {
            if k == 0 {
                c[0] * s0
            } else if k < n {
                c[k] * sk
            } else {
                0.0
            }
        };
        let mut v: Vec<Complex64> = (0..n)
            .map(|k| self.twiddles[k].conj() * Complex64::new(raw(k), -raw(n - k)))
            .collect();
        self.inverse.process(&mut v);
        let scale = 1.0 / n as f64;
        let mut x = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            x[2 * i] = v[i].re * scale;
        }
        for i in 0..n / 2 {
            x[2 * i + 1] = v[n - 1 - i].re * scale;
        }
        Ok(x)
    }

    /// Column-wise forward transform of an `len x L` matrix.
    pub fn forward_columns(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.map_columns(m, |col| self.forward(col))
    }

    /// Column-wise inverse transform of an `len x L` matrix.
    pub fn inverse_columns(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.map_columns(m, |col| self.inverse(col))
    }

    fn map_columns(
        &self,
        m: &DMatrix<f64>,
        f: impl Fn(&[f64]) -> Result<Vec<f64>>,
    ) -> Result<DMatrix<f64>> {
        if m.nrows() != self.len {
            return Err(Error::Dimension(format!(
                "matrix has {} rows, transform length is {}",
                m.nrows(),
                self.len
            )));
        }
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for (j, col) in m.column_iter().enumerate() {
            let t = f(col.as_slice())?;
            out.column_mut(j).copy_from_slice(&t);
        }
        Ok(out)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::Dimension(format!(
                "input has length {}, transform length is {}",
                x.len(),
                self.len
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite value in transform input".into()));
        }
        Ok(())
    }
}

/// Orthonormal DCT-II of one line.
pub fn dct_line(x: &DVector<f64>) -> Result<DVector<f64>> {
    let plan = DctPlan::new(x.len())?;
    plan.forward(x.as_slice()).map(DVector::from_vec)
}

/// Inverse of [`dct_line`] (orthonormal DCT-III).
pub fn idct_line(c: &DVector<f64>) -> Result<DVector<f64>> {
    let plan = DctPlan::new(c.len())?;
    plan.inverse(c.as_slice()).map(DVector::from_vec)
}

/// Reusable analytic-signal envelope detector of a fixed length.
pub struct EnvelopeDetector {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    gains: Vec<f64>,
}

impl EnvelopeDetector {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Input(format!(
                "envelope detection needs at least 2 samples, got {len}"
            )));
        }
        let mut planner = FftPlanner::new();
        // Keep DC (and Nyquist for even lengths), double positive
        // frequencies, drop negative ones.
        let mut gains = vec![0.0; len];
        gains[0] = 1.0;
        let half = len / 2;
        if len.is_multiple_of(2) {
            gains[1..half].fill(2.0);
            gains[half] = 1.0;
        } else {
            gains[1..=half].fill(2.0);
        }
        Ok(Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            gains,
        })
    }

    pub fn envelope(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.gains.len();
        if x.len() != n {
            return Err(Error::Dimension(format!(
                "line has length {}, detector length is {n}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite value in envelope input".into()));
        }
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for (b, g) in buf.iter_mut().zip(&self.gains) {
            *b *= g;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        Ok(buf.iter().map(|z| z.norm() * scale).collect())
    }
}

/// Magnitude of the analytic signal of `x`.
pub fn hilbert_envelope(x: &DVector<f64>) -> Result<DVector<f64>> {
    let det = EnvelopeDetector::new(x.len())?;
    det.envelope(x.as_slice()).map(DVector::from_vec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    /// Log floor as a fraction of the image's largest envelope value.
    pub relative_floor: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            relative_floor: 1e-12,
        }
    }
}

/// Envelope detection, 20*log10 compression and a global min-max rescale.
pub fn to_bmode(frame: &RfFrame, params: &EnvelopeParams) -> Result<BModeImage> {
    if !(params.relative_floor > 0.0) {
        return Err(Error::Range("log floor must be positive".into()));
    }
    let samples = frame.samples();
    let det = EnvelopeDetector::new(frame.depth())?;
    let mut env = DMatrix::zeros(samples.nrows(), samples.ncols());
    for (j, col) in samples.column_iter().enumerate() {
        let e = det.envelope(col.as_slice())?;
        env.column_mut(j).copy_from_slice(&e);
    }
    let peak = env.max();
    // Roundoff makes a flat envelope wobble at ~1e-16 relative, which the
    // rescale would blow up to full contrast; treat that as constant.
    if peak <= 0.0 || peak - env.min() <= 1e-9 * peak {
        return Ok(BModeImage::rescaled(&DMatrix::zeros(
            env.nrows(),
            env.ncols(),
        )));
    }
    let floor = params.relative_floor * peak;
    let log = env.map(|e| 20.0 * (e + floor).log10());
    Ok(BModeImage::rescaled(&log))
}
