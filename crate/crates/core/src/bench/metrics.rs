use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::BModeImage;

/// Peak signal-to-noise ratio, or an exact match when the images agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    Exact,
}

impl Psnr {
    pub fn is_exact(&self) -> bool {
        matches!(self, Psnr::Exact)
    }

    /// Decibels, with an exact match mapped to positive infinity.
    pub fn as_f64(&self) -> f64 {
        match self {
            Psnr::Db(v) => *v,
            Psnr::Exact => f64::INFINITY,
        }
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v:.4}"),
            Psnr::Exact => f.write_str("inf"),
        }
    }
}

/// Relative MSE at or below which two images count as identical: an RMS
/// difference of 1e-15 of the peak, i.e. double-precision roundoff. A
/// perfect recovery passes through a least-squares solve and two
/// transforms, so its image is rarely bit-identical to the reference.
pub const EXACT_MSE: f64 = 1e-30;

/// `20 log10(MAX) - 10 log10(MSE)` with `MAX = 1` for display images.
pub fn psnr(estimate: &BModeImage, reference: &BModeImage) -> Result<Psnr> {
    psnr_with_peak(estimate.pixels(), reference.pixels(), 1.0)
}

pub fn psnr_with_peak(
    estimate: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    peak: f64,
) -> Result<Psnr> {
    if estimate.shape() != reference.shape() {
        return Err(Error::Dimension(format!(
            "images differ in shape: {:?} vs {:?}",
            estimate.shape(),
            reference.shape()
        )));
    }
    if estimate.is_empty() {
        return Err(Error::Dimension("empty images".into()));
    }
    let mse = mse(estimate, reference);
    if mse <= EXACT_MSE * peak * peak {
        return Ok(Psnr::Exact);
    }
    Ok(Psnr::Db(20.0 * peak.log10() - 10.0 * mse.log10()))
}

pub fn mse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm_squared() / a.len() as f64
}
