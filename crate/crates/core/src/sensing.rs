//! Seeded Gaussian sensing operators and simulation of line-wise
//! compressive acquisition in the DCT domain.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::transforms::{to_bmode, DctPlan, EnvelopeParams};
use crate::types::{BModeImage, RfFrame, SensingOperator, SensingScheme};

/// What the sensed coefficients are the DCT of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalDomain {
    /// Raw RF lines; display requires envelope detection and log compression.
    DctOfRf,
    /// Already envelope-detected and log-compressed display data.
    DctOfDisplay,
}

impl SignalDomain {
    pub fn id(self) -> u32 {
        match self {
            SignalDomain::DctOfRf => 0,
            SignalDomain::DctOfDisplay => 1,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(SignalDomain::DctOfRf),
            1 => Ok(SignalDomain::DctOfDisplay),
            other => Err(Error::Format(format!("unknown signal domain id {other}"))),
        }
    }
}

/// Sensed data `Y = A * DCT(frame)` together with what is needed to
/// regenerate `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    pub y: DMatrix<f64>,
    pub signal_len: usize,
    pub seed: u32,
    pub scheme: SensingScheme,
    pub domain: SignalDomain,
}

impl Measurements {
    pub fn num_measurements(&self) -> usize {
        self.y.nrows()
    }

    pub fn lines(&self) -> usize {
        self.y.ncols()
    }

    /// Rebuilds the operator that produced these measurements.
    pub fn operator(&self) -> Result<SensingOperator> {
        match self.scheme {
            SensingScheme::GaussianInvN => {
                make_gaussian_operator(self.num_measurements(), self.signal_len, self.seed)
            }
            SensingScheme::Explicit => Err(Error::Input(
                "measurements were taken with an explicit operator that cannot be regenerated"
                    .into(),
            )),
        }
    }
}

/// `N x M` matrix of independent N(0, 1/N) entries, filled column by column
/// from [`SeededRng`] keyed with `seed`.
pub fn make_gaussian_operator(n: usize, m: usize, seed: u32) -> Result<SensingOperator> {
    if n == 0 || n > m {
        return Err(Error::Dimension(format!(
            "sensing operator needs 1 <= N <= M, got N={n}, M={m}"
        )));
    }
    let mut rng = SeededRng::new(seed as u64);
    let scale = 1.0 / (n as f64).sqrt();
    // Column-major storage, so this fills column 0 first.
    let mut matrix = DMatrix::zeros(n, m);
    for v in matrix.as_mut_slice() {
        *v = rng.gaussian() * scale;
    }
    Ok(SensingOperator::from_parts(
        matrix,
        seed,
        SensingScheme::GaussianInvN,
    ))
}

/// Senses every line of `frame`: column `j` of the result is
/// `A * dct(frame[:, j])`.
pub fn sense_frame(
    frame: &RfFrame,
    op: &SensingOperator,
    domain: SignalDomain,
) -> Result<Measurements> {
    if op.signal_len() != frame.depth() {
        return Err(Error::Dimension(format!(
            "operator expects lines of length {}, frame has {}",
            op.signal_len(),
            frame.depth()
        )));
    }
    let plan = DctPlan::new(frame.depth())?;
    let coeffs = plan.forward_columns(frame.samples())?;
    Ok(Measurements {
        y: op.matrix() * coeffs,
        signal_len: frame.depth(),
        seed: op.seed(),
        scheme: op.scheme(),
        domain,
    })
}

/// Adds i.i.d. N(0, sigma^2) noise to every measurement.
pub fn add_measurement_noise(meas: &mut Measurements, sigma: f64, seed: u64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Range(format!(
            "noise level must be >= 0, got {sigma}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    for v in meas.y.as_mut_slice() {
        *v += sigma * rng.gaussian();
    }
    Ok(())
}

/// Per-column inverse DCT of recovered coefficients.
pub fn inverse_dct_frame(coeffs: &DMatrix<f64>) -> Result<RfFrame> {
    let plan = DctPlan::new(coeffs.nrows())?;
    RfFrame::new(plan.inverse_columns(coeffs)?)
}

/// Display image from recovered coefficients: B-mode formation for RF data,
/// a plain rescale for data that was already display-ready.
pub fn reconstruct_frame(
    coeffs: &DMatrix<f64>,
    domain: SignalDomain,
    params: &EnvelopeParams,
) -> Result<BModeImage> {
    let frame = inverse_dct_frame(coeffs)?;
    display_image(&frame, domain, params)
}

/// The image a frame is compared in, given its domain.
pub fn display_image(
    frame: &RfFrame,
    domain: SignalDomain,
    params: &EnvelopeParams,
) -> Result<BModeImage> {
    match domain {
        SignalDomain::DctOfRf => to_bmode(frame, params),
        SignalDomain::DctOfDisplay => Ok(BModeImage::rescaled(frame.samples())),
    }
}
