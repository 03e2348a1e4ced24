//! Domain types shared by every solver, plus the small amount of dimension
//! arithmetic the experiment protocol needs.
//!
//! Element order: a frame is an `M x L` matrix whose column `j` is scan line
//! `j` (M depth samples). All file formats honor this.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Raw RF data: one scan line per column.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame {
    samples: DMatrix<f64>,
    pub meta: Option<String>,
}

impl RfFrame {
    pub fn new(samples: DMatrix<f64>) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "frame must have at least one sample and one line, got {}x{}",
                samples.nrows(),
                samples.ncols()
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite sample at flat index {pos}"
            )));
        }
        Ok(Self {
            samples,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = Some(meta.into());
        self
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> DMatrix<f64> {
        self.samples
    }

    /// Samples per line (M).
    pub fn depth(&self) -> usize {
        self.samples.nrows()
    }

    /// Number of scan lines (L).
    pub fn lines(&self) -> usize {
        self.samples.ncols()
    }
}

/// Display image with every pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BModeImage {
    pixels: DMatrix<f64>,
}

impl BModeImage {
    /// Wraps pixels that are already in `[0, 1]`.
    pub fn new(pixels: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = pixels
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::Range(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    /// Min-max rescale to `[0, 1]`. A constant input maps to all zeros.
    pub fn rescaled(values: &DMatrix<f64>) -> Self {
        let lo = values.min();
        let hi = values.max();
        let span = hi - lo;
        let pixels = if span > 0.0 && span.is_finite() {
            values.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
        } else {
            DMatrix::zeros(values.nrows(), values.ncols())
        };
        Self { pixels }
    }

    pub fn pixels(&self) -> &DMatrix<f64> {
        &self.pixels
    }

    pub fn shape(&self) -> (usize, usize) {
        self.pixels.shape()
    }
}

/// How a sensing matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensingScheme {
    /// i.i.d. N(0, 1/N) entries from the versioned generator in
    /// [`crate::sensing`]; regenerable from `(N, M, seed)`.
    GaussianInvN,
    /// A caller-supplied matrix. Cannot be regenerated, so it is never
    /// written to a measurements file.
    Explicit,
}

impl SensingScheme {
    /// Identifier stored in measurement files. Bumped whenever the generator
    /// or its integer-to-float mapping changes.
    pub fn id(self) -> u32 {
        match self {
            SensingScheme::GaussianInvN => 1,
            SensingScheme::Explicit => 0,
        }
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            1 => Ok(SensingScheme::GaussianInvN),
            0 => Ok(SensingScheme::Explicit),
            other => Err(Error::Format(format!("unknown sensing scheme id {other}"))),
        }
    }
}

/// The measurement map `A` (N x M).
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOperator {
    matrix: DMatrix<f64>,
    seed: u32,
    scheme: SensingScheme,
}

impl SensingOperator {
    pub(crate) fn from_parts(matrix: DMatrix<f64>, seed: u32, scheme: SensingScheme) -> Self {
        Self {
            matrix,
            seed,
            scheme,
        }
    }

    /// Wraps an arbitrary matrix (identity sensing, orthonormal test
    /// operators, ...). Requires `1 <= N <= M` and finite entries.
    pub fn explicit(matrix: DMatrix<f64>) -> Result<Self> {
        let (n, m) = matrix.shape();
        if n == 0 || n > m {
            return Err(Error::Dimension(format!(
                "sensing operator needs 1 <= N <= M, got N={n}, M={m}"
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("sensing matrix has non-finite entries".into()));
        }
        Ok(Self::from_parts(matrix, 0, SensingScheme::Explicit))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn scheme(&self) -> SensingScheme {
        self.scheme
    }

    pub fn measurements(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn signal_len(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Equal-length partition of `0..M` into `num_blocks` contiguous blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockPartition {
    block_len: usize,
    num_blocks: usize,
}

impl BlockPartition {
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn signal_len(&self) -> usize {
        self.block_len * self.num_blocks
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        block * self.block_len..(block + 1) * self.block_len
    }

    pub fn block_of(&self, index: usize) -> usize {
        index / self.block_len
    }

    pub(crate) fn check_len(&self, m: usize) -> Result<()> {
        if self.signal_len() != m {
            return Err(Error::Dimension(format!(
                "partition covers {} indices ({} blocks of {}) but the signal has length {m}",
                self.signal_len(),
                self.num_blocks,
                self.block_len
            )));
        }
        Ok(())
    }
}

/// Builds the partition of `0..m` into blocks of length `d`.
pub fn make_block_partition(m: usize, d: usize) -> Result<BlockPartition> {
    if m == 0 || d == 0 || !m.is_multiple_of(d) {
        return Err(Error::Dimension(format!(
            "block length d={d} does not evenly divide signal length M={m}"
        )));
    }
    Ok(BlockPartition {
        block_len: d,
        num_blocks: m / d,
    })
}

/// Exact subsampling ratio `num/den` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SamplingRatio {
    num: u64,
    den: u64,
}

impl SamplingRatio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::Range(format!(
                "sampling ratio {num}/{den} is not in (0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for SamplingRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for SamplingRatio {
    type Err = Error;

    /// Accepts `a/b`, a decimal such as `0.5`, or a percentage such as `50%`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Range(format!("cannot parse sampling ratio {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            let a = a.trim().parse().map_err(|_| bad())?;
            let b = b.trim().parse().map_err(|_| bad())?;
            return SamplingRatio::new(a, b);
        }
        let (body, scale) = match s.strip_suffix('%') {
            Some(body) => (body.trim(), 100u64),
            None => (s, 1u64),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if frac_part.len() > 12 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let num: u64 = digits.parse().map_err(|_| bad())?;
        // Whole percentages next to a third ("33%", "67%") mean the third.
        if scale == 100 && frac_part.is_empty() {
            for a in 1..3 {
                if (3 * num).abs_diff(100 * a) < 2 {
                    return SamplingRatio::new(a, 3);
                }
            }
        }
        let den = 10u64.pow(frac_part.len() as u32) * scale;
        SamplingRatio::new(num, den)
    }
}

impl serde::Serialize for SamplingRatio {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SamplingRatio {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of measurements for an `M`-sample line at the given ratio:
/// round-half-up of `ratio * M`, clamped to `[1, M]`.
pub fn ratio_to_measurements(m: usize, ratio: SamplingRatio) -> usize {
    let m64 = m as u128;
    let n = (2 * ratio.num as u128 * m64 + ratio.den as u128) / (2 * ratio.den as u128);
    (n as usize).clamp(1, m.max(1))
}

/// Number of candidate supports of size at most `k` among `m` indices,
/// `sum_{j=0..k} C(m, j)`.
pub fn search_space_size(m: u64, k: u64) -> Result<u64> {
    if k > m {
        return Err(Error::Range(format!("support size k={k} exceeds M={m}")));
    }
    let overflow = || Error::Overflow(format!("search space size for M={m}, k={k} exceeds u64"));
    let mut total: u64 = 1;
    let mut binom: u128 = 1;
    for j in 0..k {
        // C(m, j+1) = C(m, j) * (m - j) / (j + 1), exact at every step.
        binom = binom.checked_mul((m - j) as u128).ok_or_else(overflow)? / (j + 1) as u128;
        let b = u64::try_from(binom).map_err(|_| overflow())?;
        total = total.checked_add(b).ok_or_else(overflow)?;
    }
    Ok(total)
}

/// Single measurement vector problem `y = A x + v`.
#[derive(Debug, Clone)]
pub struct SmvProblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub y: DVector<f64>,
    pub noise_var: f64,
}

impl<'a> SmvProblem<'a> {
    pub fn new(a: &'a DMatrix<f64>, y: DVector<f64>, noise_var: f64) -> Result<Self> {
        if y.len() != a.nrows() {
            return Err(Error::Dimension(format!(
                "measurement vector has length {} but A has {} rows",
                y.len(),
                a.nrows()
            )));
        }
        check_noise_var(noise_var)?;
        Ok(Self { a, y, noise_var })
    }

    pub fn signal_len(&self) -> usize {
        self.a.ncols()
    }
}

/// Multiple measurement vector problem `Y = A X + V`.
#[derive(Debug, Clone)]
pub struct MmvProblem<'a> {
    pub a: &'a DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub noise_var: f64,
}

impl<'a> MmvProblem<'a> {
    pub fn new(a: &'a DMatrix<f64>, y: DMatrix<f64>, noise_var: f64) -> Result<Self> {
        if y.nrows() != a.nrows() {
            return Err(Error::Dimension(format!(
                "measurement matrix has {} rows but A has {} rows",
                y.nrows(),
                a.nrows()
            )));
        }
        check_noise_var(noise_var)?;
        Ok(Self { a, y, noise_var })
    }

    pub fn signal_len(&self) -> usize {
        self.a.ncols()
    }

    pub fn columns(&self) -> usize {
        self.y.ncols()
    }

    /// The `j`-th column as a single-vector problem.
    pub fn column(&self, j: usize) -> SmvProblem<'a> {
        SmvProblem {
            a: self.a,
            y: self.y.column(j).into_owned(),
            noise_var: self.noise_var,
        }
    }
}

fn check_noise_var(noise_var: f64) -> Result<()> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(Error::Range(format!(
            "noise variance must be finite and >= 0, got {noise_var}"
        )));
    }
    Ok(())
}

/// One recorded solver iteration (only kept when [`SolverConfig::trace`] is set).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Column group the record belongs to (0 for single-vector solvers).
    pub group: usize,
    /// Hyperparameters after the update: block scales for the SBL family,
    /// diagonal of the inverse weight matrix for the IRLS family.
    pub hyper: Vec<f64>,
    /// Active-block mask after pruning (SBL family; all true otherwise).
    pub active: Vec<bool>,
    /// Estimate produced by this iteration, with blocks outside `active`
    /// set to zero.
    pub iterate: DMatrix<f64>,
    /// Negative log evidence evaluated at the hyperparameters this iteration
    /// started from (SBL family only).
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// `M x 1` for single-vector solvers, `M x L` otherwise.
    pub estimate: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub runtime_seconds: f64,
    /// Blocks (or rows, for element-wise solvers) still active at exit.
    pub active_blocks: Option<Vec<usize>>,
    /// Every block was pruned and the estimate is identically zero.
    pub all_pruned: bool,
    /// For the exhaustive oracle: whether an exact support was found.
    pub exact: Option<bool>,
    pub trace: Vec<IterationRecord>,
}

impl RecoveryResult {
    pub(crate) fn zeros(m: usize, l: usize) -> Self {
        Self {
            estimate: DMatrix::zeros(m, l),
            iterations: 0,
            converged: true,
            runtime_seconds: 0.0,
            active_blocks: None,
            all_pruned: false,
            exact: None,
            trace: Vec::new(),
        }
    }

    /// First column of the estimate, the natural view for single-vector solvers.
    pub fn vector(&self) -> DVector<f64> {
        self.estimate.column(0).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when the largest hyperparameter change, relative to the largest
    /// hyperparameter, drops below this.
    pub tol: f64,
    /// Blocks whose scale falls below this are removed and fixed at zero.
    pub prune_threshold: f64,
    /// Exponent of the lp penalty for the reweighted least-squares solvers.
    pub p: f64,
    /// Number of columns processed jointly by the spatiotemporal solver.
    pub column_block_size: usize,
    /// Indices known to be in the support (left unpenalized by IRLS).
    pub support_prior: Option<Vec<usize>>,
    pub learn_intra_corr: bool,
    pub learn_inter_corr: bool,
    /// IRLS smoothing continuation stops once the relative smoothing
    /// parameter falls below this.
    pub eps_floor: f64,
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 400,
            tol: 1e-8,
            prune_threshold: 1e-8,
            p: 0.99,
            column_block_size: 1,
            support_prior: None,
            learn_intra_corr: true,
            learn_inter_corr: true,
            eps_floor: 1e-8,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Range("max_iters must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Range(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if !(self.prune_threshold >= 0.0) {
            return Err(Error::Range(format!(
                "prune threshold must be >= 0, got {}",
                self.prune_threshold
            )));
        }
        check_p(self.p)?;
        if self.column_block_size == 0 {
            return Err(Error::Range("column block size must be positive".into()));
        }
        if !(self.eps_floor > 0.0) {
            return Err(Error::Range("eps_floor must be positive".into()));
        }
        Ok(())
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Range(format!("p must lie in (0, 1], got {p}")));
    }
    Ok(())
}
