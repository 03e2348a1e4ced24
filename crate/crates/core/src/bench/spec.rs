//! Experiment description files (TOML).
//!
//! ```toml
//! spec_version = 1
//! seed = 0
//! psnr_domain = "bmode"          # or "raw-rescaled"
//! ratios = ["1/3", "1/2"]
//! noise_var = 1e-8               # noise variance the solvers assume
//!
//! [[inputs]]
//! kind = "phantom"
//! id = "phantom"
//! depth = 512
//! lines = 64
//!
//! [[inputs]]
//! kind = "file"
//! path = "frames/scan.rff"       # relative to the spec file
//!
//! [[solvers]]
//! id = "st-sbl"
//! block_size = 32
//! col_block = 4
//! prune = 1e-8
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generate::{gen_phantom_rf, PhantomParams};
use super::solvers::SolverSpec;
use crate::error::{Error, Result};
use crate::io::read_frame;
use crate::sensing::SignalDomain;
use crate::types::{RfFrame, SamplingRatio};

pub const SPEC_VERSION: u32 = 1;

/// Image in which reconstructions are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsnrDomain {
    /// Envelope-detected, log-compressed B-mode images (RF inputs).
    Bmode,
    /// Min-max rescaled reconstructions (already compressed inputs).
    RawRescaled,
}

impl PsnrDomain {
    pub fn signal_domain(self) -> SignalDomain {
        match self {
            PsnrDomain::Bmode => SignalDomain::DctOfRf,
            PsnrDomain::RawRescaled => SignalDomain::DctOfDisplay,
        }
    }
}

impl std::str::FromStr for PsnrDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bmode" | "b-mode" => Ok(PsnrDomain::Bmode),
            "raw-rescaled" | "raw" => Ok(PsnrDomain::RawRescaled),
            other => Err(Error::Input(format!(
                "unknown PSNR domain {other:?} (expected bmode or raw-rescaled)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InputSpec {
    Phantom {
        #[serde(default)]
        id: Option<String>,
        #[serde(default)]
        depth: Option<usize>,
        #[serde(default)]
        lines: Option<usize>,
        #[serde(default)]
        scatterers: Option<usize>,
        #[serde(default)]
        pulse_cycles: Option<f64>,
        #[serde(default)]
        center_freq: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        psnr_domain: Option<PsnrDomain>,
    },
    File {
        #[serde(default)]
        id: Option<String>,
        path: PathBuf,
        #[serde(default)]
        psnr_domain: Option<PsnrDomain>,
    },
}

impl InputSpec {
    pub fn phantom_params(&self) -> Option<PhantomParams> {
        match self {
            InputSpec::Phantom {
                depth,
                lines,
                scatterers,
                pulse_cycles,
                center_freq,
                seed,
                ..
            } => {
                let d = PhantomParams::default();
                Some(PhantomParams {
                    depth: depth.unwrap_or(d.depth),
                    lines: lines.unwrap_or(d.lines),
                    scatterers: scatterers.unwrap_or(d.scatterers),
                    pulse_cycles: pulse_cycles.unwrap_or(d.pulse_cycles),
                    center_freq: center_freq.unwrap_or(d.center_freq),
                    seed: seed.unwrap_or(d.seed),
                })
            }
            InputSpec::File { .. } => None,
        }
    }

    /// Report name of the input: the explicit id, else the file stem, else
    /// `phantom<seed>`.
    pub fn name(&self) -> String {
        match self {
            InputSpec::Phantom { id: Some(id), .. } | InputSpec::File { id: Some(id), .. } => {
                id.clone()
            }
            InputSpec::Phantom { .. } => {
                format!("phantom{}", self.phantom_params().map_or(0, |p| p.seed))
            }
            InputSpec::File { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }

    pub fn psnr_domain(&self) -> Option<PsnrDomain> {
        match self {
            InputSpec::Phantom { psnr_domain, .. } | InputSpec::File { psnr_domain, .. } => {
                *psnr_domain
            }
        }
    }

    /// Sets the per-input override (`None` falls back to the experiment default).
    pub fn set_psnr_domain(&mut self, domain: Option<PsnrDomain>) {
        match self {
            InputSpec::Phantom { psnr_domain, .. } | InputSpec::File { psnr_domain, .. } => {
                *psnr_domain = domain
            }
        }
    }

    /// Loads or synthesizes the frame; relative paths resolve against `base`.
    pub fn load(&self, base: &Path) -> Result<RfFrame> {
        match self {
            InputSpec::Phantom { .. } => gen_phantom_rf(&self.phantom_params().unwrap()),
            InputSpec::File { path, .. } => read_frame(&base.join(path)),
        }
    }
}

fn default_noise_var() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub spec_version: u32,
    /// Seeds the sensing operators (one per ratio).
    #[serde(default)]
    pub seed: u32,
    #[serde(default)]
    pub psnr_domain: Option<PsnrDomain>,
    pub ratios: Vec<SamplingRatio>,
    /// Noise variance passed to the solvers.
    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
    /// Standard deviation of Gaussian noise added to the measurements.
    #[serde(default)]
    pub measurement_noise: Option<f64>,
    /// Record wall-clock recovery time; when false every runtime is 0 so
    /// reports are byte-reproducible.
    #[serde(default = "default_true")]
    pub timing: bool,
    pub inputs: Vec<InputSpec>,
    pub solvers: Vec<SolverSpec>,
    /// Directory that relative input paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Format(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&fs::read_to_string(path)?)?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.spec_version != SPEC_VERSION {
            return Err(Error::Format(format!(
                "unsupported spec_version {} (this build reads {SPEC_VERSION})",
                self.spec_version
            )));
        }
        if self.ratios.is_empty() || self.inputs.is_empty() || self.solvers.is_empty() {
            return Err(Error::Input(
                "spec needs at least one ratio, one input and one solver".into(),
            ));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return Err(Error::Range(format!(
                "noise_var must be >= 0, got {}",
                self.noise_var
            )));
        }
        if let Some(s) = self.measurement_noise {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Range(format!(
                    "measurement_noise must be >= 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// PSNR domain of one input: its own setting, else the spec's, else B-mode.
    pub fn domain_for(&self, input: &InputSpec) -> PsnrDomain {
        input
            .psnr_domain()
            .or(self.psnr_domain)
            .unwrap_or(PsnrDomain::Bmode)
    }

    /// Seed of the operator used at the `index`-th ratio.
    pub fn operator_seed(&self, index: usize) -> u32 {
        self.seed
            .wrapping_add((index as u32).wrapping_mul(0x9E37_79B9))
    }
}
