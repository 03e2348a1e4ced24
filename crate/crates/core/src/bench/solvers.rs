//! Solver registry: one entry per benchmarkable method, with the naming
//! used in reports ("ST-SBL 4/32" = column groups of 4, blocks of 32).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irls::{birls, bomp, irls_lp, ksparse_approx, l0_bruteforce, mfocuss};
use crate::sbl::{bsbl_bo, bsbl_em, st_sbl, t_msbl};
use crate::types::{make_block_partition, MmvProblem, RecoveryResult, SmvProblem, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    BsblEm,
    BsblBo,
    StSbl,
    TMsbl,
    /// IRLS-lp with the known-support (dual) prior.
    Irls,
    /// IRLS with p = 1 and no support prior.
    L1,
    Birls,
    Mfocuss,
    Bomp,
    /// Best k-term approximation of the true coefficients.
    Ksparse,
    /// Exhaustive l0 search (tiny problems only).
    L0,
}

impl SolverKind {
    pub const ALL: [SolverKind; 11] = [
        SolverKind::BsblEm,
        SolverKind::BsblBo,
        SolverKind::StSbl,
        SolverKind::TMsbl,
        SolverKind::Irls,
        SolverKind::L1,
        SolverKind::Birls,
        SolverKind::Mfocuss,
        SolverKind::Bomp,
        SolverKind::Ksparse,
        SolverKind::L0,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SolverKind::BsblEm => "bsbl-em",
            SolverKind::BsblBo => "bsbl-bo",
            SolverKind::StSbl => "st-sbl",
            SolverKind::TMsbl => "t-msbl",
            SolverKind::Irls => "irls",
            SolverKind::L1 => "l1",
            SolverKind::Birls => "birls",
            SolverKind::Mfocuss => "mfocuss",
            SolverKind::Bomp => "bomp",
            SolverKind::Ksparse => "ksparse",
            SolverKind::L0 => "l0",
        }
    }

    /// Whether the solver reads the true coefficients.
    pub fn is_oracle(self) -> bool {
        matches!(self, SolverKind::Ksparse | SolverKind::Irls)
    }

    fn is_mmv(self) -> bool {
        matches!(
            self,
            SolverKind::StSbl | SolverKind::TMsbl | SolverKind::Mfocuss
        )
    }

    fn uses_blocks(self) -> bool {
        matches!(
            self,
            SolverKind::BsblEm
                | SolverKind::BsblBo
                | SolverKind::StSbl
                | SolverKind::Birls
                | SolverKind::Bomp
        )
    }

    fn uses_p(self) -> bool {
        matches!(
            self,
            SolverKind::Irls | SolverKind::Birls | SolverKind::Mfocuss
        )
    }

    fn uses_prune(self) -> bool {
        matches!(
            self,
            SolverKind::BsblEm | SolverKind::BsblBo | SolverKind::StSbl | SolverKind::TMsbl
        )
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        SolverKind::ALL
            .into_iter()
            .find(|k| k.id() == key)
            .ok_or_else(|| {
                let known: Vec<_> = SolverKind::ALL.iter().map(|k| k.id()).collect();
                Error::Input(format!("unknown solver {s:?}; known: {}", known.join(", ")))
            })
    }
}

/// A solver plus its parameters. Unset options take per-solver defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub id: SolverKind,
    #[serde(default)]
    pub block_size: Option<usize>,
    #[serde(default)]
    pub col_block: Option<usize>,
    #[serde(default)]
    pub prune: Option<f64>,
    #[serde(default)]
    pub p: Option<f64>,
    /// Blocks selected by BOMP, terms kept by `ksparse`, or the support
    /// bound for `l0`.
    #[serde(default)]
    pub k: Option<usize>,
    /// Size of the oracle support handed to the dual-prior IRLS.
    #[serde(default)]
    pub support_size: Option<usize>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// Parameters after defaults are applied for a concrete problem size.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSolver {
    pub kind: SolverKind,
    pub block_size: usize,
    pub col_block: usize,
    pub k: usize,
    pub support_size: usize,
    pub config: SolverConfig,
}

impl SolverSpec {
    pub fn new(id: SolverKind) -> Self {
        Self {
            id,
            block_size: None,
            col_block: None,
            prune: None,
            p: None,
            k: None,
            support_size: None,
            max_iters: None,
            tol: None,
        }
    }

    /// Fills in defaults for signal length `m`, `n` measurements and `l`
    /// columns, and checks everything that can be checked up front.
    pub fn resolve(&self, m: usize, n: usize, l: usize) -> Result<ResolvedSolver> {
        let kind = self.id;
        let defaults = SolverConfig::default();
        let block_size = match kind {
            _ if kind.uses_blocks() => self.block_size.unwrap_or(32.min(m)),
            _ => 1,
        };
        make_block_partition(m, block_size)?;
        let col_block = match kind {
            SolverKind::StSbl => self.col_block.unwrap_or(1),
            SolverKind::TMsbl | SolverKind::Mfocuss => self.col_block.unwrap_or(4.min(l)),
            _ => 1,
        };
        if col_block == 0 || !l.is_multiple_of(col_block) {
            return Err(Error::Dimension(format!(
                "column block size {col_block} does not divide the number of lines {l}"
            )));
        }
        let p = match kind {
            SolverKind::L1 => 1.0,
            _ => self.p.unwrap_or(defaults.p),
        };
        let k = match kind {
            SolverKind::Bomp => self.k.unwrap_or((n / block_size).clamp(1, m / block_size)),
            SolverKind::Ksparse => self.k.unwrap_or(n.div_ceil(2)).min(m),
            SolverKind::L0 => self.k.unwrap_or(n / 2),
            _ => 0,
        };
        let support_size = match kind {
            SolverKind::Irls => self.support_size.unwrap_or(n / 4).min(n),
            _ => 0,
        };
        let config = SolverConfig {
            max_iters: self.max_iters.unwrap_or(defaults.max_iters),
            tol: self.tol.unwrap_or(defaults.tol),
            prune_threshold: self.prune.unwrap_or(defaults.prune_threshold),
            p,
            column_block_size: col_block,
            ..defaults
        };
        config.validate()?;
        Ok(ResolvedSolver {
            kind,
            block_size,
            col_block,
            k,
            support_size,
            config,
        })
    }
}

impl ResolvedSolver {
    /// Report label, e.g. `ST-SBL 4/32`, `BSBL-BO 32`, `l1`.
    pub fn label(&self) -> String {
        let (d, c) = (self.block_size, self.col_block);
        match self.kind {
            SolverKind::BsblEm => format!("BSBL-EM {d}"),
            SolverKind::BsblBo => format!("BSBL-BO {d}"),
            SolverKind::StSbl => format!("ST-SBL {c}/{d}"),
            SolverKind::TMsbl => format!("T-MSBL {c}"),
            SolverKind::Irls => "IRLS-DP".into(),
            SolverKind::L1 => "l1".into(),
            SolverKind::Birls => format!("BIRLS {d}"),
            SolverKind::Mfocuss => format!("MFOCUSS {c}"),
            SolverKind::Bomp => format!("BOMP {d}"),
            SolverKind::Ksparse => format!("{}-sparse", self.k),
            SolverKind::L0 => "l0".into(),
        }
    }

    /// Space-separated `key=value` list of the parameters that matter.
    pub fn params(&self) -> String {
        let kind = self.kind;
        let mut out = Vec::new();
        if kind.uses_blocks() {
            out.push(format!("d={}", self.block_size));
        }
        if kind.is_mmv() {
            out.push(format!("cols={}", self.col_block));
        }
        if kind.uses_prune() {
            out.push(format!("prune={:e}", self.config.prune_threshold));
        }
        if kind.uses_p() {
            out.push(format!("p={}", self.config.p));
        }
        match kind {
            SolverKind::Bomp | SolverKind::Ksparse | SolverKind::L0 => {
                out.push(format!("k={}", self.k))
            }
            SolverKind::Irls => out.push(format!("support={}", self.support_size)),
            _ => {}
        }
        out.join(" ")
    }

    /// Width of the column groups the solver is run on.
    pub fn group_width(&self) -> usize {
        if self.kind.is_mmv() {
            self.col_block
        } else {
            1
        }
    }

    /// Recovers the coefficients behind one column group `y` (`N x width`).
    /// `truth` holds the true coefficients of the same columns and is only
    /// read by oracle solvers.
    pub fn run(
        &self,
        a: &DMatrix<f64>,
        y: &DMatrix<f64>,
        truth: Option<&DMatrix<f64>>,
        noise_var: f64,
    ) -> Result<RecoveryResult> {
        let m = a.ncols();
        let cfg = &self.config;
        let smv = || -> Result<SmvProblem<'_>> {
            if y.ncols() != 1 {
                return Err(Error::Dimension(format!(
                    "{} recovers one line at a time, got {} columns",
                    self.kind,
                    y.ncols()
                )));
            }
            SmvProblem::new(a, y.column(0).into_owned(), noise_var)
        };
        let need_truth = || {
            truth.ok_or_else(|| Error::Input(format!("{} needs the true coefficients", self.kind)))
        };
        match self.kind {
            SolverKind::BsblEm => bsbl_em(&smv()?, &make_block_partition(m, self.block_size)?, cfg),
            SolverKind::BsblBo => bsbl_bo(&smv()?, &make_block_partition(m, self.block_size)?, cfg),
            SolverKind::StSbl => st_sbl(
                &MmvProblem::new(a, y.clone(), noise_var)?,
                &make_block_partition(m, self.block_size)?,
                cfg,
            ),
            SolverKind::TMsbl => t_msbl(&MmvProblem::new(a, y.clone(), noise_var)?, cfg),
            SolverKind::Mfocuss => mfocuss(&MmvProblem::new(a, y.clone(), noise_var)?, cfg.p, cfg),
            SolverKind::L1 => irls_lp(&smv()?, 1.0, None, cfg),
            SolverKind::Irls => {
                let c = need_truth()?.column(0).into_owned();
                let support = top_support(&c, self.support_size);
                irls_lp(&smv()?, cfg.p, Some(&support), cfg)
            }
            SolverKind::Birls => birls(
                &smv()?,
                cfg.p,
                &make_block_partition(m, self.block_size)?,
                cfg,
            ),
            SolverKind::Bomp => bomp(&smv()?, &make_block_partition(m, self.block_size)?, self.k),
            SolverKind::L0 => l0_bruteforce(&smv()?, self.k),
            SolverKind::Ksparse => {
                let c = need_truth()?;
                let mut est = DMatrix::zeros(c.nrows(), c.ncols());
                for j in 0..c.ncols() {
                    est.set_column(j, &ksparse_approx(&c.column(j).into_owned(), self.k));
                }
                Ok(RecoveryResult {
                    estimate: est,
                    iterations: 1,
                    converged: true,
                    runtime_seconds: 0.0,
                    active_blocks: None,
                    all_pruned: false,
                    exact: None,
                    trace: Vec::new(),
                })
            }
        }
    }
}

/// Indices of the `k` largest-magnitude entries, ascending.
pub fn top_support(c: &DVector<f64>, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&i, &j| c[j].abs().total_cmp(&c[i].abs()).then(i.cmp(&j)));
    let mut s: Vec<usize> = order.into_iter().take(k.min(c.len())).collect();
    s.sort_unstable();
    s
}
