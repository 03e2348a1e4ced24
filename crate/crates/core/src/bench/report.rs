//! Benchmark report rows and their CSV forms.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::metrics::Psnr;
use crate::types::SamplingRatio;

pub const REPORT_HEADER: &str = "image,solver,params,psnr_db,exact,runtime_s,iterations,converged";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub image: String,
    /// Display label such as `ST-SBL 4/32`.
    pub solver: String,
    pub ratio: SamplingRatio,
    /// Solver parameters without the ratio.
    pub params: String,
    /// `None` marks a failed row.
    pub psnr: Option<Psnr>,
    pub runtime_s: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Why the row failed, if it did.
    pub failure: Option<String>,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.psnr.is_none()
    }

    pub fn exact(&self) -> bool {
        matches!(self.psnr, Some(Psnr::Exact))
    }

    /// The `params` column: the ratio followed by the solver parameters.
    pub fn params_field(&self) -> String {
        if self.params.is_empty() {
            format!("ratio={}", self.ratio)
        } else {
            format!("ratio={} {}", self.ratio, self.params)
        }
    }

    pub fn psnr_field(&self) -> String {
        match self.psnr {
            None => "FAIL".into(),
            Some(p) => p.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl BenchReport {
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (&a.image, &a.solver, a.params_field()).cmp(&(&b.image, &b.solver, b.params_field()))
        });
    }

    pub fn find(&self, image: &str, solver: &str, ratio: SamplingRatio) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.image == image && r.solver == solver && r.ratio == ratio)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{},{}",
                csv_field(&r.image),
                csv_field(&r.solver),
                csv_field(&r.params_field()),
                r.psnr_field(),
                r.exact(),
                r.runtime_s,
                r.iterations,
                r.converged
            );
        }
        out
    }

    /// Per (solver, params) aggregate: row count, failures, exact matches,
    /// mean PSNR over rows that neither failed nor matched exactly, mean
    /// runtime, and how often the method was best for its (image, ratio).
    pub fn summary_csv(&self) -> String {
        #[derive(Default)]
        struct Agg {
            rows: usize,
            failed: usize,
            exact: usize,
            psnr_sum: f64,
            psnr_n: usize,
            runtime_sum: f64,
            best: usize,
        }
        let mut best: BTreeMap<(String, SamplingRatio), f64> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| !r.failed()) {
            let v = r.psnr.unwrap().as_f64();
            let e = best
                .entry((r.image.clone(), r.ratio))
                .or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
        let mut aggs: BTreeMap<(String, String), Agg> = BTreeMap::new();
        for r in &self.rows {
            let a = aggs
                .entry((r.solver.clone(), r.params_field()))
                .or_default();
            a.rows += 1;
            a.runtime_sum += r.runtime_s;
            match r.psnr {
                None => a.failed += 1,
                Some(Psnr::Exact) => a.exact += 1,
                Some(Psnr::Db(v)) => {
                    a.psnr_sum += v;
                    a.psnr_n += 1;
                }
            }
            if let Some(p) = r.psnr {
                if best.get(&(r.image.clone(), r.ratio)) == Some(&p.as_f64()) {
                    a.best += 1;
                }
            }
        }
        let mut out = String::from(
            "solver,params,rows,failed,exact,mean_psnr_db_excl_failed,mean_runtime_s,best_count\n",
        );
        for ((solver, params), a) in aggs {
            let mean = if a.psnr_n > 0 {
                format!("{:.4}", a.psnr_sum / a.psnr_n as f64)
            } else {
                "NA".into()
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{}",
                csv_field(&solver),
                csv_field(&params),
                a.rows,
                a.failed,
                a.exact,
                mean,
                a.runtime_sum / a.rows as f64,
                a.best
            );
        }
        out
    }
}
