//! Runs an experiment grid: every (input, ratio, solver) yields one row.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::metrics::psnr;
use super::report::{BenchReport, ReportRow};
use super::solvers::{ResolvedSolver, SolverSpec};
use super::spec::ExperimentSpec;
use crate::error::{Error, Result};
use crate::sensing::{
    add_measurement_noise, display_image, make_gaussian_operator, reconstruct_frame, sense_frame,
    Measurements, SignalDomain,
};
use crate::transforms::{DctPlan, EnvelopeParams};
use crate::types::{
    ratio_to_measurements, BModeImage, IterationRecord, RecoveryResult, SamplingRatio,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Overrides the spec's `timing` setting.
    pub timing: Option<bool>,
}

/// Everything one solver needs for one (input, ratio) cell.
struct Cell<'a> {
    image: &'a str,
    ratio: SamplingRatio,
    a: &'a DMatrix<f64>,
    meas: &'a Measurements,
    truth: &'a DMatrix<f64>,
    reference: &'a BModeImage,
    domain: SignalDomain,
    noise_var: f64,
    timing: bool,
}

/// Runs the whole grid. Lines (or column groups) are recovered in
/// parallel; rows come back sorted by (image, solver, params), so the
/// report does not depend on the thread count.
pub fn run_benchmark(spec: &ExperimentSpec, options: &RunOptions) -> Result<BenchReport> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = options.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))?;
    let timing = options.timing.unwrap_or(spec.timing);
    let envelope = EnvelopeParams::default();

    let mut rows = Vec::new();
    for input in &spec.inputs {
        let image = input.name();
        let frame = input.load(&spec.base_dir)?;
        let domain = spec.domain_for(input).signal_domain();
        let reference = display_image(&frame, domain, &envelope)?;
        let truth = DctPlan::new(frame.depth())?.forward_columns(frame.samples())?;
        let m = frame.depth();

        for (ri, &ratio) in spec.ratios.iter().enumerate() {
            let n = ratio_to_measurements(m, ratio);
            let op = make_gaussian_operator(n, m, spec.operator_seed(ri))?;
            let mut meas = sense_frame(&frame, &op, domain)?;
            if let Some(sigma) = spec.measurement_noise {
                add_measurement_noise(&mut meas, sigma, spec.seed as u64 ^ ((ri as u64) << 32))?;
            }
            let cell = Cell {
                image: &image,
                ratio,
                a: op.matrix(),
                meas: &meas,
                truth: &truth,
                reference: &reference,
                domain,
                noise_var: spec.noise_var,
                timing,
            };
            for solver in &spec.solvers {
                rows.push(pool.install(|| run_cell(&cell, solver, &envelope)));
            }
        }
    }
    let mut report = BenchReport { rows };
    report.sort();
    Ok(report)
}

fn run_cell(cell: &Cell<'_>, solver: &SolverSpec, envelope: &EnvelopeParams) -> ReportRow {
    let (m, l) = cell.truth.shape();
    let mut row = ReportRow {
        image: cell.image.to_string(),
        solver: solver.id.to_string(),
        ratio: cell.ratio,
        params: String::new(),
        psnr: None,
        runtime_s: 0.0,
        iterations: 0,
        converged: false,
        failure: None,
    };
    let resolved = match solver.resolve(m, cell.meas.num_measurements(), l) {
        Ok(r) => r,
        Err(e) => {
            row.failure = Some(e.to_string());
            return row;
        }
    };
    row.solver = resolved.label();
    row.params = resolved.params();

    match recover_lines(
        cell.a,
        &cell.meas.y,
        Some(cell.truth),
        &resolved,
        cell.noise_var,
    ) {
        Ok(LinesOutcome {
            estimate,
            runtime_seconds,
            iterations,
            converged,
            ..
        }) => {
            row.runtime_s = if cell.timing { runtime_seconds } else { 0.0 };
            row.iterations = iterations;
            row.converged = converged;
            let signal = cell.meas.y.iter().any(|&v| v != 0.0);
            if signal && estimate.iter().all(|&v| v == 0.0) {
                row.failure = Some("solver returned only zeros".into());
                return row;
            }
            match reconstruct_frame(&estimate, cell.domain, envelope)
                .and_then(|img| psnr(&img, cell.reference))
            {
                Ok(p) => row.psnr = Some(p),
                Err(e) => row.failure = Some(e.to_string()),
            }
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

/// Merged result of recovering every line of a frame.
#[derive(Debug, Clone)]
pub struct LinesOutcome {
    pub estimate: DMatrix<f64>,
    /// Sum of the per-call recovery times.
    pub runtime_seconds: f64,
    /// Largest iteration count of any call.
    pub iterations: usize,
    pub converged: bool,
    /// Per-call iteration records, `group` set to the column group index.
    pub trace: Vec<IterationRecord>,
}

/// Recovers every column group of `y` with `solver`, in parallel on the
/// current rayon pool, and stitches the estimates in column order. `truth`
/// (the true coefficients) is only needed by oracle solvers.
pub fn recover_lines(
    a: &DMatrix<f64>,
    y: &DMatrix<f64>,
    truth: Option<&DMatrix<f64>>,
    solver: &ResolvedSolver,
    noise_var: f64,
) -> Result<LinesOutcome> {
    let (m, l) = (a.ncols(), y.ncols());
    let width = solver.group_width();
    if l % width != 0 {
        return Err(Error::Dimension(format!(
            "column block size {width} does not divide the number of lines {l}"
        )));
    }
    if let Some(t) = truth {
        if t.shape() != (m, l) {
            return Err(Error::Dimension(format!(
                "true coefficients are {:?}, expected {:?}",
                t.shape(),
                (m, l)
            )));
        }
    }
    let results: Vec<Result<RecoveryResult>> = (0..l / width)
        .into_par_iter()
        .map(|g| {
            let yg = y.columns(g * width, width).into_owned();
            let tg = truth.map(|t| t.columns(g * width, width).into_owned());
            solver.run(a, &yg, tg.as_ref(), noise_var)
        })
        .collect();

    let mut out = LinesOutcome {
        estimate: DMatrix::zeros(m, l),
        runtime_seconds: 0.0,
        iterations: 0,
        converged: true,
        trace: Vec::new(),
    };
    for (g, res) in results.into_iter().enumerate() {
        let res = res?;
        out.estimate
            .columns_mut(g * width, width)
            .copy_from(&res.estimate);
        out.runtime_seconds += res.runtime_seconds;
        out.iterations = out.iterations.max(res.iterations);
        out.converged &= res.converged;
        out.trace.extend(res.trace.into_iter().map(|mut r| {
            r.group = g;
            r
        }));
    }
    Ok(out)
}
