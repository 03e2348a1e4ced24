//! Command-line front end: generate phantoms, sense frames, recover them,
//! score images and run benchmark grids.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csrecon::bench::{
    gen_phantom_rf, psnr, recover_lines, run_benchmark, ExperimentSpec, PhantomParams, PsnrDomain,
    RunOptions, SolverKind, SolverSpec,
};
use csrecon::io::{
    read_frame, read_image, read_measurements, write_frame, write_image, write_measurements,
};
use csrecon::sensing::{
    add_measurement_noise, display_image, inverse_dct_frame, make_gaussian_operator,
    reconstruct_frame, sense_frame,
};
use csrecon::transforms::{DctPlan, EnvelopeParams};
use csrecon::types::{ratio_to_measurements, IterationRecord, SamplingRatio};
use csrecon::{Error, Result};

#[derive(Parser)]
#[command(
    name = "csrecon",
    version,
    about = "Compressed-sensing recovery of ultrasound RF frames"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic RF frame.
    Phantom(PhantomArgs),
    /// Sense every line of a frame with a seeded Gaussian operator.
    Sense(SenseArgs),
    /// Recover a frame from measurements and write its display image.
    Recover(RecoverArgs),
    /// Run an experiment grid described by a TOML file.
    Bench(BenchArgs),
    /// PSNR (dB, peak 1) between two display images.
    Psnr(PsnrArgs),
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value_t = 512)]
    depth: usize,
    #[arg(long, default_value_t = 64)]
    lines: usize,
    #[arg(long, default_value_t = 40)]
    scatterers: usize,
    /// Pulse length in carrier periods.
    #[arg(long, default_value_t = 3.0)]
    cycles: f64,
    /// Carrier frequency in cycles per sample.
    #[arg(long, default_value_t = 0.15)]
    freq: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output frame (`.csv` for text, anything else binary).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct SenseArgs {
    /// Input RF frame.
    #[arg(short, long)]
    input: PathBuf,
    /// Output measurements file.
    #[arg(short, long)]
    output: PathBuf,
    /// Measurements per line as a fraction of the depth (`1/2`, `33%`, `0.25`).
    #[arg(long, default_value = "1/2")]
    ratio: SamplingRatio,
    /// Operator seed.
    #[arg(long, default_value_t = 0)]
    seed: u32,
    /// Domain the frame is scored in after recovery: `bmode` (RF input) or
    /// `raw-rescaled` (already display-ready input).
    #[arg(long, default_value = "bmode")]
    domain: PsnrDomain,
    /// Standard deviation of additive Gaussian measurement noise.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long, default_value_t = 1)]
    noise_seed: u64,
}

#[derive(Args)]
struct RecoverArgs {
    /// Input measurements file.
    #[arg(short, long)]
    input: PathBuf,
    /// Output display image (`.pgm` or `.csv`).
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the recovered RF frame here.
    #[arg(long)]
    frame_out: Option<PathBuf>,
    #[arg(long, default_value = "st-sbl")]
    solver: SolverKind,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    col_block: Option<usize>,
    #[arg(long)]
    prune: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Blocks for `bomp`, terms for `ksparse`, support bound for `l0`.
    #[arg(long)]
    k: Option<usize>,
    /// Oracle support size for `irls` (needs `--reference`).
    #[arg(long)]
    support_size: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    noise_var: f64,
    /// Original frame. Enables oracle solvers and reports the PSNR.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Write per-iteration hyperparameters as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment TOML.
    spec: PathBuf,
    /// Output report CSV.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write per-solver means here.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the experiment seed.
    #[arg(long)]
    seed: Option<u32>,
    /// Overrides the PSNR domain of every input.
    #[arg(long)]
    psnr_domain: Option<PsnrDomain>,
    /// Replaces the experiment's ratios (repeatable).
    #[arg(long = "ratio")]
    ratios: Vec<SamplingRatio>,
    /// Keeps only the experiment's solvers with these ids (repeatable).
    #[arg(long = "solver")]
    solvers: Vec<SolverKind>,
    /// Write zero runtimes so reports are byte-identical across runs.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct PsnrArgs {
    estimate: PathBuf,
    reference: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Phantom(a) => phantom(a),
        Command::Sense(a) => sense(a),
        Command::Recover(a) => recover(a),
        Command::Bench(a) => bench(a),
        Command::Psnr(a) => score(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csrecon: {e}");
            ExitCode::FAILURE
        }
    }
}

fn phantom(args: PhantomArgs) -> Result<()> {
    let frame = gen_phantom_rf(&PhantomParams {
        depth: args.depth,
        lines: args.lines,
        scatterers: args.scatterers,
        pulse_cycles: args.cycles,
        center_freq: args.freq,
        seed: args.seed,
    })?;
    write_frame(&args.output, &frame)
}

fn sense(args: SenseArgs) -> Result<()> {
    let frame = read_frame(&args.input)?;
    let n = ratio_to_measurements(frame.depth(), args.ratio);
    let op = make_gaussian_operator(n, frame.depth(), args.seed)?;
    let mut meas = sense_frame(&frame, &op, args.domain.signal_domain())?;
    if let Some(sigma) = args.noise {
        add_measurement_noise(&mut meas, sigma, args.noise_seed)?;
    }
    write_measurements(&args.output, &meas)?;
    eprintln!(
        "{} lines, {} of {} measurements per line",
        frame.lines(),
        n,
        frame.depth()
    );
    Ok(())
}

fn recover(args: RecoverArgs) -> Result<()> {
    let meas = read_measurements(&args.input)?;
    let op = meas.operator()?;
    let (m, l) = (meas.signal_len, meas.lines());
    let spec = SolverSpec {
        id: args.solver,
        block_size: args.block_size,
        col_block: args.col_block,
        prune: args.prune,
        p: args.p,
        k: args.k,
        support_size: args.support_size,
        max_iters: args.max_iters,
        tol: args.tol,
    };
    let mut solver = spec.resolve(m, meas.num_measurements(), l)?;
    solver.config.trace = args.trace.is_some();

    let reference = args.reference.as_deref().map(read_frame).transpose()?;
    let truth = match &reference {
        Some(f) if f.depth() != m || f.lines() != l => {
            return Err(Error::Dimension(format!(
                "reference frame is {}x{}, measurements describe {m}x{l}",
                f.depth(),
                f.lines()
            )))
        }
        Some(f) => Some(DctPlan::new(m)?.forward_columns(f.samples())?),
        None => None,
    };

    let pool = worker_pool(args.threads)?;
    let out = pool.install(|| {
        recover_lines(
            op.matrix(),
            &meas.y,
            truth.as_ref(),
            &solver,
            args.noise_var,
        )
    })?;

    let envelope = EnvelopeParams::default();
    let image = reconstruct_frame(&out.estimate, meas.domain, &envelope)?;
    write_image(&args.output, &image)?;
    if let Some(path) = &args.frame_out {
        write_frame(path, &inverse_dct_frame(&out.estimate)?)?;
    }
    if let Some(path) = &args.trace {
        fs::write(path, trace_csv(&out.trace))?;
    }

    eprintln!(
        "{}: {} iterations (max), converged={}, {:.3} s solver time",
        solver.label(),
        out.iterations,
        out.converged,
        out.runtime_seconds
    );
    if let Some(f) = &reference {
        let target = display_image(f, meas.domain, &envelope)?;
        println!("{}", psnr(&image, &target)?);
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut spec = ExperimentSpec::load(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(domain) = args.psnr_domain {
        spec.psnr_domain = Some(domain);
        for input in &mut spec.inputs {
            input.set_psnr_domain(None);
        }
    }
    if !args.ratios.is_empty() {
        spec.ratios = args.ratios;
    }
    if !args.solvers.is_empty() {
        spec.solvers.retain(|s| args.solvers.contains(&s.id));
    }
    let opts = RunOptions {
        threads: args.threads,
        timing: args.no_timing.then_some(false),
    };
    let report = run_benchmark(&spec, &opts)?;
    write_text(&args.output, &report.to_csv())?;
    if let Some(path) = &args.summary {
        write_text(path, &report.summary_csv())?;
    }
    let failed = report.rows.iter().filter(|r| r.failed()).count();
    eprintln!("{} rows, {failed} failed", report.rows.len());
    Ok(())
}

fn score(args: PsnrArgs) -> Result<()> {
    let est = read_image(&args.estimate)?;
    let reference = read_image(&args.reference)?;
    println!("{}", psnr(&est, &reference)?);
    Ok(())
}

fn worker_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Input(format!("cannot start worker pool: {e}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// One row per (group, iteration, index): the hyperparameter and whether
/// the index was still active.
fn trace_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from("group,iteration,index,hyper,active\n");
    let mut iteration = 0;
    let mut last_group = usize::MAX;
    for rec in trace {
        if rec.group != last_group {
            last_group = rec.group;
            iteration = 0;
        }
        iteration += 1;
        for (i, h) in rec.hyper.iter().enumerate() {
            let active = rec.active.get(i).copied().unwrap_or(true);
            let _ = writeln!(out, "{},{iteration},{i},{h:e},{}", rec.group, active as u8);
        }
    }
    out
}
