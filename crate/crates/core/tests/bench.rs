mod common;

use std::path::Path;
use std::process::Command;

use common::lag1_corr;
use csrecon::bench::{
    gen_block_sparse, gen_correlated_mmv, gen_phantom_rf, psnr, psnr_with_peak, pulse_template,
    run_benchmark, BenchReport, PhantomParams, Psnr, RunOptions, REPORT_HEADER,
};
use csrecon::io::write_frame;
use csrecon::rng::SeededRng;
use csrecon::transforms::DctPlan;
use csrecon::{BModeImage, RfFrame, SamplingRatio};
use nalgebra::DMatrix;

fn ratio(n: u64, d: u64) -> SamplingRatio {
    SamplingRatio::new(n, d).unwrap()
}

#[test]
fn psnr_examples() {
    let zeros = DMatrix::zeros(4, 4);
    let off = DMatrix::from_element(4, 4, 1e-2);
    match psnr_with_peak(&off, &zeros, 1.0).unwrap() {
        Psnr::Db(v) => assert!((v - 40.0).abs() < 1e-9, "{v}"),
        Psnr::Exact => panic!("not exact"),
    }
    let ones = BModeImage::new(DMatrix::from_element(3, 5, 1.0)).unwrap();
    let black = BModeImage::new(DMatrix::zeros(3, 5)).unwrap();
    assert_eq!(psnr(&black, &ones).unwrap(), Psnr::Db(0.0));
    assert_eq!(psnr(&ones, &ones).unwrap(), Psnr::Exact);
    assert_eq!(Psnr::Exact.to_string(), "inf");
    assert!(psnr(&black, &BModeImage::new(DMatrix::zeros(5, 3)).unwrap()).is_err());
}

#[test]
fn psnr_falls_as_noise_grows() {
    let mut rng = SeededRng::new(1);
    let reference = DMatrix::from_fn(64, 32, |_, _| rng.uniform());
    let mut last = f64::INFINITY;
    for var in [1e-6f64, 1e-4, 1e-2] {
        let mut noise = SeededRng::new(99);
        let noisy = reference.map(|v| v + var.sqrt() * noise.gaussian());
        let db = psnr_with_peak(&noisy, &reference, 1.0).unwrap().as_f64();
        assert!(db < last, "var {var}: {db} !< {last}");
        last = db;
    }
}

#[test]
fn block_sparse_generator_properties() {
    assert!(gen_block_sparse(64, 4, 0, 0.5, 1)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    let x = gen_block_sparse(64, 4, 3, 0.5, 2).unwrap();
    assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 12);
    assert!(gen_block_sparse(64, 5, 1, 0.5, 1).is_err());
    assert!(gen_block_sparse(64, 4, 17, 0.5, 1).is_err());

    let seqs: Vec<Vec<f64>> = (0..1000)
        .map(|s| {
            let x = gen_block_sparse(32, 32, 1, 0.8, s).unwrap();
            x.iter().copied().collect()
        })
        .collect();
    let r = lag1_corr(&seqs);
    assert!((r - 0.8).abs() < 0.05, "{r}");
}

#[test]
fn correlated_mmv_generator_properties() {
    assert!(gen_correlated_mmv(16, 4, 0, 0.5, 1)
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    let x = gen_correlated_mmv(32, 6, 5, 0.5, 3).unwrap();
    assert_eq!((0..32).filter(|&i| x.row(i).norm() > 0.0).count(), 5);

    let seqs: Vec<Vec<f64>> = (0..1000)
        .map(|s| {
            let x = gen_correlated_mmv(8, 16, 1, 0.9, s).unwrap();
            let i = (0..8).find(|&i| x.row(i).norm() > 0.0).unwrap();
            x.row(i).iter().copied().collect()
        })
        .collect();
    let r = lag1_corr(&seqs);
    assert!((r - 0.9).abs() < 0.05, "{r}");
}

#[test]
fn phantom_basics() {
    let empty = PhantomParams {
        depth: 64,
        lines: 3,
        scatterers: 0,
        ..PhantomParams::default()
    };
    assert!(gen_phantom_rf(&empty)
        .unwrap()
        .samples()
        .iter()
        .all(|&v| v == 0.0));

    // One scatterer: the line is the pulse shifted to the scatterer depth,
    // truncated at the frame edges.
    let one = PhantomParams {
        depth: 128,
        lines: 1,
        scatterers: 1,
        seed: 4,
        ..PhantomParams::default()
    };
    let frame = gen_phantom_rf(&one).unwrap();
    let line = frame.samples().column(0);
    let pulse = pulse_template(one.pulse_cycles, one.center_freq).unwrap();
    let peak = (0..128)
        .max_by(|&i, &j| line[i].abs().total_cmp(&line[j].abs()))
        .unwrap();
    let half = (pulse.len() - 1) / 2;
    let amp = line[peak] / pulse[half];
    for t in 0..128 {
        let k = t as i64 - peak as i64 + half as i64;
        let expected = if (0..pulse.len() as i64).contains(&k) {
            amp * pulse[k as usize]
        } else {
            0.0
        };
        assert!((line[t] - expected).abs() <= 1e-12 * amp.abs(), "t={t}");
    }
}

#[test]
fn default_phantom_is_compressible_and_reproducible() {
    let p = PhantomParams::default();
    let frame = gen_phantom_rf(&p).unwrap();
    assert_eq!(frame.samples().shape(), (512, 64));
    assert_eq!(gen_phantom_rf(&p).unwrap().samples(), frame.samples());

    let c = DctPlan::new(512)
        .unwrap()
        .forward_columns(frame.samples())
        .unwrap();
    for (j, col) in c.column_iter().enumerate() {
        let total = col.norm_squared();
        if total == 0.0 {
            continue;
        }
        let mut sq: Vec<f64> = col.iter().map(|v| v * v).collect();
        sq.sort_by(|a, b| b.total_cmp(a));
        let top: f64 = sq[..128].iter().sum();
        assert!(top / total >= 0.95, "line {j}: {}", top / total);
    }
}

const TINY_L0: &str = r#"
spec_version = 1
ratios = ["1/1"]
timing = false
[[inputs]]
kind = "file"
id = "tiny"
path = "tiny.rff"
[[solvers]]
id = "l0"
k = 4
"#;

fn run(text: &str, threads: usize) -> BenchReport {
    run_in(text, Path::new("."), threads)
}

fn run_in(text: &str, base: &Path, threads: usize) -> BenchReport {
    let mut spec = csrecon::bench::ExperimentSpec::from_toml(text).unwrap();
    spec.base_dir = base.to_path_buf();
    run_benchmark(
        &spec,
        &RunOptions {
            threads: Some(threads),
            timing: None,
        },
    )
    .unwrap()
}

/// A 16 x 3 frame whose lines have two DCT terms each.
fn write_sparse_frame(dir: &Path) {
    let mut c = DMatrix::zeros(16, 3);
    for (j, (a, b)) in [(2, 5), (3, 9), (1, 14)].into_iter().enumerate() {
        c[(a, j)] = 1.0 + j as f64;
        c[(b, j)] = -0.7;
    }
    let samples = DctPlan::new(16).unwrap().inverse_columns(&c).unwrap();
    write_frame(&dir.join("tiny.rff"), &RfFrame::new(samples).unwrap()).unwrap();
}

#[test]
fn identity_rate_l0_rows_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    write_sparse_frame(dir.path());
    let report = run_in(TINY_L0, dir.path(), 1);
    assert_eq!(report.rows.len(), 1);
    assert!(report.rows.iter().all(|r| r.exact()), "{}", report.to_csv());
}

const GRID: &str = r#"
spec_version = 1
ratios = ["1/3", "1/2"]
timing = false
[[inputs]]
kind = "phantom"
id = "small"
depth = 64
lines = 4
scatterers = 4
[[solvers]]
id = "st-sbl"
block_size = 32
col_block = 1
max_iters = 20
[[solvers]]
id = "st-sbl"
block_size = 32
col_block = 4
max_iters = 20
[[solvers]]
id = "bsbl-bo"
block_size = 32
max_iters = 20
[[solvers]]
id = "birls"
block_size = 32
max_iters = 20
[[solvers]]
id = "l1"
max_iters = 20
"#;

#[test]
fn grid_has_one_row_per_cell_and_is_deterministic() {
    let report = run(GRID, 1);
    assert_eq!(report.rows.len(), 10);
    for r in [ratio(1, 3), ratio(1, 2)] {
        for label in ["ST-SBL 1/32", "ST-SBL 4/32", "BSBL-BO 32", "BIRLS 32", "l1"] {
            assert!(
                report.find("small", label, r).is_some(),
                "missing {label} at {r}"
            );
        }
    }
    let csv = report.to_csv();
    assert!(csv.starts_with(REPORT_HEADER));
    assert_eq!(csv, run(GRID, 1).to_csv());
    assert_eq!(csv, run(GRID, 3).to_csv());
}

#[test]
fn failed_cells_still_produce_rows() {
    let text = r#"
spec_version = 1
ratios = ["1/2"]
timing = false
[[inputs]]
kind = "phantom"
id = "odd"
depth = 32
lines = 3
scatterers = 2
[[solvers]]
id = "st-sbl"
block_size = 8
col_block = 2
[[solvers]]
id = "l0"
k = 2
[[solvers]]
id = "bomp"
block_size = 8
k = 1
"#;
    let report = run(text, 1);
    assert_eq!(report.rows.len(), 3);
    let failed: Vec<_> = report.rows.iter().filter(|r| r.failed()).collect();
    assert_eq!(failed.len(), 2, "{}", report.to_csv());
    assert!(failed.iter().all(|r| r.failure.is_some()));
    let csv = report.to_csv();
    assert_eq!(csv.matches(",FAIL,").count(), 2);
    assert!(report.summary_csv().lines().count() == 4);
}

fn csrecon() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csrecon"))
}

fn ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn cli_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("f.rff");
    let meas = dir.path().join("m.csm");
    let img = dir.path().join("r.pgm");
    let reference = dir.path().join("ref.pgm");
    ok(csrecon().args([
        "phantom",
        "--depth",
        "64",
        "--lines",
        "4",
        "--scatterers",
        "3",
        "-o",
        p(&frame),
    ]));
    ok(csrecon().args([
        "sense",
        "-i",
        p(&frame),
        "-o",
        p(&meas),
        "--ratio",
        "1/2",
        "--seed",
        "3",
    ]));
    let out = ok(csrecon().args([
        "recover",
        "-i",
        p(&meas),
        "-o",
        p(&img),
        "--solver",
        "ksparse",
        "--k",
        "64",
        "--reference",
        p(&frame),
    ]));
    assert!(
        out.trim() == "inf" || out.trim().parse::<f64>().unwrap() > 40.0,
        "{out}"
    );
    assert!(img.exists());

    ok(csrecon().args([
        "recover",
        "-i",
        p(&meas),
        "-o",
        p(&reference),
        "--solver",
        "ksparse",
        "--k",
        "64",
        "--reference",
        p(&frame),
    ]));
    let score = ok(csrecon().args(["psnr", p(&img), p(&reference)]));
    assert_eq!(score.trim(), "inf");
}

#[test]
fn cli_bench_writes_csv_and_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    std::fs::write(&spec, TINY_L0).unwrap();
    write_sparse_frame(dir.path());
    let out = dir.path().join("out.csv");
    ok(csrecon().args(["bench", p(&spec), "-o", p(&out)]));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with(REPORT_HEADER));
    assert_eq!(csv.lines().count(), 2);

    let bad = csrecon()
        .args(["recover", "-i", "/nonexistent/m.csm", "-o", p(&out)])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("csrecon: "));
}
