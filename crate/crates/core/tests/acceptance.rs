//! Acceptance gate. Runs each criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails. Pass criterion numbers as
//! arguments to run a subset: `cargo test --test acceptance -- 1 9`.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{
    best_k_term, block_instance, dense_posterior, l0_oracle, rel_err, sparse_instance, toeplitz,
};
use csrecon::bench::{gen_block_sparse_mmv, run_benchmark, ExperimentSpec, RunOptions};
use csrecon::irls::{birls, irls_lp, ksparse_approx, l0_bruteforce, mfocuss};
use csrecon::rng::SeededRng;
use csrecon::sbl::{bsbl_bo, bsbl_em, posterior_moments, pruned_by, st_sbl, SbState};
use csrecon::transforms::{dct_line, hilbert_envelope, idct_line};
use csrecon::{make_block_partition, MmvProblem, SamplingRatio, SmvProblem, SolverConfig};
use nalgebra::{DMatrix, DVector};

/// Outcome of one criterion: whether it held and what was measured.
struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria = [
        Criterion {
            id: 1,
            name: "transform suite",
            budget: Some(secs(5)),
            run: transforms,
        },
        Criterion {
            id: 2,
            name: "posterior oracle equivalence",
            budget: Some(secs(10)),
            run: posterior_oracle,
        },
        Criterion {
            id: 3,
            name: "reduction identities",
            budget: Some(secs(30)),
            run: reductions,
        },
        Criterion {
            id: 4,
            name: "exact-recovery phase tests",
            budget: Some(secs(180)),
            run: exact_recovery,
        },
        Criterion {
            id: 5,
            name: "dual-prior advantage",
            budget: Some(secs(120)),
            run: dual_prior,
        },
        Criterion {
            id: 6,
            name: "EM monotonicity",
            budget: None,
            run: em_monotone,
        },
        Criterion {
            id: 7,
            name: "pruning semantics",
            budget: None,
            run: pruning,
        },
        Criterion {
            id: 8,
            name: "end-to-end ordering",
            budget: Some(secs(900)),
            run: end_to_end,
        },
        Criterion {
            id: 9,
            name: "k-sparse oracle optimality",
            budget: None,
            run: ksparse_optimal,
        },
        Criterion {
            id: 10,
            name: "determinism",
            budget: None,
            run: determinism,
        },
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria
        .iter()
        .filter(|c| wanted.is_empty() || wanted.contains(&c.id))
    {
        ran += 1;
        let start = Instant::now();
        let mut verdict = match panic::catch_unwind(AssertUnwindSafe(c.run)) {
            Ok(v) => v,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Verdict::new(false, format!("panicked: {msg}"))
            }
        };
        let elapsed = start.elapsed();
        if let Some(budget) = c.budget {
            if elapsed > budget {
                verdict.pass = false;
                verdict.detail += &format!("; over the {}s budget", budget.as_secs());
            }
        }
        if !verdict.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} ({}): {} [{:.1}s]",
            if verdict.pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            verdict.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn random_vec(m: usize, rng: &mut SeededRng) -> DVector<f64> {
    DVector::from_fn(m, |_, _| rng.gaussian())
}

fn transforms() -> Verdict {
    let mut rng = SeededRng::new(1);
    let mut worst_round: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    for m in [8, 512, 1024] {
        let x = random_vec(m, &mut rng);
        let c = dct_line(&x).unwrap();
        worst_energy =
            worst_energy.max((c.norm_squared() - x.norm_squared()).abs() / x.norm_squared());
        worst_round = worst_round.max((idct_line(&c).unwrap() - &x).amax());
    }
    // Tukey-windowed cosine; the envelope is checked where the window is flat.
    let m = 512;
    let taper = 64;
    let window = |t: usize| {
        let edge = t.min(m - 1 - t);
        if edge >= taper {
            1.0
        } else {
            0.5 - 0.5 * (std::f64::consts::PI * edge as f64 / taper as f64).cos()
        }
    };
    let x = DVector::from_fn(m, |t, _| {
        window(t) * (2.0 * std::f64::consts::PI * 0.1 * t as f64).cos()
    });
    let env = hilbert_envelope(&x).unwrap();
    let env_err = (taper + 32..m - taper - 32)
        .map(|t| (env[t] - 1.0).abs())
        .fold(0.0, f64::max);
    Verdict::new(
        worst_round < 1e-10 && worst_energy < 1e-10 && env_err < 2e-2,
        format!(
            "round trip {worst_round:.1e}, Parseval {worst_energy:.1e} (tol 1e-10); envelope error {env_err:.1e} (tol 2e-2)"
        ),
    )
}

fn posterior_oracle() -> Verdict {
    let mut rng = SeededRng::new(2);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let d = [1, 2, 4, 8][case % 4];
        let g = 1 + rng.below(64 / d);
        let m = d * g;
        let n = 1 + rng.below(m);
        let a = common::gaussian(n, m, case as u64 + 100);
        let y = random_vec(n, &mut rng);
        let gamma: Vec<f64> = (0..g).map(|_| 0.05 + 3.0 * rng.uniform()).collect();
        let r = 1.8 * rng.uniform() - 0.9;
        let lambda = 10f64.powf(-3.0 + 3.0 * rng.uniform());
        let b = toeplitz(d, r);
        let state = SbState {
            gamma: gamma.clone(),
            intra_corr: b.clone(),
            inter_corr: DMatrix::identity(1, 1),
            active: vec![true; g],
        };
        let y1 = DMatrix::from_column_slice(n, 1, y.as_slice());
        let got = posterior_moments(&a, &y1, &state, lambda).unwrap();
        let (mean, cov) = dense_posterior(&a, &y, &gamma, &b, lambda);
        worst = worst.max((got.mean.column(0) - &mean).amax());
        for i in 0..g {
            worst = worst.max((&got.block_covs[i] - cov.view((d * i, d * i), (d, d))).amax());
        }
    }
    Verdict::new(
        worst < 1e-9,
        format!("50 instances, max deviation {worst:.1e} (tol 1e-9)"),
    )
}

fn reductions() -> Verdict {
    let traced = |iters| SolverConfig {
        trace: true,
        max_iters: iters,
        ..SolverConfig::default()
    };
    let mut st_worst: f64 = 0.0;
    let mut st_iters = usize::MAX;
    for seed in 0..5 {
        let m = 64;
        let a = common::gaussian(24, m, seed + 10);
        let x = gen_block_sparse_mmv(m, 4, 4, 3, 0.5, 0.8, seed).unwrap();
        let y = &a * &x;
        let part = make_block_partition(m, 4).unwrap();
        let st = st_sbl(
            &MmvProblem::new(&a, y.clone(), 1e-6).unwrap(),
            &part,
            &traced(20),
        )
        .unwrap();
        for j in 0..4 {
            let prob = SmvProblem::new(&a, y.column(j).into_owned(), 1e-6).unwrap();
            let em = bsbl_em(&prob, &part, &traced(20)).unwrap();
            let mine: Vec<_> = st.trace.iter().filter(|r| r.group == j).collect();
            if mine.len() != em.trace.len() {
                return Verdict::new(
                    false,
                    format!(
                        "ST-SBL ran {} iterations, EM {}",
                        mine.len(),
                        em.trace.len()
                    ),
                );
            }
            st_iters = st_iters.min(em.trace.len());
            for (s, e) in mine.iter().zip(&em.trace) {
                st_worst = st_worst.max((&s.iterate - &e.iterate).amax());
            }
        }
    }

    let mut irls_worst: f64 = 0.0;
    for seed in 0..10 {
        let (a, _, y) = sparse_instance(48, 20, 5, seed);
        let cfg = traced(400);
        let base = irls_lp(
            &SmvProblem::new(&a, y.clone(), 0.0).unwrap(),
            0.9,
            None,
            &cfg,
        )
        .unwrap();
        let part = make_block_partition(48, 1).unwrap();
        let b = birls(
            &SmvProblem::new(&a, y.clone(), 0.0).unwrap(),
            0.9,
            &part,
            &cfg,
        )
        .unwrap();
        let y1 = DMatrix::from_column_slice(20, 1, y.as_slice());
        let f = mfocuss(&MmvProblem::new(&a, y1, 0.0).unwrap(), 0.9, &cfg).unwrap();
        for other in [&b, &f] {
            if other.trace.len() != base.trace.len() {
                return Verdict::new(false, "iteration counts differ from IRLS");
            }
            for (o, t) in other.trace.iter().zip(&base.trace) {
                irls_worst = irls_worst.max((&o.iterate - &t.iterate).amax());
            }
        }
    }
    Verdict::new(
        st_worst < 1e-6 && st_iters >= 20 && irls_worst < 1e-10,
        format!(
            "ST-SBL(L'=1) vs BSBL-EM {st_worst:.1e} over {st_iters} iterations (tol 1e-6); BIRLS(d=1)/MFOCUSS(L=1) vs IRLS {irls_worst:.1e} (tol 1e-10)"
        ),
    )
}

fn exact_recovery() -> Verdict {
    let cfg = SolverConfig::default();
    // Slow instances need a few thousand iterations to reach the floor.
    let l1_cfg = SolverConfig {
        max_iters: 10_000,
        ..SolverConfig::default()
    };
    let (mut l0_ok, mut l1_ok, mut l1_converged) = (0, 0, 0);
    for seed in 0..100 {
        let (a, x, y) = sparse_instance(16, 8, 2, seed);
        let prob = SmvProblem::new(&a, y.clone(), 0.0).unwrap();
        let l0 = l0_bruteforce(&prob, 4).unwrap();
        let l0x = l0.vector();
        if l0.exact == Some(true) && (&l0x - &x).amax() < 1e-8 {
            l0_ok += 1;
        }
        // The l1 solution matches when it lands on the same support with
        // values agreeing to 1e-3 relative; IRLS run at the default
        // smoothing floor of 1e-8 resolves values to about 1e-4.
        let l1 = irls_lp(&prob, 1.0, None, &l1_cfg).unwrap();
        l1_converged += l1.converged as usize;
        let l1 = l1.vector();
        let oracle = l0_oracle(&a, &y, 4).unwrap();
        let support: Vec<usize> = (0..16).filter(|&i| oracle[i] != 0.0).collect();
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|&i, &j| l1[j].abs().total_cmp(&l1[i].abs()));
        let mut top = order[..support.len()].to_vec();
        top.sort_unstable();
        if top == support && (&l1 - &oracle).amax() <= 1e-3 * oracle.amax() {
            l1_ok += 1;
        }
    }

    let part = make_block_partition(64, 4).unwrap();
    let (mut em_ok, mut bo_ok) = (0, 0);
    for seed in 0..100 {
        let (a, x, y) = block_instance(64, 32, 4, 2, seed);
        let prob = SmvProblem::new(&a, y, 1e-8).unwrap();
        if rel_err(&bsbl_em(&prob, &part, &cfg).unwrap().vector(), &x) < 1e-3 {
            em_ok += 1;
        }
        if rel_err(&bsbl_bo(&prob, &part, &cfg).unwrap().vector(), &x) < 1e-3 {
            bo_ok += 1;
        }
    }
    Verdict::new(
        l0_ok == 100 && l1_ok >= 90 && em_ok >= 95 && bo_ok >= 95,
        format!(
            "l0 exact {l0_ok}/100 (need 100); IRLS p=1 = l0 {l1_ok}/100 (need 90, {l1_converged} converged); BSBL-EM {em_ok}/100, BSBL-BO {bo_ok}/100 (need 95)"
        ),
    )
}

fn dual_prior() -> Verdict {
    let (m, k) = (64, 8);
    let n = k + 2;
    let cfg = SolverConfig::default();
    let (mut dual_ok, mut plain_fail) = (0, 0);
    for seed in 0..100 {
        let (a, x, y) = sparse_instance(m, n, k, seed);
        let support: Vec<usize> = (0..m).filter(|&i| x[i] != 0.0).collect();
        let prob = SmvProblem::new(&a, y, 0.0).unwrap();
        let dual = irls_lp(&prob, 1.0, Some(&support), &cfg).unwrap().vector();
        if (&dual - &x).amax() <= 1e-8 * x.amax() {
            dual_ok += 1;
        }
        let plain = irls_lp(&prob, 1.0, None, &cfg).unwrap().vector();
        if rel_err(&plain, &x) > 1e-3 {
            plain_fail += 1;
        }
    }
    Verdict::new(
        dual_ok == 100 && plain_fail >= 50,
        format!(
            "M={m} k={k} N={n}: dual prior exact {dual_ok}/100 (need 100); empty-support l1 failed {plain_fail}/100 (need 50)"
        ),
    )
}

fn em_monotone() -> Verdict {
    let cfg = SolverConfig {
        trace: true,
        ..SolverConfig::default()
    };
    let part = make_block_partition(64, 4).unwrap();
    let mut rises = 0;
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for seed in 0..20 {
        let (a, x, y) = block_instance(64, 32, 4, 3, seed);
        // Light measurement noise keeps the evidence bounded below.
        let mut rng = SeededRng::new(seed + 500);
        let noisy = y + DVector::from_fn(32, |_, _| 1e-3 * x.norm() * rng.gaussian());
        let r = bsbl_em(&SmvProblem::new(&a, noisy, 1e-6).unwrap(), &part, &cfg).unwrap();
        let obj: Vec<f64> = r.trace.iter().map(|t| t.objective.unwrap()).collect();
        for w in obj.windows(2) {
            steps += 1;
            let rise = w[1] - w[0];
            if rise > 1e-8 {
                rises += 1;
                worst = worst.max(rise);
            }
        }
    }
    Verdict::new(
        rises == 0,
        format!("20 instances, {steps} steps, {rises} increases beyond 1e-8 (largest {worst:.1e})"),
    )
}

fn pruning() -> Verdict {
    let part = make_block_partition(64, 4).unwrap();
    let high_cfg = SolverConfig {
        trace: true,
        prune_threshold: 1e-8,
        ..SolverConfig::default()
    };
    let low_cfg = SolverConfig {
        prune_threshold: 2.22e-16,
        ..high_cfg.clone()
    };
    let (mut nonzero, mut violations, mut pruned_total) = (0, 0, 0);
    for seed in 0..20 {
        let (a, _, y) = block_instance(64, 32, 4, 2, seed);
        let prob = SmvProblem::new(&a, y, 1e-8).unwrap();
        let high = bsbl_em(&prob, &part, &high_cfg).unwrap();
        for rec in &high.trace {
            for b in (0..16).filter(|&b| !rec.active[b]) {
                pruned_total += 1;
                nonzero += rec
                    .iterate
                    .rows(b * 4, 4)
                    .iter()
                    .filter(|v| v.to_bits() != 0)
                    .count();
            }
            // Same iterate, lower threshold: its pruned set must sit inside
            // the higher threshold's.
            let lo = pruned_by(&rec.hyper, 2.22e-16);
            let hi = pruned_by(&rec.hyper, 1e-8);
            violations += lo.iter().filter(|b| !hi.contains(b)).count();
        }
        let kept = high.active_blocks.clone().unwrap_or_default();
        for b in (0..16).filter(|b| !kept.contains(b)) {
            nonzero += high
                .estimate
                .rows(b * 4, 4)
                .iter()
                .filter(|v| v.to_bits() != 0)
                .count();
        }
        let low = bsbl_em(&prob, &part, &low_cfg).unwrap();
        for (h, l) in high.trace.iter().zip(&low.trace) {
            violations += (0..16).filter(|&b| h.active[b] && !l.active[b]).count();
        }
    }
    Verdict::new(
        nonzero == 0 && violations == 0 && pruned_total > 0,
        format!(
            "20 instances: {pruned_total} pruned block-iterations, {nonzero} nonzero entries in pruned blocks, {violations} inclusion violations"
        ),
    )
}

const END_TO_END: &str = r#"
spec_version = 1
seed = 0
psnr_domain = "bmode"
ratios = ["1/3", "1/2"]
[[inputs]]
kind = "phantom"
id = "phantom"
[[solvers]]
id = "st-sbl"
block_size = 32
col_block = 1
[[solvers]]
id = "st-sbl"
block_size = 32
col_block = 4
[[solvers]]
id = "birls"
block_size = 32
[[solvers]]
id = "l1"
"#;

fn end_to_end() -> Verdict {
    let spec = ExperimentSpec::from_toml(END_TO_END).unwrap();
    let report = run_benchmark(&spec, &RunOptions::default()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for ratio in [
        SamplingRatio::new(1, 3).unwrap(),
        SamplingRatio::new(1, 2).unwrap(),
    ] {
        let row = |label: &str| report.find("phantom", label, ratio).unwrap();
        let db = |label: &str| row(label).psnr.map_or(f64::NEG_INFINITY, |p| p.as_f64());
        let (st1, st4, bi, l1) = (
            db("ST-SBL 1/32"),
            db("ST-SBL 4/32"),
            db("BIRLS 32"),
            db("l1"),
        );
        let (t1, t4) = (row("ST-SBL 1/32").runtime_s, row("ST-SBL 4/32").runtime_s);
        let ok = [st1 > l1, bi > l1, t4 < t1];
        pass &= ok.iter().all(|&b| b);
        let mark = |b: bool| if b { "ok" } else { "VIOLATED" };
        parts.push(format!(
            "{ratio}: ST-SBL 1/32 {st1:.2} dB vs l1 {l1:.2} dB {}; BIRLS 32 {bi:.2} dB vs l1 {}; ST-SBL 4/32 {st4:.2} dB in {t4:.1}s vs 1/32 in {t1:.1}s {}",
            mark(ok[0]),
            mark(ok[1]),
            mark(ok[2])
        ));
    }
    Verdict::new(pass, parts.join(" | "))
}

fn ksparse_optimal() -> Verdict {
    let mut rng = SeededRng::new(9);
    let mut mismatches = 0;
    for _ in 0..200 {
        let m = 1 + rng.below(12);
        let k = rng.below(m + 1);
        let c = random_vec(m, &mut rng);
        if ksparse_approx(&c, k) != best_k_term(&c, k) {
            mismatches += 1;
        }
    }
    Verdict::new(
        mismatches == 0,
        format!("200 vectors, M <= 12: {mismatches} mismatches"),
    )
}

const DETERMINISM: &str = r#"
spec_version = 1
seed = 7
ratios = ["1/3", "1/2"]
timing = false
[[inputs]]
kind = "phantom"
id = "phantom-a"
depth = 128
lines = 8
scatterers = 10
seed = 3
[[inputs]]
kind = "phantom"
id = "phantom-b"
depth = 64
lines = 8
scatterers = 6
seed = 4
psnr_domain = "raw-rescaled"
[[solvers]]
id = "st-sbl"
block_size = 16
col_block = 2
[[solvers]]
id = "bsbl-bo"
block_size = 16
[[solvers]]
id = "t-msbl"
col_block = 4
[[solvers]]
id = "birls"
block_size = 16
[[solvers]]
id = "mfocuss"
[[solvers]]
id = "bomp"
block_size = 16
k = 2
[[solvers]]
id = "l1"
"#;

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(&spec, DETERMINISM).unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "8", "1", "8"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_csrecon"))
            .arg("bench")
            .arg(&spec)
            .arg("-o")
            .arg(&out)
            .args(["--threads", threads])
            .status()
            .unwrap();
        if !status.success() {
            return Verdict::new(false, format!("bench exited with {status}"));
        }
        outputs.push(std::fs::read(&out).unwrap());
    }
    let rows = String::from_utf8_lossy(&outputs[0]).lines().count() - 1;
    let identical = outputs.iter().all(|o| *o == outputs[0]);
    Verdict::new(
        identical && rows == 28,
        format!(
            "{rows} rows, runs at 1 and 8 threads {}",
            if identical {
                "byte-identical"
            } else {
                "differ"
            }
        ),
    )
}
