//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per check and
//! exits non-zero when any check fails.
//!
//! The real-corpus check runs only when `GUESSBOUND_ROCKYOU` names a corpus file;
//! `GUESSBOUND_ROCKYOU_FORMAT` selects its format (default `counted`).

// The reference constant keeps the full precision of its oracle.
#![allow(clippy::excessive_precision)]

use std::process::ExitCode;
use std::time::Instant;

use guessbound::bounds::{mcdiarmid_epsilon, prior_lb_best, sampling_lb, slack_t, Method, SplitBoundParams, Target};
use guessbound::cli;
use guessbound::corpus::{load_corpus, CorpusFormat};
use guessbound::meshlp::{bpdf, LpBounder, LpContext, MicroLpSolver};
use guessbound::oracle::{
    binomial_threshold, make_mesh_aligned, make_zipf, round_to_mesh, run_coverage, CoverageConfig, Rounding,
    VIOLATION_TOL,
};
use guessbound::schedule::Schedule;

// Pinned tolerances.
const BUDGET: f64 = 0.01;
const PLATEAU_SHARE: f64 = 0.5;
const IID_PASS_SHARE: f64 = 0.98;
const GOOD_TURING_TOL: f64 = 0.02;
const BPDF_SUM_TOL: f64 = 1e-9;
const BPDF_REL_TOL: f64 = 1e-6;
const INVERSE_REL_TOL: f64 = 1e-12;
const LP1_GAP: f64 = 0.05;
const ROCKYOU_LP_FLOOR: f64 = 0.6264;
const ROCKYOU_PRIOR: f64 = 0.5395;
const ROCKYOU_PRIOR_TOL: f64 = 0.01;

/// (1 − x)^n for x = 1e-8, n = 1e8, from a 50-digit reference.
const BPDF_ZERO_REFERENCE: f64 = 0.367_879_439_332_045_108_07;

type Check = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn zipf_family() -> guessbound::KnownDistributionF64 {
    make_zipf(100_000, 0.8).expect("valid zipf")
}

fn elementary_coverage() -> Verdict {
    let n = 100_000;
    let trials = 500;
    let grid: Vec<u64> = (0..=18).map(|k| 1u64 << k).collect();
    let methods = vec![Method::FrequencyUb, Method::SamplingLb, Method::PriorLb];
    let config = CoverageConfig::new(n, grid, methods.clone(), trials, 1, Schedule::default());
    let run = run_coverage(&zipf_family(), &config).expect("coverage run");
    let thr = binomial_threshold(BUDGET, trials);
    let mut ok = true;
    let mut parts = Vec::new();
    for m in methods {
        let rate = run.report.method(m).expect("method present").max_rate;
        ok &= rate <= thr;
        parts.push(format!("{m} {rate:.4}"));
    }
    verdict(ok, format!("max violation rate {} (threshold {thr:.4})", parts.join(", ")))
}

fn lp_coverage() -> Verdict {
    let n = 100_000;
    let trials = 200;
    let schedule = Schedule { q: 1.05, ..Schedule::default() };
    let lp_grid = vec![
        100,
        1_000,
        5_000,
        10_000,
        20_000,
        30_000,
        50_000,
        100_000,
        1_000_000,
        10_000_000,
        100_000_000,
        1_000_000_000,
    ];
    let mut config =
        CoverageConfig::new(n, vec![1], vec![Method::SamplingLb, Method::LpLb, Method::LpUb], trials, 1, schedule);
    config.lp_g_grid = lp_grid;
    let run = run_coverage(&zipf_family(), &config).expect("coverage run");
    let r = &run.report;
    let thr = binomial_threshold(2.0 * BUDGET, trials);
    let bracket = r.lp_bracket_max_rate();
    let plateau = r.lp_above_sampling_plateau as f64 / trials as f64;
    verdict(
        bracket <= thr && plateau >= PLATEAU_SHARE,
        format!(
            "bracket failure {bracket:.4} (threshold {thr:.4}); lp_lb above the sampling plateau past Distinct(S) in {:.0}% of trials (need {:.0}%); above (n - unique)/n in {:.0}%",
            100.0 * plateau,
            100.0 * PLATEAU_SHARE,
            100.0 * r.lp_above_good_turing as f64 / trials as f64
        ),
    )
}

fn feasibility_oracle() -> Verdict {
    let n = 100_000;
    let trials = 300;
    let schedule = Schedule { q: 1.05, ..Schedule::default() };
    let mesh = schedule.mesh::<f64>(n).expect("mesh");
    let params = schedule.lp_params::<f64>(n).expect("params");
    let (h, _) = round_to_mesh(&mesh, &make_zipf::<f64>(50_000, 0.8).expect("valid zipf"));
    let dist = make_mesh_aligned(&mesh, &h).expect("mesh-aligned distribution");
    let down = dist.rounded_histogram(&mesh, Rounding::Down);
    let up = dist.rounded_histogram(&mesh, Rounding::Up);
    let exact = guessbound::oracle::RoundedHistogram::from_counts(&h);
    let mut misses = [0u32; 3];
    for trial in 0..trials {
        let enc = dist.sample(n, 10_000 + trial as u64).frequency_table().frequency_encoding();
        let ctx = LpContext::new(&mesh, &enc, &params).expect("context");
        let checks = [
            exact.max_violation(&ctx.lp1(1, 1, 1).expect("task 1")),
            down.max_violation(&ctx.feasibility(false)),
            up.max_violation(&ctx.feasibility(true)),
        ];
        for (m, v) in misses.iter_mut().zip(checks) {
            if v > VIOLATION_TOL {
                *m += 1;
            }
        }
    }
    let delta = schedule.lp_delta();
    let thr = binomial_threshold(delta, trials);
    let rates = misses.map(|m| m as f64 / trials as f64);
    verdict(
        rates.iter().all(|&r| r <= thr),
        format!(
            "true histogram outside the rows: task 1 {:.4}, task 2 {:.4}, task 3 {:.4} (threshold {thr:.4})",
            rates[0], rates[1], rates[2]
        ),
    )
}

fn iid_detection() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let n = 10_000;
    let dist = make_zipf::<f64>(20_000, 0.8).expect("valid zipf");
    let write = |seed: u64, copies: usize| {
        use std::io::Write;
        let path = dir.path().join(format!("draw{seed}_{copies}.txt"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path).expect("create"));
        for tok in dist.sample(n, seed).tokens() {
            for _ in 0..copies {
                f.write_all(tok).and_then(|_| f.write_all(b"\n")).expect("write");
            }
        }
        path
    };
    let check = |path: &std::path::Path| {
        let out = dir.path().join("verdict.json");
        cli::run(["guessbound", "check-iid", "--input", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
    };
    let tripled = check(&write(0, 3));
    let trials = 100;
    let passed = (0..trials).filter(|&s| check(&write(100 + s, 1)) == 0).count();
    let share = passed as f64 / trials as f64;
    verdict(
        tripled == 2 && share >= IID_PASS_SHARE,
        format!("tripled draw exits {tripled}; {passed}/{trials} independent draws exit 0"),
    )
}

fn good_turing_plateau() -> Verdict {
    let n = 100_000;
    let d = 25_000;
    let dist = zipf_family();
    let params = SplitBoundParams::<f64>::from_slack(d, 0.0).expect("t = 0");
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let part = dist.sample(n, 500 + seed).partition(d, seed).expect("partition");
        let d1 = part.d1().frequency_encoding();
        let g = d1.distinct();
        let p = sampling_lb(&part, g, &params, Target::DistributionLambda, 0.0).expect("bound");
        let gt = 1.0 - d1.unique() as f64 / d1.n() as f64;
        worst = worst.max((p.raw_value - gt).abs());
    }
    verdict(
        worst <= GOOD_TURING_TOL,
        format!("largest |bound - (1 - unique/|D1|)| over 50 seeds {worst:.4} (tolerance {GOOD_TURING_TOL})"),
    )
}

fn numerics() -> Verdict {
    let mut worst_sum: f64 = 0.0;
    for n in [10u64, 100, 1_000] {
        for x in [1e-6, 0.3, 0.99] {
            let total: f64 = (0..=n).map(|i| bpdf::<f64>(i, n, x).expect("bpdf")).sum();
            worst_sum = worst_sum.max((total - 1.0).abs());
        }
    }
    let b0 = bpdf::<f64>(0, 100_000_000, 1e-8).expect("bpdf");
    let b0_err = (b0 / BPDF_ZERO_REFERENCE - 1.0).abs();
    let mut worst_inv: f64 = 0.0;
    for (n, delta) in [(100u64, 0.05), (100_000, 0.00009), (69_301_337, 0.00009), (1_000_000_000, 1e-6)] {
        let e: f64 = mcdiarmid_epsilon(n, delta).expect("epsilon");
        worst_inv = worst_inv.max(((-2.0 * n as f64 * e * e).exp() / delta - 1.0).abs());
    }
    for (d, delta) in [(100u64, 0.05), (25_000, 0.00991), (10_000_000, 1e-4)] {
        let t: f64 = slack_t(d, delta).expect("slack");
        worst_inv = worst_inv.max(((-2.0 * t * t / d as f64).exp() / delta - 1.0).abs());
    }
    verdict(
        worst_sum <= BPDF_SUM_TOL && b0_err <= BPDF_REL_TOL && worst_inv <= INVERSE_REL_TOL,
        format!("bpdf sum error {worst_sum:.1e}, bpdf(0, 1e8, 1e-8) relative error {b0_err:.1e}, inversion error {worst_inv:.1e}"),
    )
}

fn exact_vs_rounded_programs() -> Verdict {
    let n = 100_000;
    let schedule = Schedule { q: 1.05, ..Schedule::default() };
    let mesh = schedule.mesh::<f64>(n).expect("mesh");
    let params = schedule.lp_params::<f64>(n).expect("params");
    let (h, _) = round_to_mesh(&mesh, &make_zipf::<f64>(50_000, 0.8).expect("valid zipf"));
    let dist = make_mesh_aligned(&mesh, &h).expect("mesh-aligned distribution");
    let enc = dist.sample(n, 7).frequency_table().frequency_encoding();
    let bounder = LpBounder::new(&mesh, &enc, &params).expect("bounder");
    let solver = MicroLpSolver::default();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for g in [100u64, 1_000, 10_000, 30_000, 100_000, 1_000_000] {
        let (lo1, hi1) = bounder.lp1(g, &solver).expect("exact program");
        let lo = bounder.lower(g, &solver).expect("lower").raw_value;
        let hi = bounder.upper(g, &solver).expect("upper").raw_value;
        let gap = (lo1.value - lo).abs().max((hi1.value - hi).abs());
        worst = worst.max(gap);
        detail.push(format!("G={g}: {:.3}/{:.3} vs {:.3}/{:.3}", lo1.value, hi1.value, lo, hi));
    }
    verdict(
        worst <= LP1_GAP,
        format!("largest gap {:.1} pp (limit {:.0} pp); {}", 100.0 * worst, 100.0 * LP1_GAP, detail.join("; ")),
    )
}

fn real_corpus() -> Verdict {
    let Some(path) = std::env::var_os("GUESSBOUND_ROCKYOU") else {
        return Verdict::Skip("GUESSBOUND_ROCKYOU not set".into());
    };
    let format: CorpusFormat =
        std::env::var("GUESSBOUND_ROCKYOU_FORMAT").unwrap_or_else(|_| "counted".into()).parse().expect("corpus format");
    let corpus = load_corpus(&path, format).expect("readable corpus");
    let enc = corpus.frequency_table().frequency_encoding();
    let stats = (enc.n(), enc.distinct(), enc.unique());
    let g = 130_000_000;
    let schedule = Schedule::default();
    let prior = prior_lb_best(
        &enc,
        g as f64 / enc.n() as f64,
        schedule.prior_j_range.0..=schedule.prior_j_range.1,
        schedule.prior_policy(),
        Target::DistributionLambda,
        schedule.delta1,
    )
    .expect("prior bound")
    .value;
    let mesh = schedule.mesh::<f64>(enc.n()).expect("mesh");
    let params = schedule.lp_params::<f64>(enc.n()).expect("params");
    let lp = LpBounder::new(&mesh, &enc, &params)
        .and_then(|b| b.lower(g, &MicroLpSolver::default()))
        .expect("LP lower bound")
        .value;
    verdict(
        stats == (32_603_388, 14_344_391, 11_884_632)
            && lp >= ROCKYOU_LP_FLOOR
            && (prior - ROCKYOU_PRIOR).abs() <= ROCKYOU_PRIOR_TOL,
        format!("N/distinct/unique {stats:?}; at G=1.3e8 LP lower {lp:.4}, prior {prior:.4}"),
    )
}

fn main() -> ExitCode {
    cli::init_threads();
    let checks: [Check; 8] = [
        ("1 elementary coverage", elementary_coverage),
        ("2 LP coverage and plateau", lp_coverage),
        ("3 feasibility oracle", feasibility_oracle),
        ("4 non-IID detection", iid_detection),
        ("5 Good-Turing plateau", good_turing_plateau),
        ("6 numerics", numerics),
        ("7 exact vs rounded LP", exact_vs_rounded_programs),
        ("8 real corpus", real_corpus),
    ];
    let only = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = false;
    for (name, check) in checks {
        if only.as_deref().is_some_and(|o| !name.starts_with(o)) {
            continue;
        }
        let start = Instant::now();
        let line = match check() {
            Verdict::Pass(d) => format!("PASS {name}: {d}"),
            Verdict::Fail(d) => {
                failed = true;
                format!("FAIL {name}: {d}")
            }
            Verdict::Skip(d) => format!("SKIP {name}: {d}"),
        };
        println!("{line} [{:.1}s]", start.elapsed().as_secs_f64());
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
