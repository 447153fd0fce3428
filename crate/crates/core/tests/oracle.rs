use approx::assert_relative_eq;
use guessbound::bounds::{Kind, Method};
use guessbound::meshlp::build_mesh;
use guessbound::oracle::{
    binomial_threshold, cdf_zipf, coverage_trial, make_mesh_aligned, make_uniform, make_zipf, round_to_mesh,
    run_coverage, CoverageConfig, KnownDistribution, OracleError, RoundedHistogram, Rounding,
};
use guessbound::schedule::Schedule;
use proptest::prelude::*;

#[test]
fn uniform_lambda() {
    let u = make_uniform::<f64>(100).unwrap();
    assert_relative_eq!(u.probs()[0], 0.01, max_relative = 1e-15);
    assert_relative_eq!(u.exact_lambda(25), 0.25, max_relative = 1e-12);
    assert_eq!(u.exact_lambda(0), 0.0);
    assert_eq!(u.exact_lambda(1_000), 1.0);
    assert!(make_uniform::<f64>(0).is_err());
}

#[test]
fn zipf_hand_values() {
    let z = make_zipf::<f64>(3, 1.0).unwrap();
    for (p, want) in z.probs().iter().zip([6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0]) {
        assert_relative_eq!(*p, want, max_relative = 1e-14);
    }
    assert_relative_eq!(z.exact_lambda(2), 9.0 / 11.0, max_relative = 1e-14);
    let flat = make_zipf::<f64>(50, 0.0).unwrap();
    assert!(flat.probs().iter().all(|&p| (p - 0.02).abs() < 1e-15));
}

#[test]
fn invalid_distributions_rejected() {
    let bad = |p: Vec<f64>| KnownDistribution::<f64>::from_probs("x", p);
    assert!(matches!(bad(vec![]), Err(OracleError::InvalidDistribution(_))));
    assert!(bad(vec![0.4, 0.6]).is_err());
    assert!(bad(vec![0.5, 0.4]).is_err());
    assert!(bad(vec![1.0, 0.0]).is_err());
    assert!(bad(vec![0.6, 0.4]).is_ok());
}

#[test]
fn mesh_aligned_round_trip() {
    let mesh = build_mesh::<f64>(1, 10.0).unwrap();
    let h = vec![0, 5, 50, 0, 0];
    let d = make_mesh_aligned(&mesh, &h).unwrap();
    assert_eq!(d.support(), 55);
    assert_eq!(&d.probs()[..5], &[mesh.x(2); 5]);
    assert_eq!(d.probs()[5], mesh.x(3));
    assert_eq!(d.mesh_histogram(), Some(h.as_slice()));
    let (back, deficit) = round_to_mesh(&mesh, &d);
    assert_eq!(back, h);
    assert!(deficit.abs() < 1e-12);
    assert!(make_mesh_aligned(&mesh, &h[1..]).is_err());
    assert!(make_mesh_aligned(&mesh, &[0, 6, 50, 0, 0]).is_err());
}

#[test]
fn rounding_a_zipf_onto_the_mesh() {
    let s = Schedule { q: 1.05, ..Schedule::default() };
    let mesh = s.mesh::<f64>(100_000).unwrap();
    let z = make_zipf::<f64>(50_000, 0.8).unwrap();
    let (h, deficit) = round_to_mesh(&mesh, &z);
    assert!((0.0..mesh.x_min()).contains(&deficit));
    let aligned = make_mesh_aligned(&mesh, &h).unwrap();
    // Exact histogram satisfies every band and mass row of the feasibility programs.
    let down = aligned.rounded_histogram(&mesh, Rounding::Down);
    let up = aligned.rounded_histogram(&mesh, Rounding::Up);
    let exact = RoundedHistogram::from_counts(&h);
    assert_eq!(down, exact);
    assert_eq!(up, exact);
}

#[test]
fn single_outcome_sampling() {
    let one = make_uniform::<f64>(1).unwrap();
    let s = one.sample(50, 3);
    assert_eq!(s.n(), 50);
    assert_eq!(s.frequency_table().distinct(), 1);
}

#[test]
fn sampling_is_seeded() {
    let z = make_zipf::<f64>(1_000, 1.0).unwrap();
    let a = z.sample(2_000, 42).frequency_table();
    let b = z.sample(2_000, 42).frequency_table();
    let c = z.sample(2_000, 43).frequency_table();
    let pairs = |t: &guessbound::corpus::FrequencyTable| t.iter().map(|(k, v)| (k.to_vec(), v)).collect::<Vec<_>>();
    assert_eq!(pairs(&a), pairs(&b));
    assert_ne!(pairs(&a), pairs(&c));
}

#[test]
fn sample_frequencies_match_probabilities() {
    let u = make_uniform::<f64>(100).unwrap();
    let t = u.sample(100_000, 7).frequency_table();
    assert_eq!(t.distinct(), 100);
    // Binomial(1e5, 0.01) has σ ≈ 31.5.
    for i in 1..=100 {
        let c = t.count_of(format!("pw{i}").as_bytes()) as f64;
        assert!((c - 1_000.0).abs() < 5.0 * 31.5, "pw{i}: {c}");
    }
}

#[test]
fn zipf_cdf_values() {
    assert_relative_eq!(cdf_zipf::<f64>(0.0374, 1, 1), 1.0, max_relative = 1e-15);
    assert_relative_eq!(cdf_zipf::<f64>(0.0, 10, 3), 0.3, max_relative = 1e-15);
    assert_relative_eq!(cdf_zipf::<f64>(1.0, 3, 2), 9.0 / 11.0, max_relative = 1e-14);
    assert_eq!(cdf_zipf::<f64>(1.0, 3, 10), 1.0);
    let z = make_zipf::<f64>(5_000, 0.9).unwrap();
    for g in [1, 10, 100, 4_999] {
        assert_relative_eq!(cdf_zipf::<f64>(0.9, 5_000, g), z.exact_lambda(g), max_relative = 1e-12);
    }
}

#[test]
fn threshold_arithmetic() {
    assert_relative_eq!(binomial_threshold(0.01, 500), 0.01 + 3.0 * (0.0099f64 / 500.0).sqrt(), max_relative = 1e-15);
    assert_eq!(binomial_threshold(0.0, 10), 0.0);
}

#[test]
fn coverage_rejects_bad_configs() {
    let u = make_uniform::<f64>(10).unwrap();
    let s = Schedule::default();
    assert!(coverage_trial(&u, 1_000, &[1], &[Method::FrequencyUb], 0, 0, &s).is_err());
    assert!(coverage_trial(&u, 1_000, &[1], &[Method::ExtendedLb], 1, 0, &s).is_err());
    assert!(coverage_trial(&u, 1_000, &[1], &[Method::Best], 1, 0, &s).is_err());
}

#[test]
fn coverage_of_a_uniform() {
    let u = make_uniform::<f64>(100).unwrap();
    let grid = [1, 10, 50, 99, 100, 1_000];
    let methods = [Method::FrequencyUb, Method::SamplingLb, Method::PriorLb];
    let run = coverage_trial(&u, 10_000, &grid, &methods, 300, 1_000, &Schedule::default()).unwrap();
    let r = &run.report;
    assert_eq!(r.trials, 300);
    assert_eq!(run.traces.len(), 300);
    for m in methods {
        let c = r.method(m).unwrap();
        assert_eq!(c.kind, m.kind());
        assert!(c.max_rate <= binomial_threshold(0.01, 300), "{m}: {}", c.max_rate);
        for g in &c.per_g {
            assert_relative_eq!(g.rate, g.violations as f64 / 300.0);
        }
    }
    let s = r.method(Method::SamplingLb).unwrap();
    assert_eq!(s.per_g.len(), grid.len());
    assert_eq!(s.per_g[3].truth, 0.99);
    assert!(run.traces.iter().all(|t| t.sampling_plateau.is_some()));
    // Every trial counts at most once in the any-violation tally.
    assert!(s.trials_with_any_violation <= 300);
    let w = r.widths.iter().find(|w| w.g == 10).unwrap();
    assert!(w.mean_width >= 0.0);
}

#[test]
fn coverage_is_reproducible() {
    let z = make_zipf::<f64>(2_000, 1.0).unwrap();
    let mut config = CoverageConfig::new(
        2_000,
        vec![1, 10, 100],
        vec![Method::FrequencyUb, Method::SamplingLb],
        20,
        5,
        Schedule::default(),
    );
    config.prior_l = vec![];
    let a = run_coverage(&z, &config).unwrap();
    let b = run_coverage(&z, &config).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.traces, b.traces);
    let mut csv = Vec::new();
    a.write_traces_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("trial,seed,method,g,value,truth\n"));
    assert_eq!(text.lines().count(), 1 + 20 * 6);
}

#[test]
fn lp_coverage_small() {
    let z = make_zipf::<f64>(5_000, 0.8).unwrap();
    let s = Schedule { q: 1.05, ..Schedule::default() };
    let config = CoverageConfig::new(10_000, vec![100, 1_000, 10_000], vec![Method::LpLb, Method::LpUb], 4, 9, s);
    let run = run_coverage(&z, &config).unwrap();
    assert_eq!(run.report.lp_bracket.len(), 3);
    assert_eq!(run.report.lp_bracket_max_rate(), 0.0);
    assert_eq!(run.report.method(Method::LpUb).unwrap().kind, Kind::Upper);
    for w in &run.report.widths {
        assert!(w.mean_width > 0.0 && w.mean_width <= 1.0 + 1e-9);
    }
}

proptest! {
    #[test]
    fn zipf_lambda_is_a_cdf(k in 1u64..3_000, s in 0.0f64..2.0, g in 0u64..4_000) {
        let z = make_zipf::<f64>(k, s).unwrap();
        let l = z.exact_lambda(g);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&l));
        prop_assert!(z.exact_lambda(g + 1) >= l);
        // Top-g of a non-increasing distribution beats the uniform share.
        prop_assert!(l >= (g.min(k) as f64 / k as f64) - 1e-12);
    }
}
