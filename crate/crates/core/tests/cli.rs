use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use guessbound::bounds::{Kind, Method, Target};
use guessbound::cli::{read_curves_csv, write_curves_csv};
use guessbound::oracle::make_zipf;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn guessbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_guessbound")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_lines<'a>(dir: &Path, name: &str, lines: impl IntoIterator<Item = &'a str>) -> PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    for l in lines {
        writeln!(f, "{l}").unwrap();
    }
    path
}

/// Writes `n` draws from a Zipf distribution as a plain corpus, each draw repeated `copies` times.
fn zipf_corpus(dir: &Path, name: &str, n: u64, seed: u64, copies: usize) -> PathBuf {
    let sample = make_zipf::<f64>(20_000, 0.8).unwrap().sample(n, seed);
    let path = dir.join(name);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
    for tok in sample.tokens() {
        for _ in 0..copies {
            f.write_all(tok).unwrap();
            f.write_all(b"\n").unwrap();
        }
    }
    path
}

const GOLDEN_ARGS: [&str; 11] = [
    "analyze",
    "--format",
    "counted",
    "--methods",
    "frequency_ub,sampling_lb,prior_lb",
    "--g-grid",
    "1,10,100,1000,10000,50000,100000",
    "--seed",
    "7",
    "--out-format",
    "csv",
];

fn golden_run() -> Output {
    let input = fixture("zipf_counted.tsv");
    let mut args = GOLDEN_ARGS.to_vec();
    args.extend(["--input", input.to_str().unwrap()]);
    guessbound(&args)
}

#[test]
fn analyze_matches_golden_csv() {
    let out = golden_run();
    assert!(out.status.success(), "{}", stderr(&out));
    let got = read_curves_csv(out.stdout.as_slice()).unwrap();
    let want = read_curves_csv(std::fs::File::open(fixture("zipf_counted.golden.csv")).unwrap()).unwrap();
    assert_eq!(got.len(), want.len());
    for (a, b) in got.iter().zip(&want) {
        assert_eq!((a.kind, a.method, a.target), (b.kind, b.method, b.target));
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.g, q.g);
            assert!((p.value - q.value).abs() <= 1e-12, "{} at {}: {} vs {}", a.method, p.g, p.value, q.value);
            assert!((p.raw_value - q.raw_value).abs() <= 1e-12);
            assert_eq!(p.delta, q.delta);
        }
    }
    let err = stderr(&out);
    assert!(err.contains("delta audit: sampling_lb"));
    assert!(!err.contains("lp_lb"));
}

#[test]
fn grid_selects_rows() {
    let input = fixture("zipf_counted.tsv");
    let out = guessbound(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "counted",
        "--methods",
        "frequency_ub,sampling_lb",
        "--g-grid",
        "1,10,100",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curves = read_curves_csv(out.stdout.as_slice()).unwrap();
    // Two requested curves plus the lower and upper envelopes.
    assert_eq!(curves.len(), 4);
    for c in &curves {
        assert_eq!(c.points.iter().map(|p| p.g).collect::<Vec<_>>(), vec![1, 10, 100]);
    }
}

#[test]
fn csv_round_trip() {
    let text = std::fs::read(fixture("zipf_counted.golden.csv")).unwrap();
    let curves = read_curves_csv(text.as_slice()).unwrap();
    let mut again = Vec::new();
    write_curves_csv(&curves, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), String::from_utf8(text).unwrap());
    assert!(read_curves_csv("a,b\n1,2\n".as_bytes()).is_err());
}

#[test]
fn json_output_carries_the_audit() {
    let input = fixture("zipf_counted.tsv");
    let out = guessbound(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "counted",
        "--methods",
        "frequency_ub",
        "--g-grid",
        "10",
        "--out-format",
        "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["n"], 40_407);
    assert_eq!(doc["distinct"], 6_000);
    assert!(doc["audit"].as_array().unwrap().len() >= 6);
    assert_eq!(doc["curves"][0]["method"], "frequency_ub");
}

#[test]
fn lp_bounds_bracket_and_envelope() {
    let input = fixture("zipf_counted.tsv");
    let out = guessbound(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "counted",
        "--methods",
        "frequency_ub,sampling_lb,lp_lb,lp_ub",
        "--g-grid",
        "10,1000,100000",
        "--q",
        "1.05",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curves = read_curves_csv(out.stdout.as_slice()).unwrap();
    let get = |m: Method, k: Kind| curves.iter().find(|c| c.method == m && c.kind == k).unwrap();
    let (lo, hi) = (get(Method::LpLb, Kind::Lower), get(Method::LpUb, Kind::Upper));
    let (best_lo, best_hi) = (get(Method::Best, Kind::Lower), get(Method::Best, Kind::Upper));
    for i in 0..3 {
        assert!(lo.points[i].value <= hi.points[i].value);
        assert!(best_lo.points[i].value <= best_hi.points[i].value);
        assert!(best_lo.points[i].value >= lo.points[i].value);
        assert!(best_hi.points[i].value <= hi.points[i].value);
    }
    let delta_lo = get(Method::SamplingLb, Kind::Lower).points[0].delta + lo.points[0].delta;
    assert!((best_lo.points[0].delta - delta_lo).abs() < 1e-15);
}

#[test]
fn sample_target_widens_distribution_bounds() {
    let input = fixture("zipf_counted.tsv");
    let run = |target: &str| {
        let out = guessbound(&[
            "analyze",
            "--input",
            input.to_str().unwrap(),
            "--format",
            "counted",
            "--methods",
            "sampling_lb",
            "--g-grid",
            "100",
            "--target",
            target,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        read_curves_csv(out.stdout.as_slice()).unwrap()
    };
    let dist = &run("distribution")[0];
    let sample = &run("sample")[0];
    assert_eq!(sample.target, Target::SampleLambda);
    assert!(sample.points[0].value < dist.points[0].value);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let counts = write_lines(dir.path(), "counts.txt", ["5", "3", "1"]);
    let model = write_lines(dir.path(), "model.txt", ["a"]);
    let out = guessbound(&[
        "analyze",
        "--input",
        counts.to_str().unwrap(),
        "--format",
        "counts_only",
        "--methods",
        "extended_lb",
        "--model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("error:"));

    let out = guessbound(&["analyze", "--input", "/nonexistent/list.txt"]);
    assert_eq!(out.status.code(), Some(1));
    let out = guessbound(&["analyze", "--input", counts.to_str().unwrap(), "--g-grid", "10,5"]);
    assert_eq!(out.status.code(), Some(1));
    let out = guessbound(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let out = guessbound(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "methods = [\"frequency_ub\"]\ng_grid = [5, 50]\n\n[schedule]\ndelta1 = 0.00005\n").unwrap();
    let input = fixture("zipf_counted.tsv");
    let out = guessbound(&[
        "analyze",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "counted",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let curves = read_curves_csv(out.stdout.as_slice()).unwrap();
    assert_eq!(curves[0].method, Method::FrequencyUb);
    assert_eq!(curves[0].points.iter().map(|p| p.g).collect::<Vec<_>>(), vec![5, 50]);
    assert_eq!(curves[0].points[0].delta, 0.00005);
}

#[test]
fn simulate_reports_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let args = |out: &Path| {
        vec![
            "simulate".to_string(),
            "--dist".into(),
            "uniform:100".into(),
            "--n".into(),
            "2000".into(),
            "--trials".into(),
            "300".into(),
            "--g-grid".into(),
            "1,10,50,100".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let run = |out: &Path| Command::new(env!("CARGO_BIN_EXE_guessbound")).args(args(out)).output().unwrap();
    let out = run(&report);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stderr(&out).contains("PASS sampling_lb"));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["trials"], 300);

    let again = dir.path().join("again.json");
    run(&again);
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&again).unwrap());

    let out = guessbound(&["simulate", "--dist", "uniform:100", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = guessbound(&["simulate", "--dist", "pareto:3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_iid_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let iid = zipf_corpus(dir.path(), "iid.txt", 10_000, 3, 1);
    let out = guessbound(&["check-iid", "--input", iid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["verdict"], "consistent");

    let tripled = zipf_corpus(dir.path(), "tripled.txt", 10_000, 3, 3);
    let out = guessbound(&["check-iid", "--input", tripled.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = guessbound(&["check-iid", "--input", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_model_curves() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = zipf_corpus(dir.path(), "corpus.txt", 20_000, 5, 1);
    let names: Vec<String> = (1..=20_000).map(|i| format!("pw{i}")).collect();
    let good = write_lines(dir.path(), "good.txt", names.iter().map(String::as_str));
    let reversed = write_lines(dir.path(), "reversed.txt", names.iter().rev().map(String::as_str));
    let run = |model: &Path| {
        let out = guessbound(&[
            "compare-model",
            "--input",
            corpus.to_str().unwrap(),
            "--model",
            model.to_str().unwrap(),
            "--g-grid",
            "10,100,1000,20000",
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        read_curves_csv(out.stdout.as_slice()).unwrap()
    };
    let curves = run(&good);
    let get = |cs: &[guessbound::GuessingCurveF64], m: Method| cs.iter().find(|c| c.method == m).unwrap().clone();
    let model = get(&curves, Method::Model);
    assert_eq!(model.points.last().unwrap().value, 1.0);
    let sampling = get(&curves, Method::SamplingLb);
    let extended = get(&curves, Method::ExtendedLb);
    for (e, s) in extended.points.iter().zip(&sampling.points) {
        assert!(e.value >= s.value - 1e-12);
    }

    let weak = run(&reversed);
    let weak_model = get(&weak, Method::Model);
    // At 1000 guesses the reversed list sees only the rarest passwords.
    assert!(weak_model.points[2].value < 0.5 * sampling.points[2].value);
}
