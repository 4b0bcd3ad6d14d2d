use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use trialbias::cli::{ingest, synth, PopulationFile, SynthConfig};
use trialbias::{rct_analysis, PrecisionCurve, TieBreak};

const BIN: &str = env!("CARGO_BIN_EXE_trialbias");

fn trialbias(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().unwrap()
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let idx = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader
        .records()
        .map(|r| r.unwrap()[idx].parse().unwrap())
        .collect()
}

fn summary_row(path: &Path, design: &str) -> csv::StringRecord {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .find(|r| &r[0] == design)
        .unwrap()
}

#[test]
fn rank_file_with_reversed_t() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("pop.csv"),
        "unit_id,outcome,rank_s,rank_t\na,1,1,4\nb,1,2,3\nc,0,3,2\nd,0,4,1\n",
    )
    .unwrap();
    let inputs = ingest(&dir.path().join("pop.csv"), TieBreak::Id).unwrap();
    assert_eq!(inputs.t, inputs.s.reversed());

    let out = trialbias(&["precision-curve", "--input", "pop.csv", "--out", "r"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("r/precision_curves.csv")).unwrap();
    assert_eq!(
        text,
        "j,precision_s,precision_t\n1,1,0\n2,1,0\n3,0.666666666667,0.333333333333\n4,0.5,0.5\n"
    );
}

#[test]
fn duplicate_id_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("pop.csv"),
        "unit_id,outcome,score_s,score_t\nx,1,0.5,0.1\ny,0,0.2,0.3\nx,0,0.1,0.9\nz,1,0.3,0.2\n",
    )
    .unwrap();
    let out = trialbias(&["survey", "--input", "pop.csv", "--k", "2", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 4") && stderr.contains("`x`"), "{stderr}");
    assert!(!dir.path().join("r").join("summary.csv").exists());
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("odd.csv", "unit_id,outcome,score_s,score_t\na,1,1,1\nb,0,0,0\nc,1,2,2\n", "rct"),
        ("header.csv", "id,outcome,score_s,score_t\na,1,1,1\nb,0,0,0\n", "survey"),
        ("outcome.csv", "unit_id,outcome,score_s,score_t\na,2,1,1\nb,0,0,0\n", "survey"),
        ("missing.csv", "unit_id,outcome,score_s,score_t\na,1,1,\nb,0,0,0\n", "survey"),
    ];
    for (name, body, cmd) in cases {
        fs::write(dir.path().join(name), body).unwrap();
        let mut args = vec![cmd, "--input", name, "--k", "2", "--out", "r"];
        if cmd == "rct" {
            args.extend(["--replicates", "10"]);
        }
        let out = trialbias(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = trialbias(&["m-dist", "--n", "10", "--k", "3", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn score_ties_fall_back_to_unit_id() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("pop.csv"),
        "unit_id,outcome,score_s,score_t\nb,0,1,0\na,1,1,0\nd,0,0,0\nc,1,0,0\n",
    )
    .unwrap();
    let inputs = ingest(&dir.path().join("pop.csv"), TieBreak::Id).unwrap();
    assert_eq!(inputs.s.ids(&inputs.population).collect::<Vec<_>>(), ["a", "b", "c", "d"]);
    assert_eq!(inputs.t.ids(&inputs.population).collect::<Vec<_>>(), ["a", "b", "c", "d"]);
    let seeded_a = ingest(&dir.path().join("pop.csv"), TieBreak::Seeded(9)).unwrap();
    let seeded_b = ingest(&dir.path().join("pop.csv"), TieBreak::Seeded(9)).unwrap();
    assert_eq!(seeded_a.t, seeded_b.t);
}

#[test]
fn synth_is_deterministic_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["synth", "--n", "200", "--positive-rate", "0.3", "--correlation", "0.7", "--seed", "4"];
    let a = trialbias(&args, dir.path());
    let b = trialbias(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"unit_id,outcome,score_s,score_t\n"));

    let config = SynthConfig {
        n: 200,
        positive_rate: 0.3,
        correlation: 0.7,
        t_correlation: 0.0,
        seed: 4,
    };
    let file = synth(&config).unwrap();
    assert_eq!(file.render().as_bytes(), a.stdout.as_slice());

    let path = dir.path().join("pop.csv");
    fs::write(&path, &a.stdout).unwrap();
    let reread = PopulationFile::read(&path).unwrap();
    assert_eq!(reread, file);
    let direct = file.resolve(TieBreak::Id).unwrap();
    let ingested = ingest(&path, TieBreak::Id).unwrap();
    assert_eq!(ingested.population.len(), 200);
    assert_eq!(ingested.population.positives(), 60);
    assert_eq!(ingested.s, direct.s);
    assert_eq!(ingested.t, direct.t);
}

#[test]
fn synth_correlation_extremes() {
    // Random targeting: expected precision curve is flat, so bias is small.
    let random = synth(&SynthConfig {
        n: 2000,
        positive_rate: 0.2,
        correlation: 0.0,
        t_correlation: 0.0,
        seed: 1,
    })
    .unwrap()
    .resolve(TieBreak::Id)
    .unwrap();
    let a = rct_analysis::<f64>(&random.s, &random.t, &random.population, 200).unwrap();
    assert!(a.bias.abs() < 0.02, "bias {}", a.bias);

    // Perfect targeting: all positives first, curve never increases.
    let perfect = synth(&SynthConfig {
        n: 400,
        positive_rate: 0.25,
        correlation: 1.0,
        t_correlation: 0.0,
        seed: 2,
    })
    .unwrap()
    .resolve(TieBreak::Id)
    .unwrap();
    let curve = PrecisionCurve::new(&perfect.s, &perfect.population).unwrap();
    assert!(curve.values().windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(curve.values()[99], 1.0);
}

#[test]
fn compare_reports_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let file = synth(&SynthConfig {
        n: 300,
        positive_rate: 0.2,
        correlation: 0.5,
        t_correlation: 0.2,
        seed: 8,
    })
    .unwrap();
    fs::write(dir.path().join("pop.csv"), file.render()).unwrap();
    let out = trialbias(
        &["compare", "--input", "pop.csv", "--k", "30", "--replicates", "40000", "--seed", "1", "--out", "r"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = dir.path().join("r");

    for (name, col) in [
        ("m_pmf.csv", "probability"),
        ("survey_distribution.csv", "probability"),
        ("rct_distribution.csv", "frequency"),
    ] {
        let total: f64 = column(&r.join(name), col).iter().sum();
        assert!((total - 1.0).abs() <= 1e-9, "{name}: {total}");
    }
    let counts: f64 = column(&r.join("rct_distribution.csv"), "count").iter().sum();
    assert_eq!(counts, 40000.0);

    let inputs = file.resolve(TieBreak::Id).unwrap();
    let analysis = rct_analysis::<f64>(&inputs.s, &inputs.t, &inputs.population, 30).unwrap();
    let rct = summary_row(&r.join("summary.csv"), "rct");
    let parse = |i: usize| rct[i].parse::<f64>().unwrap();
    let (mean, bias, expected, std_error) = (parse(1), parse(3), parse(4), parse(6));
    assert!((bias - analysis.bias).abs() <= 1e-11 * analysis.bias.abs().max(1.0));
    assert!((expected - analysis.expected_delta).abs() <= 1e-11);
    assert!((mean - expected).abs() <= 4.0 * std_error, "{mean} vs {expected} ± {std_error}");

    let survey = summary_row(&r.join("summary.csv"), "survey");
    assert!(survey[3].parse::<f64>().unwrap().abs() <= 1e-12);
}

#[test]
fn sweep_and_m_dist_tables() {
    let dir = tempfile::tempdir().unwrap();
    let file = synth(&SynthConfig {
        n: 100,
        positive_rate: 0.3,
        correlation: 0.6,
        t_correlation: 0.1,
        seed: 3,
    })
    .unwrap();
    fs::write(dir.path().join("pop.csv"), file.render()).unwrap();
    let out = trialbias(
        &["sweep", "--input", "pop.csv", "--k-min", "3", "--k-max", "20", "--out", "r"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ks = column(&dir.path().join("r/bias_curve.csv"), "k");
    assert_eq!(ks, (4..=20).step_by(2).map(|k| k as f64).collect::<Vec<_>>());

    let out = trialbias(&["m-dist", "--input", "pop.csv", "--k", "10", "--out", "m"], dir.path());
    assert!(out.status.success());
    let m = column(&dir.path().join("m/m_pmf.csv"), "m");
    assert_eq!((m[0], *m.last().unwrap()), (5.0, 55.0));
}
