//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn imbench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_imbench"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn imbench");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// CSV with a 200/1000 class split for the prepare pipeline.
fn write_imbalanced_csv(path: &Path) {
    let mut text = String::from("f1,f2,class\n");
    for i in 0..200 {
        text.push_str(&format!("{}.25,{},rare\n", i, i % 17));
    }
    for i in 0..1000 {
        text.push_str(&format!("{}.75,{},common\n", i, i % 23));
    }
    std::fs::write(path, text).unwrap();
}

fn read_prepared(outdir: &Path, file: &str) -> (usize, usize) {
    let text = std::fs::read_to_string(outdir.join(file)).unwrap();
    let pos = text.lines().filter(|l| l.ends_with(",positive")).count();
    let neg = text.lines().filter(|l| l.ends_with(",negative")).count();
    (pos, neg)
}

#[test]
fn prepare_emits_nested_rates_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("credit.csv");
    write_imbalanced_csv(&input);
    let outdir = dir.path().join("prepared");

    run_ok(
        imbench()
            .args(["prepare", "--input"])
            .arg(&input)
            .args([
                "--label",
                "class",
                "--rates",
                "5,3,1,0.1",
                "--seed",
                "7",
                "--outdir",
            ])
            .arg(&outdir),
    );

    // positive counts: largest p with p/(p+1000) <= rate, floor 10
    assert_eq!(read_prepared(&outdir, "credit_r5.csv"), (52, 1000));
    assert_eq!(read_prepared(&outdir, "credit_r3.csv"), (30, 1000));
    assert_eq!(read_prepared(&outdir, "credit_r1.csv"), (10, 1000));
    assert!(!outdir.join("credit_r0.1.csv").exists());

    let manifest = std::fs::read_to_string(outdir.join("credit_manifest.csv")).unwrap();
    assert!(manifest.starts_with("# imbench manifest v1\n"));
    assert!(manifest.contains("5,credit_r5.csv,52,1000"));
    assert!(manifest
        .lines()
        .any(|l| l.starts_with("0.1,") && l.contains("skipped")));

    // determinism: same seed, same bytes
    let outdir2 = dir.path().join("prepared2");
    run_ok(
        imbench()
            .args(["prepare", "--input"])
            .arg(&input)
            .args([
                "--label",
                "class",
                "--rates",
                "5,3,1,0.1",
                "--seed",
                "7",
                "--outdir",
            ])
            .arg(&outdir2),
    );
    for f in ["credit_r5.csv", "credit_r3.csv", "credit_r1.csv"] {
        assert_eq!(
            std::fs::read(outdir.join(f)).unwrap(),
            std::fs::read(outdir2.join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
}

#[test]
fn prepare_passes_through_dataset_already_at_rate() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    let mut text = String::from("a,class\n");
    for i in 0..50 {
        text.push_str(&format!("{i},pos\n"));
    }
    for i in 0..950 {
        text.push_str(&format!("{},neg\n", i + 100));
    }
    std::fs::write(&input, text).unwrap();
    let outdir = dir.path().join("out");

    run_ok(
        imbench()
            .args(["prepare", "--input"])
            .arg(&input)
            .args([
                "--label", "class", "--rates", "5", "--seed", "1", "--outdir",
            ])
            .arg(&outdir),
    );

    assert_eq!(read_prepared(&outdir, "flat_r5.csv"), (50, 950));
}

#[test]
fn synth_writes_exact_class_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    run_ok(
        imbench()
            .args([
                "synth",
                "--family",
                "gaussians",
                "--n",
                "400",
                "--dim",
                "3",
                "--overlap",
                "1.0",
                "--rate",
                "0.05",
                "--seed",
                "3",
                "--out",
            ])
            .arg(&out),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x1,x2,x3,class");
    assert_eq!(
        text.lines().filter(|l| l.ends_with(",positive")).count(),
        20
    );
    assert_eq!(
        text.lines().filter(|l| l.ends_with(",negative")).count(),
        380
    );
}

fn minimal_config(dir: &Path) -> PathBuf {
    let config = dir.join("exp.toml");
    std::fs::write(
        &config,
        r#"
master_seed = 7
repetitions = 3
inner_folds = 3
candidates = 10
output_path = "results.csv"
rates = [0.05]
metrics = ["acc"]

[[datasets]]
name = "easy"
family = "gaussians"
n = 200
dim = 2
overlap = 0.0
rate = 0.05
seed = 11

[[solutions]]
strategy = "baseline"
classifier = "cart"
"#,
    )
    .unwrap();
    config
}

#[test]
fn run_produces_results_and_resumes_without_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let config = minimal_config(dir.path());

    run_ok(imbench().args(["run", "--config"]).arg(&config));
    let results = dir.path().join("results.csv");
    let first = std::fs::read(&results).unwrap();
    let text = String::from_utf8_lossy(&first);
    // 1 dataset x 1 rate x 1 solution x 1 metric x 3 repetitions
    assert_eq!(text.lines().count(), 2 + 3);
    assert!(text
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("easy,0.05,cart_baseline,baseline,cart,acc,0,"));

    let second_run = run_ok(imbench().args(["run", "--config"]).arg(&config));
    let stderr = String::from_utf8_lossy(&second_run.stderr);
    assert!(stderr.contains("0 cells to run"), "resume log: {stderr}");
    assert_eq!(std::fs::read(&results).unwrap(), first);
}

#[test]
fn run_rejects_missing_dataset_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        r#"
master_seed = 1
output_path = "results.csv"
rates = [0.05]
metrics = ["acc"]

[[datasets]]
name = "ghost"
path = "ghost.csv"
label = "y"

[[solutions]]
strategy = "baseline"
classifier = "cart"
"#,
    )
    .unwrap();
    let out = imbench()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
    assert!(!dir.path().join("results.csv").exists());
}

/// Parse `algorithm  rank  sig` lines back out of a rendered table.
fn parse_rank_table(text: &str) -> Vec<(String, f64, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("algorithm") && !l.is_empty())
        .map(|l| {
            let fields: Vec<&str> = l.split_whitespace().collect();
            assert_eq!(fields.len(), 3, "unexpected table line: {l}");
            (
                fields[0].to_string(),
                fields[1].parse::<f64>().unwrap(),
                fields[2].to_string(),
            )
        })
        .collect()
}

fn grid_config(dir: &Path) -> PathBuf {
    let config = dir.join("grid.toml");
    let mut text = String::from(
        r#"
master_seed = 99
repetitions = 3
inner_folds = 3
candidates = 4
output_path = "grid_results.csv"
rates = [0.05]
metrics = ["auc", "acc", "f1", "gmean", "mcc", "bac"]
"#,
    );
    for (i, overlap) in [0.5, 2.0].iter().enumerate() {
        text.push_str(&format!(
            "\n[[datasets]]\nname = \"g{i}\"\nfamily = \"gaussians\"\nn = 240\ndim = 2\noverlap = {overlap}\nrate = 0.05\nseed = {}\n",
            40 + i
        ));
    }
    for strategy in ["baseline", "weight", "smote", "underbagging"] {
        text.push_str(&format!(
            "\n[[solutions]]\nstrategy = \"{strategy}\"\nclassifier = \"cart\"\n"
        ));
    }
    std::fs::write(&config, text).unwrap();
    config
}

#[test]
fn report_and_compare_render_parseable_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = grid_config(dir.path());
    run_ok(imbench().args(["run", "--config"]).arg(&config));
    let results = dir.path().join("grid_results.csv");

    // 2 datasets x 1 rate x 4 strategies x 1 classifier x 6 metrics x 3 reps
    let rows = std::fs::read_to_string(&results).unwrap();
    assert_eq!(rows.lines().count(), 2 + 144);

    let report = run_ok(imbench().args(["report", "--results"]).arg(&results).args([
        "--metric",
        "gmean",
        "--group",
        "strategies",
    ]));
    let text = String::from_utf8_lossy(&report.stdout).to_string();
    let parsed = parse_rank_table(&text);
    assert_eq!(parsed.len(), 4);
    // ranks sorted ascending, sum = k(k+1)/2, letters non-empty
    let ranks: Vec<f64> = parsed.iter().map(|(_, r, _)| *r).collect();
    assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
    let total: f64 = ranks.iter().sum();
    assert!((total - 10.0).abs() < 0.05, "rank sum {total}");
    assert!(parsed.iter().all(|(_, _, sig)| !sig.is_empty()));

    // deterministic rendering
    let again = run_ok(imbench().args(["report", "--results"]).arg(&results).args([
        "--metric",
        "gmean",
        "--group",
        "strategies",
    ]));
    assert_eq!(report.stdout, again.stdout);

    let compare = run_ok(
        imbench()
            .args(["compare", "--results"])
            .arg(&results)
            .args([
                "--a",
                "cart_baseline",
                "--b",
                "cart_smote",
                "--metric",
                "acc",
            ]),
    );
    let text = String::from_utf8_lossy(&compare.stdout).to_string();
    assert!(text.contains("cart_baseline"));
    assert!(text.contains("cart_smote"));
    assert!(text.contains("p.value"));

    // combinations grouping lists the four cart pairings
    let combos = run_ok(imbench().args(["report", "--results"]).arg(&results).args([
        "--metric",
        "acc",
        "--group",
        "combinations",
    ]));
    let parsed = parse_rank_table(&String::from_utf8_lossy(&combos.stdout));
    assert_eq!(parsed.len(), 4);
    assert!(parsed.iter().any(|(name, _, _)| name == "cart_smote"));

    // rate filter given in percent; the file's only rate is 0.05
    let filtered = run_ok(imbench().args(["report", "--results"]).arg(&results).args([
        "--metric",
        "gmean",
        "--group",
        "strategies",
        "--rates",
        "5",
    ]));
    assert_eq!(filtered.stdout, report.stdout);
    let empty = run_ok(imbench().args(["report", "--results"]).arg(&results).args([
        "--metric",
        "gmean",
        "--group",
        "strategies",
        "--rates",
        "1",
    ]));
    assert!(String::from_utf8_lossy(&empty.stdout).contains("no data"));
}
