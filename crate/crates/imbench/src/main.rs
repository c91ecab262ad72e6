//! Command-line front door: dataset preparation, synthetic generation,
//! grid execution, and report rendering.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use imbench::data::{
    binarize, load_csv, make_synthetic, rebalance_to_rate, write_dataset_csv, BinaryDataset,
    SynthFamily,
};
use imbench::error::{Error, Result};
use imbench::experiment::{config::load_config, run_grid, ResultTable};
use imbench::metrics::MetricKind;
use imbench::report::{render_pair_table, render_rank_table};
use imbench::stats::{compare, Grouping, Question};

#[derive(Parser)]
#[command(
    name = "imbench",
    version,
    about = "Imbalanced classification benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Binarize a CSV and emit imbalanced versions at the requested rates.
    Prepare {
        #[arg(long)]
        input: PathBuf,
        /// Label column name.
        #[arg(long)]
        label: String,
        /// Force this class to be the positive one before binarization.
        #[arg(long)]
        positive_label: Option<String>,
        /// Imbalance rates in percent, highest first is not required.
        #[arg(long, value_delimiter = ',', default_value = "5,3,1,0.1")]
        rates: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Generate a synthetic imbalanced dataset CSV.
    Synth {
        #[arg(long, default_value = "gaussians")]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        overlap: f64,
        /// Imbalance rate as a fraction, e.g. 0.05.
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute the experiment grid described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render rank/letter tables from a results file.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Metric name, or "all" for the six headline metrics.
        #[arg(long, default_value = "all")]
        metric: String,
        /// strategies | combinations
        #[arg(long, default_value = "strategies")]
        group: String,
        /// Optional filter: rates in percent.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<String>>,
    },
    /// Wilcoxon comparison of two named solutions.
    Compare {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        metric: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Prepare {
            input,
            label,
            positive_label,
            rates,
            seed,
            outdir,
        } => cmd_prepare(
            &input,
            &label,
            positive_label.as_deref(),
            &rates,
            seed,
            &outdir,
        ),
        Command::Synth {
            family,
            n,
            dim,
            overlap,
            rate,
            seed,
            out,
        } => cmd_synth(&family, n, dim, overlap, rate, seed, &out),
        Command::Run { config } => cmd_run(&config),
        Command::Report {
            results,
            metric,
            group,
            rates,
        } => cmd_report(&results, &metric, &group, rates.as_deref()),
        Command::Compare {
            results,
            a,
            b,
            metric,
        } => cmd_compare(&results, &a, &b, &metric),
    }
}

fn parse_percent(token: &str) -> Result<f64> {
    let pct: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad rate '{token}'")))?;
    if !(pct > 0.0 && pct < 100.0) {
        return Err(Error::InvalidArgument(format!(
            "rate {pct}% outside (0, 100)"
        )));
    }
    Ok(pct / 100.0)
}

fn cmd_prepare(
    input: &Path,
    label: &str,
    positive_label: Option<&str>,
    rate_tokens: &[String],
    seed: u64,
    outdir: &Path,
) -> Result<ExitCode> {
    let raw = load_csv(input, label, positive_label)?;
    let base = binarize(&raw)?;
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir.display().to_string(), e))?;

    // highest rate first; each further level nests inside the previous
    let mut order: Vec<(String, f64)> = rate_tokens
        .iter()
        .map(|t| parse_percent(t).map(|r| (t.trim().to_string(), r)))
        .collect::<Result<_>>()?;
    order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    let mut manifest = String::from("# imbench manifest v1\n");
    manifest.push_str("rate_pct,file,positives,negatives,achieved_rate,status,reason\n");

    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let mut current: Result<BinaryDataset> = Ok(base);
    for (token, rate) in &order {
        let next = match &current {
            Ok(ds) => rebalance_to_rate(
                ds,
                *rate,
                imbench::seeding::derive_seed(seed, &format!("prepare:{rate}")),
            ),
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        };
        match &next {
            Ok(ds) => {
                let file = format!("{stem}_r{token}.csv");
                write_dataset_csv(ds, label, &outdir.join(&file))?;
                manifest.push_str(&format!(
                    "{token},{file},{},{},{},ok,\n",
                    ds.positives(),
                    ds.negatives(),
                    ds.imbalance_rate()
                ));
                log::info!(
                    "wrote {file}: {} positives / {} negatives",
                    ds.positives(),
                    ds.negatives()
                );
            }
            Err(e) => {
                let reason = e.to_string().replace(',', ";");
                manifest.push_str(&format!("{token},,,,,skipped,{reason}\n"));
                log::warn!("rate {token}%: skipped ({e})");
            }
        }
        current = next;
    }
    let manifest_path = outdir.join(format!("{stem}_manifest.csv"));
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(
    family: &str,
    n: usize,
    dim: usize,
    overlap: f64,
    rate: f64,
    seed: u64,
    out: &Path,
) -> Result<ExitCode> {
    let family = SynthFamily::from_str(family)?;
    let ds = make_synthetic(family, n, dim, overlap, rate, seed)?;
    write_dataset_csv(&ds, "class", out)?;
    log::info!(
        "wrote {}: {} positives / {} negatives",
        out.display(),
        ds.positives(),
        ds.negatives()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(config_path: &Path) -> Result<ExitCode> {
    let config = load_config(config_path)?;
    let config_dir = config_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let outcome = run_grid(&config, &config_dir)?;
    log::info!(
        "{} cells executed, {} skipped, {} failed rows",
        outcome.executed_cells,
        outcome.skipped_cells,
        outcome.failed_rows
    );
    for line in &outcome.excluded {
        log::info!("excluded: {line}");
    }
    if outcome.failed_rows > 0 {
        Ok(ExitCode::FAILURE)
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn parse_rate_filter(tokens: Option<&[String]>) -> Result<Option<Vec<f64>>> {
    match tokens {
        None => Ok(None),
        Some(list) => Ok(Some(
            list.iter()
                .map(|t| parse_percent(t))
                .collect::<Result<Vec<f64>>>()?,
        )),
    }
}

fn cmd_report(
    results: &Path,
    metric: &str,
    group: &str,
    rates: Option<&[String]>,
) -> Result<ExitCode> {
    let table = ResultTable::read_csv(results)?;
    let grouping = match group {
        "strategies" => Grouping::Strategy,
        "combinations" => Grouping::Solution,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown group '{other}' (use strategies|combinations)"
            )))
        }
    };
    let metrics: Vec<MetricKind> = if metric == "all" {
        MetricKind::MAIN.to_vec()
    } else {
        metric
            .split(',')
            .map(MetricKind::from_str)
            .collect::<Result<_>>()?
    };
    let rate_filter = parse_rate_filter(rates)?;

    for m in metrics {
        let mut question = Question::new(m, grouping.clone());
        question.rates = rate_filter.clone();
        match compare(&table, &question) {
            Ok(summary) => print!("{}", render_rank_table(m, group, &summary)),
            Err(Error::EmptySelection(why)) => println!("# metric: {m}  (no data: {why})"),
            Err(Error::DegenerateMatrix(why)) => {
                println!("# metric: {m}  (not enough data: {why})")
            }
            Err(e) => return Err(e),
        }
        println!();
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(results: &Path, a: &str, b: &str, metric: &str) -> Result<ExitCode> {
    let table = ResultTable::read_csv(results)?;
    let m = MetricKind::from_str(metric)?;
    let question = Question::new(
        m,
        Grouping::Pair {
            a: a.to_string(),
            b: b.to_string(),
        },
    );
    let summary = compare(&table, &question)?;
    print!("{}", render_pair_table(m, &summary));
    Ok(ExitCode::SUCCESS)
}
