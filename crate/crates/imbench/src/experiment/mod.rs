//! The experimental protocol: random hyperparameter search, nested-fold
//! tuning per metric, repeated stratified holdout, and grid execution over
//! datasets x rates x solutions x metrics.
//!
//! Cell seeds derive from (master seed, dataset, rate, solution, metric),
//! so cells are independent and results do not depend on execution order.
//! Result files are append-only CSV in canonical grid order; a rerun over
//! a complete file executes nothing.

pub mod config;
pub mod space;

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::Write as IoWrite;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::classifiers::ClassifierSpec;
use crate::data::{
    binarize, load_csv, make_synthetic, rebalance_to_rate, split_holdout, stratified_kfold,
    BinaryDataset, SplitPlan, SynthFamily,
};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricKind};
use crate::params::{format_params, ParamMap, ParamValue};
use crate::seeding::derive_seed;
use crate::strategies::{fit_solution, StrategyKind, StrategySpec};

use config::{resolve_path, DatasetConfig, ExperimentConfig};
use space::{default_space, sample_hyperparameters, SearchSpace};

pub const RESULTS_SCHEMA: &str = "# imbench results v1";
const RESULTS_COLUMNS: &str =
    "dataset,rate,solution,strategy,classifier,metric,repetition,value,params,seed,error";

/// Canonical solution id: `rusboost`, or `{classifier}_{strategy}`.
pub fn solution_id(strategy: &str, classifier: Option<&str>) -> String {
    match classifier {
        Some(c) => format!("{c}_{strategy}"),
        None => strategy.to_string(),
    }
}

/// A tunable (strategy, base classifier) combination.
#[derive(Debug, Clone)]
pub struct SolutionSpec {
    pub strategy: StrategySpec,
    pub classifier: ClassifierSpec,
    pub space: SearchSpace,
    pub id: String,
}

impl SolutionSpec {
    pub fn new(strategy: StrategySpec, classifier: ClassifierSpec) -> Self {
        let space = default_space(strategy.kind, classifier.kind);
        Self::with_space(strategy, classifier, space)
    }

    pub fn with_space(
        strategy: StrategySpec,
        classifier: ClassifierSpec,
        space: SearchSpace,
    ) -> Self {
        let id = if strategy.kind.uses_base_classifier() {
            solution_id(strategy.kind.name(), Some(classifier.kind.short_name()))
        } else {
            solution_id(strategy.kind.name(), None)
        };
        SolutionSpec {
            strategy,
            classifier,
            space,
            id,
        }
    }

    /// Classifier short name as recorded in results; empty for solutions
    /// that carry their own fixed base.
    pub fn classifier_label(&self) -> &str {
        if self.strategy.kind.uses_base_classifier() {
            self.classifier.kind.short_name()
        } else {
            ""
        }
    }
}

/// One (dataset, rate, solution, metric, repetition) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub dataset: String,
    pub rate: f64,
    pub solution: String,
    pub strategy: String,
    pub classifier: String,
    pub metric: MetricKind,
    pub repetition: usize,
    pub value: Option<f64>,
    pub params: ParamMap,
    pub seed: u64,
    pub error: Option<String>,
}

/// Long-form result records plus the mean-over-repetitions view.
#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub cells: Vec<CellResult>,
}

/// Mean over repetitions for one (dataset, rate, solution, metric) group.
#[derive(Debug, Clone)]
pub struct AggregatedCell {
    pub dataset: String,
    pub rate: f64,
    pub solution: String,
    pub strategy: String,
    pub classifier: String,
    pub metric: MetricKind,
    pub value: f64,
}

impl ResultTable {
    pub fn new(cells: Vec<CellResult>) -> Self {
        ResultTable { cells }
    }

    /// Group means; groups containing any failed repetition are dropped.
    pub fn mean_over_repetitions(&self) -> Vec<AggregatedCell> {
        let mut out: Vec<AggregatedCell> = Vec::new();
        let mut failed: BTreeSet<String> = BTreeSet::new();
        let key = |c: &CellResult| {
            format!(
                "{}\x1f{}\x1f{}\x1f{}",
                c.dataset, c.rate, c.solution, c.metric
            )
        };
        for c in &self.cells {
            if c.error.is_some() || c.value.is_none() {
                failed.insert(key(c));
            }
        }
        let mut sums: Vec<(String, AggregatedCell, usize)> = Vec::new();
        for c in &self.cells {
            let k = key(c);
            if failed.contains(&k) {
                continue;
            }
            let value = c.value.unwrap();
            match sums.iter_mut().find(|(sk, _, _)| *sk == k) {
                Some((_, agg, count)) => {
                    agg.value += value;
                    *count += 1;
                }
                None => sums.push((
                    k,
                    AggregatedCell {
                        dataset: c.dataset.clone(),
                        rate: c.rate,
                        solution: c.solution.clone(),
                        strategy: c.strategy.clone(),
                        classifier: c.classifier.clone(),
                        metric: c.metric,
                        value,
                    },
                    1,
                )),
            }
        }
        for (_, mut agg, count) in sums {
            agg.value /= count as f64;
            out.push(agg);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        text.push_str(RESULTS_SCHEMA);
        text.push('\n');
        text.push_str(RESULTS_COLUMNS);
        text.push('\n');
        for c in &self.cells {
            text.push_str(&cell_to_line(c));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn read_csv(path: &Path) -> Result<ResultTable> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut cells = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.starts_with('#') || line == RESULTS_COLUMNS || line.is_empty() {
                continue;
            }
            cells.push(parse_cell_line(line).map_err(|e| Error::ResultsFile {
                path: path.display().to_string(),
                message: format!("line {}: {e}", lineno + 1),
            })?);
        }
        Ok(ResultTable { cells })
    }
}

fn sanitize(message: &str) -> String {
    message.replace(',', ";").replace('\n', " ")
}

fn cell_to_line(c: &CellResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        c.dataset,
        c.rate,
        c.solution,
        c.strategy,
        c.classifier,
        c.metric,
        c.repetition,
        c.value.map(|v| v.to_string()).unwrap_or_default(),
        format_params(&c.params),
        c.seed,
        c.error.as_deref().map(sanitize).unwrap_or_default(),
    )
}

fn parse_cell_line(line: &str) -> Result<CellResult> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 11 {
        return Err(Error::InvalidArgument(format!(
            "expected 11 fields, found {}",
            parts.len()
        )));
    }
    let bad = |what: &str| Error::InvalidArgument(format!("bad {what} field"));
    let mut params = ParamMap::new();
    if !parts[8].is_empty() {
        for kv in parts[8].split(';') {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("params"))?;
            let value = match v.parse::<i64>() {
                Ok(i) => ParamValue::Int(i),
                Err(_) => ParamValue::Float(v.parse::<f64>().map_err(|_| bad("params"))?),
            };
            params.insert(k.to_string(), value);
        }
    }
    Ok(CellResult {
        dataset: parts[0].to_string(),
        rate: parts[1].parse().map_err(|_| bad("rate"))?,
        solution: parts[2].to_string(),
        strategy: parts[3].to_string(),
        classifier: parts[4].to_string(),
        metric: MetricKind::from_str(parts[5])?,
        repetition: parts[6].parse().map_err(|_| bad("repetition"))?,
        value: if parts[7].is_empty() {
            None
        } else {
            Some(parts[7].parse().map_err(|_| bad("value"))?)
        },
        params,
        seed: parts[9].parse().map_err(|_| bad("seed"))?,
        error: if parts[10].is_empty() {
            None
        } else {
            Some(parts[10].to_string())
        },
    })
}

/// Candidate parameter maps mix strategy and classifier keys; route each
/// to its owner and keep any fixed strategy params underneath.
fn instantiate(solution: &SolutionSpec, candidate: &ParamMap) -> (StrategySpec, ClassifierSpec) {
    let strategy_keys: &[&str] = match solution.strategy.kind {
        StrategyKind::Underbagging => &["n"],
        StrategyKind::Rusboost => &["nboost"],
        StrategyKind::Smote => &["k"],
        _ => &[],
    };
    let mut strategy = solution.strategy.clone();
    let mut classifier = solution.classifier.clone();
    for (k, v) in candidate {
        if strategy_keys.contains(&k.as_str()) {
            strategy.params.insert(k.clone(), *v);
        } else {
            classifier.params.insert(k.clone(), *v);
        }
    }
    (strategy, classifier)
}

fn fit_candidate(
    solution: &SolutionSpec,
    candidate: &ParamMap,
    train: &BinaryDataset,
    seed: u64,
) -> Result<crate::classifiers::Model> {
    let (strategy, classifier) = instantiate(solution, candidate);
    fit_solution(&strategy, &classifier, train, seed)
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Pick the best hyperparameters by mean validation score over stratified
/// folds, using the same metric the cell will later report. Ties keep the
/// earliest candidate; a single candidate is returned unconditionally.
pub fn tune(
    solution: &SolutionSpec,
    train: &BinaryDataset,
    metric: MetricKind,
    folds: usize,
    candidates: usize,
    rng_seed: u64,
) -> Result<ParamMap> {
    let maps = sample_hyperparameters(
        &solution.space,
        candidates,
        train.dim(),
        derive_seed(rng_seed, "sample"),
    );
    if maps.len() == 1 {
        return Ok(maps.into_iter().next().unwrap());
    }
    let fold_sets = stratified_kfold(train, folds, derive_seed(rng_seed, "folds"))?;
    let mut best: Option<(f64, ParamMap)> = None;
    for (ci, candidate) in maps.iter().enumerate() {
        let mut total = 0.0;
        for (fi, (fold_train, fold_val)) in fold_sets.iter().enumerate() {
            let model = fit_candidate(
                solution,
                candidate,
                fold_train,
                derive_seed(rng_seed, &format!("candidate:{ci}:fold:{fi}")),
            )?;
            let sp = model.score_dataset(fold_val)?;
            total += evaluate(metric, &sp, DEFAULT_THRESHOLD)?;
        }
        let mean = total / fold_sets.len() as f64;
        if best.as_ref().is_none_or(|(b, _)| mean > *b) {
            best = Some((mean, candidate.clone()));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

fn run_repetition(
    ds: &BinaryDataset,
    solution: &SolutionSpec,
    metric: MetricKind,
    plan: &SplitPlan,
    candidates: usize,
    repetition: usize,
    rep_seed: u64,
) -> Result<(f64, ParamMap)> {
    let (train, test) = split_holdout(ds, plan, repetition)?;
    let best = tune(
        solution,
        &train,
        metric,
        plan.inner_folds,
        candidates,
        derive_seed(rep_seed, "tune"),
    )?;
    // refit on the whole training split with the chosen hyperparameters
    let model = fit_candidate(solution, &best, &train, derive_seed(rep_seed, "fit"))?;
    let sp = model.score_dataset(&test)?;
    let value = evaluate(metric, &sp, DEFAULT_THRESHOLD)?;
    Ok((value, best))
}

/// Run every repetition of one grid cell. Component errors are recorded in
/// the affected repetition's row; the grid never aborts on a cell.
pub fn run_cell(
    ds: &BinaryDataset,
    solution: &SolutionSpec,
    metric: MetricKind,
    plan: &SplitPlan,
    candidates: usize,
) -> Vec<CellResult> {
    (0..plan.repetitions)
        .map(|rep| {
            let rep_seed = derive_seed(plan.seed, &format!("rep:{rep}"));
            let mut cell = CellResult {
                dataset: ds.name.clone(),
                rate: ds.imbalance_rate(),
                solution: solution.id.clone(),
                strategy: solution.strategy.kind.name().to_string(),
                classifier: solution.classifier_label().to_string(),
                metric,
                repetition: rep,
                value: None,
                params: ParamMap::new(),
                seed: rep_seed,
                error: None,
            };
            match run_repetition(ds, solution, metric, plan, candidates, rep, rep_seed) {
                Ok((value, params)) => {
                    cell.value = Some(value);
                    cell.params = params;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect()
}

/// What a grid run did, beyond the table itself.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub table: ResultTable,
    pub executed_cells: usize,
    pub skipped_cells: usize,
    pub failed_rows: usize,
    /// (dataset, rate) combinations excluded before training, with reasons.
    pub excluded: Vec<String>,
}

fn base_dataset(ds: &DatasetConfig, config_dir: &Path) -> Result<BinaryDataset> {
    if let Some(path) = &ds.path {
        let raw = load_csv(
            &resolve_path(config_dir, path),
            ds.label.as_deref().unwrap_or("class"),
            ds.positive_label.as_deref(),
        )?;
        let mut binary = binarize(&raw)?;
        binary.name = ds.name.clone();
        Ok(binary)
    } else {
        let family = SynthFamily::from_str(ds.family.as_deref().unwrap_or(""))?;
        let mut synth = make_synthetic(
            family,
            ds.n.unwrap_or(0),
            ds.dim.unwrap_or(0),
            ds.overlap.unwrap_or(1.0),
            ds.rate.unwrap_or(0.05),
            ds.seed.unwrap_or(0),
        )?;
        synth.name = ds.name.clone();
        Ok(synth)
    }
}

fn build_solutions(config: &ExperimentConfig) -> Result<Vec<SolutionSpec>> {
    config
        .solutions
        .iter()
        .map(|sc| {
            let strategy_kind = sc.strategy_kind()?;
            let classifier_kind = sc.classifier_kind()?;
            let mut strategy = StrategySpec::new(strategy_kind);
            if let Some(k) = sc.smote_k {
                strategy
                    .params
                    .insert("k".into(), ParamValue::Int(k as i64));
            }
            let classifier = ClassifierSpec::new(classifier_kind);
            let space = sc.apply_space_overrides(default_space(strategy_kind, classifier_kind));
            Ok(SolutionSpec::with_space(strategy, classifier, space))
        })
        .collect()
}

/// Rate variants per dataset, as nested subsets from the highest rate
/// down: each level resamples from the previous one, never from the base.
fn rate_variants(
    base: &BinaryDataset,
    rates: &[f64],
    master_seed: u64,
) -> Vec<(f64, Result<BinaryDataset>)> {
    let mut order: Vec<f64> = rates.to_vec();
    order.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut variants: Vec<(f64, Result<BinaryDataset>)> = Vec::new();
    let mut current: Result<BinaryDataset> = Ok(base.clone());
    for rate in order {
        let next = match &current {
            Ok(ds) => rebalance_to_rate(
                ds,
                rate,
                derive_seed(master_seed, &format!("rebalance:{}:{rate}", base.name)),
            ),
            Err(_) => Err(Error::RateUnreachable {
                name: base.name.clone(),
                target: rate,
                would_keep: 0,
                floor: crate::data::POSITIVE_FLOOR,
            }),
        };
        variants.push((rate, next.as_ref().map(|d| d.clone()).map_err(clone_error)));
        current = next;
    }
    variants
}

fn clone_error(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

struct PendingCell<'a> {
    dataset: &'a BinaryDataset,
    rate: f64,
    solution: &'a SolutionSpec,
    metric: MetricKind,
}

const WRITE_CHUNK: usize = 8;

/// Execute the full Cartesian grid, appending to `config.output_path`.
///
/// Already-persisted cells are skipped, so an interrupted run resumes and
/// a complete file reruns as a no-op. Rows land in canonical grid order
/// (datasets, rates, solutions, metrics, repetitions as configured)
/// regardless of parallel scheduling, which makes reruns byte-identical.
pub fn run_grid(config: &ExperimentConfig, config_dir: &Path) -> Result<RunOutcome> {
    let metrics: Vec<MetricKind> = config
        .metrics
        .iter()
        .map(|m| MetricKind::from_str(m))
        .collect::<Result<_>>()?;
    let solutions = build_solutions(config)?;
    let output_path = resolve_path(config_dir, &config.output_path);

    let mut outcome = RunOutcome::default();

    // datasets and their per-rate variants
    type RateVariants = Vec<(f64, Option<BinaryDataset>)>;
    let mut prepared: Vec<(String, RateVariants)> = Vec::new();
    for dc in &config.datasets {
        let base = base_dataset(dc, config_dir)?;
        let mut variants = Vec::new();
        for (rate, variant) in rate_variants(&base, &config.rates, config.master_seed) {
            match variant {
                Ok(ds) => variants.push((rate, Some(ds))),
                Err(e) => {
                    log::warn!("excluding {}@{rate}: {e}", dc.name);
                    outcome.excluded.push(format!("{}@{rate}: {e}", dc.name));
                    variants.push((rate, None));
                }
            }
        }
        prepared.push((dc.name.clone(), variants));
    }

    // resume: collect keys already persisted
    let mut existing = ResultTable::default();
    let mut done: BTreeSet<String> = BTreeSet::new();
    if output_path.exists() {
        existing = ResultTable::read_csv(&output_path)?;
        for c in &existing.cells {
            done.insert(format!(
                "{}\x1f{}\x1f{}\x1f{}",
                c.dataset, c.rate, c.solution, c.metric
            ));
        }
    } else {
        if let Some(parent) = output_path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| Error::io(parent.display().to_string(), e))?;
            }
        }
        std::fs::write(
            &output_path,
            format!("{RESULTS_SCHEMA}\n{RESULTS_COLUMNS}\n"),
        )
        .map_err(|e| Error::io(output_path.display().to_string(), e))?;
    }

    // canonical cell order
    let mut pending: Vec<PendingCell> = Vec::new();
    for (name, variants) in &prepared {
        for rate in &config.rates {
            let Some((_, Some(ds))) = variants.iter().find(|(r, _)| (r - rate).abs() < 1e-12)
            else {
                continue;
            };
            for solution in &solutions {
                for &metric in &metrics {
                    let key = format!("{name}\x1f{rate}\x1f{}\x1f{metric}", solution.id);
                    if done.contains(&key) {
                        outcome.skipped_cells += 1;
                        continue;
                    }
                    pending.push(PendingCell {
                        dataset: ds,
                        rate: *rate,
                        solution,
                        metric,
                    });
                }
            }
        }
    }

    let total = pending.len();
    log::info!(
        "grid: {total} cells to run, {} already persisted",
        outcome.skipped_cells
    );

    let mut file = OpenOptions::new()
        .append(true)
        .open(&output_path)
        .map_err(|e| Error::io(output_path.display().to_string(), e))?;
    let mut new_cells: Vec<CellResult> = Vec::new();
    for (chunk_idx, chunk) in pending.chunks(WRITE_CHUNK).enumerate() {
        let results: Vec<Vec<CellResult>> = chunk
            .par_iter()
            .map(|cell| {
                let plan = SplitPlan {
                    test_fraction: config.test_fraction,
                    repetitions: config.repetitions,
                    inner_folds: config.inner_folds,
                    seed: derive_seed(
                        config.master_seed,
                        &format!(
                            "cell\x1f{}\x1f{}\x1f{}\x1f{}",
                            cell.dataset.name, cell.rate, cell.solution.id, cell.metric
                        ),
                    ),
                };
                let mut rows = run_cell(
                    cell.dataset,
                    cell.solution,
                    cell.metric,
                    &plan,
                    config.candidates,
                );
                // the file keys cells by the requested grid rate
                for row in &mut rows {
                    row.rate = cell.rate;
                }
                rows
            })
            .collect();
        for (cell, rows) in chunk.iter().zip(&results) {
            for row in rows {
                if row.error.is_some() {
                    outcome.failed_rows += 1;
                    log::warn!(
                        "cell {} {}@{} {}: {}",
                        cell.solution.id,
                        cell.dataset.name,
                        cell.rate,
                        cell.metric,
                        row.error.as_deref().unwrap_or("")
                    );
                }
                file.write_all(cell_to_line(row).as_bytes())
                    .and_then(|_| file.write_all(b"\n"))
                    .map_err(|e| Error::io(output_path.display().to_string(), e))?;
            }
            new_cells.extend(rows.iter().cloned());
            outcome.executed_cells += 1;
        }
        file.flush()
            .map_err(|e| Error::io(output_path.display().to_string(), e))?;
        log::info!(
            "grid: {}/{} cells done",
            (chunk_idx * WRITE_CHUNK + chunk.len()).min(total),
            total
        );
    }

    existing.cells.extend(new_cells);
    outcome.table = existing;
    Ok(outcome)
}
