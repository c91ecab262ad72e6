//! Rank-based comparison of solutions over datasets.
//!
//! The pipeline is Friedman ranks over a blocks-by-algorithms matrix,
//! pairwise z tests with Bergmann-Hommel (exhaustive-partition) or Holm
//! adjustment, Wilcoxon signed-rank for two-column questions, and a
//! compact letter display where two algorithms share a letter iff their
//! difference is not significant.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::experiment::ResultTable;
use crate::metrics::MetricKind;
use crate::strategies::StrategyKind;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Blocks-by-algorithms matrix of aggregated metric values.
#[derive(Debug, Clone)]
pub struct PerformanceMatrix {
    pub row_labels: Vec<String>,
    pub columns: Vec<String>,
    /// Row-major; `values[r][c]` is column c's value on block r.
    pub values: Vec<Vec<f64>>,
    pub higher_is_better: bool,
}

impl PerformanceMatrix {
    pub fn new(
        row_labels: Vec<String>,
        columns: Vec<String>,
        values: Vec<Vec<f64>>,
        higher_is_better: bool,
    ) -> Result<Self> {
        if columns.len() < 2 || values.len() < 2 {
            return Err(Error::DegenerateMatrix(format!(
                "need >= 2 rows and >= 2 columns, have {}x{}",
                values.len(),
                columns.len()
            )));
        }
        if row_labels.len() != values.len() || values.iter().any(|r| r.len() != columns.len()) {
            return Err(Error::DegenerateMatrix("ragged matrix".into()));
        }
        Ok(PerformanceMatrix {
            row_labels,
            columns,
            values,
            higher_is_better,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }
}

/// Adjustment procedure for the pairwise post-hoc p-values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustMethod {
    BergmannHommel,
    Holm,
}

/// Outcome of a multi-column comparison.
#[derive(Debug, Clone)]
pub struct RankSummary {
    pub columns: Vec<String>,
    /// Mean within-row rank per column; rank 1 is best.
    pub mean_ranks: Vec<f64>,
    pub n_rows: usize,
    pub friedman_statistic: Option<f64>,
    pub friedman_p: Option<f64>,
    /// Adjusted pairwise p-values (symmetric, 1.0 on the diagonal).
    pub pairwise_p: Option<Vec<Vec<f64>>>,
    pub adjustment: Option<AdjustMethod>,
    /// Wilcoxon (statistic, p) for two-column questions.
    pub wilcoxon: Option<(f64, f64)>,
    /// One letter string per column, aligned with `columns`.
    pub letters: Vec<String>,
}

/// Within-row ranks, best = 1, average ranks on ties.
fn row_ranks(row: &[f64], higher_is_better: bool) -> Vec<f64> {
    let k = row.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let cmp = row[a].partial_cmp(&row[b]).unwrap();
        if higher_is_better {
            cmp.reverse()
        } else {
            cmp
        }
    });
    let mut ranks = vec![0.0; k];
    let mut i = 0;
    while i < k {
        let mut j = i;
        while j + 1 < k && row[order[j + 1]] == row[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &col in &order[i..=j] {
            ranks[col] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn mean_ranks(pm: &PerformanceMatrix) -> Vec<f64> {
    let n = pm.n_rows() as f64;
    let mut sums = vec![0.0; pm.n_cols()];
    for row in &pm.values {
        for (s, r) in sums.iter_mut().zip(row_ranks(row, pm.higher_is_better)) {
            *s += r;
        }
    }
    sums.iter_mut().for_each(|s| *s /= n);
    sums
}

/// Friedman chi-square test over within-row ranks.
///
/// Returns `(statistic, p_value, mean_ranks)` with the statistic
/// `12/(N k (k+1)) * sum(R_j^2) - 3 N (k+1)` and the p-value from the
/// chi-square distribution with k-1 degrees of freedom.
pub fn friedman(pm: &PerformanceMatrix) -> Result<(f64, f64, Vec<f64>)> {
    let n = pm.n_rows() as f64;
    let k = pm.n_cols() as f64;
    let means = mean_ranks(pm);
    let rank_sums: Vec<f64> = means.iter().map(|m| m * n).collect();
    let sum_sq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let statistic = 12.0 / (n * k * (k + 1.0)) * sum_sq - 3.0 * n * (k + 1.0);
    let statistic = statistic.max(0.0);
    let chi = ChiSquared::new(k - 1.0)
        .map_err(|e| Error::DegenerateMatrix(format!("chi-square setup: {e}")))?;
    let p = 1.0 - chi.cdf(statistic);
    Ok((statistic, p, means))
}

/// All partitions of {0..n-1}, as block lists.
fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for smaller in partitions(n - 1) {
        let item = n - 1;
        // item joins each existing block, or starts its own
        for b in 0..smaller.len() {
            let mut next = smaller.clone();
            next[b].push(item);
            out.push(next);
        }
        let mut own = smaller.clone();
        own.push(vec![item]);
        out.push(own);
    }
    out
}

fn pair_index(i: usize, j: usize, k: usize) -> usize {
    // canonical index of pair (i, j) with i < j in the upper triangle
    debug_assert!(i < j && j < k);
    i * k - i * (i + 1) / 2 + (j - i - 1)
}

/// Hypothesis sets that can hold simultaneously: within-block pairs of
/// every partition of the k columns.
fn exhaustive_sets(k: usize) -> Vec<Vec<usize>> {
    let mut sets = Vec::new();
    for partition in partitions(k) {
        let mut pairs = Vec::new();
        for block in &partition {
            let mut sorted = block.clone();
            sorted.sort_unstable();
            for a in 0..sorted.len() {
                for b in a + 1..sorted.len() {
                    pairs.push(pair_index(sorted[a], sorted[b], k));
                }
            }
        }
        if !pairs.is_empty() {
            pairs.sort_unstable();
            sets.push(pairs);
        }
    }
    sets
}

/// Holm step-down adjustment, monotone and capped at 1.
pub fn holm_adjust(raw: &[f64]) -> Vec<f64> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (pos, &idx) in order.iter().enumerate() {
        let value = ((m - pos) as f64 * raw[idx]).min(1.0);
        running = running.max(value);
        adjusted[idx] = running;
    }
    adjusted
}

/// Bergmann-Hommel adjustment by exhaustive-set enumeration.
///
/// The adjusted value of hypothesis h is `max |I| * min(p in I)` over all
/// exhaustive sets I containing h, then monotonized in raw-p order and
/// capped at 1. Tractable for k <= 5.
pub fn bergmann_hommel_adjust(raw: &[f64], k: usize) -> Vec<f64> {
    let sets = exhaustive_sets(k);
    let m = raw.len();
    let mut adjusted = vec![0.0f64; m];
    for set in &sets {
        let min_p = set.iter().map(|&h| raw[h]).fold(f64::INFINITY, f64::min);
        let value = set.len() as f64 * min_p;
        for &h in set {
            adjusted[h] = adjusted[h].max(value);
        }
    }
    // monotone in raw-p order, capped
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).unwrap());
    let mut running = 0.0f64;
    for &idx in &order {
        running = running.max(adjusted[idx].min(1.0));
        adjusted[idx] = running;
    }
    adjusted
}

const BH_MAX_COLUMNS: usize = 5;

/// Pairwise post-hoc z tests with multiplicity adjustment.
///
/// Raw p-values come from `z = (Rbar_i - Rbar_j) / sqrt(k(k+1)/(6N))`
/// against the standard normal. Bergmann-Hommel enumeration is only
/// feasible for k <= 5; above that the method silently falls back to Holm
/// and reports which procedure ran.
pub fn pairwise_posthoc(
    pm: &PerformanceMatrix,
    method: AdjustMethod,
) -> Result<(Vec<Vec<f64>>, AdjustMethod)> {
    let k = pm.n_cols();
    let n = pm.n_rows() as f64;
    let means = mean_ranks(pm);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let se = (k as f64 * (k as f64 + 1.0) / (6.0 * n)).sqrt();

    let mut raw = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let z = (means[i] - means[j]) / se;
            raw.push(2.0 * (1.0 - normal.cdf(z.abs())));
        }
    }

    let used = if method == AdjustMethod::BergmannHommel && k > BH_MAX_COLUMNS {
        AdjustMethod::Holm
    } else {
        method
    };
    let adjusted = match used {
        AdjustMethod::Holm => holm_adjust(&raw),
        AdjustMethod::BergmannHommel => bergmann_hommel_adjust(&raw, k),
    };

    let mut matrix = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let p = adjusted[pair_index(i, j, k)];
            matrix[i][j] = p;
            matrix[j][i] = p;
        }
    }
    Ok((matrix, used))
}

const WILCOXON_EXACT_LIMIT: usize = 25;

/// Two-sided Wilcoxon signed-rank test on paired samples.
///
/// Zero differences are dropped; at least 5 pairs must remain. Tied
/// absolute differences receive average ranks. The p-value is exact
/// (distribution enumerated over all sign assignments) for n <= 25, and a
/// tie-corrected, continuity-corrected normal approximation otherwise.
/// Returns `(min(W+, W-), p)`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::Wilcoxon("paired samples differ in length".into()));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::Wilcoxon("all differences are zero".into()));
    }
    if diffs.len() < 5 {
        return Err(Error::Wilcoxon(format!(
            "need >= 5 nonzero differences, have {}",
            diffs.len()
        )));
    }
    let n = diffs.len();

    // average ranks of |d|, doubled so ties-of-two stay integral
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| diffs[x].abs().partial_cmp(&diffs[y].abs()).unwrap());
    let mut double_ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let doubled = (i + j + 2) as u64; // 2 * average rank
        for &idx in &order[i..=j] {
            double_ranks[idx] = doubled;
        }
        tie_sizes.push((j - i + 1) as f64);
        i = j + 1;
    }

    let w_plus_2: u64 = (0..n)
        .filter(|&i| diffs[i] > 0.0)
        .map(|i| double_ranks[i])
        .sum();
    let total_2: u64 = double_ranks.iter().sum();
    let w_minus_2 = total_2 - w_plus_2;
    let w_min_2 = w_plus_2.min(w_minus_2);
    let statistic = w_min_2 as f64 / 2.0;

    let p = if n <= WILCOXON_EXACT_LIMIT {
        exact_wilcoxon_p(&double_ranks, w_min_2)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = tie_sizes.iter().map(|&t| t * t * t - t).sum::<f64>() / 48.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        // continuity correction toward the mean
        let z = (statistic - mean + 0.5) / var.sqrt();
        (2.0 * normal.cdf(z)).min(1.0)
    };
    Ok((statistic, p))
}

/// Exact two-sided p: 2 * P(W <= w_obs) where W is the sum of a uniformly
/// random sign subset of the (doubled) ranks. Subset-sum counting is
/// equivalent to enumerating all 2^n sign assignments.
fn exact_wilcoxon_p(double_ranks: &[u64], w_obs_2: u64) -> f64 {
    let total: usize = double_ranks.iter().sum::<u64>() as usize;
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in double_ranks {
        let r = r as usize;
        reach += r;
        for s in (0..=reach).rev() {
            if s >= r && counts[s - r] > 0.0 {
                counts[s] += counts[s - r];
            }
        }
    }
    let below: f64 = counts[..=(w_obs_2 as usize)].iter().sum();
    let all = 2.0f64.powi(double_ranks.len() as i32);
    (2.0 * below / all).min(1.0)
}

/// Compact letter display by insert-and-absorb.
///
/// Two columns share at least one letter iff their difference is NOT
/// significant. Letters are ordered so the best-ranked column owns 'a'.
#[allow(clippy::needless_range_loop)] // triangular pair iteration
pub fn letter_display(mean_ranks: &[f64], sig: &[Vec<bool>]) -> Vec<String> {
    let k = mean_ranks.len();
    debug_assert!(sig.len() == k && sig.iter().all(|r| r.len() == k));

    // start with one letter holding everyone, split on significant pairs
    let mut letters: Vec<Vec<usize>> = vec![(0..k).collect()];
    for i in 0..k {
        for j in i + 1..k {
            if !sig[i][j] {
                continue;
            }
            let mut next: Vec<Vec<usize>> = Vec::new();
            for letter in &letters {
                if letter.contains(&i) && letter.contains(&j) {
                    let without_i: Vec<usize> =
                        letter.iter().copied().filter(|&c| c != i).collect();
                    let without_j: Vec<usize> =
                        letter.iter().copied().filter(|&c| c != j).collect();
                    next.push(without_i);
                    next.push(without_j);
                } else {
                    next.push(letter.clone());
                }
            }
            // absorb letters contained in another
            next.retain(|l| !l.is_empty());
            let mut kept: Vec<Vec<usize>> = Vec::new();
            for (a, letter) in next.iter().enumerate() {
                let absorbed = next.iter().enumerate().any(|(b, other)| {
                    if a == b || letter.len() > other.len() {
                        return false;
                    }
                    let strictly_smaller = letter.len() < other.len();
                    let is_subset = letter.iter().all(|c| other.contains(c));
                    is_subset && (strictly_smaller || b < a)
                });
                if !absorbed {
                    kept.push(letter.clone());
                }
            }
            letters = kept;
        }
    }

    // order letters by the best-ranked member so 'a' goes to the winner
    let mut col_order: Vec<usize> = (0..k).collect();
    col_order.sort_by(|&a, &b| {
        mean_ranks[a]
            .partial_cmp(&mean_ranks[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let position = |c: usize| col_order.iter().position(|&x| x == c).unwrap();
    letters.sort_by_key(|l| l.iter().map(|&c| position(c)).min().unwrap());

    let mut out = vec![String::new(); k];
    for (li, letter) in letters.iter().enumerate() {
        let ch = (b'a' + (li % 26) as u8) as char;
        let mut members: Vec<usize> = letter.clone();
        members.sort_unstable();
        for c in members {
            out[c].push(ch);
        }
    }
    out
}

/// Which factor spans the columns of the comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Grouping {
    /// Columns are strategies; classifier and rate are marginalized into
    /// rows. RUSBoost, having no base classifier, contributes the same
    /// value to every classifier block of a dataset/rate row.
    Strategy,
    /// Columns are (classifier, strategy) combinations.
    Solution,
    /// Exactly two named solutions, tested with Wilcoxon.
    Pair { a: String, b: String },
}

/// Row filters plus the metric and grouping of a comparison.
#[derive(Debug, Clone)]
pub struct Question {
    pub metric: MetricKind,
    pub grouping: Grouping,
    pub rates: Option<Vec<f64>>,
    pub datasets: Option<Vec<String>>,
}

impl Question {
    pub fn new(metric: MetricKind, grouping: Grouping) -> Self {
        Question {
            metric,
            grouping,
            rates: None,
            datasets: None,
        }
    }
}

fn rate_matches(filter: &Option<Vec<f64>>, rate: f64) -> bool {
    match filter {
        None => true,
        Some(rates) => rates.iter().any(|r| (r - rate).abs() < 1e-9),
    }
}

/// Build the performance matrix for a question.
///
/// Rows are dataset x rate x marginalized-factor combinations; entries are
/// mean-over-repetitions values. Rows missing any column (failed or absent
/// cells) are dropped.
pub fn build_matrix(rt: &ResultTable, q: &Question) -> Result<PerformanceMatrix> {
    let aggregated = rt.mean_over_repetitions();
    let mut filtered: Vec<&crate::experiment::AggregatedCell> = aggregated
        .iter()
        .filter(|c| c.metric == q.metric)
        .filter(|c| rate_matches(&q.rates, c.rate))
        .filter(|c| {
            q.datasets
                .as_ref()
                .is_none_or(|names| names.contains(&c.dataset))
        })
        .collect();
    filtered.sort_by(|a, b| {
        (&a.dataset, &a.solution)
            .cmp(&(&b.dataset, &b.solution))
            .then(a.rate.partial_cmp(&b.rate).unwrap())
    });
    if filtered.is_empty() {
        return Err(Error::EmptySelection(format!(
            "no results for metric {}",
            q.metric
        )));
    }

    let lookup = |dataset: &str, rate: f64, solution: &str| -> Option<f64> {
        filtered
            .iter()
            .find(|c| {
                c.dataset == dataset && (c.rate - rate).abs() < 1e-12 && c.solution == solution
            })
            .map(|c| c.value)
    };

    // distinct (dataset, rate) keys in stable order
    let mut keys: Vec<(String, f64)> = Vec::new();
    for c in &filtered {
        if !keys
            .iter()
            .any(|(d, r)| d == &c.dataset && (r - c.rate).abs() < 1e-12)
        {
            keys.push((c.dataset.clone(), c.rate));
        }
    }

    let (columns, rows, labels) = match &q.grouping {
        Grouping::Strategy => {
            let strategies: Vec<StrategyKind> = StrategyKind::ALL
                .into_iter()
                .filter(|s| filtered.iter().any(|c| c.strategy == s.name()))
                .collect();
            if strategies.len() < 2 {
                return Err(Error::EmptySelection("need at least two strategies".into()));
            }
            // classifier blocks observed among strategies that use one
            let mut classifiers: Vec<String> = Vec::new();
            for c in &filtered {
                if !c.classifier.is_empty() && !classifiers.contains(&c.classifier) {
                    classifiers.push(c.classifier.clone());
                }
            }
            classifiers.sort();
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (dataset, rate) in &keys {
                for clf in &classifiers {
                    let mut row = Vec::with_capacity(strategies.len());
                    let mut complete = true;
                    for s in &strategies {
                        let id = if s.uses_base_classifier() {
                            crate::experiment::solution_id(s.name(), Some(clf))
                        } else {
                            crate::experiment::solution_id(s.name(), None)
                        };
                        match lookup(dataset, *rate, &id) {
                            Some(v) => row.push(v),
                            None => {
                                complete = false;
                                break;
                            }
                        }
                    }
                    if complete {
                        rows.push(row);
                        labels.push(format!("{dataset}/{rate}/{clf}"));
                    }
                }
            }
            (
                strategies.iter().map(|s| s.name().to_string()).collect(),
                rows,
                labels,
            )
        }
        Grouping::Solution => {
            let mut solutions: Vec<String> = Vec::new();
            for c in &filtered {
                if !solutions.contains(&c.solution) {
                    solutions.push(c.solution.clone());
                }
            }
            solutions.sort();
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (dataset, rate) in &keys {
                let row: Vec<Option<f64>> = solutions
                    .iter()
                    .map(|s| lookup(dataset, *rate, s))
                    .collect();
                if row.iter().all(Option::is_some) {
                    rows.push(row.into_iter().map(Option::unwrap).collect());
                    labels.push(format!("{dataset}/{rate}"));
                }
            }
            (solutions, rows, labels)
        }
        Grouping::Pair { a, b } => {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for (dataset, rate) in &keys {
                if let (Some(va), Some(vb)) = (lookup(dataset, *rate, a), lookup(dataset, *rate, b))
                {
                    rows.push(vec![va, vb]);
                    labels.push(format!("{dataset}/{rate}"));
                }
            }
            (vec![a.clone(), b.clone()], rows, labels)
        }
    };

    PerformanceMatrix::new(labels, columns, rows, true)
}

/// Run the full comparison for a question.
pub fn compare(rt: &ResultTable, q: &Question) -> Result<RankSummary> {
    let pm = build_matrix(rt, q)?;
    summarize_matrix(&pm)
}

/// Friedman + post-hoc + letters (k > 2), or Wilcoxon + letters (k = 2).
pub fn summarize_matrix(pm: &PerformanceMatrix) -> Result<RankSummary> {
    let k = pm.n_cols();
    let means = mean_ranks(pm);

    if k == 2 {
        let a: Vec<f64> = pm.values.iter().map(|r| r[0]).collect();
        let b: Vec<f64> = pm.values.iter().map(|r| r[1]).collect();
        let (stat, p) = match wilcoxon_signed_rank(&a, &b) {
            Ok(sp) => sp,
            // identical columns: no evidence of difference
            Err(Error::Wilcoxon(_)) => (0.0, 1.0),
            Err(e) => return Err(e),
        };
        let s = p < SIGNIFICANCE_LEVEL;
        let sig = vec![vec![false, s], vec![s, false]];
        let letters = letter_display(&means, &sig);
        return Ok(RankSummary {
            columns: pm.columns.clone(),
            mean_ranks: means,
            n_rows: pm.n_rows(),
            friedman_statistic: None,
            friedman_p: None,
            pairwise_p: None,
            adjustment: None,
            wilcoxon: Some((stat, p)),
            letters,
        });
    }

    let (statistic, p, _) = friedman(pm)?;
    let (pairwise, used) = pairwise_posthoc(pm, AdjustMethod::BergmannHommel)?;
    let sig: Vec<Vec<bool>> = pairwise
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| i != j && v < SIGNIFICANCE_LEVEL)
                .collect()
        })
        .collect();
    let letters = letter_display(&means, &sig);
    Ok(RankSummary {
        columns: pm.columns.clone(),
        mean_ranks: means,
        n_rows: pm.n_rows(),
        friedman_statistic: Some(statistic),
        friedman_p: Some(p),
        pairwise_p: Some(pairwise),
        adjustment: Some(used),
        wilcoxon: None,
        letters,
    })
}
