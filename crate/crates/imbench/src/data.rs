//! Dataset ingestion, binarization, controlled imbalancing, and stratified
//! splitting.
//!
//! All randomized operations are pure functions of their inputs and a seed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding::{derive_seed, rng_from};

/// Fewest positives a rebalanced dataset may keep. Guarantees a 20% holdout
/// test set still receives at least two positive examples.
pub const POSITIVE_FLOOR: usize = 10;

fn default_feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

/// Raw dataset as loaded: numeric features, arbitrary string class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub labels: Vec<String>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<String>) -> Result<Self> {
        if features.n_rows() == 0 || features.n_cols() == 0 {
            return Err(Error::InvalidArgument("dataset must be non-empty".into()));
        }
        if labels.len() != features.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_rows()
            )));
        }
        for (i, row) in features.iter_rows().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "non-finite feature at row {i}, column {j}"
                    )));
                }
            }
        }
        let feature_names = default_feature_names(features.n_cols());
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.features.n_cols()
    }

    fn class_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in &self.labels {
            *counts.entry(l.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

/// Binary dataset with the positive class expected to be the minority.
///
/// `binarize` on a multiclass dataset where every class sits at or below 5%
/// picks the most frequent class as positive, which transiently leaves the
/// positive class in the majority; callers are expected to follow up with
/// `rebalance_to_rate`, after which the rate is at most 0.5 again.
#[derive(Debug, Clone)]
pub struct BinaryDataset {
    pub name: String,
    pub feature_names: Vec<String>,
    features: Matrix,
    labels: Vec<bool>,
}

impl BinaryDataset {
    pub fn new(name: impl Into<String>, features: Matrix, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_rows()
            )));
        }
        if features.n_rows() == 0 {
            return Err(Error::InvalidArgument("empty dataset".into()));
        }
        let feature_names = default_feature_names(features.n_cols());
        Ok(BinaryDataset {
            name: name.into(),
            feature_names,
            features,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.features.n_cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn negatives(&self) -> usize {
        self.n() - self.positives()
    }

    /// Fraction of positive examples.
    pub fn imbalance_rate(&self) -> f64 {
        self.positives() as f64 / self.n() as f64
    }

    pub fn positive_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i]).collect()
    }

    pub fn negative_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.labels[i]).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> BinaryDataset {
        BinaryDataset {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Holdout protocol: repeated stratified train/test partitions plus the
/// inner fold count used for tuning.
#[derive(Debug, Clone, Copy)]
pub struct SplitPlan {
    pub test_fraction: f64,
    pub repetitions: usize,
    pub inner_folds: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(
        test_fraction: f64,
        repetitions: usize,
        inner_folds: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test_fraction {test_fraction} outside (0,1)"
            )));
        }
        if repetitions == 0 || inner_folds == 0 {
            return Err(Error::InvalidArgument(
                "repetitions and inner_folds must be positive".into(),
            ));
        }
        Ok(SplitPlan {
            test_fraction,
            repetitions,
            inner_folds,
            seed,
        })
    }
}

/// Load a CSV with a header row: every column except `label_column` must
/// parse as a finite real. If `positive_label` is given, labels collapse to
/// a two-class positive/negative encoding right away.
pub fn load_csv(path: &Path, label_column: &str, positive_label: Option<&str>) -> Result<Dataset> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(
                &path_str,
                std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            ),
            _ => Error::Csv {
                path: path_str.clone(),
                message: e.to_string(),
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path_str.clone(),
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn {
            path: path_str.clone(),
            column: label_column.to_string(),
        })?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            path: path_str.clone(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(headers.len() - 1);
        for (col_idx, cell) in record.iter().enumerate() {
            if col_idx == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            let parsed: f64 = cell.trim().parse().map_err(|_| Error::BadCell {
                path: path_str.clone(),
                row: row_idx + 1,
                column: headers[col_idx].clone(),
                value: cell.to_string(),
            })?;
            if !parsed.is_finite() {
                return Err(Error::BadCell {
                    path: path_str.clone(),
                    row: row_idx + 1,
                    column: headers[col_idx].clone(),
                    value: cell.to_string(),
                });
            }
            row.push(parsed);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyCsv { path: path_str });
    }

    if let Some(pos) = positive_label {
        if !labels.iter().any(|l| l == pos) {
            return Err(Error::UnknownLabel {
                label: pos.to_string(),
                column: label_column.to_string(),
            });
        }
        for l in labels.iter_mut() {
            *l = if l == pos {
                "positive".into()
            } else {
                "negative".into()
            };
        }
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path_str.clone());
    let mut ds = Dataset::new(name, Matrix::from_rows(rows)?, labels)?;
    ds.feature_names = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(ds)
}

/// Pick the positive class and relabel everything else negative.
///
/// Binary input: the less frequent class is positive. Multiclass: the class
/// with the lowest frequency strictly above 5%; if no class is above 5%,
/// the most frequent class. Ties break toward the lexicographically
/// smallest label.
pub fn binarize(ds: &Dataset) -> Result<BinaryDataset> {
    let counts = ds.class_counts();
    if counts.len() < 2 {
        return Err(Error::SingleClass {
            name: ds.name.clone(),
            label: counts.keys().next().unwrap_or(&"").to_string(),
        });
    }
    let n = ds.n() as f64;
    let positive: &str = if counts.len() == 2 {
        // BTreeMap iteration is sorted by label, so min_by_key on count
        // keeps the smaller label on ties.
        counts
            .iter()
            .min_by_key(|(_, &c)| c)
            .map(|(&l, _)| l)
            .unwrap()
    } else {
        let above: Vec<(&str, usize)> = counts
            .iter()
            .filter(|(_, &c)| c as f64 / n > 0.05)
            .map(|(&l, &c)| (l, c))
            .collect();
        if above.is_empty() {
            counts
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&l, _)| l)
                .unwrap()
        } else {
            above
                .iter()
                .min_by_key(|(_, c)| *c)
                .map(|(l, _)| *l)
                .unwrap()
        }
    };

    let labels: Vec<bool> = ds.labels.iter().map(|l| l == positive).collect();
    let mut out = BinaryDataset::new(ds.name.clone(), ds.features.clone(), labels)?;
    out.feature_names = ds.feature_names.clone();
    Ok(out)
}

/// Write a binary dataset as CSV: feature columns under their names, the
/// label column holding `positive`/`negative`.
pub fn write_dataset_csv(ds: &BinaryDataset, label_column: &str, path: &Path) -> Result<()> {
    let mut text = String::new();
    text.push_str(&ds.feature_names.join(","));
    text.push(',');
    text.push_str(label_column);
    text.push('\n');
    for i in 0..ds.n() {
        for v in ds.features().row(i) {
            text.push_str(&v.to_string());
            text.push(',');
        }
        text.push_str(if ds.labels()[i] {
            "positive"
        } else {
            "negative"
        });
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Move the dataset to `target_rate` by deletion only.
///
/// Above the target: random positives are removed, keeping the largest
/// positive count whose resulting rate does not exceed the target. Below:
/// random negatives are removed instead. Retained rows keep their original
/// order and content. Refuses any outcome below [`POSITIVE_FLOOR`].
pub fn rebalance_to_rate(
    ds: &BinaryDataset,
    target_rate: f64,
    rng_seed: u64,
) -> Result<BinaryDataset> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target rate {target_rate} outside (0,1)"
        )));
    }
    let pos = ds.positive_indices();
    let neg = ds.negative_indices();
    let current = ds.imbalance_rate();

    let (keep_pos, keep_neg) = if current > target_rate {
        // largest p with p/(p + |neg|) <= target
        let max_pos = (target_rate / (1.0 - target_rate) * neg.len() as f64).floor() as usize;
        let max_pos = max_pos.min(pos.len());
        if max_pos < POSITIVE_FLOOR {
            return Err(Error::RateUnreachable {
                name: ds.name.clone(),
                target: target_rate,
                would_keep: max_pos,
                floor: POSITIVE_FLOOR,
            });
        }
        let mut shuffled = pos.clone();
        shuffled.shuffle(&mut rng_from(derive_seed(rng_seed, "drop-positives")));
        let mut kept: Vec<usize> = shuffled.into_iter().take(max_pos).collect();
        kept.sort_unstable();
        (kept, neg)
    } else if current < target_rate {
        if pos.len() < POSITIVE_FLOOR {
            return Err(Error::RateUnreachable {
                name: ds.name.clone(),
                target: target_rate,
                would_keep: pos.len(),
                floor: POSITIVE_FLOOR,
            });
        }
        // smallest m with p/(p + m) <= target
        let needed = (pos.len() as f64 * (1.0 - target_rate) / target_rate).ceil() as usize;
        let needed = needed.min(neg.len());
        let mut shuffled = neg.clone();
        shuffled.shuffle(&mut rng_from(derive_seed(rng_seed, "drop-negatives")));
        let mut kept: Vec<usize> = shuffled.into_iter().take(needed).collect();
        kept.sort_unstable();
        (pos, kept)
    } else {
        if pos.len() < POSITIVE_FLOOR {
            return Err(Error::RateUnreachable {
                name: ds.name.clone(),
                target: target_rate,
                would_keep: pos.len(),
                floor: POSITIVE_FLOOR,
            });
        }
        (pos, neg)
    };

    let mut indices = keep_pos;
    indices.extend(keep_neg);
    indices.sort_unstable();
    Ok(ds.subset(&indices))
}

fn stratified_test_indices(
    ds: &BinaryDataset,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut test = Vec::new();
    let mut train = Vec::new();
    for (class, indices) in [
        (true, ds.positive_indices()),
        (false, ds.negative_indices()),
    ] {
        let take = (indices.len() as f64 * fraction).round() as usize;
        if class && take < 2 {
            return Err(Error::TooFewPositives {
                have: indices.len(),
                need: (2.0 / fraction).ceil() as usize,
            });
        }
        let mut shuffled = indices;
        shuffled.shuffle(&mut rng_from(derive_seed(seed, &format!("class:{class}"))));
        test.extend(shuffled.iter().take(take).copied());
        train.extend(shuffled.iter().skip(take).copied());
    }
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// One repetition of the stratified holdout. Deterministic in
/// `(plan.seed, repetition)`; train and test partition the input.
pub fn split_holdout(
    ds: &BinaryDataset,
    plan: &SplitPlan,
    repetition: usize,
) -> Result<(BinaryDataset, BinaryDataset)> {
    if repetition >= plan.repetitions {
        return Err(Error::InvalidArgument(format!(
            "repetition {repetition} out of range (plan has {})",
            plan.repetitions
        )));
    }
    let seed = derive_seed(plan.seed, &format!("holdout:{repetition}"));
    let (train, test) = stratified_test_indices(ds, plan.test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Validation index sets for class-stratified k-fold assignment.
///
/// Within each class, shuffled indices are dealt to folds in contiguous
/// blocks; remainder examples go to the lowest-indexed folds.
pub fn stratified_kfold_indices(
    labels: &[bool],
    k: usize,
    rng_seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k} must be >= 2")));
    }
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    if positives.len() < k {
        return Err(Error::TooFewPositives {
            have: positives.len(),
            need: k,
        });
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (class, indices) in [
        (true, positives),
        (false, (0..labels.len()).filter(|&i| !labels[i]).collect()),
    ] {
        let mut shuffled = indices;
        shuffled.shuffle(&mut rng_from(derive_seed(
            rng_seed,
            &format!("kfold:{class}"),
        )));
        let base = shuffled.len() / k;
        let remainder = shuffled.len() % k;
        let mut cursor = 0;
        for (f, fold) in folds.iter_mut().enumerate() {
            let take = base + usize::from(f < remainder);
            fold.extend(shuffled[cursor..cursor + take].iter().copied());
            cursor += take;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

/// Stratified k-fold (train, validation) datasets.
pub fn stratified_kfold(
    ds: &BinaryDataset,
    k: usize,
    rng_seed: u64,
) -> Result<Vec<(BinaryDataset, BinaryDataset)>> {
    let folds = stratified_kfold_indices(ds.labels(), k, rng_seed)?;
    let mut out = Vec::with_capacity(k);
    for f in 0..k {
        let val = &folds[f];
        let mut train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        train.sort_unstable();
        out.push((ds.subset(&train), ds.subset(val)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthFamily {
    /// Two Gaussian blobs separated along the first dimension.
    Gaussians,
    /// A Gaussian negative blob with the positives split over three
    /// small satellite clusters.
    Clusters,
}

impl fmt::Display for SynthFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthFamily::Gaussians => "gaussians",
            SynthFamily::Clusters => "clusters",
        })
    }
}

impl FromStr for SynthFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussians" => Ok(SynthFamily::Gaussians),
            "clusters" => Ok(SynthFamily::Clusters),
            other => Err(Error::InvalidArgument(format!(
                "unknown generator family '{other}'"
            ))),
        }
    }
}

// Draws are clipped to +-2.9 sigma so that overlap = 0 (class centers 6
// sigma apart) yields a genuinely separable dataset.
const CLIP_SIGMA: f64 = 2.9;

fn clipped_normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.sample(StandardNormal);
        if v.abs() <= CLIP_SIGMA {
            return v;
        }
    }
}

/// Generate a two-class synthetic dataset at the requested imbalance rate.
///
/// `overlap` controls difficulty: class separation is `6 / (1 + overlap)`
/// standard deviations, so 0 is separable and larger values overlap more.
pub fn make_synthetic(
    family: SynthFamily,
    n: usize,
    dim: usize,
    overlap: f64,
    rate: f64,
    rng_seed: u64,
) -> Result<BinaryDataset> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidArgument("n and dim must be positive".into()));
    }
    if overlap < 0.0 {
        return Err(Error::InvalidArgument("overlap must be >= 0".into()));
    }
    if !(rate > 0.0 && rate <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} outside (0, 0.5]"
        )));
    }
    let n_pos = ((n as f64 * rate).round() as usize).max(1);
    let n_neg = n - n_pos;
    if n_neg < n_pos {
        return Err(Error::InvalidArgument(format!(
            "rate {rate} leaves more positives than negatives at n = {n}"
        )));
    }
    let separation = 6.0 / (1.0 + overlap);
    let mut rng = rng_from(rng_seed);

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);

    match family {
        SynthFamily::Gaussians => {
            for i in 0..n {
                let positive = i < n_pos;
                let mut row: Vec<f64> = (0..dim).map(|_| clipped_normal(&mut rng)).collect();
                if positive {
                    row[0] += separation;
                }
                rows.push(row);
                labels.push(positive);
            }
        }
        SynthFamily::Clusters => {
            // three positive satellites at fixed angles in the first two
            // dimensions (or along dim 0 when dim == 1)
            let n_clusters = 3;
            let centers: Vec<Vec<f64>> = (0..n_clusters)
                .map(|c| {
                    let angle = c as f64 * 2.0 * std::f64::consts::PI / n_clusters as f64;
                    let mut center = vec![0.0; dim];
                    center[0] = separation * angle.cos();
                    if dim > 1 {
                        center[1] = separation * angle.sin();
                    }
                    center
                })
                .collect();
            for i in 0..n {
                let positive = i < n_pos;
                let mut row: Vec<f64> = (0..dim).map(|_| clipped_normal(&mut rng)).collect();
                if positive {
                    let center = &centers[i % n_clusters];
                    for (v, c) in row.iter_mut().zip(center) {
                        // satellites are tighter than the negative blob
                        *v = *v * 0.4 + c;
                    }
                }
                rows.push(row);
                labels.push(positive);
            }
        }
    }

    BinaryDataset::new(
        format!("{family}-{n}x{dim}"),
        Matrix::from_rows(rows)?,
        labels,
    )
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    fn labeled(pos: usize, neg: usize) -> BinaryDataset {
        let n = pos + neg;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, (2 * i) as f64]).collect();
        let labels: Vec<bool> = (0..n).map(|i| i < pos).collect();
        BinaryDataset::new("t", Matrix::from_rows(rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn load_csv_small() {
        let f = write_csv("x1,x2,class\n1.0,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n");
        let ds = load_csv(f.path(), "class", None).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels, vec!["a", "b", "a"]);
    }

    #[test]
    fn load_csv_reports_bad_cell() {
        let f = write_csv("x1,x2,class\n1.0,NaN,a\n");
        let err = load_csv(f.path(), "class", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("x2"), "{msg}");
    }

    #[test]
    fn load_csv_missing_column_and_file() {
        let f = write_csv("x1,class\n1.0,a\n");
        assert!(matches!(
            load_csv(f.path(), "y", None),
            Err(Error::MissingColumn { .. })
        ));
        assert!(load_csv(Path::new("/nonexistent/x.csv"), "y", None).is_err());
    }

    #[test]
    fn load_csv_empty_data() {
        let f = write_csv("x1,class\n");
        assert!(matches!(
            load_csv(f.path(), "class", None),
            Err(Error::EmptyCsv { .. })
        ));
    }

    #[test]
    fn load_csv_matches_manual_parse() {
        // independent line-by-line parse as the oracle
        let mut content = String::from("a,b,y\n");
        let mut expect_labels = Vec::new();
        for i in 0..100 {
            let label = if i % 7 == 0 { "p" } else { "q" };
            content.push_str(&format!("{}.5,{},{}\n", i, i * 2, label));
            expect_labels.push(label.to_string());
        }
        let f = write_csv(&content);
        let ds = load_csv(f.path(), "y", None).unwrap();
        assert_eq!(ds.n(), 100);
        assert_eq!(ds.labels, expect_labels);
        for (i, line) in content.lines().skip(1).enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(ds.features.get(i, 0), cells[0].parse::<f64>().unwrap());
            assert_eq!(ds.features.get(i, 1), cells[1].parse::<f64>().unwrap());
        }
    }

    #[test]
    fn load_csv_positive_label_collapses_classes() {
        let f = write_csv("x,y\n1,a\n2,b\n3,c\n");
        let ds = load_csv(f.path(), "y", Some("b")).unwrap();
        assert_eq!(ds.labels, vec!["negative", "positive", "negative"]);
        assert!(load_csv(f.path(), "y", Some("zzz")).is_err());
    }

    fn dataset_with_counts(counts: &[(&str, usize)]) -> Dataset {
        let mut labels = Vec::new();
        for (l, c) in counts {
            labels.extend(vec![l.to_string(); *c]);
        }
        let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
        Dataset::new("t", Matrix::from_rows(rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn binarize_binary_picks_minority() {
        let ds = dataset_with_counts(&[("A", 30), ("B", 70)]);
        let b = binarize(&ds).unwrap();
        assert_eq!(b.positives(), 30);
    }

    #[test]
    fn binarize_multiclass_lowest_above_five_percent() {
        let ds = dataset_with_counts(&[("A", 60), ("B", 30), ("C", 10)]);
        let b = binarize(&ds).unwrap();
        assert_eq!(b.positives(), 10); // C
    }

    #[test]
    fn binarize_multiclass_all_small_picks_majority() {
        let ds = dataset_with_counts(&[("A", 96), ("B", 2), ("C", 2)]);
        let b = binarize(&ds).unwrap();
        assert_eq!(b.positives(), 96); // A; a later rebalance restores minority status
    }

    #[test]
    fn binarize_then_rebalance_restores_minority_status() {
        // the all-small multiclass branch leaves the positive class in the
        // majority; the follow-up rebalance brings the rate back under 0.5
        let ds = dataset_with_counts(&[("A", 9600), ("B", 200), ("C", 200)]);
        let b = binarize(&ds).unwrap();
        assert!(b.imbalance_rate() > 0.5);
        let rebalanced = rebalance_to_rate(&b, 0.05, 3).unwrap();
        assert!(rebalanced.imbalance_rate() <= 0.05);
        assert_eq!(rebalanced.negatives(), 400);
        assert_eq!(rebalanced.positives(), 21);
    }

    #[test]
    fn binarize_rejects_single_class() {
        let ds = dataset_with_counts(&[("A", 5)]);
        assert!(matches!(binarize(&ds), Err(Error::SingleClass { .. })));
    }

    #[test]
    fn rebalance_drops_positives_to_five_percent() {
        let ds = labeled(200, 1000);
        let out = rebalance_to_rate(&ds, 0.05, 7).unwrap();
        // oracle: largest p with p/(p+1000) <= 0.05
        let mut expect = 0;
        for p in 0..=200usize {
            if p as f64 / (p as f64 + 1000.0) <= 0.05 {
                expect = p;
            }
        }
        assert_eq!(expect, 52);
        assert_eq!(out.positives(), 52);
        assert_eq!(out.negatives(), 1000);
        assert!(out.imbalance_rate() <= 0.05);
    }

    #[test]
    fn rebalance_noop_at_target() {
        let ds = labeled(50, 950);
        let out = rebalance_to_rate(&ds, 0.05, 7).unwrap();
        assert_eq!(out.positives(), 50);
        assert_eq!(out.negatives(), 950);
    }

    #[test]
    fn rebalance_respects_positive_floor() {
        let ds = labeled(11, 989);
        let err = rebalance_to_rate(&ds, 0.001, 7).unwrap_err();
        assert!(matches!(err, Error::RateUnreachable { would_keep: 0, .. }));
    }

    #[test]
    fn rebalance_removes_negatives_when_below_target() {
        let ds = labeled(50, 5000);
        let out = rebalance_to_rate(&ds, 0.05, 7).unwrap();
        assert_eq!(out.positives(), 50);
        assert_eq!(out.negatives(), 950);
        assert!(out.imbalance_rate() <= 0.05 + 1e-12);
    }

    #[test]
    fn rebalance_preserves_retained_rows_verbatim() {
        let ds = labeled(40, 400);
        let out = rebalance_to_rate(&ds, 0.05, 3).unwrap();
        assert!(out.positives() <= 40 && out.negatives() <= 400);
        // every output row must literally exist in the input with its label
        let mut cursor = 0;
        for i in 0..out.n() {
            let row = out.features().row(i);
            let mut found = false;
            while cursor < ds.n() {
                if ds.features().row(cursor) == row && ds.labels()[cursor] == out.labels()[i] {
                    found = true;
                    cursor += 1;
                    break;
                }
                cursor += 1;
            }
            assert!(found, "row {i} missing or out of order");
        }
    }

    #[test]
    fn rebalance_is_deterministic() {
        let ds = labeled(100, 900);
        let a = rebalance_to_rate(&ds, 0.03, 9).unwrap();
        let b = rebalance_to_rate(&ds, 0.03, 9).unwrap();
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.features(), b.features());
    }

    #[test]
    fn holdout_counts_round_per_class() {
        let ds = labeled(10, 90);
        let plan = SplitPlan::new(0.2, 3, 3, 5).unwrap();
        let (train, test) = split_holdout(&ds, &plan, 0).unwrap();
        assert_eq!(test.positives(), 2);
        assert_eq!(test.negatives(), 18);
        assert_eq!(train.positives(), 8);
        assert_eq!(train.negatives(), 72);
    }

    #[test]
    fn holdout_deterministic_and_rep_sensitive() {
        let ds = labeled(20, 180);
        let plan = SplitPlan::new(0.2, 3, 3, 5).unwrap();
        let (tr_a, te_a) = split_holdout(&ds, &plan, 0).unwrap();
        let (tr_b, te_b) = split_holdout(&ds, &plan, 0).unwrap();
        assert_eq!(tr_a.features(), tr_b.features());
        assert_eq!(te_a.features(), te_b.features());

        let (_, te_c) = split_holdout(&ds, &plan, 1).unwrap();
        assert_ne!(te_a.features(), te_c.features());
    }

    #[test]
    fn holdout_partitions_exhaustively() {
        let ds = labeled(15, 135);
        let plan = SplitPlan::new(0.2, 2, 3, 11).unwrap();
        let (train, test) = split_holdout(&ds, &plan, 1).unwrap();
        assert_eq!(train.n() + test.n(), ds.n());
        assert_eq!(train.positives() + test.positives(), ds.positives());
        assert_eq!(train.negatives() + test.negatives(), ds.negatives());
    }

    #[test]
    fn holdout_needs_two_test_positives() {
        let ds = labeled(5, 95);
        let plan = SplitPlan::new(0.2, 1, 3, 5).unwrap();
        assert!(matches!(
            split_holdout(&ds, &plan, 0),
            Err(Error::TooFewPositives { .. })
        ));
    }

    #[test]
    fn kfold_exact_divisibility() {
        let ds = labeled(9, 90);
        let folds = stratified_kfold(&ds, 3, 2).unwrap();
        for (train, val) in &folds {
            assert_eq!(val.positives(), 3);
            assert_eq!(val.negatives(), 30);
            assert_eq!(train.positives(), 6);
        }
    }

    #[test]
    fn kfold_remainder_goes_to_low_folds() {
        let ds = labeled(10, 90);
        let folds = stratified_kfold_indices(ds.labels(), 3, 2).unwrap();
        let pos_counts: Vec<usize> = folds
            .iter()
            .map(|f| f.iter().filter(|&&i| ds.labels()[i]).count())
            .collect();
        assert_eq!(pos_counts, vec![4, 3, 3]);
    }

    #[test]
    fn kfold_is_a_partition() {
        let ds = labeled(10, 80);
        let folds = stratified_kfold_indices(ds.labels(), 3, 17).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..ds.n()).collect::<Vec<_>>());
    }

    #[test]
    fn kfold_needs_one_positive_per_fold() {
        let ds = labeled(2, 50);
        assert!(matches!(
            stratified_kfold(&ds, 3, 1),
            Err(Error::TooFewPositives { .. })
        ));
    }

    #[test]
    fn synthetic_counts_by_construction() {
        let ds = make_synthetic(SynthFamily::Gaussians, 1000, 4, 1.0, 0.05, 3).unwrap();
        assert_eq!(ds.positives(), 50);
        assert_eq!(ds.negatives(), 950);
    }

    #[test]
    fn synthetic_is_bit_identical_per_seed() {
        let a = make_synthetic(SynthFamily::Clusters, 300, 3, 0.8, 0.1, 11).unwrap();
        let b = make_synthetic(SynthFamily::Clusters, 300, 3, 0.8, 0.1, 11).unwrap();
        assert_eq!(a.features(), b.features());
        assert_eq!(a.labels(), b.labels());
        let c = make_synthetic(SynthFamily::Clusters, 300, 3, 0.8, 0.1, 12).unwrap();
        assert_ne!(a.features(), c.features());
    }

    #[test]
    fn synthetic_zero_overlap_separates_on_first_dimension() {
        let ds = make_synthetic(SynthFamily::Gaussians, 400, 3, 0.0, 0.1, 5).unwrap();
        // centers are 6 sigma apart and draws clip at 2.9, so x0 = 3 splits
        for i in 0..ds.n() {
            let x0 = ds.features().get(i, 0);
            assert_eq!(ds.labels()[i], x0 > 3.0);
        }
    }

    #[test]
    fn synthetic_rejects_degenerate_sizes() {
        assert!(make_synthetic(SynthFamily::Gaussians, 0, 3, 1.0, 0.1, 5).is_err());
        assert!(make_synthetic(SynthFamily::Gaussians, 100, 0, 1.0, 0.1, 5).is_err());
    }
}
