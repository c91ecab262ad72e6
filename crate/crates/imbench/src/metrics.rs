//! Quality metrics for binary classifiers.
//!
//! Threshold metrics are computed from a [`ConfusionMatrix`]; AUC is computed
//! from real-valued scores. Undefined denominators follow a fixed convention:
//! precision with no positive predictions is 0, f1 with no true positives is
//! 0, and mcc with any zero marginal is 0.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// TP/FP/TN/FN counts. Positive is the minority class by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Per-example scores paired with the true labels (true = positive).
#[derive(Debug, Clone)]
pub struct ScoredPredictions {
    pub scores: Vec<f64>,
    pub truth: Vec<bool>,
}

impl ScoredPredictions {
    pub fn new(scores: Vec<f64>, truth: Vec<bool>) -> Result<Self> {
        if scores.len() != truth.len() {
            return Err(Error::InvalidArgument(format!(
                "scores ({}) and truth ({}) differ in length",
                scores.len(),
                truth.len()
            )));
        }
        if scores.is_empty() {
            return Err(Error::InvalidArgument("no predictions".into()));
        }
        Ok(ScoredPredictions { scores, truth })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Hard labels at the given score threshold.
    pub fn predictions_at(&self, threshold: f64) -> Vec<bool> {
        self.scores.iter().map(|&s| s >= threshold).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Acc,
    Auc,
    F1,
    Gmean,
    Mcc,
    Bac,
    Precision,
    Recall,
    Specificity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 9] = [
        MetricKind::Acc,
        MetricKind::Auc,
        MetricKind::F1,
        MetricKind::Gmean,
        MetricKind::Mcc,
        MetricKind::Bac,
        MetricKind::Precision,
        MetricKind::Recall,
        MetricKind::Specificity,
    ];

    /// The six headline metrics used in strategy comparisons.
    pub const MAIN: [MetricKind; 6] = [
        MetricKind::Auc,
        MetricKind::Acc,
        MetricKind::F1,
        MetricKind::Gmean,
        MetricKind::Mcc,
        MetricKind::Bac,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Acc => "acc",
            MetricKind::Auc => "auc",
            MetricKind::F1 => "f1",
            MetricKind::Gmean => "gmean",
            MetricKind::Mcc => "mcc",
            MetricKind::Bac => "bac",
            MetricKind::Precision => "precision",
            MetricKind::Recall => "recall",
            MetricKind::Specificity => "specificity",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric '{s}'")))
    }
}

/// How score ties between a positive and a negative count toward AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TiePolicy {
    /// A tie counts as 0 (strict step function).
    #[default]
    Zero,
    /// A tie counts as 0.5.
    Half,
}

/// Count the four confusion cells.
pub fn confusion(truth: &[bool], predicted: &[bool]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::InvalidArgument(format!(
            "truth ({}) and predicted ({}) differ in length",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fn_ += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp + cm.tn, cm.total())
}

pub fn precision(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fp)
}

pub fn recall(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fn_)
}

pub fn specificity(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tn, cm.tn + cm.fp)
}

pub fn f1(cm: &ConfusionMatrix) -> f64 {
    // 2TP / (2TP + FP + FN); 0 when TP = 0.
    ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_)
}

pub fn balanced_accuracy(cm: &ConfusionMatrix) -> f64 {
    (recall(cm) + specificity(cm)) / 2.0
}

pub fn gmean(cm: &ConfusionMatrix) -> f64 {
    (recall(cm) * specificity(cm)).sqrt()
}

pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom
}

/// Evaluate a threshold metric on a confusion matrix. `Auc` is not a
/// threshold metric and is rejected here.
pub fn score_metric(kind: MetricKind, cm: &ConfusionMatrix) -> Result<f64> {
    Ok(match kind {
        MetricKind::Acc => accuracy(cm),
        MetricKind::F1 => f1(cm),
        MetricKind::Gmean => gmean(cm),
        MetricKind::Mcc => mcc(cm),
        MetricKind::Bac => balanced_accuracy(cm),
        MetricKind::Precision => precision(cm),
        MetricKind::Recall => recall(cm),
        MetricKind::Specificity => specificity(cm),
        MetricKind::Auc => {
            return Err(Error::InvalidArgument(
                "auc needs scores, not a confusion matrix".into(),
            ))
        }
    })
}

/// Pairwise AUC: the fraction of (positive, negative) pairs where the
/// positive scores strictly higher; ties credited per `tie_policy`.
pub fn auc(sp: &ScoredPredictions, tie_policy: TiePolicy) -> Result<f64> {
    let pos: Vec<f64> = sp
        .scores
        .iter()
        .zip(&sp.truth)
        .filter(|(_, &t)| t)
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = sp
        .scores
        .iter()
        .zip(&sp.truth)
        .filter(|(_, &t)| !t)
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClassScores);
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                if let TiePolicy::Half = tie_policy {
                    wins += 0.5;
                }
            }
        }
    }
    Ok(wins / (pos.len() as f64 * neg.len() as f64))
}

/// AUC via the rank-sum form: (sum of positive ranks - P(P+1)/2) / (P*N),
/// with average ranks for ties. Algebraically equal to the pairwise
/// computation under the half-tie policy.
pub fn auc_by_ranks(sp: &ScoredPredictions) -> Result<f64> {
    let n = sp.len();
    let p = sp.truth.iter().filter(|&&t| t).count();
    let m = n - p;
    if p == 0 || m == 0 {
        return Err(Error::SingleClassScores);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sp.scores[a].partial_cmp(&sp.scores[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sp.scores[order[j + 1]] == sp.scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged over the tie group
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let pos_rank_sum: f64 = (0..n).filter(|&i| sp.truth[i]).map(|i| ranks[i]).sum();
    let p_f = p as f64;
    Ok((pos_rank_sum - p_f * (p_f + 1.0) / 2.0) / (p_f * m as f64))
}

/// Evaluate any metric on scored predictions. Threshold metrics binarize at
/// `threshold` first; AUC ignores the threshold.
pub fn evaluate(kind: MetricKind, sp: &ScoredPredictions, threshold: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0,1]"
        )));
    }
    match kind {
        MetricKind::Auc => auc(sp, TiePolicy::default()),
        _ => {
            let cm = confusion(&sp.truth, &sp.predictions_at(threshold))?;
            score_metric(kind, &cm)
        }
    }
}
