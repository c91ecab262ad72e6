//! Imbalance mitigation strategies.
//!
//! Four external/internal strategies (baseline, class weight, SMOTE
//! oversampling, underbagging) plus the RUSBoost special-purpose classifier.
//! Each produces a scorable [`Model`] from a dataset and a base-classifier
//! spec through [`fit_solution`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::classifiers::{
    fit, Aggregation, ClassifierKind, ClassifierSpec, EnsembleModel, Model, WeightVector,
};
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::params::{get_int, ParamMap};
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    Baseline,
    ClassWeight,
    Smote,
    Underbagging,
    Rusboost,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Baseline,
        StrategyKind::ClassWeight,
        StrategyKind::Smote,
        StrategyKind::Underbagging,
        StrategyKind::Rusboost,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::Baseline => "baseline",
            StrategyKind::ClassWeight => "weight",
            StrategyKind::Smote => "smote",
            StrategyKind::Underbagging => "underbagging",
            StrategyKind::Rusboost => "rusboost",
        }
    }

    /// RUSBoost carries its own fixed CART base and ignores the classifier.
    pub fn uses_base_classifier(&self) -> bool {
        !matches!(self, StrategyKind::Rusboost)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(StrategyKind::Baseline),
            "weight" | "class_weight" => Ok(StrategyKind::ClassWeight),
            "smote" => Ok(StrategyKind::Smote),
            "underbagging" => Ok(StrategyKind::Underbagging),
            "rusboost" => Ok(StrategyKind::Rusboost),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy '{other}'"
            ))),
        }
    }
}

pub const DEFAULT_SMOTE_K: usize = 5;
pub const DEFAULT_BAG_COUNT: usize = 10;
pub const DEFAULT_NBOOST: usize = 40;

/// Strategy plus its own parameters (`k` for smote, `n` for underbagging,
/// `nboost` for rusboost).
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub params: ParamMap,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind) -> Self {
        StrategySpec {
            kind,
            params: ParamMap::new(),
        }
    }

    pub fn with_params(kind: StrategyKind, params: ParamMap) -> Self {
        StrategySpec { kind, params }
    }
}

/// Unit weight on negatives, `1 / imbalance_rate` on positives.
pub fn class_weight_vector(ds: &BinaryDataset) -> WeightVector {
    let rate = ds.imbalance_rate();
    let pos_weight = 1.0 / rate;
    WeightVector::new(
        ds.labels()
            .iter()
            .map(|&l| if l { pos_weight } else { 1.0 })
            .collect(),
    )
    .expect("positive rate yields valid weights")
}

/// A point on the segment from `a` toward `b` at parameter `u` in [0,1].
pub fn smote_interpolate(a: &[f64], b: &[f64], u: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| x + u * (y - x)).collect()
}

/// `k_eff` nearest positive neighbors of each positive example (Euclidean,
/// ties to the lower index). With a single positive, the list is empty and
/// synthesis degenerates to duplication.
fn positive_neighbor_lists(ds: &BinaryDataset, k: usize) -> Vec<Vec<usize>> {
    let pos = ds.positive_indices();
    let k_eff = k.min(pos.len().saturating_sub(1));
    pos.iter()
        .map(|&i| {
            let mut by_distance: Vec<(f64, usize)> = pos
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let d: f64 = ds
                        .features()
                        .row(i)
                        .iter()
                        .zip(ds.features().row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, j)
                })
                .collect();
            by_distance.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            by_distance
                .into_iter()
                .take(k_eff)
                .map(|(_, j)| j)
                .collect()
        })
        .collect()
}

/// Oversample the positive class until both classes are balanced.
///
/// Each synthetic point interpolates between a source positive and one of
/// its `k` nearest positive neighbors at a uniform random parameter.
/// Sources rotate round-robin over the positives; original rows are
/// preserved untouched and synthetics are appended with positive labels.
pub fn apply_smote(ds: &BinaryDataset, k: usize, rng_seed: u64) -> Result<BinaryDataset> {
    if k == 0 {
        return Err(Error::InvalidArgument("smote k must be >= 1".into()));
    }
    let pos = ds.positive_indices();
    if pos.is_empty() {
        return Err(Error::TooFewPositives { have: 0, need: 1 });
    }
    let need = ds.negatives().saturating_sub(pos.len());
    if need == 0 {
        return Ok(ds.clone());
    }

    let neighbors = positive_neighbor_lists(ds, k);
    let mut rng = rng_from(derive_seed(rng_seed, "smote"));
    let mut features = ds.features().clone();
    let mut labels = ds.labels().to_vec();
    for j in 0..need {
        let s = j % pos.len();
        let source = ds.features().row(pos[s]);
        let row = if neighbors[s].is_empty() {
            source.to_vec()
        } else {
            let pick = rng.gen_range(0..neighbors[s].len());
            let u: f64 = rng.gen();
            smote_interpolate(source, ds.features().row(neighbors[s][pick]), u)
        };
        features.push_row(&row);
        labels.push(true);
    }
    BinaryDataset::new(ds.name.clone(), features, labels)
}

/// Indices of one balanced bag: every positive plus an equal-size
/// without-replacement sample of negatives.
pub fn draw_bag_indices(ds: &BinaryDataset, rng_seed: u64, bag: usize) -> Result<Vec<usize>> {
    let pos = ds.positive_indices();
    let neg = ds.negative_indices();
    if pos.is_empty() {
        return Err(Error::TooFewPositives { have: 0, need: 1 });
    }
    if neg.len() < pos.len() {
        return Err(Error::InvalidArgument(format!(
            "underbagging needs at least as many negatives ({}) as positives ({})",
            neg.len(),
            pos.len()
        )));
    }
    let mut rng = rng_from(derive_seed(rng_seed, &format!("bag:{bag}")));
    let picked = rand::seq::index::sample(&mut rng, neg.len(), pos.len());
    let mut indices = pos;
    indices.extend(picked.iter().map(|i| neg[i]));
    indices.sort_unstable();
    Ok(indices)
}

/// Train `n` base models on balanced bags and average their scores.
pub fn fit_underbagging(
    spec: &ClassifierSpec,
    ds: &BinaryDataset,
    n: usize,
    rng_seed: u64,
) -> Result<EnsembleModel> {
    if n == 0 {
        return Err(Error::InvalidArgument("bag count must be >= 1".into()));
    }
    let mut members = Vec::with_capacity(n);
    for bag in 0..n {
        let indices = draw_bag_indices(ds, rng_seed, bag)?;
        let subset = ds.subset(&indices);
        let weights = WeightVector::ones(subset.n());
        members.push(fit(
            spec,
            &subset,
            &weights,
            derive_seed(rng_seed, &format!("member:{bag}")),
        )?);
    }
    Ok(EnsembleModel {
        members,
        aggregation: Aggregation::MeanScore,
    })
}

/// Per-round internals of a RUSBoost fit, for invariant checks.
#[derive(Debug, Clone, Default)]
pub struct RusboostDiagnostics {
    /// Example-weight total after each retained round's normalization.
    pub weight_sums: Vec<f64>,
    /// Weighted full-set error of each retained round.
    pub errors: Vec<f64>,
    /// Voting weight of each retained round.
    pub alphas: Vec<f64>,
}

const EPSILON_CLAMP: f64 = 1e-10;
const MAX_RESAMPLE_ATTEMPTS: usize = 10;

/// Boosting over CART weak learners with per-round random undersampling.
///
/// Each round draws all positives plus a weight-proportional,
/// without-replacement sample of negatives of equal size (a 50% rate),
/// fits a CART carrying the sampled examples' current weights, and then
/// computes the weighted error and the multiplicative weight update on the
/// full training set. A round with error >= 0.5 is discarded and redrawn
/// (up to 10 consecutive attempts); a perfect round is kept with its error
/// clamped and ends the loop.
pub fn fit_rusboost(ds: &BinaryDataset, nboost: usize, rng_seed: u64) -> Result<EnsembleModel> {
    fit_rusboost_diagnostic(ds, nboost, rng_seed).map(|(m, _)| m)
}

pub fn fit_rusboost_diagnostic(
    ds: &BinaryDataset,
    nboost: usize,
    rng_seed: u64,
) -> Result<(EnsembleModel, RusboostDiagnostics)> {
    if nboost == 0 {
        return Err(Error::InvalidArgument("nboost must be >= 1".into()));
    }
    let pos = ds.positive_indices();
    let neg = ds.negative_indices();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::TooFewPositives {
            have: pos.len().min(neg.len()),
            need: 1,
        });
    }

    let n = ds.n();
    let cart = ClassifierSpec::new(ClassifierKind::Cart);
    let mut dist = vec![1.0 / n as f64; n];
    let mut members: Vec<Model> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut diag = RusboostDiagnostics::default();

    let mut round = 0usize;
    let mut failures = 0usize;
    'rounds: while members.len() < nboost {
        round += 1;
        let sample_size = pos.len().min(neg.len());
        let picked_neg = weighted_sample_without_replacement(
            &neg,
            &dist,
            sample_size,
            derive_seed(rng_seed, &format!("undersample:{round}")),
        );
        let mut sample_idx: Vec<usize> = pos.iter().take(sample_size).copied().collect();
        sample_idx.extend(picked_neg);
        sample_idx.sort_unstable();

        let sample = ds.subset(&sample_idx);
        let carried = WeightVector::new(sample_idx.iter().map(|&i| dist[i]).collect())?;
        let model = fit(
            &cart,
            &sample,
            &carried,
            derive_seed(rng_seed, &format!("weak:{round}")),
        )?;

        // weighted error on the FULL training set
        let scores = model.predict_scores(ds.features())?;
        let mut epsilon = 0.0;
        for i in 0..n {
            if (scores[i] >= 0.5) != ds.labels()[i] {
                epsilon += dist[i];
            }
        }

        if epsilon >= 0.5 {
            failures += 1;
            if failures >= MAX_RESAMPLE_ATTEMPTS {
                break 'rounds;
            }
            continue 'rounds;
        }
        failures = 0;

        let perfect = epsilon <= 0.0;
        let eps = epsilon.max(EPSILON_CLAMP);
        let alpha = ((1.0 - eps) / eps).ln();
        let beta = eps / (1.0 - eps);
        for i in 0..n {
            if (scores[i] >= 0.5) == ds.labels()[i] {
                dist[i] *= beta;
            }
        }
        let total: f64 = dist.iter().sum();
        for w in dist.iter_mut() {
            *w /= total;
        }

        members.push(model);
        alphas.push(alpha);
        diag.weight_sums.push(dist.iter().sum());
        diag.errors.push(eps);
        diag.alphas.push(alpha);

        if perfect {
            break 'rounds;
        }
    }

    if members.is_empty() {
        // nothing usable after repeated failures: fall back to the prior
        let score = if ds.imbalance_rate() >= 0.5 { 1.0 } else { 0.0 };
        members.push(Model::Constant {
            score,
            dim: ds.dim(),
        });
        alphas.push(1.0);
    }

    Ok((
        EnsembleModel {
            members,
            aggregation: Aggregation::WeightedVote { alphas },
        },
        diag,
    ))
}

/// Without-replacement sample of `count` items from `items`, drawn one at a
/// time with probability proportional to `weights[item]`.
fn weighted_sample_without_replacement(
    items: &[usize],
    weights: &[f64],
    count: usize,
    seed: u64,
) -> Vec<usize> {
    let mut rng = rng_from(seed);
    let mut remaining: Vec<usize> = items.to_vec();
    let mut picked = Vec::with_capacity(count);
    for _ in 0..count.min(items.len()) {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let choice = if total <= 0.0 {
            rng.gen_range(0..remaining.len())
        } else {
            let mut ticket = rng.gen::<f64>() * total;
            let mut chosen = remaining.len() - 1;
            for (slot, &i) in remaining.iter().enumerate() {
                ticket -= weights[i];
                if ticket <= 0.0 {
                    chosen = slot;
                    break;
                }
            }
            chosen
        };
        picked.push(remaining.swap_remove(choice));
    }
    picked
}

/// Train one (strategy, base classifier) combination.
pub fn fit_solution(
    strategy: &StrategySpec,
    clf: &ClassifierSpec,
    ds: &BinaryDataset,
    rng_seed: u64,
) -> Result<Model> {
    match strategy.kind {
        StrategyKind::Baseline => fit(clf, ds, &WeightVector::ones(ds.n()), rng_seed),
        StrategyKind::ClassWeight => fit(clf, ds, &class_weight_vector(ds), rng_seed),
        StrategyKind::Smote => {
            let k = get_int(&strategy.params, "k").unwrap_or(DEFAULT_SMOTE_K as i64);
            if k < 1 {
                return Err(Error::InvalidParam {
                    name: "k".into(),
                    reason: "must be >= 1".into(),
                });
            }
            let balanced = apply_smote(ds, k as usize, derive_seed(rng_seed, "smote"))?;
            fit(
                clf,
                &balanced,
                &WeightVector::ones(balanced.n()),
                derive_seed(rng_seed, "fit"),
            )
        }
        StrategyKind::Underbagging => {
            let n = get_int(&strategy.params, "n").unwrap_or(DEFAULT_BAG_COUNT as i64);
            if n < 1 {
                return Err(Error::InvalidParam {
                    name: "n".into(),
                    reason: "must be >= 1".into(),
                });
            }
            let ensemble = fit_underbagging(clf, ds, n as usize, rng_seed)?;
            Ok(Model::Ensemble {
                ensemble,
                dim: ds.dim(),
            })
        }
        StrategyKind::Rusboost => {
            let nboost = get_int(&strategy.params, "nboost").unwrap_or(DEFAULT_NBOOST as i64);
            if nboost < 1 {
                return Err(Error::InvalidParam {
                    name: "nboost".into(),
                    reason: "must be >= 1".into(),
                });
            }
            let ensemble = fit_rusboost(ds, nboost as usize, rng_seed)?;
            Ok(Model::Ensemble {
                ensemble,
                dim: ds.dim(),
            })
        }
    }
}
