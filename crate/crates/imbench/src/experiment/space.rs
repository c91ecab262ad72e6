//! Hyperparameter search spaces and random sampling.

use std::collections::BTreeMap;

use rand::Rng;

use crate::classifiers::ClassifierKind;
use crate::params::{ParamMap, ParamValue};
use crate::seeding::rng_from;
use crate::strategies::StrategyKind;

/// One parameter's sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamRange {
    /// Uniform over the integer interval [lo, hi].
    UniformInt { lo: i64, hi: i64 },
    /// Uniform over 1..=d where d is the dataset dimensionality, resolved
    /// at sampling time (mtry).
    FeatureCount,
    /// exp(U(ln lo, ln hi)) rounded to the nearest integer.
    LogUniformInt { lo: i64, hi: i64 },
    /// exp(U(ln lo, ln hi)).
    LogUniform { lo: f64, hi: f64 },
    /// Uniform over an explicit value set.
    Choice(Vec<ParamValue>),
}

/// Named parameter ranges; iteration order (and hence RNG consumption) is
/// the BTreeMap key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchSpace(pub BTreeMap<String, ParamRange>);

impl SearchSpace {
    pub fn empty() -> Self {
        SearchSpace(BTreeMap::new())
    }

    pub fn insert(&mut self, name: impl Into<String>, range: ParamRange) {
        self.0.insert(name.into(), range);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

const BAG_CHOICES: [i64; 5] = [10, 20, 30, 40, 60];

/// The stock search space for a (strategy, classifier) combination:
/// classifier ranges plus the strategy's own hyperparameter, searched
/// jointly.
pub fn default_space(strategy: StrategyKind, classifier: ClassifierKind) -> SearchSpace {
    let mut space = SearchSpace::empty();
    if strategy.uses_base_classifier() {
        match classifier {
            ClassifierKind::Cart | ClassifierKind::OneNn => {}
            ClassifierKind::RandomForest => {
                space.insert("mtry", ParamRange::FeatureCount);
                space.insert("ntree", ParamRange::LogUniformInt { lo: 16, hi: 4096 });
            }
            ClassifierKind::GradientBoosting => {
                space.insert("max_depth", ParamRange::UniformInt { lo: 1, hi: 6 });
                space.insert(
                    "eta",
                    ParamRange::LogUniform {
                        lo: 0.005,
                        hi: 0.05,
                    },
                );
                space.insert(
                    "nrounds",
                    ParamRange::Choice((20..=140).step_by(20).map(ParamValue::Int).collect()),
                );
            }
        }
    }
    match strategy {
        StrategyKind::Underbagging => {
            space.insert(
                "n",
                ParamRange::Choice(BAG_CHOICES.iter().copied().map(ParamValue::Int).collect()),
            );
        }
        StrategyKind::Rusboost => {
            space.insert(
                "nboost",
                ParamRange::Choice(BAG_CHOICES.iter().copied().map(ParamValue::Int).collect()),
            );
        }
        _ => {}
    }
    space
}

/// Reference ranges for an SVM-RBF base classifier. No trainer ships for
/// it; the canonical search ranges are recorded here for configs and
/// downstream tooling: C in [2^-5, 2^15] and gamma in [2^-15, 2^3], both
/// log-uniform.
pub fn svm_rbf_reference_space() -> SearchSpace {
    let mut space = SearchSpace::empty();
    space.insert(
        "c",
        ParamRange::LogUniform {
            lo: 2f64.powi(-5),
            hi: 2f64.powi(15),
        },
    );
    space.insert(
        "gamma",
        ParamRange::LogUniform {
            lo: 2f64.powi(-15),
            hi: 2f64.powi(3),
        },
    );
    space
}

/// Draw `count` independent parameter maps. An empty space yields a single
/// empty map: there is nothing to search.
pub fn sample_hyperparameters(
    space: &SearchSpace,
    count: usize,
    dim: usize,
    rng_seed: u64,
) -> Vec<ParamMap> {
    if space.is_empty() {
        return vec![ParamMap::new()];
    }
    let mut rng = rng_from(rng_seed);
    (0..count.max(1))
        .map(|_| {
            space
                .0
                .iter()
                .map(|(name, range)| {
                    let value = match range {
                        ParamRange::UniformInt { lo, hi } => {
                            ParamValue::Int(rng.gen_range(*lo..=*hi))
                        }
                        ParamRange::FeatureCount => {
                            ParamValue::Int(rng.gen_range(1..=dim.max(1)) as i64)
                        }
                        ParamRange::LogUniformInt { lo, hi } => {
                            let v = rng.gen_range((*lo as f64).ln()..=(*hi as f64).ln());
                            ParamValue::Int((v.exp().round() as i64).clamp(*lo, *hi))
                        }
                        ParamRange::LogUniform { lo, hi } => {
                            ParamValue::Float(rng.gen_range(lo.ln()..=hi.ln()).exp())
                        }
                        ParamRange::Choice(values) => values[rng.gen_range(0..values.len())],
                    };
                    (name.clone(), value)
                })
                .collect()
        })
        .collect()
}
