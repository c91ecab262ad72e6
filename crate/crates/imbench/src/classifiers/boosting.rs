//! Gradient boosting with logistic loss.
//!
//! Additive model over gradient trees: margins start at the weighted prior
//! log-odds, each round fits a tree to the current gradients and hessians
//! and applies Newton-step leaf values scaled by `eta`. Scores are the
//! sigmoid of the final margin.

use serde::{Deserialize, Serialize};

use super::tree::{grow_gradient_tree, Tree};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy)]
pub struct BoostingParams {
    pub max_depth: usize,
    pub eta: f64,
    pub nrounds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTrees {
    pub init_margin: f64,
    pub eta: f64,
    pub trees: Vec<Tree>,
}

impl BoostedTrees {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.init_margin + self.eta * self.trees.iter().map(|t| t.value(row)).sum::<f64>()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Weighted logistic deviance, normalized by total weight.
fn weighted_logloss(margins: &[f64], y: &[bool], w: &[f64]) -> f64 {
    let mut loss = 0.0;
    let mut total = 0.0;
    for ((&m, &label), &wi) in margins.iter().zip(y).zip(w) {
        let p = sigmoid(m);
        let p = p.clamp(1e-15, 1.0 - 1e-15);
        loss -= wi * if label { p.ln() } else { (1.0 - p).ln() };
        total += wi;
    }
    loss / total
}

pub fn fit_boosting(x: &Matrix, y: &[bool], w: &[f64], params: &BoostingParams) -> BoostedTrees {
    fit_boosting_with_loss_trace(x, y, w, params).0
}

/// Fit and also report the weighted training loss after the prior and each
/// round, for monotonicity checks.
pub fn fit_boosting_with_loss_trace(
    x: &Matrix,
    y: &[bool],
    w: &[f64],
    params: &BoostingParams,
) -> (BoostedTrees, Vec<f64>) {
    let n = x.n_rows();
    let w_total: f64 = w.iter().sum();
    let w_pos: f64 = y.iter().zip(w).filter(|(&l, _)| l).map(|(_, &wi)| wi).sum();
    let prior = (w_pos / w_total).clamp(1e-9, 1.0 - 1e-9);
    let init_margin = (prior / (1.0 - prior)).ln();

    let mut margins = vec![init_margin; n];
    let mut trees = Vec::with_capacity(params.nrounds);
    let mut trace = vec![weighted_logloss(&margins, y, w)];

    for _ in 0..params.nrounds {
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for i in 0..n {
            let p = sigmoid(margins[i]);
            let target = if y[i] { 1.0 } else { 0.0 };
            grad[i] = w[i] * (target - p);
            hess[i] = w[i] * p * (1.0 - p);
        }
        let tree = grow_gradient_tree(x, &grad, &hess, params.max_depth);
        for (m, row) in margins.iter_mut().zip(x.iter_rows()) {
            *m += params.eta * tree.value(row);
        }
        trace.push(weighted_logloss(&margins, y, w));
        trees.push(tree);
    }

    (
        BoostedTrees {
            init_margin,
            eta: params.eta,
            trees,
        },
        trace,
    )
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::seeding::rng_from;

    #[test]
    fn separable_data_scores_on_the_correct_side() {
        let x = Matrix::from_rows(
            (0..60)
                .map(|i| {
                    let pos = i < 6;
                    vec![if pos {
                        4.0 + (i % 3) as f64
                    } else {
                        (i % 5) as f64 * 0.3
                    }]
                })
                .collect(),
        )
        .unwrap();
        let y: Vec<bool> = (0..60).map(|i| i < 6).collect();
        let w = vec![1.0; 60];
        let params = BoostingParams {
            max_depth: 3,
            eta: 0.05,
            nrounds: 20,
        };
        let model = fit_boosting(&x, &y, &w, &params);
        for (i, &label) in y.iter().enumerate() {
            assert_eq!(model.score(x.row(i)) >= 0.5, label, "row {i}");
        }
    }

    #[test]
    fn training_loss_never_increases() {
        let mut rng = rng_from(99);
        for _ in 0..10 {
            let n = 50;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
                .collect();
            let y: Vec<bool> = rows.iter().map(|r| r[0] + 0.3 * r[1] > 0.6).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
            let x = Matrix::from_rows(rows).unwrap();
            let params = BoostingParams {
                max_depth: 3,
                eta: 0.05,
                nrounds: 30,
            };
            let (_, trace) = fit_boosting_with_loss_trace(&x, &y, &w, &params);
            for pair in trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-10,
                    "loss increased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }
}
