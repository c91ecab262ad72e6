//! 1-nearest-neighbor classifier: stores the training set, scores 0/1.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneNn {
    pub features: Matrix,
    pub labels: Vec<bool>,
}

impl OneNn {
    /// Label of the closest training point by Euclidean distance; distance
    /// ties resolve to the lowest training index.
    pub fn score(&self, row: &[f64]) -> f64 {
        let mut best = (f64::INFINITY, 0usize);
        for i in 0..self.features.n_rows() {
            let d: f64 = self
                .features
                .row(i)
                .iter()
                .zip(row)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best.0 {
                best = (d, i);
            }
        }
        if self.labels[best.1] {
            1.0
        } else {
            0.0
        }
    }
}
