//! Random forest of classification trees.

use rand::Rng;

use super::tree::{grow_classification_tree, Tree, TreeParams};
use crate::matrix::Matrix;
use crate::seeding::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub ntree: usize,
    pub mtry: usize,
    /// Disabled only for degenerate-ensemble testing; normal fits resample.
    pub bootstrap: bool,
}

/// Fit `ntree` trees, each on a bootstrap resample (drawn example weights
/// are carried along) with `mtry` features considered per split. Per-tree
/// seeds derive from `(seed, tree index)`, so member order is immaterial.
pub fn fit_forest(
    x: &Matrix,
    y: &[bool],
    w: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Vec<Tree> {
    let tree_params = TreeParams {
        max_depth: None,
        min_leaf: 1,
        mtry: Some(params.mtry),
    };
    (0..params.ntree)
        .map(|t| {
            let mut rng = rng_from(derive_seed(seed, &format!("tree:{t}")));
            if params.bootstrap {
                let n = x.n_rows();
                let indices: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let bx = x.select_rows(&indices);
                let by: Vec<bool> = indices.iter().map(|&i| y[i]).collect();
                let bw: Vec<f64> = indices.iter().map(|&i| w[i]).collect();
                grow_classification_tree(&bx, &by, &bw, &tree_params, &mut rng)
            } else {
                grow_classification_tree(x, y, w, &tree_params, &mut rng)
            }
        })
        .collect()
}

/// Fraction of trees voting positive at the 0.5 leaf threshold.
pub fn forest_score(trees: &[Tree], row: &[f64]) -> f64 {
    let votes = trees.iter().filter(|t| t.value(row) >= 0.5).count();
    votes as f64 / trees.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forest_is_deterministic_per_seed() {
        let x = Matrix::from_rows(
            (0..40)
                .map(|i| vec![(i % 7) as f64, (i % 3) as f64])
                .collect(),
        )
        .unwrap();
        let y: Vec<bool> = (0..40).map(|i| i % 5 == 0).collect();
        let w = vec![1.0; 40];
        let p = ForestParams {
            ntree: 9,
            mtry: 1,
            bootstrap: true,
        };
        let a = fit_forest(&x, &y, &w, &p, 77);
        let b = fit_forest(&x, &y, &w, &p, 77);
        assert_eq!(a, b);
        let c = fit_forest(&x, &y, &w, &p, 78);
        assert_ne!(a, c);
    }
}
