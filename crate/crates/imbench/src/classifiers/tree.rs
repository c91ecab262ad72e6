//! Binary axis-aligned decision trees.
//!
//! Two growth modes share the node layout: weighted-Gini classification
//! trees (standalone CART, forest members, boosting-style ensembles of
//! votes) and gradient trees whose leaves carry Newton-step values for the
//! additive logistic model.
//!
//! Determinism: candidate thresholds sit at midpoints between consecutive
//! distinct sorted values, features are scanned in ascending index order,
//! and ties on the split criterion keep the first candidate seen — lowest
//! feature index, then lowest threshold.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Positive-weight fraction for classification trees; additive
        /// margin contribution for gradient trees.
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Self {
        Tree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn value(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] < *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth_at(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + depth_at(nodes, *left).max(depth_at(nodes, *right))
                }
            }
        }
        depth_at(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    /// None = grow until pure.
    pub max_depth: Option<usize>,
    /// Minimum example rows per child. A row count (not a weight sum), so
    /// tree structure is invariant to rescaling all weights.
    pub min_leaf: usize,
    /// Features considered per split; None = all.
    pub mtry: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_leaf: 1,
            mtry: None,
        }
    }
}

/// Midpoint threshold between two consecutive distinct values. Falls back
/// to the upper value when the midpoint rounds onto the lower one, so the
/// `< threshold` test always separates the pair.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    if mid > lo {
        mid
    } else {
        hi
    }
}

struct Candidate {
    score: f64,
    feature: usize,
    threshold: f64,
}

/// Grow a classification tree minimizing weighted Gini impurity.
///
/// The per-split criterion is `wpL*wnL/WL + wpR*wnR/WR` (proportional to
/// the weighted child impurity sum), computed from exact weight sums so a
/// weight of `w` on an example behaves identically to `w` unit-weight
/// copies of it.
pub fn grow_classification_tree(
    x: &Matrix,
    y: &[bool],
    w: &[f64],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Tree {
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    let all_indices: Vec<usize> = (0..x.n_rows()).collect();
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, all_indices, 0)];

    while let Some((slot, indices, depth)) = stack.pop() {
        let w_pos: f64 = indices.iter().filter(|&&i| y[i]).map(|&i| w[i]).sum();
        let w_all: f64 = indices.iter().map(|&i| w[i]).sum();
        let w_neg = w_all - w_pos;
        let leaf_value = if w_all > 0.0 { w_pos / w_all } else { 0.0 };

        let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
        if w_pos <= 0.0 || w_neg <= 0.0 || depth_capped {
            nodes[slot] = TreeNode::Leaf { value: leaf_value };
            continue;
        }

        let features = pick_features(x.n_cols(), params.mtry, rng);
        let mut best: Option<Candidate> = None;
        for &f in &features {
            let mut order: Vec<usize> = indices.clone();
            order.sort_by(|&a, &b| x.get(a, f).partial_cmp(&x.get(b, f)).unwrap());

            let mut wp_left = 0.0;
            let mut w_left = 0.0;
            for k in 0..order.len() - 1 {
                let i = order[k];
                w_left += w[i];
                if y[i] {
                    wp_left += w[i];
                }
                let v_here = x.get(i, f);
                let v_next = x.get(order[k + 1], f);
                if v_here == v_next {
                    continue;
                }
                if k + 1 < params.min_leaf || order.len() - k - 1 < params.min_leaf {
                    continue;
                }
                let w_right = w_all - w_left;
                let wn_left = w_left - wp_left;
                let wp_right = w_pos - wp_left;
                let wn_right = w_neg - wn_left;
                let score = wp_left * wn_left / w_left + wp_right * wn_right / w_right;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(Candidate {
                        score,
                        feature: f,
                        threshold: midpoint(v_here, v_next),
                    });
                }
            }
        }

        let Some(split) = best else {
            nodes[slot] = TreeNode::Leaf { value: leaf_value };
            continue;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| x.get(i, split.feature) < split.threshold);
        let left_slot = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let right_slot = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[slot] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_slot,
            right: right_slot,
        };
        stack.push((right_slot, right_idx, depth + 1));
        stack.push((left_slot, left_idx, depth + 1));
    }

    Tree { nodes }
}

fn pick_features(d: usize, mtry: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match mtry {
        Some(m) if m < d => {
            let mut chosen = sample(rng, d, m).into_vec();
            chosen.sort_unstable();
            chosen
        }
        _ => (0..d).collect(),
    }
}

const MIN_HESSIAN: f64 = 1e-12;
const MIN_GAIN: f64 = 1e-12;

/// Grow a gradient tree on per-example gradient/hessian sums.
///
/// Split gain is `GL^2/HL + GR^2/HR - G^2/H`; leaves store the Newton step
/// `G/H`. Growth stops at `max_depth` or when no split improves the gain.
pub fn grow_gradient_tree(x: &Matrix, grad: &[f64], hess: &[f64], max_depth: usize) -> Tree {
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    let all_indices: Vec<usize> = (0..x.n_rows()).collect();
    let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(0, all_indices, 0)];

    while let Some((slot, indices, depth)) = stack.pop() {
        let g: f64 = indices.iter().map(|&i| grad[i]).sum();
        let h: f64 = indices.iter().map(|&i| hess[i]).sum();
        let leaf_value = if h > MIN_HESSIAN { g / h } else { 0.0 };

        if depth >= max_depth || indices.len() < 2 {
            nodes[slot] = TreeNode::Leaf { value: leaf_value };
            continue;
        }

        let parent_obj = if h > MIN_HESSIAN { g * g / h } else { 0.0 };
        let mut best: Option<Candidate> = None;
        for f in 0..x.n_cols() {
            let mut order = indices.clone();
            order.sort_by(|&a, &b| x.get(a, f).partial_cmp(&x.get(b, f)).unwrap());

            let mut g_left = 0.0;
            let mut h_left = 0.0;
            for k in 0..order.len() - 1 {
                let i = order[k];
                g_left += grad[i];
                h_left += hess[i];
                let v_here = x.get(i, f);
                let v_next = x.get(order[k + 1], f);
                if v_here == v_next {
                    continue;
                }
                let g_right = g - g_left;
                let h_right = h - h_left;
                if h_left < MIN_HESSIAN || h_right < MIN_HESSIAN {
                    continue;
                }
                let gain = g_left * g_left / h_left + g_right * g_right / h_right - parent_obj;
                if gain > MIN_GAIN && best.as_ref().is_none_or(|b| gain > b.score) {
                    best = Some(Candidate {
                        score: gain,
                        feature: f,
                        threshold: midpoint(v_here, v_next),
                    });
                }
            }
        }

        let Some(split) = best else {
            nodes[slot] = TreeNode::Leaf { value: leaf_value };
            continue;
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| x.get(i, split.feature) < split.threshold);
        let left_slot = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        let right_slot = nodes.len();
        nodes.push(TreeNode::Leaf { value: 0.0 });
        nodes[slot] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: left_slot,
            right: right_slot,
        };
        stack.push((right_slot, right_idx, depth + 1));
        stack.push((left_slot, left_idx, depth + 1));
    }

    Tree { nodes }
}
