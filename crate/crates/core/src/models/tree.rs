//! CART trees shared by the random forest (Gini classification) and gradient
//! boosting (variance-reduction regression with custom leaf values).

use serde::{Deserialize, Serialize};

use super::NUM_CLASSES;
use crate::rng::Rng;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TreeNode<L> {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<TreeNode<L>>,
}

impl<L> Tree<L> {
    pub fn leaf_for(&self, row: &[f64]) -> &L {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf(value) => return value,
            }
        }
    }
}

pub struct ClassTreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features drawn (without replacement) per node; `None` means all.
    pub feature_subsample: Option<usize>,
}

/// Sorts row indices of one feature column ascending by value with row-index
/// tie-break, which keeps tree growth deterministic under equal values.
fn order_by_feature(x: &[Vec<f64>], rows: &[usize], feature: usize) -> Vec<usize> {
    let mut order = rows.to_vec();
    order.sort_unstable_by(|&a, &b| {
        x[a][feature]
            .partial_cmp(&x[b][feature])
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

struct GiniSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

fn best_gini_split(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<GiniSplit> {
    let n = rows.len();
    let mut best: Option<GiniSplit> = None;
    for &feature in candidates {
        let order = order_by_feature(x, rows, feature);
        let mut left_counts = [0usize; NUM_CLASSES];
        let mut right_counts = [0usize; NUM_CLASSES];
        for &r in &order {
            right_counts[y[r]] += 1;
        }
        for i in 1..n {
            let moved = order[i - 1];
            left_counts[y[moved]] += 1;
            right_counts[y[moved]] -= 1;
            let (prev, cur) = (x[order[i - 1]][feature], x[order[i]][feature]);
            if cur <= prev {
                continue;
            }
            if i < min_leaf || n - i < min_leaf {
                continue;
            }
            // Weighted Gini impurity: sum over sides of n_side - sum(c^2)/n_side.
            let side = |counts: &[usize; NUM_CLASSES], total: usize| {
                let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
                total as f64 - sq / total as f64
            };
            let impurity = side(&left_counts, i) + side(&right_counts, n - i);
            let better = match &best {
                None => true,
                Some(b) => impurity < b.impurity,
            };
            if better {
                best = Some(GiniSplit {
                    feature,
                    threshold: 0.5 * (prev + cur),
                    impurity,
                    left: order[..i].to_vec(),
                    right: order[i..].to_vec(),
                });
            }
        }
    }
    best
}

fn class_distribution(y: &[usize], rows: &[usize]) -> [f64; NUM_CLASSES] {
    let mut counts = [0.0; NUM_CLASSES];
    for &r in rows {
        counts[y[r]] += 1.0;
    }
    let n = rows.len() as f64;
    counts.iter_mut().for_each(|c| *c /= n);
    counts
}

/// Grows a Gini classification tree over `rows`. Leaves store the class
/// distribution of their training rows.
pub fn grow_classification(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    cfg: &ClassTreeConfig,
    rng: &mut Rng,
) -> Tree<[f64; NUM_CLASSES]> {
    let n_features = x[0].len();
    let mut nodes = Vec::new();
    grow_class_node(x, y, rows, cfg, rng, n_features, 0, &mut nodes);
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn grow_class_node(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    cfg: &ClassTreeConfig,
    rng: &mut Rng,
    n_features: usize,
    depth: usize,
    nodes: &mut Vec<TreeNode<[f64; NUM_CLASSES]>>,
) -> usize {
    let make_leaf = |nodes: &mut Vec<TreeNode<[f64; NUM_CLASSES]>>| {
        nodes.push(TreeNode::Leaf(class_distribution(y, rows)));
        nodes.len() - 1
    };
    let first_class = y[rows[0]];
    let pure = rows.iter().all(|&r| y[r] == first_class);
    let depth_capped = cfg.max_depth.map(|d| depth >= d).unwrap_or(false);
    if pure || depth_capped || rows.len() < 2 * cfg.min_samples_leaf || rows.len() < 2 {
        return make_leaf(nodes);
    }
    let candidates = match cfg.feature_subsample {
        Some(m) if m < n_features => rng.sample_indices(n_features, m),
        _ => (0..n_features).collect(),
    };
    let Some(split) = best_gini_split(x, y, rows, &candidates, cfg.min_samples_leaf) else {
        return make_leaf(nodes);
    };
    let at = nodes.len();
    nodes.push(TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: 0,
        right: 0,
    });
    let left = grow_class_node(x, y, &split.left, cfg, rng, n_features, depth + 1, nodes);
    let right = grow_class_node(x, y, &split.right, cfg, rng, n_features, depth + 1, nodes);
    if let TreeNode::Split {
        left: l, right: r, ..
    } = &mut nodes[at]
    {
        *l = left;
        *r = right;
    }
    at
}

/// Grows a variance-reduction regression tree; leaf values come from
/// `leaf_value`, which sees the training rows that landed in the leaf.
/// `rows` must not contain duplicates (the split partitions by row id).
///
/// Rows are sorted once per feature at the root; children partition those
/// lists order-preservingly, so every node scans all features without
/// re-sorting. Gradient boosting calls this for every (stage, class) pair,
/// which makes the per-node sort the dominant cost otherwise.
pub fn grow_regression(
    x: &[Vec<f64>],
    targets: &[f64],
    rows: &[usize],
    max_depth: usize,
    min_leaf: usize,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree<f64> {
    let n_features = x[0].len();
    let sorted: Vec<Vec<usize>> = (0..n_features)
        .map(|f| order_by_feature(x, rows, f))
        .collect();
    let mut nodes = Vec::new();
    let mut side = vec![false; x.len()];
    grow_reg_node(
        x, targets, sorted, max_depth, min_leaf, leaf_value, 0, &mut nodes, &mut side,
    );
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn grow_reg_node(
    x: &[Vec<f64>],
    targets: &[f64],
    sorted: Vec<Vec<usize>>,
    max_depth: usize,
    min_leaf: usize,
    leaf_value: &dyn Fn(&[usize]) -> f64,
    depth: usize,
    nodes: &mut Vec<TreeNode<f64>>,
    side: &mut [bool],
) -> usize {
    let n = sorted[0].len();
    let make_leaf = |nodes: &mut Vec<TreeNode<f64>>| {
        nodes.push(TreeNode::Leaf(leaf_value(&sorted[0])));
        nodes.len() - 1
    };
    if depth >= max_depth || n < 2 * min_leaf || n < 2 {
        return make_leaf(nodes);
    }
    let mut best: Option<(usize, f64, usize)> = None; // feature, threshold, split point
    let mut best_cost = f64::INFINITY;
    let total: f64 = sorted[0].iter().map(|&r| targets[r]).sum();
    let total_sq: f64 = sorted[0].iter().map(|&r| targets[r] * targets[r]).sum();
    for (feature, order) in sorted.iter().enumerate() {
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for i in 1..n {
            let t = targets[order[i - 1]];
            left_sum += t;
            left_sq += t * t;
            let (prev, cur) = (x[order[i - 1]][feature], x[order[i]][feature]);
            if cur <= prev {
                continue;
            }
            if i < min_leaf || n - i < min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            // Sum of squared deviations on each side.
            let cost = (left_sq - left_sum * left_sum / i as f64)
                + (right_sq - right_sum * right_sum / (n - i) as f64);
            if cost < best_cost {
                best_cost = cost;
                best = Some((feature, 0.5 * (prev + cur), i));
            }
        }
    }
    let Some((feature, threshold, split_at)) = best else {
        return make_leaf(nodes);
    };
    let at = nodes.len();
    nodes.push(TreeNode::Split {
        feature,
        threshold,
        left: 0,
        right: 0,
    });
    // Membership of the left child, then stable partition of every feature's
    // order so children inherit sorted lists.
    for (i, &r) in sorted[feature].iter().enumerate() {
        side[r] = i < split_at;
    }
    let mut left_sorted = Vec::with_capacity(sorted.len());
    let mut right_sorted = Vec::with_capacity(sorted.len());
    for order in &sorted {
        let mut left_f = Vec::with_capacity(split_at);
        let mut right_f = Vec::with_capacity(n - split_at);
        for &r in order {
            if side[r] {
                left_f.push(r);
            } else {
                right_f.push(r);
            }
        }
        left_sorted.push(left_f);
        right_sorted.push(right_f);
    }
    drop(sorted);
    let left = grow_reg_node(
        x, targets, left_sorted, max_depth, min_leaf, leaf_value, depth + 1, nodes, side,
    );
    let right = grow_reg_node(
        x, targets, right_sorted, max_depth, min_leaf, leaf_value, depth + 1, nodes, side,
    );
    if let TreeNode::Split {
        left: l, right: r, ..
    } = &mut nodes[at]
    {
        *l = left;
        *r = right;
    }
    at
}
