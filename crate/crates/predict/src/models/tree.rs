use serde::{Deserialize, Serialize};

/// Node of a fitted regression tree. Samples with `x[feature] ≤ threshold`
/// go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART regression tree grown greedily on squared-error reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub max_depth: usize,
    pub min_leaf: usize,
    root: Node,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionTree {
    /// Fits on `features` (one row per sample) against `targets`.
    ///
    /// # Panics
    /// If the inputs are empty or have mismatched lengths.
    pub fn fit(features: &[Vec<f64>], targets: &[f64], max_depth: usize, min_leaf: usize) -> Self {
        assert!(!targets.is_empty(), "cannot fit a tree on no samples");
        assert_eq!(features.len(), targets.len());
        let min_leaf = min_leaf.max(1);
        let idx: Vec<usize> = (0..targets.len()).collect();
        let root = grow(features, targets, idx, 0, max_depth, min_leaf);
        Self {
            max_depth,
            min_leaf,
            root,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    pub fn leaf_count(&self) -> usize {
        fn c(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => c(left) + c(right),
            }
        }
        c(&self.root)
    }
}

/// Mean taken as an offset from the first target, which is exact when all
/// targets are equal.
fn mean(targets: &[f64], idx: &[usize]) -> f64 {
    let base = targets[idx[0]];
    base + idx.iter().map(|&s| targets[s] - base).sum::<f64>() / idx.len() as f64
}

fn grow(
    features: &[Vec<f64>],
    targets: &[f64],
    idx: Vec<usize>,
    depth: usize,
    max_depth: usize,
    min_leaf: usize,
) -> Node {
    let value = mean(targets, &idx);
    if depth >= max_depth || idx.len() < 2 * min_leaf {
        return Node::Leaf { value };
    }
    let Some(best) = best_split(features, targets, &idx, min_leaf) else {
        return Node::Leaf { value };
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&s| features[s][best.feature] <= best.threshold);
    Node::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(features, targets, l, depth + 1, max_depth, min_leaf)),
        right: Box::new(grow(features, targets, r, depth + 1, max_depth, min_leaf)),
    }
}

/// Largest SSE reduction over every feature and every midpoint between
/// consecutive distinct values that leaves `min_leaf` samples on each side.
/// Ties keep the earliest feature and lowest threshold.
#[allow(clippy::needless_range_loop)] // `f` is a column index into every row
fn best_split(features: &[Vec<f64>], targets: &[f64], idx: &[usize], min_leaf: usize) -> Option<Best> {
    let n = idx.len();
    let total: f64 = idx.iter().map(|&s| targets[s]).sum();
    let total_sq: f64 = idx.iter().map(|&s| targets[s] * targets[s]).sum();
    let parent_sse = total_sq - total * total / n as f64;
    // Relative floor so rounding noise on a constant node never splits it.
    let min_gain = 1e-12 * total_sq.max(f64::MIN_POSITIVE);
    let mut best: Option<Best> = None;
    let mut order = idx.to_vec();
    for f in 0..features[idx[0]].len() {
        order.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]));
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for pos in 0..n - 1 {
            let y = targets[order[pos]];
            sum += y;
            sum_sq += y * y;
            let nl = pos + 1;
            let (lo, hi) = (features[order[pos]][f], features[order[pos + 1]][f]);
            if nl < min_leaf || n - nl < min_leaf || lo == hi {
                continue;
            }
            let nr = (n - nl) as f64;
            let left_sse = sum_sq - sum * sum / nl as f64;
            let right_sse = (total_sq - sum_sq) - (total - sum).powi(2) / nr;
            let gain = parent_sse - left_sse - right_sse;
            if gain > min_gain && best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Best {
                    feature: f,
                    threshold: lo + (hi - lo) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}
