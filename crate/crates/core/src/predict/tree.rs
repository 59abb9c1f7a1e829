//! Binary decision trees with axis-aligned threshold splits.
//!
//! Splits minimize weighted Gini impurity over the samples where the
//! candidate feature is present; missing values route to the child with
//! more (present) training mass, and prediction follows the stored
//! direction. Per-feature index lists are sorted once and partitioned
//! down the tree, so each level costs O(features x samples).
//!
//! Determinism: candidate scan order is (feature index, threshold
//! ascending) and ties keep the first candidate, so identical inputs
//! always grow identical trees.

use serde::{Deserialize, Serialize};

/// Training view over a row-major feature matrix.
pub(crate) struct Dataset<'a> {
    pub x: &'a [f64],
    pub n_features: usize,
    pub y: &'a [u8],
    pub n_classes: usize,
}

impl Dataset<'_> {
    #[inline]
    fn value(&self, sample: u32, feature: usize) -> f64 {
        self.x[sample as usize * self.n_features + feature]
    }

    pub(crate) fn n_samples(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: u32,
}

/// `feature == -1` marks a leaf; `probs` is the weighted class
/// distribution at the leaf and empty on internal nodes.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Node {
    pub feature: i32,
    pub threshold: f64,
    pub missing_left: bool,
    pub left: u32,
    pub right: u32,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
}

/// Per-feature sample index lists for one node: `present[f]` is sorted
/// by feature value (sample index as tie-break), `missing[f]` holds the
/// samples with NaN at `f`. Every feature's union is the node's sample
/// set.
struct NodeLists {
    present: Vec<Vec<u32>>,
    missing: Vec<Vec<u32>>,
}

struct Builder<'a> {
    ds: &'a Dataset<'a>,
    weights: &'a [u32],
    params: TreeParams,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
    missing_left: bool,
}

impl<'a> Builder<'a> {
    /// Weighted class counts and total weight of a node.
    fn counts_of(&self, lists: &NodeLists) -> (Vec<f64>, f64) {
        let mut counts = vec![0.0; self.ds.n_classes];
        for &s in lists.present[0].iter().chain(lists.missing[0].iter()) {
            counts[self.ds.y[s as usize] as usize] += f64::from(self.weights[s as usize]);
        }
        let total = counts.iter().sum();
        (counts, total)
    }

    fn leaf(&mut self, counts: &[f64], total: f64) -> u32 {
        let probs = if total > 0.0 {
            counts.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / self.ds.n_classes as f64; self.ds.n_classes]
        };
        self.nodes.push(Node {
            feature: -1,
            threshold: 0.0,
            missing_left: false,
            left: 0,
            right: 0,
            probs,
        });
        (self.nodes.len() - 1) as u32
    }

    fn best_split(&self, lists: &NodeLists) -> Option<Split> {
        let min_leaf = f64::from(self.params.min_leaf);
        let n_classes = self.ds.n_classes;
        let mut best: Option<Split> = None;
        let mut left = vec![0.0f64; n_classes];
        let mut right = vec![0.0f64; n_classes];
        for f in 0..self.ds.n_features {
            let pres = &lists.present[f];
            if pres.len() < 2 {
                continue;
            }
            left.iter_mut().for_each(|c| *c = 0.0);
            right.iter_mut().for_each(|c| *c = 0.0);
            let mut right_w = 0.0;
            for &s in pres {
                let w = f64::from(self.weights[s as usize]);
                right[self.ds.y[s as usize] as usize] += w;
                right_w += w;
            }
            let mut left_w = 0.0;
            let present_w = right_w;
            for i in 0..pres.len() - 1 {
                let s = pres[i];
                let w = f64::from(self.weights[s as usize]);
                let class = self.ds.y[s as usize] as usize;
                left[class] += w;
                left_w += w;
                right[class] -= w;
                right_w -= w;
                let v = self.ds.value(s, f);
                let v_next = self.ds.value(pres[i + 1], f);
                if v == v_next {
                    continue;
                }
                if left_w < min_leaf || right_w < min_leaf {
                    continue;
                }
                // weighted Gini sum: w * (1 - sum (c/w)^2) = w - sum c^2/w
                let gini_l = left_w - left.iter().map(|c| c * c).sum::<f64>() / left_w;
                let gini_r = right_w - right.iter().map(|c| c * c).sum::<f64>() / right_w;
                let score = (gini_l + gini_r) / present_w;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mut threshold = v + (v_next - v) / 2.0;
                    if !(threshold < v_next) {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        score,
                        missing_left: left_w >= right_w,
                    });
                }
            }
        }
        best
    }

    fn partition(&self, lists: NodeLists, split: &Split) -> (NodeLists, NodeLists) {
        let n_features = self.ds.n_features;
        let goes_left = |s: u32| -> bool {
            let v = self.ds.value(s, split.feature);
            if v.is_nan() {
                split.missing_left
            } else {
                v <= split.threshold
            }
        };
        let mut left = NodeLists {
            present: Vec::with_capacity(n_features),
            missing: Vec::with_capacity(n_features),
        };
        let mut right = NodeLists {
            present: Vec::with_capacity(n_features),
            missing: Vec::with_capacity(n_features),
        };
        for f in 0..n_features {
            let (mut lp, mut rp) = (Vec::new(), Vec::new());
            for &s in &lists.present[f] {
                if goes_left(s) {
                    lp.push(s);
                } else {
                    rp.push(s);
                }
            }
            let (mut lm, mut rm) = (Vec::new(), Vec::new());
            for &s in &lists.missing[f] {
                if goes_left(s) {
                    lm.push(s);
                } else {
                    rm.push(s);
                }
            }
            left.present.push(lp);
            right.present.push(rp);
            left.missing.push(lm);
            right.missing.push(rm);
        }
        (left, right)
    }

    fn build(&mut self, lists: NodeLists, depth: usize) -> u32 {
        let (counts, total) = self.counts_of(&lists);
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if depth >= self.params.max_depth
            || total < 2.0 * f64::from(self.params.min_leaf)
            || pure
        {
            return self.leaf(&counts, total);
        }
        let Some(split) = self.best_split(&lists) else {
            return self.leaf(&counts, total);
        };
        let (l_lists, r_lists) = self.partition(lists, &split);
        let slot = self.nodes.len() as u32;
        self.nodes.push(Node {
            feature: split.feature as i32,
            threshold: split.threshold,
            missing_left: split.missing_left,
            left: 0,
            right: 0,
            probs: Vec::new(),
        });
        let left = self.build(l_lists, depth + 1);
        let right = self.build(r_lists, depth + 1);
        self.nodes[slot as usize].left = left;
        self.nodes[slot as usize].right = right;
        slot as u32
    }
}

impl DecisionTree {
    /// Grows a tree over the weighted dataset; `weights[s] == 0` drops a
    /// sample entirely (out-of-bag under bootstrap resampling).
    pub(crate) fn fit(ds: &Dataset<'_>, weights: &[u32], params: TreeParams) -> DecisionTree {
        assert_eq!(weights.len(), ds.n_samples());
        let n_features = ds.n_features;
        let mut root = NodeLists {
            present: Vec::with_capacity(n_features),
            missing: Vec::with_capacity(n_features),
        };
        for f in 0..n_features {
            let mut pres: Vec<u32> = Vec::new();
            let mut miss: Vec<u32> = Vec::new();
            for s in 0..ds.n_samples() as u32 {
                if weights[s as usize] == 0 {
                    continue;
                }
                if ds.value(s, f).is_nan() {
                    miss.push(s);
                } else {
                    pres.push(s);
                }
            }
            pres.sort_by(|&a, &b| {
                ds.value(a, f)
                    .total_cmp(&ds.value(b, f))
                    .then(a.cmp(&b))
            });
            root.present.push(pres);
            root.missing.push(miss);
        }
        let mut builder = Builder {
            ds,
            weights,
            params,
            nodes: Vec::new(),
        };
        // Degenerate: nothing to fit (all weights zero) -> uniform leaf.
        if root.present[0].is_empty() && root.missing[0].is_empty() {
            let counts = vec![0.0; ds.n_classes];
            builder.leaf(&counts, 0.0);
        } else {
            builder.build(root, 0);
        }
        DecisionTree {
            nodes: builder.nodes,
        }
    }

    /// Leaf class distribution for one row.
    pub fn leaf_probs(&self, row: &[f64]) -> &[f64] {
        let mut at = 0usize;
        loop {
            let node = &self.nodes[at];
            if node.feature < 0 {
                return &node.probs;
            }
            let v = row[node.feature as usize];
            let go_left = if v.is_nan() {
                node.missing_left
            } else {
                v <= node.threshold
            };
            at = if go_left {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            let n = &nodes[at];
            if n.feature < 0 {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }
}
