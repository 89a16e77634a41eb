//! Weighted Gini regression of class probabilities onto axis-aligned regions.
//!
//! A [`RegionTree`] partitions feature space into disjoint leaves. Each leaf
//! stores the weighted proportion of positive labels that reached it at fit
//! time, the clamped version of that proportion, and the weak-hypothesis value
//! the booster assigns to the region.
//!
//! Routing rule: a point goes left when `x[feature] < threshold`, right
//! otherwise, so points exactly on a threshold go right.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::Loss;

/// Probability clamp `p ↦ a·p + (1-a)/2` applied at every leaf.
pub const DEFAULT_CLAMP: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Minimum share of the total fit weight each leaf must receive.
    pub min_leaf_weight: f64,
    pub clamp: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            min_leaf_weight: 1e-3,
            clamp: DEFAULT_CLAMP,
        }
    }
}

impl TreeConfig {
    pub fn with_depth(max_depth: usize) -> Self {
        Self {
            max_depth,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clamp > 0.0 && self.clamp < 1.0) {
            return Err(Error::InvalidConfig(format!("clamp must lie in (0,1), got {}", self.clamp)));
        }
        if !(self.min_leaf_weight >= 0.0 && self.min_leaf_weight < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "min_leaf_weight must lie in [0,1), got {}",
                self.min_leaf_weight
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    /// Weighted share of positive labels at fit time.
    pub p: f64,
    pub clamped_p: f64,
    pub h_value: f64,
    pub total_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf(Region),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTree {
    root: Node,
    n_features: usize,
    n_leaves: usize,
}

/// How region hypothesis values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisSolver {
    /// Closed form when the loss has one, root finding otherwise.
    #[default]
    Auto,
    /// Always solve the weak-hypothesis equation numerically.
    RootFinding,
}

/// Per-feature sample orderings, computed once per dataset and reused across
/// boosting iterations.
#[derive(Debug, Clone)]
pub struct SortedFeatures {
    order: Vec<Vec<u32>>,
}

impl SortedFeatures {
    pub fn new(data: &Dataset) -> Self {
        let order = (0..data.n_features())
            .map(|j| {
                let mut idx: Vec<u32> = (0..data.len() as u32).collect();
                idx.sort_by(|&a, &b| {
                    data.value(a as usize, j)
                        .total_cmp(&data.value(b as usize, j))
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Self { order }
    }
}

/// Fits a tree on `data` under sample `weights`.
pub fn fit_tree(data: &Dataset, weights: &[f64], config: &TreeConfig) -> Result<RegionTree> {
    fit_tree_presorted(data, &SortedFeatures::new(data), weights, config)
}

/// [`fit_tree`] with orderings precomputed by [`SortedFeatures::new`] on the
/// same dataset.
pub fn fit_tree_presorted(
    data: &Dataset,
    sorted: &SortedFeatures,
    weights: &[f64],
    config: &TreeConfig,
) -> Result<RegionTree> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if weights.len() != data.len() {
        return Err(Error::LengthMismatch {
            expected: data.len(),
            actual: weights.len(),
        });
    }
    config.validate()?;
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::ZeroWeights);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroWeights);
    }
    let mut builder = Builder {
        data,
        sorted,
        weights,
        config,
        min_weight: config.min_leaf_weight * total,
        in_node: vec![false; data.len()],
        next_leaf: 0,
    };
    let members: Vec<u32> = (0..data.len() as u32).collect();
    let root = builder.grow(&members, 0);
    Ok(RegionTree {
        root,
        n_features: data.n_features(),
        n_leaves: builder.next_leaf,
    })
}

struct Builder<'a> {
    data: &'a Dataset,
    sorted: &'a SortedFeatures,
    weights: &'a [f64],
    config: &'a TreeConfig,
    min_weight: f64,
    in_node: Vec<bool>,
    next_leaf: usize,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// `W · gini = 2 W₊ W₋ / W`.
#[inline]
fn weighted_gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        0.0
    } else {
        2.0 * pos * (total - pos) / total
    }
}

impl Builder<'_> {
    fn grow(&mut self, members: &[u32], depth: usize) -> Node {
        let labels = self.data.labels();
        let (mut total, mut pos) = (0.0, 0.0);
        for &i in members {
            let w = self.weights[i as usize];
            total += w;
            if labels[i as usize] > 0.0 {
                pos += w;
            }
        }
        let parent = weighted_gini(pos, total);
        let split = if depth < self.config.max_depth && parent > 0.0 {
            self.best_split(members, total, pos)
                .filter(|c| c.impurity < parent - 1e-14 * total)
        } else {
            None
        };
        match split {
            Some(c) => {
                let (left, right): (Vec<u32>, Vec<u32>) = members
                    .iter()
                    .partition(|&&i| self.data.value(i as usize, c.feature) < c.threshold);
                let left = self.grow(&left, depth + 1);
                let right = self.grow(&right, depth + 1);
                Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                }
            }
            None => {
                let mut p = if total > 0.0 { (pos / total).clamp(0.0, 1.0) } else { 0.5 };
                // balanced up to summation rounding: treat as exactly neutral so
                // the region gets h = 0 rather than a noise-sized value
                if (2.0 * p - 1.0).abs() <= 32.0 * f64::EPSILON {
                    p = 0.5;
                }
                let a = self.config.clamp;
                let id = self.next_leaf;
                self.next_leaf += 1;
                Node::Leaf(Region {
                    id,
                    p,
                    clamped_p: a * p + (1.0 - a) / 2.0,
                    h_value: 0.0,
                    total_weight: total,
                })
            }
        }
    }

    fn best_split(&mut self, members: &[u32], total: f64, pos: f64) -> Option<Candidate> {
        for &i in members {
            self.in_node[i as usize] = true;
        }
        let labels = self.data.labels();
        let mut best: Option<Candidate> = None;
        for (feature, order) in self.sorted.order.iter().enumerate() {
            let (mut w_left, mut pos_left) = (0.0, 0.0);
            let mut prev: Option<f64> = None;
            for &i in order.iter().filter(|&&i| self.in_node[i as usize]) {
                let x = self.data.value(i as usize, feature);
                if let Some(px) = prev {
                    if x > px && w_left >= self.min_weight && total - w_left >= self.min_weight {
                        let impurity =
                            weighted_gini(pos_left, w_left) + weighted_gini(pos - pos_left, total - w_left);
                        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                            best = Some(Candidate {
                                feature,
                                threshold: midpoint(px, x),
                                impurity,
                            });
                        }
                    }
                }
                let w = self.weights[i as usize];
                w_left += w;
                if labels[i as usize] > 0.0 {
                    pos_left += w;
                }
                prev = Some(x);
            }
        }
        for &i in members {
            self.in_node[i as usize] = false;
        }
        best
    }
}

/// Threshold strictly above `lo` and at most `hi`, so `lo` routes left and `hi`
/// routes right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo && m <= hi {
        m
    } else {
        hi
    }
}

impl RegionTree {
    /// Depth-0 tree holding a single region.
    pub fn single_leaf(region: Region, n_features: usize) -> Self {
        Self {
            root: Node::Leaf(Region { id: 0, ..region }),
            n_features,
            n_leaves: 1,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn depth(&self) -> usize {
        fn go(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }

    /// Leaves in id order.
    pub fn regions(&self) -> Vec<&Region> {
        let mut out = Vec::with_capacity(self.n_leaves);
        fn go<'a>(n: &'a Node, out: &mut Vec<&'a Region>) {
            match n {
                Node::Leaf(r) => out.push(r),
                Node::Split { left, right, .. } => {
                    go(left, out);
                    go(right, out);
                }
            }
        }
        go(&self.root, &mut out);
        out.sort_by_key(|r| r.id);
        out
    }

    fn for_each_region_mut(&mut self, mut f: impl FnMut(&mut Region) -> Result<()>) -> Result<()> {
        fn go(n: &mut Node, f: &mut dyn FnMut(&mut Region) -> Result<()>) -> Result<()> {
            match n {
                Node::Leaf(r) => f(r),
                Node::Split { left, right, .. } => {
                    go(left, f)?;
                    go(right, f)
                }
            }
        }
        go(&mut self.root, &mut f)
    }

    /// Leaf reached by `x`. `x` must have at least `n_features` entries.
    pub fn leaf(&self, x: &[f64]) -> &Region {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(r) => return r,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    /// Hypothesis value of the leaf containing `x`.
    pub fn predict_region_value(&self, x: &[f64]) -> f64 {
        self.leaf(x).h_value
    }

    /// Region id for every row of `data`.
    pub fn assign(&self, data: &Dataset) -> Vec<usize> {
        data.rows().map(|x| self.leaf(x).id).collect()
    }

    /// Mean of `scores` over the training rows falling in each region.
    /// Empty regions get 0.
    pub fn region_means(&self, assignment: &[usize], scores: &[f64]) -> Vec<f64> {
        let mut sum = vec![0.0; self.n_leaves];
        let mut count = vec![0usize; self.n_leaves];
        for (&r, &s) in assignment.iter().zip(scores) {
            sum[r] += s;
            count[r] += 1;
        }
        sum.iter()
            .zip(&count)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect()
    }

    /// Fills every leaf's `h_value` from its clamped probability.
    ///
    /// `region_scores` gives the current score per region for losses whose
    /// hypothesis depends on it (least squares); it is clamped into
    /// `(-clamp, clamp)` so the hypothesis keeps the sign of `2p - 1`.
    pub fn assign_hypothesis(
        &mut self,
        loss: &Loss,
        region_scores: Option<&[f64]>,
        solver: HypothesisSolver,
        clamp: f64,
    ) -> Result<()> {
        if let Some(s) = region_scores {
            if s.len() != self.n_leaves {
                return Err(Error::LengthMismatch {
                    expected: self.n_leaves,
                    actual: s.len(),
                });
            }
        }
        self.for_each_region_mut(|r| {
            let f = if loss.needs_current_score() {
                region_scores.map_or(0.0, |s| s[r.id]).clamp(-clamp, clamp)
            } else {
                0.0
            };
            let closed = match solver {
                HypothesisSolver::Auto => loss.weak_hypothesis(r.clamped_p, f),
                HypothesisSolver::RootFinding => None,
            };
            r.h_value = match closed {
                Some(h) => h,
                None => loss.solve_hypothesis(r.clamped_p, f, r.id)?,
            };
            Ok(())
        })
    }

    /// Builder-style wrapper over [`RegionTree::assign_hypothesis`] with the
    /// default clamp.
    pub fn to_weak_hypothesis(
        mut self,
        loss: &Loss,
        region_scores: Option<&[f64]>,
    ) -> Result<Self> {
        self.assign_hypothesis(loss, region_scores, HypothesisSolver::Auto, DEFAULT_CLAMP)?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Dataset, Vec<f64>) {
        let d = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1.0, 1.0, -1.0, -1.0],
        )
        .unwrap();
        (d, vec![0.4, 0.1, 0.1, 0.4])
    }

    /// Brute-force weighted Gini over the three thresholds of the toy set.
    fn brute_force_best_threshold(xs: &[f64], ys: &[f64], ws: &[f64]) -> f64 {
        let mut best = (f64::INFINITY, f64::NAN);
        for k in 1..xs.len() {
            let thr = 0.5 * (xs[k - 1] + xs[k]);
            let mut imp = 0.0;
            for side in [true, false] {
                let (mut w, mut wp) = (0.0, 0.0);
                for i in 0..xs.len() {
                    if (xs[i] < thr) == side {
                        w += ws[i];
                        if ys[i] > 0.0 {
                            wp += ws[i];
                        }
                    }
                }
                if w > 0.0 {
                    let p = wp / w;
                    imp += w * (1.0 - p * p - (1.0 - p) * (1.0 - p));
                }
            }
            if imp < best.0 {
                best = (imp, thr);
            }
        }
        best.1
    }

    #[test]
    fn separable_split() {
        let d = Dataset::from_rows(
            &[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]],
            vec![-1.0, -1.0, 1.0, 1.0],
        )
        .unwrap();
        let t = fit_tree(&d, &[0.25; 4], &TreeConfig::default()).unwrap();
        assert_eq!(t.n_leaves(), 2);
        let ps: Vec<f64> = t.regions().iter().map(|r| r.p).collect();
        assert_eq!(ps, vec![0.0, 1.0]);
    }

    #[test]
    fn pure_labels_give_depth_zero() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![5.0]], vec![1.0; 3]).unwrap();
        let t = fit_tree(&d, &[1.0 / 3.0; 3], &TreeConfig::default()).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.regions()[0].p, 1.0);
    }

    #[test]
    fn weighted_toy_split() {
        let (d, w) = toy();
        let t = fit_tree(&d, &w, &TreeConfig::default()).unwrap();
        let oracle = brute_force_best_threshold(&[0.0, 1.0, 2.0, 3.0], d.labels(), &w);
        assert_eq!(oracle, 1.5);
        match t.root() {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, oracle);
            }
            _ => panic!("expected a split"),
        }
        let ps: Vec<f64> = t.regions().iter().map(|r| r.p).collect();
        assert_eq!(ps, vec![1.0, 0.0]);
    }

    #[test]
    fn routing_and_tie_rule() {
        let (d, w) = toy();
        let t = fit_tree(&d, &w, &TreeConfig::default())
            .unwrap()
            .to_weak_hypothesis(&Loss::arb(2.0).unwrap(), None)
            .unwrap();
        let regions = t.regions();
        assert_eq!(t.predict_region_value(&[0.5]), regions[0].h_value);
        // exactly on the threshold goes right
        assert_eq!(t.leaf(&[1.5]).id, 1);
        assert!(regions[0].h_value > 0.0 && regions[1].h_value < 0.0);
    }

    #[test]
    fn depth_zero_value() {
        let r = Region {
            id: 0,
            p: 0.5,
            clamped_p: 0.5,
            h_value: 0.3,
            total_weight: 1.0,
        };
        let t = RegionTree::single_leaf(r, 4);
        assert_eq!(t.predict_region_value(&[9.0, -1.0, 0.0, 3.0]), 0.3);
    }

    #[test]
    fn hypothesis_values() {
        let mut t = RegionTree::single_leaf(
            Region {
                id: 0,
                p: 0.5,
                clamped_p: 0.5,
                h_value: 0.0,
                total_weight: 1.0,
            },
            1,
        );
        t.assign_hypothesis(&Loss::arb(2.0).unwrap(), None, HypothesisSolver::Auto, DEFAULT_CLAMP)
            .unwrap();
        assert_eq!(t.regions()[0].h_value, 0.0);

        let mut t = RegionTree::single_leaf(
            Region {
                id: 0,
                p: 0.75,
                clamped_p: 0.75,
                h_value: 0.0,
                total_weight: 1.0,
            },
            1,
        );
        t.assign_hypothesis(&Loss::LeastSquares, Some(&[0.0]), HypothesisSolver::Auto, DEFAULT_CLAMP)
            .unwrap();
        assert!((t.regions()[0].h_value - 0.5).abs() < 1e-15);
        t.assign_hypothesis(&Loss::LeastSquares, Some(&[0.0]), HypothesisSolver::RootFinding, DEFAULT_CLAMP)
            .unwrap();
        assert!((t.regions()[0].h_value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn sigmoid_root_failure_names_region() {
        let (d, w) = toy();
        let mut t = fit_tree(&d, &w, &TreeConfig::default()).unwrap();
        let err = t
            .assign_hypothesis(&Loss::Sigmoid, None, HypothesisSolver::Auto, DEFAULT_CLAMP)
            .unwrap_err();
        assert!(matches!(err, Error::RootNotBracketed { region: 0 }));
    }

    #[test]
    fn errors() {
        let (d, _) = toy();
        assert!(matches!(fit_tree(&d, &[0.0; 4], &TreeConfig::default()), Err(Error::ZeroWeights)));
        let empty = Dataset::new(vec![], vec![], 1).unwrap();
        assert!(matches!(fit_tree(&empty, &[], &TreeConfig::default()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn midpoint_never_equals_lower_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(m > lo && m <= hi);
    }
}
