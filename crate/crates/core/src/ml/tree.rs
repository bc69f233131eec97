//! CART trees (Gini for classes, squared error for scores) and bagged
//! random forests built on them.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{substream, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestClassifierParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `⌊√n_features⌋`.
    pub max_features: Option<usize>,
    pub tree: TreeParams,
}

impl Default for ForestClassifierParams {
    fn default() -> Self {
        Self {
            n_trees: 1000,
            max_features: None,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestRegressorParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means all of them.
    pub max_features: Option<usize>,
    pub tree: TreeParams,
}

impl Default for ForestRegressorParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            tree: TreeParams {
                max_depth: Some(2),
                min_samples_split: 2,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Arena of nodes; index 0 is the root. Class trees store the class index
/// as the leaf value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        self.evaluate(x) as usize
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

/// Targets a tree can be grown on.
#[derive(Clone, Copy)]
enum Target<'a> {
    Class { y: &'a [usize], n_classes: usize },
    Score { y: &'a [f64] },
}

impl Target<'_> {
    /// Node impurity times node size: `n·gini` or the sum of squared errors.
    fn cost(&self, rows: &[usize]) -> f64 {
        match *self {
            Target::Class { y, n_classes } => {
                let mut counts = vec![0usize; n_classes];
                rows.iter().for_each(|&i| counts[y[i]] += 1);
                gini_cost(&counts, rows.len())
            }
            Target::Score { y } => {
                let (s, ss) = rows.iter().fold((0.0, 0.0), |(s, ss), &i| (s + y[i], ss + y[i] * y[i]));
                (ss - s * s / rows.len() as f64).max(0.0)
            }
        }
    }

    fn leaf(&self, rows: &[usize]) -> f64 {
        match *self {
            Target::Class { y, n_classes } => {
                let mut counts = vec![0usize; n_classes];
                rows.iter().for_each(|&i| counts[y[i]] += 1);
                let mut best = 0;
                for (c, &v) in counts.iter().enumerate() {
                    if v > counts[best] {
                        best = c;
                    }
                }
                best as f64
            }
            Target::Score { y } => rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64,
        }
    }
}

fn gini_cost(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct Candidate {
    cost: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        const EPS: f64 = 1e-12;
        match other {
            None => true,
            Some(o) => {
                self.cost < o.cost - EPS
                    || ((self.cost - o.cost).abs() <= EPS && (self.feature, self.threshold) < (o.feature, o.threshold))
            }
        }
    }
}

/// Best threshold on `feature` for `rows`, sweeping the sorted values once.
fn best_split_on(x: &[Vec<f64>], target: Target<'_>, rows: &[usize], feature: usize) -> Option<Candidate> {
    let mut sorted: Vec<usize> = rows.to_vec();
    sorted.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    let n = sorted.len();
    let mut best: Option<Candidate> = None;

    match target {
        Target::Class { y, n_classes } => {
            let mut left = vec![0usize; n_classes];
            let mut right = vec![0usize; n_classes];
            sorted.iter().for_each(|&i| right[y[i]] += 1);
            for pos in 0..n - 1 {
                let i = sorted[pos];
                left[y[i]] += 1;
                right[y[i]] -= 1;
                let (a, b) = (x[i][feature], x[sorted[pos + 1]][feature]);
                if a == b {
                    continue;
                }
                let cand = Candidate {
                    cost: gini_cost(&left, pos + 1) + gini_cost(&right, n - pos - 1),
                    feature,
                    threshold: midpoint(a, b),
                };
                if cand.beats(&best) {
                    best = Some(cand);
                }
            }
        }
        Target::Score { y } => {
            let (mut ls, mut lss) = (0.0, 0.0);
            let (mut rs, mut rss) = sorted.iter().fold((0.0, 0.0), |(s, ss), &i| (s + y[i], ss + y[i] * y[i]));
            for pos in 0..n - 1 {
                let i = sorted[pos];
                ls += y[i];
                lss += y[i] * y[i];
                rs -= y[i];
                rss -= y[i] * y[i];
                let (a, b) = (x[i][feature], x[sorted[pos + 1]][feature]);
                if a == b {
                    continue;
                }
                let nl = (pos + 1) as f64;
                let nr = (n - pos - 1) as f64;
                let cost = (lss - ls * ls / nl).max(0.0) + (rss - rs * rs / nr).max(0.0);
                let cand = Candidate {
                    cost,
                    feature,
                    threshold: midpoint(a, b),
                };
                if cand.beats(&best) {
                    best = Some(cand);
                }
            }
        }
    }
    best
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

/// How split features are chosen at each node.
enum FeatureSampling<'r> {
    All,
    /// Try `k` features in random order, continuing past them only if none splits.
    Random { k: usize, rng: &'r mut Rng },
}

fn grow(x: &[Vec<f64>], target: Target<'_>, rows: Vec<usize>, params: &TreeParams, mut sampling: FeatureSampling<'_>) -> Tree {
    let n_features = x.first().map_or(0, Vec::len);
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    // (node index, rows, depth)
    let mut stack = vec![(0usize, rows, 0usize)];

    while let Some((id, rows, depth)) = stack.pop() {
        let cost = target.cost(&rows);
        let stop = rows.len() < params.min_samples_split.max(2)
            || params.max_depth.is_some_and(|d| depth >= d)
            || cost <= 1e-12;
        let split = if stop {
            None
        } else {
            match &mut sampling {
                FeatureSampling::All => (0..n_features)
                    .filter_map(|f| best_split_on(x, target, &rows, f))
                    .fold(None, |best, c| if c.beats(&best) { Some(c) } else { best }),
                FeatureSampling::Random { k, rng } => {
                    let mut order: Vec<usize> = (0..n_features).collect();
                    order.shuffle(*rng);
                    let mut best: Option<Candidate> = None;
                    for (tried, &f) in order.iter().enumerate() {
                        if tried >= *k && best.is_some() {
                            break;
                        }
                        if let Some(c) = best_split_on(x, target, &rows, f) {
                            if c.beats(&best) {
                                best = Some(c);
                            }
                        }
                    }
                    best
                }
            }
        };

        match split {
            None => nodes[id] = Node::Leaf { value: target.leaf(&rows) },
            Some(c) => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][c.feature] <= c.threshold);
                let left = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                let right = nodes.len();
                nodes.push(Node::Leaf { value: 0.0 });
                nodes[id] = Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left,
                    right,
                };
                stack.push((right, r, depth + 1));
                stack.push((left, l, depth + 1));
            }
        }
    }
    Tree { nodes }
}

/// Deterministic CART classifier over every feature.
pub fn fit_tree_classifier(x: &[Vec<f64>], y: &[usize], n_classes: usize, params: &TreeParams) -> Tree {
    let rows = (0..x.len()).collect();
    grow(x, Target::Class { y, n_classes }, rows, params, FeatureSampling::All)
}

pub fn fit_tree_regressor(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Tree {
    let rows = (0..x.len()).collect();
    grow(x, Target::Score { y }, rows, params, FeatureSampling::All)
}

fn bootstrap(n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Majority vote; ties go to the smaller class.
    pub fn predict_class(&self, x: &[f64], n_classes: usize) -> usize {
        let mut votes = vec![0usize; n_classes];
        for t in &self.trees {
            votes[t.predict_class(x)] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }

    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.evaluate(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Tree `t` draws its bootstrap and feature subsets from stream `t` of
/// `seed`, so the forest is identical however rayon schedules the work.
pub fn fit_forest_classifier(x: &[Vec<f64>], y: &[usize], n_classes: usize, p: &ForestClassifierParams, seed: u64) -> Forest {
    let n_features = x.first().map_or(0, Vec::len);
    let k = p
        .max_features
        .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
        .clamp(1, n_features.max(1));
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let rows = bootstrap(x.len(), &mut rng);
            grow(x, Target::Class { y, n_classes }, rows, &p.tree, FeatureSampling::Random { k, rng: &mut rng })
        })
        .collect();
    Forest { trees }
}

pub fn fit_forest_regressor(x: &[Vec<f64>], y: &[f64], p: &ForestRegressorParams, seed: u64) -> Forest {
    let n_features = x.first().map_or(0, Vec::len);
    let k = p.max_features.unwrap_or(n_features).clamp(1, n_features.max(1));
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, t as u64);
            let rows = bootstrap(x.len(), &mut rng);
            grow(x, Target::Score { y }, rows, &p.tree, FeatureSampling::Random { k, rng: &mut rng })
        })
        .collect();
    Forest { trees }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_feature_gives_depth_one() {
        // feature 1 equals the class; feature 0 is noise
        let x = vec![vec![0.3, 0.0], vec![0.1, 1.0], vec![0.7, 0.0], vec![0.2, 1.0], vec![0.9, 1.0]];
        let y = vec![0, 1, 0, 1, 1];
        let t = fit_tree_classifier(&x, &y, 2, &TreeParams::default());
        assert_eq!(t.depth(), 1);
        assert!(matches!(t.nodes[0], Node::Split { feature: 1, .. }));
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(t.predict_class(r), l);
        }
    }

    #[test]
    fn split_ties_pick_lowest_feature() {
        // both features separate perfectly
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let t = fit_tree_classifier(&x, &[0, 1], 2, &TreeParams::default());
        assert!(matches!(t.nodes[0], Node::Split { feature: 0, threshold, .. } if threshold == 0.5));
    }

    #[test]
    fn constant_features_make_a_leaf() {
        let x = vec![vec![1.0], vec![1.0], vec![1.0]];
        let t = fit_tree_classifier(&x, &[1, 0, 1], 2, &TreeParams::default());
        assert_eq!(t.nodes, vec![Node::Leaf { value: 1.0 }]);
    }

    #[test]
    fn regressor_respects_depth() {
        let x: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..32).map(|i| i as f64 / 32.0).collect();
        let t = fit_tree_regressor(&x, &y, &TreeParams { max_depth: Some(2), min_samples_split: 2 });
        assert_eq!(t.depth(), 2);
        // four leaves, each the mean of a contiguous quarter
        assert!((t.evaluate(&[0.0]) - (0..8).map(|i| i as f64 / 32.0).sum::<f64>() / 8.0).abs() < 1e-12);
    }

    #[test]
    fn forest_fits_noiseless_data_and_is_deterministic() {
        let x: Vec<Vec<f64>> = (0..60).map(|i| vec![(i % 3) as f64, ((i * 7) % 11) as f64, (i % 2) as f64]).collect();
        let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let p = ForestClassifierParams { n_trees: 50, ..Default::default() };
        let f = fit_forest_classifier(&x, &y, 3, &p, 7);
        for (r, &l) in x.iter().zip(&y) {
            assert_eq!(f.predict_class(r, 3), l);
        }
        assert_eq!(f, fit_forest_classifier(&x, &y, 3, &p, 7));
        assert_ne!(f, fit_forest_classifier(&x, &y, 3, &p, 8));
    }
}
