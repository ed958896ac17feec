//! Gradient-boosted regression trees for multi-class softmax classification.
//!
//! Each boosting round computes per-class gradients and hessians of the
//! softmax cross-entropy at the current margins, grows one regression tree per
//! class with exact greedy split search, and adds `eta` times the tree output
//! to that class's margin. Tree structure is regularised by
//! `gamma * leaves + lambda / 2 * sum(w^2)`.
//!
//! Feature matrices are sparse. An absent entry is the value `0.0`; there is no
//! separate learned direction for missing values.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TriageError};
use crate::label::SeverityLabel;
use crate::textprep::SparseVector;

const HESSIAN_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            rounds: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(TriageError::invalid(m.to_owned()));
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad("eta must be in (0, 1]");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("lambda, gamma and min_child_weight must be non-negative");
        }
        Ok(())
    }
}

/// Row-major sparse feature matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl FeatureMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            rows: Vec::new(),
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::new(n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(TriageError::DimensionMismatch {
                    expected: n_cols,
                    actual: r.len(),
                });
            }
            m.rows.push(
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, *v))
                    .collect(),
            );
        }
        Ok(m)
    }

    pub fn push_sparse(&mut self, row: &SparseVector) -> Result<()> {
        if row.dim != self.n_cols {
            return Err(TriageError::DimensionMismatch {
                expected: self.n_cols,
                actual: row.dim,
            });
        }
        self.rows
            .push(row.entries.iter().copied().filter(|(_, v)| *v != 0.0).collect());
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        lookup(&self.rows[row], col)
    }
}

fn lookup(row: &[(usize, f64)], col: usize) -> f64 {
    row.binary_search_by_key(&col, |&(c, _)| c)
        .map(|p| row[p].1)
        .unwrap_or(0.0)
}

/// Non-zero entries of every column, sorted by value (row index tie-break).
struct ColumnIndex {
    cols: Vec<Vec<(u32, f64)>>,
}

impl ColumnIndex {
    fn build(x: &FeatureMatrix) -> Self {
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); x.n_cols];
        for (r, row) in x.rows.iter().enumerate() {
            for &(c, v) in row {
                cols[c].push((r as u32, v));
            }
        }
        for col in &mut cols {
            col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        Self { cols }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Direction taken by an absent (zero) value.
        default_left: bool,
    },
    Leaf {
        weight: f64,
    },
}

/// Binary regression tree; node 0 is the root, `x[feature] < threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(weight: f64) -> Self {
        Self {
            nodes: vec![Node::Leaf { weight }],
        }
    }

    fn leaf_index(&self, row: &[(usize, f64)]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if lookup(row, feature) < threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, row: &[(usize, f64)]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { weight } => weight,
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn leaf_weights(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { weight } => Some(*weight),
                _ => None,
            })
            .collect()
    }

    /// Leaf reached by each row, as an index into `leaf_weights()`.
    pub fn leaf_assignment(&self, x: &FeatureMatrix) -> Vec<usize> {
        let mut ordinal = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            if matches!(n, Node::Leaf { .. }) {
                ordinal[i] = next;
                next += 1;
            }
        }
        x.rows.iter().map(|r| ordinal[self.leaf_index(r)]).collect()
    }

    /// Root split as `(feature, threshold)`, if the tree is not a single leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    fn scale(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { weight } = n {
                *weight *= factor;
            }
        }
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                _ => None,
            })
            .max()
    }
}

/// Softmax probabilities, computed stably.
pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of the softmax at `margins` against `true_class`.
pub fn softmax_loss(margins: &[f64], true_class: usize) -> f64 {
    let max = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + margins.iter().map(|m| (m - max).exp()).sum::<f64>().ln();
    lse - margins[true_class]
}

/// Gradient and diagonal hessian of [`softmax_loss`] with respect to the margins.
pub fn softmax_grad_hess(margins: &[f64], true_class: usize) -> (Vec<f64>, Vec<f64>) {
    let p = softmax(margins);
    let g = p
        .iter()
        .enumerate()
        .map(|(c, &pc)| pc - if c == true_class { 1.0 } else { 0.0 })
        .collect();
    let h = p.iter().map(|&pc| (pc * (1.0 - pc)).max(HESSIAN_FLOOR)).collect();
    (g, h)
}

/// Structure score gain of splitting a node with totals `(g, h)` into `left`
/// and the complement.
pub fn split_gain(left: (f64, f64), total: (f64, f64), lambda: f64, gamma: f64) -> f64 {
    let (gl, hl) = left;
    let (gr, hr) = (total.0 - gl, total.1 - hl);
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(total.0, total.1)) - gamma
}

pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    let w = -g / (h + lambda);
    if w.is_finite() {
        w
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Frontier {
    node: usize,
    rows: Vec<u32>,
    g: f64,
    h: f64,
    best: Option<Candidate>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m > a && m <= b {
        m
    } else {
        b
    }
}

/// Grow one tree by exact greedy search over every (feature, threshold) pair.
pub fn grow_tree(g: &[f64], h: &[f64], x: &FeatureMatrix, cfg: &TrainConfig) -> Result<RegressionTree> {
    if g.len() != x.n_rows() || h.len() != x.n_rows() {
        return Err(TriageError::DimensionMismatch {
            expected: x.n_rows(),
            actual: g.len().min(h.len()),
        });
    }
    let cols = ColumnIndex::build(x);
    Ok(grow_indexed(g, h, x, &cols, cfg))
}

fn grow_indexed(g: &[f64], h: &[f64], x: &FeatureMatrix, cols: &ColumnIndex, cfg: &TrainConfig) -> RegressionTree {
    let n = x.n_rows();
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut frontier = vec![Frontier {
        node: 0,
        rows: (0..n as u32).collect(),
        g: g.iter().sum(),
        h: h.iter().sum(),
        best: None,
    }];
    // Slot of each row in `frontier`; usize::MAX once the row sits in a finished leaf.
    let mut slot = vec![0usize; n];

    for depth in 0..=cfg.max_depth {
        if frontier.is_empty() {
            break;
        }
        if depth < cfg.max_depth {
            find_splits(g, h, cols, &slot, &mut frontier, cfg);
        }
        let mut next = Vec::new();
        for f in frontier {
            let Some(best) = f.best else {
                nodes[f.node] = Node::Leaf {
                    weight: leaf_weight(f.g, f.h, cfg.lambda),
                };
                for &r in &f.rows {
                    slot[r as usize] = usize::MAX;
                }
                continue;
            };
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = f
                .rows
                .iter()
                .partition(|&&r| x.value(r as usize, best.feature) < best.threshold);
            let sum = |rows: &[u32], v: &[f64]| rows.iter().map(|&r| v[r as usize]).sum::<f64>();
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf { weight: 0.0 });
            nodes.push(Node::Leaf { weight: 0.0 });
            nodes[f.node] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
                default_left: 0.0 < best.threshold,
            };
            for (node, rows) in [(left, left_rows), (right, right_rows)] {
                let (gs, hs) = (sum(&rows, g), sum(&rows, h));
                next.push(Frontier {
                    node,
                    rows,
                    g: gs,
                    h: hs,
                    best: None,
                });
            }
        }
        for (i, f) in next.iter().enumerate() {
            for &r in &f.rows {
                slot[r as usize] = i;
            }
        }
        frontier = next;
    }
    RegressionTree { nodes }
}

/// Per-node running state while scanning one column.
struct Scan {
    nz_g: Vec<f64>,
    nz_h: Vec<f64>,
    nz_n: Vec<usize>,
    acc_g: Vec<f64>,
    acc_h: Vec<f64>,
    last: Vec<Option<f64>>,
    zero_done: Vec<bool>,
}

impl Scan {
    fn new(m: usize) -> Self {
        Self {
            nz_g: vec![0.0; m],
            nz_h: vec![0.0; m],
            nz_n: vec![0; m],
            acc_g: vec![0.0; m],
            acc_h: vec![0.0; m],
            last: vec![None; m],
            zero_done: vec![false; m],
        }
    }

    fn reset(&mut self, s: usize) {
        self.nz_g[s] = 0.0;
        self.nz_h[s] = 0.0;
        self.nz_n[s] = 0;
        self.acc_g[s] = 0.0;
        self.acc_h[s] = 0.0;
        self.last[s] = None;
        self.zero_done[s] = false;
    }

    /// Evaluate the threshold between the previous value of node `s` and `value`.
    fn consider(&self, f: &mut Frontier, s: usize, feature: usize, value: f64, cfg: &TrainConfig) {
        let Some(prev) = self.last[s] else { return };
        if prev == value {
            return;
        }
        let (gl, hl) = (self.acc_g[s], self.acc_h[s]);
        if hl < cfg.min_child_weight || f.h - hl < cfg.min_child_weight {
            return;
        }
        let gain = split_gain((gl, hl), (f.g, f.h), cfg.lambda, cfg.gamma);
        if gain > 0.0 && f.best.is_none_or(|b| gain > b.gain) {
            f.best = Some(Candidate {
                gain,
                feature,
                threshold: midpoint(prev, value),
            });
        }
    }

    fn add_zero_bucket(&mut self, f: &mut Frontier, s: usize, feature: usize, cfg: &TrainConfig) {
        self.zero_done[s] = true;
        if f.rows.len() > self.nz_n[s] {
            self.consider(f, s, feature, 0.0, cfg);
            self.acc_g[s] += f.g - self.nz_g[s];
            self.acc_h[s] += f.h - self.nz_h[s];
            self.last[s] = Some(0.0);
        }
    }
}

/// Best split of every frontier node in one pass over each column.
///
/// Columns are scanned in ascending value order. Absent entries form a zero
/// bucket per node, inserted between the negative and positive values.
/// Features and thresholds are visited in increasing order and a candidate
/// replaces the incumbent only on strictly larger gain.
fn find_splits(
    g: &[f64],
    h: &[f64],
    cols: &ColumnIndex,
    slot: &[usize],
    frontier: &mut [Frontier],
    cfg: &TrainConfig,
) {
    let mut scan = Scan::new(frontier.len());
    let mut touched: Vec<usize> = Vec::new();

    for (feature, col) in cols.cols.iter().enumerate() {
        touched.clear();
        for &(r, _) in col {
            let s = slot[r as usize];
            if s == usize::MAX {
                continue;
            }
            if scan.nz_n[s] == 0 {
                touched.push(s);
            }
            scan.nz_n[s] += 1;
            scan.nz_g[s] += g[r as usize];
            scan.nz_h[s] += h[r as usize];
        }
        if touched.is_empty() {
            continue;
        }
        for &(r, v) in col {
            let s = slot[r as usize];
            if s == usize::MAX {
                continue;
            }
            let f = &mut frontier[s];
            if v > 0.0 && !scan.zero_done[s] {
                scan.add_zero_bucket(f, s, feature, cfg);
            }
            scan.consider(f, s, feature, v, cfg);
            scan.acc_g[s] += g[r as usize];
            scan.acc_h[s] += h[r as usize];
            scan.last[s] = Some(v);
        }
        for &s in &touched {
            if !scan.zero_done[s] {
                scan.add_zero_bucket(&mut frontier[s], s, feature, cfg);
            }
            scan.reset(s);
        }
    }
}

/// Per-class additive tree ensemble over a fixed feature dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedForest {
    pub n_features: usize,
    pub base_margin: f64,
    /// `trees[class][round]`, classes in [`SeverityLabel::ALL`] order; leaf
    /// weights already include the learning rate.
    pub trees: Vec<Vec<RegressionTree>>,
}

impl BoostedForest {
    pub fn rounds(&self) -> usize {
        self.trees.first().map_or(0, Vec::len)
    }

    fn check_dim(&self, x: &SparseVector) -> Result<()> {
        if x.dim != self.n_features {
            return Err(TriageError::DimensionMismatch {
                expected: self.n_features,
                actual: x.dim,
            });
        }
        Ok(())
    }

    /// Summed margins using only the first `rounds` boosting rounds.
    pub fn margins_truncated(&self, row: &[(usize, f64)], rounds: usize) -> Vec<f64> {
        self.trees
            .iter()
            .map(|class_trees| {
                self.base_margin + class_trees.iter().take(rounds).map(|t| t.predict_row(row)).sum::<f64>()
            })
            .collect()
    }

    pub fn margins_row(&self, row: &[(usize, f64)]) -> Vec<f64> {
        self.margins_truncated(row, usize::MAX)
    }

    pub fn predict_proba_row(&self, row: &[(usize, f64)]) -> Vec<f64> {
        softmax(&self.margins_row(row))
    }

    /// Mean softmax cross-entropy over a data set after `rounds` rounds.
    pub fn loss_after(&self, x: &FeatureMatrix, y: &[SeverityLabel], rounds: usize) -> f64 {
        let total: f64 = (0..x.n_rows())
            .map(|i| softmax_loss(&self.margins_truncated(x.row(i), rounds), y[i].index()))
            .sum();
        total / x.n_rows().max(1) as f64
    }

    pub fn validate(&self) -> Result<()> {
        let rounds = self.rounds();
        if self.trees.len() != SeverityLabel::COUNT || self.trees.iter().any(|t| t.len() != rounds) {
            return Err(TriageError::Parse("forest class tree lists are ragged".into()));
        }
        if let Some(f) = self.trees.iter().flatten().filter_map(RegressionTree::max_feature).max() {
            if f >= self.n_features {
                return Err(TriageError::Parse(format!(
                    "tree splits on feature {f} beyond dimension {}",
                    self.n_features
                )));
            }
        }
        Ok(())
    }

    /// Checks structural invariants of a deserialized forest.
    pub fn checked(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }
}

pub fn train(x: &FeatureMatrix, y: &[SeverityLabel], cfg: &TrainConfig) -> Result<BoostedForest> {
    cfg.validate()?;
    if x.n_rows() != y.len() {
        return Err(TriageError::DimensionMismatch {
            expected: x.n_rows(),
            actual: y.len(),
        });
    }
    if y.is_empty() {
        return Err(TriageError::invalid("cannot train on zero rows"));
    }
    let n = x.n_rows();
    let classes = SeverityLabel::COUNT;
    let cols = ColumnIndex::build(x);
    let mut forest = BoostedForest {
        n_features: x.n_cols(),
        base_margin: 0.0,
        trees: vec![Vec::new(); classes],
    };
    let mut margins = vec![vec![forest.base_margin; classes]; n];
    let mut g = vec![vec![0.0; n]; classes];
    let mut h = vec![vec![0.0; n]; classes];

    for _ in 0..cfg.rounds {
        for (i, m) in margins.iter().enumerate() {
            let (gi, hi) = softmax_grad_hess(m, y[i].index());
            for c in 0..classes {
                g[c][i] = gi[c];
                h[c][i] = hi[c];
            }
        }
        for c in 0..classes {
            let mut tree = grow_indexed(&g[c], &h[c], x, &cols, cfg);
            tree.scale(cfg.eta);
            for (i, m) in margins.iter_mut().enumerate() {
                m[c] += tree.predict_row(x.row(i));
            }
            forest.trees[c].push(tree);
        }
    }
    Ok(forest)
}

pub fn predict_proba(forest: &BoostedForest, x: &SparseVector) -> Result<Vec<f64>> {
    forest.check_dim(x)?;
    Ok(forest.predict_proba_row(&x.entries))
}

/// Index of the largest probability; ties go to the earlier class.
pub fn argmax_class(proba: &[f64]) -> SeverityLabel {
    let mut best = 0;
    for (i, &p) in proba.iter().enumerate() {
        if p > proba[best] {
            best = i;
        }
    }
    SeverityLabel::from_index(best).expect("four-class probabilities")
}

pub fn predict(forest: &BoostedForest, x: &SparseVector) -> Result<SeverityLabel> {
    Ok(argmax_class(&predict_proba(forest, x)?))
}
