//! Depth-limited Gini decision tree used as the gating policy.
//!
//! Label 0 selects the AI expert (interference present), label 1 selects
//! MMSE. Splits send `x[feature] <= threshold` left.
//!
//! Training searches two levels jointly: a node with at least two levels of
//! depth budget left picks the split whose best one-level completion has the
//! lowest total impurity. For `max_depth = 2` this is the exact optimum over
//! all midpoint-threshold trees; for deeper budgets it is a two-level
//! lookahead applied recursively.

use crate::error::{Error, Result};
use crate::pipeline::{Kpm, KpmRecord, SlotOutcome};
use crate::rng::{Purpose, Stream};
use crate::scene::Regime;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

/// Policy input features, in vector order.
pub const FEATURES: [Kpm; 10] = [
    Kpm::PhyThroughput,
    Kpm::McsIndex,
    Kpm::PduLength,
    Kpm::Ndi,
    Kpm::Rsrp,
    Kpm::SnrDb,
    Kpm::MacThroughput,
    Kpm::Lcid4Throughput,
    Kpm::MacRxBytes,
    Kpm::Lcid4RxBytes,
];

/// Impurity comparisons treat differences below this as ties.
const EPS: f64 = 1e-9;

pub type FeatureVector = [f64; 10];

pub fn feature_vector(r: &KpmRecord) -> FeatureVector {
    let mut v = [0.0; 10];
    for (slot, k) in v.iter_mut().zip(FEATURES.iter()) {
        *slot = k.value(r);
    }
    v
}

/// Per-feature mean over a window of records.
pub fn window_mean(records: &[KpmRecord]) -> Option<FeatureVector> {
    if records.is_empty() {
        return None;
    }
    let mut v = [0.0; 10];
    for r in records {
        for (acc, x) in v.iter_mut().zip(feature_vector(r).iter()) {
            *acc += x;
        }
    }
    v.iter_mut().for_each(|x| *x /= records.len() as f64);
    Some(v)
}

pub fn label_for(regime: Regime) -> u8 {
    match regime {
        Regime::Poor => 0,
        Regime::Good => 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// Row-major, `feature_names.len()` values per row.
    pub x: Vec<f64>,
    pub y: Vec<u8>,
}

impl Dataset {
    pub fn new(feature_names: Vec<String>) -> Self {
        Dataset {
            feature_names,
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn push(&mut self, row: &[f64], label: u8) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::contract(format!(
                "row has {} features, expected {}",
                row.len(),
                self.n_features()
            )));
        }
        if label > 1 {
            return Err(Error::contract("labels must be 0 or 1"));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("non-finite feature value"));
        }
        self.x.extend_from_slice(row);
        self.y.push(label);
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let f = self.n_features();
        &self.x[i * f..(i + 1) * f]
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        let mut d = Dataset::new(self.feature_names.clone());
        for &i in idx {
            d.x.extend_from_slice(self.row(i));
            d.y.push(self.y[i]);
        }
        d
    }

    /// Seeded shuffle, then the first `train_fraction` of rows train.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = Stream::new(seed, Purpose::Shuffle, 0);
        for i in (1..idx.len()).rev() {
            let j = rng.below(i as u64 + 1) as usize;
            idx.swap(i, j);
        }
        let cut = (self.len() as f64 * train_fraction) as usize;
        Ok((self.subset(&idx[..cut]), self.subset(&idx[cut..])))
    }

    /// Rows from pipeline outcomes labeled by ground-truth regime. Rows within
    /// `guard` slots after a regime change are skipped so that windowed KPMs
    /// never mix regimes.
    pub fn from_outcomes(outcomes: &[SlotOutcome], guard: usize) -> Result<Dataset> {
        let mut d = Dataset::new(FEATURES.iter().map(|k| k.name().to_string()).collect());
        // usize::MAX until the first regime change: the opening segment is clean.
        let mut since_change = usize::MAX;
        for (i, o) in outcomes.iter().enumerate() {
            if i > 0 && o.regime != outcomes[i - 1].regime {
                since_change = 0;
            } else if since_change != usize::MAX {
                since_change += 1;
            }
            if since_change >= guard {
                d.push(&feature_vector(&o.kpm), label_for(o.regime))?;
            }
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: [usize; 2],
    },
    Leaf {
        label: u8,
        counts: [usize; 2],
    },
}

impl Node {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            Node::Split { counts, .. } | Node::Leaf { counts, .. } => *counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub feature_names: Vec<String>,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
}

/// `n · gini` for class counts `(a, b)`: `2ab / (a + b)`.
#[inline]
pub fn weighted_gini(counts: [usize; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n == 0 {
        0.0
    } else {
        2.0 * counts[0] as f64 * counts[1] as f64 / n as f64
    }
}

fn majority(counts: [usize; 2]) -> u8 {
    // Ties go to MMSE, the fail-safe choice.
    if counts[0] > counts[1] {
        0
    } else {
        1
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// Impurity of the subtree rooted at this split.
    total: f64,
    /// Impurity right after this split alone.
    own: f64,
}

fn better(a: &Candidate, b: &Option<Candidate>) -> bool {
    match b {
        None => true,
        Some(b) => {
            if a.total < b.total - EPS {
                return true;
            }
            if a.total > b.total + EPS {
                return false;
            }
            // Equal subtrees: prefer the stronger immediate split, then order.
            if a.own < b.own - EPS {
                return true;
            }
            if a.own > b.own + EPS {
                return false;
            }
            a.feature < b.feature || (a.feature == b.feature && a.threshold < b.threshold)
        }
    }
}

struct Trainer<'a> {
    data: &'a Dataset,
    /// Row indices sorted by each feature's value.
    order: Vec<Vec<usize>>,
}

impl<'a> Trainer<'a> {
    fn new(data: &'a Dataset) -> Self {
        let f = data.n_features();
        let order = (0..f)
            .map(|j| {
                let mut idx: Vec<usize> = (0..data.len()).collect();
                idx.sort_by(|&a, &b| data.row(a)[j].total_cmp(&data.row(b)[j]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Trainer { data, order }
    }

    fn value(&self, row: usize, feature: usize) -> f64 {
        self.data.x[row * self.data.n_features() + feature]
    }

    /// Best single split of each of up to two disjoint row groups, scanning
    /// every feature once. `group[row]` is 0, 1 or `u8::MAX` (excluded).
    fn best_single_splits(&self, group: &[u8], totals: [[usize; 2]; 2]) -> [Option<Candidate>; 2] {
        let mut best: [Option<Candidate>; 2] = [None, None];
        for (feature, order) in self.order.iter().enumerate() {
            let mut left = [[0usize; 2]; 2];
            let mut last: [Option<f64>; 2] = [None, None];
            for &row in order {
                let g = group[row];
                if g == u8::MAX {
                    continue;
                }
                let g = g as usize;
                let v = self.value(row, feature);
                if let Some(prev) = last[g] {
                    if v > prev {
                        let l = left[g];
                        let r = [totals[g][0] - l[0], totals[g][1] - l[1]];
                        let total = weighted_gini(l) + weighted_gini(r);
                        let c = Candidate {
                            feature,
                            threshold: prev + (v - prev) / 2.0,
                            total,
                            own: total,
                        };
                        if better(&c, &best[g]) {
                            best[g] = Some(c);
                        }
                    }
                }
                left[g][self.data.y[row] as usize] += 1;
                last[g] = Some(v);
            }
        }
        best
    }

    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let mut c = [0; 2];
        for &r in rows {
            c[self.data.y[r] as usize] += 1;
        }
        c
    }

    /// Choose the split of `rows` with the best depth-2 completion.
    fn best_lookahead(&self, rows: &[usize]) -> Option<Candidate> {
        let n_rows = self.data.len();
        let mut in_node = vec![false; n_rows];
        for &r in rows {
            in_node[r] = true;
        }
        let mut group = vec![u8::MAX; n_rows];
        let total = self.counts(rows);
        let mut best: Option<Candidate> = None;
        for (feature, order) in self.order.iter().enumerate() {
            let members: Vec<usize> = order.iter().copied().filter(|&r| in_node[r]).collect();
            for &r in &members {
                group[r] = 1;
            }
            let mut left = [0usize; 2];
            for k in 0..members.len().saturating_sub(1) {
                let row = members[k];
                group[row] = 0;
                left[self.data.y[row] as usize] += 1;
                let v = self.value(row, feature);
                let next = self.value(members[k + 1], feature);
                if next <= v {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let children = self.best_single_splits(&group, [left, right]);
                let sub = |g: usize, c: [usize; 2]| {
                    let leaf = weighted_gini(c);
                    match children[g] {
                        Some(s) if s.total < leaf - EPS => s.total,
                        _ => leaf,
                    }
                };
                let cand = Candidate {
                    feature,
                    threshold: v + (next - v) / 2.0,
                    total: sub(0, left) + sub(1, right),
                    own: weighted_gini(left) + weighted_gini(right),
                };
                if better(&cand, &best) {
                    best = Some(cand);
                }
            }
            for &r in &members {
                group[r] = u8::MAX;
            }
        }
        best
    }

    fn best_single(&self, rows: &[usize]) -> Option<Candidate> {
        let mut group = vec![u8::MAX; self.data.len()];
        for &r in rows {
            group[r] = 0;
        }
        self.best_single_splits(&group, [self.counts(rows), [0, 0]])[0]
    }

    fn build(&self, rows: &[usize], budget: usize, nodes: &mut Vec<Node>) -> usize {
        let counts = self.counts(rows);
        let id = nodes.len();
        nodes.push(Node::Leaf {
            label: majority(counts),
            counts,
        });
        if budget == 0 || counts[0] == 0 || counts[1] == 0 {
            return id;
        }
        let split = if budget >= 2 {
            self.best_lookahead(rows)
        } else {
            self.best_single(rows)
        };
        let Some(split) = split else { return id };
        if split.total >= weighted_gini(counts) - EPS {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&row| self.value(row, split.feature) <= split.threshold);
        let left = self.build(&l, budget - 1, nodes);
        let right = self.build(&r, budget - 1, nodes);
        nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            counts,
        };
        id
    }
}

/// Train a tree of depth at most `max_depth` (root = depth 0).
pub fn train(data: &Dataset, max_depth: usize) -> Result<TreeModel> {
    if data.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let trainer = Trainer::new(data);
    let rows: Vec<usize> = (0..data.len()).collect();
    let mut nodes = Vec::new();
    trainer.build(&rows, max_depth, &mut nodes);
    Ok(TreeModel {
        feature_names: data.feature_names.clone(),
        nodes,
    })
}

impl TreeModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &TreeModel, id: usize) -> usize {
            match &t.nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }

    /// Total `n · gini` over the leaves.
    pub fn leaf_impurity(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { counts, .. } => Some(weighted_gini(*counts)),
                _ => None,
            })
            .sum()
    }
}

/// Leaf label for `x`.
pub fn predict(tree: &TreeModel, x: &[f64]) -> u8 {
    let mut id = 0;
    loop {
        match &tree.nodes[id] {
            Node::Leaf { label, .. } => return *label,
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                id = if x[*feature] <= *threshold { *left } else { *right };
            }
        }
    }
}

/// Counts with label 0 (AI) as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

/// Ratios are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub specificity: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn record(&mut self, truth: u8, predicted: u8) {
        match (truth, predicted) {
            (0, 0) => self.tp += 1,
            (0, _) => self.fn_ += 1,
            (_, 0) => self.fp += 1,
            _ => self.tn += 1,
        }
    }

    pub fn metrics(&self) -> PolicyMetrics {
        let n = self.tp + self.fn_ + self.fp + self.tn;
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        PolicyMetrics {
            accuracy: ratio(self.tp + self.tn, n),
            precision,
            specificity: ratio(self.tn, self.tn + self.fp),
            recall,
            f1,
        }
    }
}

pub fn confusion(tree: &TreeModel, test: &Dataset) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for i in 0..test.len() {
        cm.record(test.y[i], predict(tree, test.row(i)));
    }
    cm
}

pub fn evaluate(tree: &TreeModel, test: &Dataset) -> Result<PolicyMetrics> {
    if test.is_empty() {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    Ok(confusion(tree, test).metrics())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    /// Sums to 1 unless `splitless`.
    pub weights: Vec<f64>,
    /// True when the tree has no split (or no split reduced impurity).
    pub splitless: bool,
}

impl FeatureImportance {
    /// Index of the largest weight (lowest index on ties).
    pub fn top(&self) -> Option<usize> {
        if self.splitless {
            return None;
        }
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        Some(best)
    }
}

/// Weighted impurity decrease per feature, normalized.
pub fn feature_importance(tree: &TreeModel) -> FeatureImportance {
    let mut w = vec![0.0; tree.n_features()];
    for node in &tree.nodes {
        if let Node::Split {
            feature,
            left,
            right,
            counts,
            ..
        } = node
        {
            let dec = weighted_gini(*counts)
                - weighted_gini(tree.nodes[*left].counts())
                - weighted_gini(tree.nodes[*right].counts());
            w[*feature] += dec.max(0.0);
        }
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return FeatureImportance {
            weights: vec![0.0; tree.n_features()],
            splitless: true,
        };
    }
    w.iter_mut().for_each(|x| *x /= total);
    FeatureImportance {
        weights: w,
        splitless: false,
    }
}

const HEADER: &str = "arches-tree 1";

/// Human-readable node list.
///
/// ```text
/// arches-tree 1
/// features mcs_index,mac_throughput
/// 0 split mac_throughput 3.25 1 2 40 60
/// 1 leaf 0 39 2
/// 2 leaf 1 1 58
/// ```
/// Split lines: `id split <feature> <threshold> <left> <right> <n0> <n1>`.
/// Leaf lines: `id leaf <label> <n0> <n1>`.
pub fn serialize(tree: &TreeModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "features {}", tree.feature_names.join(","));
    for (i, n) in tree.nodes.iter().enumerate() {
        match n {
            Node::Split {
                feature,
                threshold,
                left,
                right,
                counts,
            } => {
                let _ = writeln!(
                    s,
                    "{i} split {} {threshold:?} {left} {right} {} {}",
                    tree.feature_names[*feature], counts[0], counts[1]
                );
            }
            Node::Leaf { label, counts } => {
                let _ = writeln!(s, "{i} leaf {label} {} {}", counts[0], counts[1]);
            }
        }
    }
    s
}

pub fn parse(text: &str) -> Result<TreeModel> {
    let bad = |line: usize, what: &str| Error::config(format!("tree line {}: {what}", line + 1));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, l)) if l.trim() == HEADER => {}
        _ => return Err(Error::config("missing tree header")),
    }
    let (fl, features) = lines.next().ok_or_else(|| Error::config("missing feature list"))?;
    let names: Vec<String> = features
        .trim()
        .strip_prefix("features ")
        .ok_or_else(|| bad(fl, "expected 'features'"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut nodes = Vec::new();
    for (ln, line) in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<usize> {
            tok.get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(ln, "bad integer"))
        };
        if num(0)? != nodes.len() {
            return Err(bad(ln, "node ids must be consecutive from 0"));
        }
        match tok.get(1).copied() {
            Some("split") if tok.len() == 8 => {
                let feature = names
                    .iter()
                    .position(|n| n == tok[2])
                    .ok_or_else(|| bad(ln, "unknown feature"))?;
                let threshold: f64 = tok[3].parse().map_err(|_| bad(ln, "bad threshold"))?;
                nodes.push(Node::Split {
                    feature,
                    threshold,
                    left: num(4)?,
                    right: num(5)?,
                    counts: [num(6)?, num(7)?],
                });
            }
            Some("leaf") if tok.len() == 5 => {
                let label = num(2)?;
                if label > 1 {
                    return Err(bad(ln, "label must be 0 or 1"));
                }
                nodes.push(Node::Leaf {
                    label: label as u8,
                    counts: [num(3)?, num(4)?],
                });
            }
            _ => return Err(bad(ln, "expected a split or leaf node")),
        }
    }
    if nodes.is_empty() {
        return Err(Error::config("tree has no nodes"));
    }
    for n in &nodes {
        if let Node::Split { left, right, .. } = n {
            if *left >= nodes.len() || *right >= nodes.len() {
                return Err(Error::config("child index out of range"));
            }
        }
    }
    let tree = TreeModel {
        feature_names: names,
        nodes,
    };
    // Child links must form a tree (acyclic).
    let mut seen = vec![false; tree.nodes.len()];
    let mut stack = vec![0];
    while let Some(id) = stack.pop() {
        if core::mem::replace(&mut seen[id], true) {
            return Err(Error::config("tree nodes are not a tree"));
        }
        if let Node::Split { left, right, .. } = &tree.nodes[id] {
            stack.push(*left);
            stack.push(*right);
        }
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(rows: &[(&[f64], u8)]) -> Dataset {
        let f = rows[0].0.len();
        let mut d = Dataset::new((0..f).map(|i| format!("f{i}")).collect());
        for (x, y) in rows {
            d.push(x, *y).unwrap();
        }
        d
    }

    #[test]
    fn one_feature_separable() {
        let d = data(&[(&[1.0, 5.0], 0), (&[2.0, 1.0], 0), (&[4.0, 3.0], 1), (&[6.0, 2.0], 1)]);
        let t = train(&d, 2).unwrap();
        assert_eq!(t.depth(), 1);
        match &t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 3.0);
            }
            _ => panic!("expected a split"),
        }
        let imp = feature_importance(&t);
        assert_eq!(imp.weights, vec![1.0, 0.0]);
    }

    #[test]
    fn xor_needs_lookahead() {
        let d = data(&[
            (&[0.0, 0.0], 0),
            (&[0.0, 1.0], 1),
            (&[1.0, 0.0], 1),
            (&[1.0, 1.0], 0),
        ]);
        let t = train(&d, 2).unwrap();
        assert_eq!(t.leaf_impurity(), 0.0);
        for i in 0..d.len() {
            assert_eq!(predict(&t, d.row(i)), d.y[i]);
        }
    }

    #[test]
    fn single_class_is_leaf() {
        let d = data(&[(&[1.0], 1), (&[2.0], 1)]);
        let t = train(&d, 2).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { label: 1, counts: [0, 2] }]);
        assert!(feature_importance(&t).splitless);
        assert!(train(&Dataset::new(vec!["a".into()]), 2).is_err());
    }

    #[test]
    fn boundary_goes_left() {
        let t = TreeModel {
            feature_names: vec!["a".into()],
            nodes: vec![
                Node::Split { feature: 0, threshold: 1.0, left: 1, right: 2, counts: [1, 1] },
                Node::Leaf { label: 0, counts: [1, 0] },
                Node::Leaf { label: 1, counts: [0, 1] },
            ],
        };
        assert_eq!(predict(&t, &[1.0]), 0);
        assert_eq!(predict(&t, &[1.0 + 1e-12]), 1);
    }

    #[test]
    fn fixture_metrics() {
        let cm = ConfusionMatrix { tp: 320, fn_: 4, fp: 8, tn: 1988 };
        let m = cm.metrics();
        assert!((m.accuracy.unwrap() - 2308.0 / 2320.0).abs() < 1e-15);
        assert!((m.precision.unwrap() - 320.0 / 328.0).abs() < 1e-15);
        assert!((m.specificity.unwrap() - 1988.0 / 1996.0).abs() < 1e-15);
    }

    #[test]
    fn undefined_precision() {
        let mut cm = ConfusionMatrix::default();
        for _ in 0..5 {
            cm.record(0, 1);
            cm.record(1, 1);
        }
        let m = cm.metrics();
        assert_eq!(m.accuracy, Some(0.5));
        assert_eq!(m.precision, None);
        assert_eq!(m.specificity, Some(1.0));
        assert_eq!(m.f1, None);
    }

    #[test]
    fn text_round_trip() {
        let d = data(&[(&[0.5, 9.0], 0), (&[0.1, 3.0], 0), (&[0.7, 1.0], 1), (&[0.9, 7.0], 1)]);
        let t = train(&d, 2).unwrap();
        assert_eq!(parse(&serialize(&t)).unwrap(), t);
        assert!(parse("nonsense").is_err());
        assert!(parse("arches-tree 1\nfeatures a\n0 split a 1.0 0 0 1 1\n").is_err());
    }
}
