//! Redundancy analysis over KPM columns: Pearson matrices, average-linkage
//! clustering on `1 - |r|`, and representative selection.

use crate::error::{Error, Result};
use crate::math;
use crate::pipeline::{Kpm, KpmRecord};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Representative preference when a cluster has several members.
pub const DEFAULT_PRIORITY: [&str; 9] = [
    "mcs_index",
    "tb_size",
    "num_cb",
    "qam_order",
    "code_rate",
    "sinr",
    "pdu_length",
    "ndi",
    "rsrp",
];

/// Sample Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / math::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

/// Symmetric correlation matrix. `None` marks an undefined coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    r: Vec<Option<f64>>,
    /// Zero-variance columns.
    constant: Vec<bool>,
}

impl CorrelationMatrix {
    /// From a full row-major matrix (e.g. a published table). Must be
    /// symmetric with a unit diagonal and entries in `[-1, 1]`.
    pub fn from_dense(names: Vec<String>, values: &[f64]) -> Result<Self> {
        let n = names.len();
        if values.len() != n * n {
            return Err(Error::contract(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 1.0 {
                return Err(Error::contract(format!("diagonal of {} is not 1", names[i])));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(-1.0..=1.0).contains(&v) || v != values[j * n + i] {
                    return Err(Error::contract(format!(
                        "entry ({}, {}) is out of range or asymmetric",
                        names[i], names[j]
                    )));
                }
            }
        }
        Ok(CorrelationMatrix {
            names,
            r: values.iter().map(|&v| Some(v)).collect(),
            constant: vec![false; n],
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.r[i * self.len() + j]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn by_name(&self, a: &str, b: &str) -> Option<f64> {
        self.get(self.index_of(a)?, self.index_of(b)?)
    }

    /// Names of zero-variance KPMs, whose off-diagonal coefficients are undefined.
    pub fn degenerate(&self) -> Vec<String> {
        (0..self.len())
            .filter(|&i| self.constant[i])
            .map(|i| self.names[i].clone())
            .collect()
    }

    /// Same matrix with rows and columns in `order`.
    pub fn reordered(&self, order: &[String]) -> Result<Self> {
        let idx: Vec<usize> = order
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::Lookup(format!("no KPM '{n}' in matrix")))
            })
            .collect::<Result<_>>()?;
        let mut r = Vec::with_capacity(idx.len() * idx.len());
        for &i in &idx {
            for &j in &idx {
                r.push(self.get(i, j));
            }
        }
        Ok(CorrelationMatrix {
            names: order.to_vec(),
            r,
            constant: idx.iter().map(|&i| self.constant[i]).collect(),
        })
    }
}

/// Pearson matrix over `names` computed across the record stream.
pub fn pearson_matrix(records: &[KpmRecord], names: &[Kpm]) -> Result<CorrelationMatrix> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} records, need at least 2",
            records.len()
        )));
    }
    let cols: Vec<Vec<f64>> = names
        .iter()
        .map(|k| records.iter().map(|r| k.value(r)).collect())
        .collect();
    let n = names.len();
    let constant: Vec<bool> = cols
        .iter()
        .map(|c| c.iter().all(|v| *v == c[0]))
        .collect();
    let mut r = vec![None; n * n];
    for i in 0..n {
        r[i * n + i] = Some(1.0);
        for j in i + 1..n {
            let v = pearson(&cols[i], &cols[j]);
            r[i * n + j] = v;
            r[j * n + i] = v;
        }
    }
    Ok(CorrelationMatrix {
        names: names.iter().map(|k| k.name().to_string()).collect(),
        r,
        constant,
    })
}

/// One agglomeration step: children are node ids (leaves first, then merges).
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    /// Partition at the cut; members sorted, clusters in leaf order.
    pub clusters: Vec<Vec<String>>,
    /// One per cluster once [`pick_representatives`] has run.
    pub representatives: Vec<String>,
    pub threshold: f64,
    /// Dendrogram leaf order, for reordering matrices in reports.
    pub leaf_order: Vec<String>,
    /// Full dendrogram down to a single root.
    pub merges: Vec<Merge>,
}

impl ClusterResult {
    pub fn cluster_of(&self, name: &str) -> Option<&[String]> {
        self.clusters
            .iter()
            .find(|c| c.iter().any(|m| m == name))
            .map(|c| c.as_slice())
    }
}

struct Node {
    /// Leaf indices, sorted by name.
    members: Vec<usize>,
    min_name: usize,
    id: usize,
}

/// Average-linkage clustering on `d = 1 - |r|`, cut at `d = 1 - threshold`.
///
/// Ties between equally distant pairs go to the pair whose smallest member
/// names sort first, which makes the result independent of input order.
pub fn hcluster(m: &CorrelationMatrix, threshold: f64) -> Result<ClusterResult> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::config("threshold must lie in (0, 1)"));
    }
    let bad = m.degenerate();
    if !bad.is_empty() {
        return Err(Error::Degenerate(bad));
    }
    let n = m.len();
    if n == 0 {
        return Err(Error::InsufficientData("empty correlation matrix".into()));
    }
    // `rank[i]` is leaf i's position in name order.
    let mut by_name: Vec<usize> = (0..n).collect();
    by_name.sort_by(|&a, &b| m.names[a].cmp(&m.names[b]));
    let mut rank = vec![0; n];
    for (pos, &i) in by_name.iter().enumerate() {
        rank[i] = pos;
    }
    let dist = |i: usize, j: usize| 1.0 - math::abs(m.get(i, j).unwrap_or(0.0));
    let linkage = |a: &Node, b: &Node| {
        let mut s = 0.0;
        for &i in &a.members {
            for &j in &b.members {
                s += dist(i, j);
            }
        }
        s / (a.members.len() * b.members.len()) as f64
    };

    let cut = 1.0 - threshold + 1e-12;
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            members: vec![i],
            min_name: rank[i],
            id: i,
        })
        .collect();
    let mut merges = Vec::new();
    let mut partition: Option<Vec<Vec<usize>>> = None;
    let mut next_id = n;
    while nodes.len() > 1 {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                let d = linkage(&nodes[a], &nodes[b]);
                let (ka, kb) = {
                    let (x, y) = (nodes[a].min_name, nodes[b].min_name);
                    (x.min(y), x.max(y))
                };
                let better = match best {
                    None => true,
                    Some((bd, bka, bkb, _, _)) => {
                        d < bd - 1e-15 || (math::abs(d - bd) <= 1e-15 && (ka, kb) < (bka, bkb))
                    }
                };
                if better {
                    best = Some((d, ka, kb, a, b));
                }
            }
        }
        let (d, _, _, a, b) = best.expect("at least two nodes");
        if d > cut && partition.is_none() {
            partition = Some(nodes.iter().map(|c| c.members.clone()).collect());
        }
        // Left child is the one whose smallest name sorts first.
        let (l, r) = if nodes[a].min_name <= nodes[b].min_name { (a, b) } else { (b, a) };
        merges.push(Merge {
            left: nodes[l].id,
            right: nodes[r].id,
            distance: d,
        });
        let right = nodes.swap_remove(r.max(l));
        let left = nodes.swap_remove(r.min(l));
        let (left, right) = if l < r { (left, right) } else { (right, left) };
        let mut members = left.members;
        members.extend(right.members);
        members.sort_by_key(|&i| rank[i]);
        nodes.push(Node {
            min_name: left.min_name.min(right.min_name),
            members,
            id: next_id,
        });
        next_id += 1;
    }
    let partition = partition.unwrap_or_else(|| vec![nodes[0].members.clone()]);

    // Leaf order from the full dendrogram.
    let mut leaf_order = Vec::with_capacity(n);
    let mut stack = vec![next_id - 1];
    while let Some(id) = stack.pop() {
        if id < n {
            leaf_order.push(id);
        } else {
            let mg = &merges[id - n];
            stack.push(mg.right);
            stack.push(mg.left);
        }
    }
    let pos_in_leaf = |i: usize| leaf_order.iter().position(|&x| x == i).unwrap_or(usize::MAX);
    let mut clusters: Vec<Vec<usize>> = partition;
    clusters.sort_by_key(|c| c.iter().map(|&i| pos_in_leaf(i)).min());
    Ok(ClusterResult {
        clusters: clusters
            .iter()
            .map(|c| c.iter().map(|&i| m.names[i].clone()).collect())
            .collect(),
        representatives: Vec::new(),
        threshold,
        leaf_order: leaf_order.iter().map(|&i| m.names[i].clone()).collect(),
        merges,
    })
}

/// Highest-priority member per cluster; unlisted members rank after listed
/// ones, by name.
pub fn pick_representatives(c: &ClusterResult, priority: &[&str]) -> ClusterResult {
    let rank = |name: &str| priority.iter().position(|p| *p == name).unwrap_or(usize::MAX);
    let representatives = c
        .clusters
        .iter()
        .map(|members| {
            members
                .iter()
                .min_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)))
                .cloned()
                .unwrap_or_default()
        })
        .collect();
    ClusterResult {
        representatives,
        ..c.clone()
    }
}

/// Representatives of every group plus `phy_throughput`, in canonical KPM order.
pub fn final_kpm_set(groups: &[&ClusterResult]) -> Vec<String> {
    let mut set: Vec<String> = vec![Kpm::PhyThroughput.name().to_string()];
    for g in groups {
        for r in &g.representatives {
            if !set.contains(r) {
                set.push(r.clone());
            }
        }
    }
    let order = |s: &String| {
        Kpm::ALL
            .iter()
            .position(|k| k.name() == s)
            .unwrap_or(usize::MAX)
    };
    set.sort_by(|a, b| order(a).cmp(&order(b)).then_with(|| a.cmp(b)));
    set
}
