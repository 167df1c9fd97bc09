use arches_core::policy::*;
use arches_core::rng::{Purpose, Stream};

fn gini(rows: &[(Vec<f64>, u8)]) -> f64 {
    let a = rows.iter().filter(|r| r.1 == 0).count() as f64;
    let b = rows.len() as f64 - a;
    if rows.is_empty() {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

fn thresholds(rows: &[(Vec<f64>, u8)], f: usize) -> Vec<f64> {
    let mut v: Vec<f64> = rows.iter().map(|r| r.0[f]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

fn partition(rows: &[(Vec<f64>, u8)], f: usize, t: f64) -> (Vec<(Vec<f64>, u8)>, Vec<(Vec<f64>, u8)>) {
    rows.iter().cloned().partition(|r| r.0[f] <= t)
}

/// Exhaustive minimum leaf impurity over trees of depth ≤ `depth`.
fn brute(rows: &[(Vec<f64>, u8)], n_features: usize, depth: usize) -> f64 {
    let mut best = gini(rows);
    if depth == 0 {
        return best;
    }
    for f in 0..n_features {
        for t in thresholds(rows, f) {
            let (l, r) = partition(rows, f, t);
            let v = brute(&l, n_features, depth - 1) + brute(&r, n_features, depth - 1);
            best = best.min(v);
        }
    }
    best
}

/// Leaf impurity recomputed by routing rows through the tree.
fn routed_impurity(tree: &TreeModel, rows: &[(Vec<f64>, u8)]) -> f64 {
    let mut leaves: Vec<Vec<(Vec<f64>, u8)>> = vec![Vec::new(); tree.nodes.len()];
    for r in rows {
        let mut id = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = &tree.nodes[id]
        {
            id = if r.0[*feature] <= *threshold { *left } else { *right };
        }
        leaves[id].push(r.clone());
    }
    leaves.iter().map(|l| gini(l)).sum()
}

fn random_rows(seed: u64) -> Vec<(Vec<f64>, u8)> {
    let mut rng = Stream::new(seed, Purpose::Shuffle, 0);
    let n = 10 + rng.below(191) as usize;
    let levels = 2 + rng.below(30);
    let kind = rng.below(3);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..4).map(|_| rng.below(levels) as f64).collect();
            let label = match kind {
                // Structured: nested cuts plus label noise.
                0 => {
                    let inside = x[0] > levels as f64 / 3.0 && x[2] <= 2.0 * levels as f64 / 3.0;
                    (inside ^ (rng.uniform() < 0.1)) as u8
                }
                1 => ((x[1] + x[3] > levels as f64) ^ (rng.uniform() < 0.2)) as u8,
                _ => rng.below(2) as u8,
            };
            (x, label)
        })
        .collect()
}

fn dataset(rows: &[(Vec<f64>, u8)]) -> Dataset {
    let mut d = Dataset::new((0..4).map(|i| format!("f{i}")).collect());
    for (x, y) in rows {
        d.push(x, *y).unwrap();
    }
    d
}

#[test]
fn matches_exhaustive_depth_two_optimum() {
    for seed in 0..50 {
        let rows = random_rows(seed);
        let tree = train(&dataset(&rows), 2).unwrap();
        assert!(tree.depth() <= 2);
        let want = brute(&rows, 4, 2);
        let got = routed_impurity(&tree, &rows);
        assert!((got - want).abs() < 1e-9, "seed {seed}: tree {got} optimum {want}");
        assert!((tree.leaf_impurity() - got).abs() < 1e-9);
        for node in &tree.nodes {
            assert!(node.counts()[0] + node.counts()[1] > 0, "empty node");
        }
    }
}

#[test]
fn nested_cuts_are_recovered() {
    let mut rows = Vec::new();
    for i in 0..10 {
        for j in 0..10 {
            let y = (i >= 4 && j < 7) as u8;
            rows.push((vec![i as f64, j as f64, 0.0, 0.0], y));
        }
    }
    let tree = train(&dataset(&rows), 2).unwrap();
    assert_eq!(tree.leaf_impurity(), 0.0);
    assert_eq!(tree.depth(), 2);
    for (x, y) in &rows {
        assert_eq!(predict(&tree, x), *y);
    }
}

#[test]
fn predictions_survive_monotone_transforms() {
    for seed in 100..110 {
        let rows = random_rows(seed);
        let warped: Vec<(Vec<f64>, u8)> = rows
            .iter()
            .map(|(x, y)| (vec![x[0].exp(), 3.0 * x[1] - 7.0, x[2].powi(3), (x[3] + 1.0).ln()], *y))
            .collect();
        let a = train(&dataset(&rows), 2).unwrap();
        let b = train(&dataset(&warped), 2).unwrap();
        let mut rng = Stream::new(seed, Purpose::Schedule, 0);
        // Probe at observed values: midpoints between them move under the warp.
        for _ in 0..200 {
            let x: Vec<f64> = (0..4)
                .map(|f| rows[rng.below(rows.len() as u64) as usize].0[f])
                .collect();
            let w = vec![x[0].exp(), 3.0 * x[1] - 7.0, x[2].powi(3), (x[3] + 1.0).ln()];
            assert_eq!(predict(&a, &x), predict(&b, &w), "seed {seed}");
        }
    }
}

#[test]
fn importance_hand_computed() {
    // n·gini: root 50, left 16, right 16, left children 3.8 and 3.2.
    let tree = TreeModel {
        feature_names: vec!["a".into(), "b".into(), "c".into()],
        nodes: vec![
            Node::Split { feature: 0, threshold: 1.0, left: 1, right: 2, counts: [50, 50] },
            Node::Split { feature: 1, threshold: 1.0, left: 3, right: 4, counts: [40, 10] },
            Node::Leaf { label: 1, counts: [10, 40] },
            Node::Leaf { label: 0, counts: [38, 2] },
            Node::Leaf { label: 1, counts: [2, 8] },
        ],
    };
    let imp = feature_importance(&tree);
    assert!(!imp.splitless);
    assert!((imp.weights[0] - 18.0 / 27.0).abs() < 1e-12);
    assert!((imp.weights[1] - 9.0 / 27.0).abs() < 1e-12);
    assert_eq!(imp.weights[2], 0.0);
    assert_eq!(imp.top(), Some(0));
}

#[test]
fn importances_sum_to_one() {
    for seed in 200..220 {
        let tree = train(&dataset(&random_rows(seed)), 2).unwrap();
        let imp = feature_importance(&tree);
        if !imp.splitless {
            assert!((imp.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn training_is_deterministic() {
    let rows = random_rows(7);
    assert_eq!(train(&dataset(&rows), 2).unwrap(), train(&dataset(&rows), 2).unwrap());
}

#[test]
fn empty_dataset_is_an_error() {
    assert!(train(&dataset(&[]), 2).is_err());
}
