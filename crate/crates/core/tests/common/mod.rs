#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svytree::data::ObservedDataset;
use svytree::estimators::{weighted_sse, WeightedSlice};
use svytree::tree::{SplitKind, TreeModel, TreeNode};

/// Uniform predictors, a step-plus-linear signal with noise, and lognormal-ish weights.
pub fn random_dataset(seed: u64, n: usize, d: usize) -> ObservedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let y = (0..n)
        .map(|i| {
            let step = if x[0][i] > 0.4 { 3.0 } else { 0.0 };
            let slope = if d > 1 { 2.0 * x[1][i] } else { 0.0 };
            step + slope + rng.random_range(-1.0..1.0)
        })
        .collect();
    let weight = (0..n)
        .map(|_| (rng.random_range(-1.0f64..1.0) * 1.5).exp())
        .collect();
    ObservedDataset::new(y, x, weight).unwrap()
}

pub struct NodeStats {
    pub kind: Option<SplitKind>,
    pub rows: usize,
    pub left_rows: usize,
    pub right_rows: usize,
    pub sse: f64,
    pub child_sse: f64,
    pub exhausted: bool,
}

fn sse_of(data: &ObservedDataset, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let y: Vec<f64> = rows.iter().map(|&i| data.y[i]).collect();
    let w: Vec<f64> = rows.iter().map(|&i| data.weight[i]).collect();
    weighted_sse(&WeightedSlice::new(&y, &w).unwrap())
}

/// Walks the tree routing `data` and reports per-node counts and SSEs.
pub fn node_stats(model: &TreeModel, data: &ObservedDataset) -> Vec<NodeStats> {
    fn walk(node: &TreeNode, data: &ObservedDataset, rows: Vec<usize>, out: &mut Vec<NodeStats>) {
        let sse = sse_of(data, &rows);
        match node {
            TreeNode::Leaf(leaf) => out.push(NodeStats {
                kind: None,
                rows: rows.len(),
                left_rows: 0,
                right_rows: 0,
                sse,
                child_sse: sse,
                exhausted: leaf.exhausted,
            }),
            TreeNode::Internal {
                variable,
                cutpoint,
                split_kind,
                left,
                right,
            } => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| data.x[*variable][i] <= *cutpoint);
                out.push(NodeStats {
                    kind: Some(*split_kind),
                    rows: rows.len(),
                    left_rows: l.len(),
                    right_rows: r.len(),
                    sse,
                    child_sse: sse_of(data, &l) + sse_of(data, &r),
                    exhausted: false,
                });
                walk(left, data, l, out);
                walk(right, data, r, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(&model.root, data, (0..data.n()).collect(), &mut out);
    out
}

/// Tree file with every `weighted_count` line removed.
pub fn strip_weighted_counts(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"weighted_count\""))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}
