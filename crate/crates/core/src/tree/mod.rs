//! Weight-adjusted recursive partitioning.
//!
//! A node holding more than `2k` rows is split on the variable and cutpoint
//! with the largest reduction in design-weighted SSE, provided the reduction
//! is positive and at least `p%` of the node's SSE. Otherwise it is split at
//! the weighted median of the least recently used variable along its branch.
//! Both children must keep at least `k = ⌈n^α⌉` rows. Leaves holding more
//! than `k` rows estimate the trimmed Hájek mean; sparser leaves use the
//! configured sparse value.

mod fit;
mod io;
mod rates;
mod split;

use std::fmt::Write as _;

use crate::data::ObservedDataset;
use crate::error::{Error, Result};
use crate::estimators::{hajek_mean, WeightedSlice};
use crate::partition::{AxisBox, Partition};

pub use fit::{fit_tree, resolve_rates};
pub use io::{parse_tree, serialize_tree, FORMAT_VERSION};
pub use rates::{occupancy, rate_values, GammaForm, GammaScale, RateParams, RateValues};
pub use split::{best_mse_split, fallback_median_split, leaf_estimate, MseSplit};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SparseLeaf {
    /// Sparse leaves predict 0.
    Zero,
    /// Sparse leaves predict the untrimmed Hájek mean of their rows.
    Hajek,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub rates: RateParams,
    /// Minimum relative SSE reduction, in percent, for an MSE split.
    pub p_threshold: f64,
    pub use_weighted_median: bool,
    pub sparse_leaf_value: SparseLeaf,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            rates: RateParams::default(),
            p_threshold: 5.0,
            use_weighted_median: true,
            sparse_leaf_value: SparseLeaf::Zero,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if !(self.p_threshold >= 0.0 && self.p_threshold < 100.0) {
            return Err(Error::Parameter(format!(
                "p threshold {} outside [0, 100)",
                self.p_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitKind {
    Mse,
    MedianFallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leaf {
    pub estimate: f64,
    pub sample_count: usize,
    /// `Σ w` over the leaf with weights rescaled to sum to `n`; equals
    /// `sample_count` under equal weights.
    pub weighted_count: f64,
    /// More than `k` sample rows.
    pub dense: bool,
    /// The leaf had more than `2k` rows but no admissible split.
    pub exhausted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal {
        variable: usize,
        cutpoint: f64,
        split_kind: SplitKind,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf(Leaf),
}

impl TreeNode {
    fn visit_leaves<'a>(&'a self, out: &mut Vec<&'a Leaf>) {
        match self {
            TreeNode::Leaf(leaf) => out.push(leaf),
            TreeNode::Internal { left, right, .. } => {
                left.visit_leaves(out);
                right.visit_leaves(out);
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeModel {
    pub root: TreeNode,
    pub d: usize,
    /// Number of rows the tree was fitted on.
    pub n: usize,
    pub config: FitConfig,
    /// Realized minimum occupancy `k(n)`.
    pub k: usize,
    /// Realized trimming cutoff `γ(n)`.
    pub gamma: f64,
    pub variable_names: Vec<String>,
}

impl TreeModel {
    pub fn leaves(&self) -> Vec<&Leaf> {
        let mut out = Vec::new();
        self.root.visit_leaves(&mut out);
        out
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().len()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: x.len(),
            });
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::Parameter("NaN coordinate".into()));
        }
        Ok(())
    }

    /// Index of the leaf reached by `x`, counting leaves left to right.
    pub fn leaf_index(&self, x: &[f64]) -> Result<usize> {
        self.check_point(x)?;
        Ok(Compiled::new(&self.root).leaf_of(|l| x[l]))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(leaf) => return Ok(leaf.estimate),
                TreeNode::Internal {
                    variable,
                    cutpoint,
                    left,
                    right,
                    ..
                } => node = if x[*variable] <= *cutpoint { left } else { right },
            }
        }
    }

    fn route_columns(&self, x: &[Vec<f64>]) -> Result<Vec<usize>> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: x.len(),
            });
        }
        let n = x.first().map_or(0, Vec::len);
        if let Some((l, i)) = x
            .iter()
            .enumerate()
            .find_map(|(l, col)| col.iter().position(|v| v.is_nan()).map(|i| (l, i)))
        {
            return Err(Error::Parameter(format!("NaN coordinate in row {}, variable {}", i + 1, l + 1)));
        }
        let compiled = Compiled::new(&self.root);
        Ok((0..n).map(|i| compiled.leaf_of(|l| x[l][i])).collect())
    }

    /// Predictions for every row of a column-major predictor matrix.
    pub fn predict_columns(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let leaves = self.leaves();
        Ok(self
            .route_columns(x)?
            .into_iter()
            .map(|b| leaves[b].estimate)
            .collect())
    }

    /// Leaf index of every row of `data`.
    pub fn route(&self, data: &ObservedDataset) -> Result<Vec<usize>> {
        self.route_columns(&data.x)
    }

    /// Bounds of each leaf box, left to right, without members.
    pub fn leaf_boxes(&self) -> Vec<AxisBox> {
        fn walk(node: &TreeNode, bx: AxisBox, out: &mut Vec<AxisBox>) {
            match node {
                TreeNode::Leaf(_) => out.push(bx),
                TreeNode::Internal {
                    variable,
                    cutpoint,
                    left,
                    right,
                    ..
                } => {
                    let mut lb = bx.clone();
                    lb.upper[*variable] = *cutpoint;
                    let mut rb = bx;
                    rb.lower[*variable] = *cutpoint;
                    walk(left, lb, out);
                    walk(right, rb, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, AxisBox::unbounded(self.d), &mut out);
        out
    }

    /// The leaf boxes with the rows of `data` routed into them.
    pub fn partition(&self, data: &ObservedDataset) -> Result<Partition> {
        let mut boxes = self.leaf_boxes();
        for (i, b) in self.route(data)?.into_iter().enumerate() {
            boxes[b].members.push(i);
        }
        Partition::new(boxes, self.d, data.n())
    }

    /// Copy of the model with leaf `i` (left to right) replaced by `f(i, leaf)`.
    pub fn map_leaves(&self, mut f: impl FnMut(usize, &Leaf) -> Leaf) -> TreeModel {
        fn walk(node: &TreeNode, next: &mut usize, f: &mut dyn FnMut(usize, &Leaf) -> Leaf) -> TreeNode {
            match node {
                TreeNode::Leaf(leaf) => {
                    let out = f(*next, leaf);
                    *next += 1;
                    TreeNode::Leaf(out)
                }
                TreeNode::Internal {
                    variable,
                    cutpoint,
                    split_kind,
                    left,
                    right,
                } => TreeNode::Internal {
                    variable: *variable,
                    cutpoint: *cutpoint,
                    split_kind: *split_kind,
                    left: Box::new(walk(left, next, f)),
                    right: Box::new(walk(right, next, f)),
                },
            }
        }
        let mut next = 0;
        TreeModel {
            root: walk(&self.root, &mut next, &mut f),
            ..self.clone()
        }
    }

    fn variable_name(&self, l: usize) -> String {
        self.variable_names
            .get(l)
            .cloned()
            .unwrap_or_else(|| format!("x{}", l + 1))
    }

    /// Indented text rendering; every node shows its row count, weighted
    /// count and weighted mean over `data`, and leaves show their estimate.
    pub fn render(&self, data: &ObservedDataset) -> Result<String> {
        if data.d() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                found: data.d(),
            });
        }
        let mut out = String::new();
        let all: Vec<usize> = (0..data.n()).collect();
        self.render_node(&self.root, data, &all, 0, "root", &mut out);
        Ok(out)
    }

    fn render_node(
        &self,
        node: &TreeNode,
        data: &ObservedDataset,
        rows: &[usize],
        depth: usize,
        label: &str,
        out: &mut String,
    ) {
        let y: Vec<f64> = rows.iter().map(|&i| data.y[i]).collect();
        let w: Vec<f64> = rows.iter().map(|&i| data.weight[i]).collect();
        let mean = WeightedSlice::new(&y, &w)
            .map(|s| format!("{:.4}", hajek_mean(&s)))
            .unwrap_or_else(|_| "-".into());
        let indent = "  ".repeat(depth);
        let _ = write!(
            out,
            "{indent}{label}: n={} weighted_n={:.2} mean={mean}",
            rows.len(),
            w.iter().sum::<f64>()
        );
        match node {
            TreeNode::Leaf(leaf) => {
                let _ = writeln!(
                    out,
                    " -> estimate={:.4}{}{}",
                    leaf.estimate,
                    if leaf.dense { "" } else { " (sparse)" },
                    if leaf.exhausted { " (no valid split)" } else { "" }
                );
            }
            TreeNode::Internal {
                variable,
                cutpoint,
                split_kind,
                left,
                right,
            } => {
                let kind = match split_kind {
                    SplitKind::Mse => "mse",
                    SplitKind::MedianFallback => "median",
                };
                let _ = writeln!(out, " [{kind}]");
                let name = self.variable_name(*variable);
                let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| data.x[*variable][i] <= *cutpoint);
                self.render_node(left, data, &l_rows, depth + 1, &format!("{name} <= {cutpoint}"), out);
                self.render_node(right, data, &r_rows, depth + 1, &format!("{name} > {cutpoint}"), out);
            }
        }
    }
}

/// Flat preorder copy of the split structure for fast routing.
struct Compiled {
    nodes: Vec<Flat>,
}

enum Flat {
    Split { variable: usize, cutpoint: f64, right: usize },
    Leaf(usize),
}

impl Compiled {
    fn new(root: &TreeNode) -> Self {
        fn walk(node: &TreeNode, nodes: &mut Vec<Flat>, leaves: &mut usize) {
            match node {
                TreeNode::Leaf(_) => {
                    nodes.push(Flat::Leaf(*leaves));
                    *leaves += 1;
                }
                TreeNode::Internal {
                    variable,
                    cutpoint,
                    left,
                    right,
                    ..
                } => {
                    let at = nodes.len();
                    nodes.push(Flat::Split {
                        variable: *variable,
                        cutpoint: *cutpoint,
                        right: 0,
                    });
                    walk(left, nodes, leaves);
                    let right_at = nodes.len();
                    if let Flat::Split { right, .. } = &mut nodes[at] {
                        *right = right_at;
                    }
                    walk(right, nodes, leaves);
                }
            }
        }
        let mut nodes = Vec::new();
        walk(root, &mut nodes, &mut 0);
        Compiled { nodes }
    }

    fn leaf_of(&self, coord: impl Fn(usize) -> f64) -> usize {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Flat::Leaf(idx) => return idx,
                Flat::Split {
                    variable,
                    cutpoint,
                    right,
                } => at = if coord(variable) <= cutpoint { at + 1 } else { right },
            }
        }
    }
}

/// Prediction of `model` at `x`.
pub fn predict(model: &TreeModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}
