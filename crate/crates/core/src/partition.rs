//! Axis-aligned box partitions of predictor space and their `l`-norms.
//!
//! Boxes are half-open: a row belongs to a box when `lower < x ≤ upper` on
//! every coordinate, so a point exactly on a cutpoint falls in the lower box.
//!
//! The norm of a partition relative to a marginal distribution `F_l` is
//! `Σ_B [F_l(b_l(B)) − F_l(a_l(B))] · P(B)`. Bounds are evaluated at
//! realized data values: each bound is replaced by the largest observed
//! value of `x_l` not exceeding it, and bounds below the observed range
//! (including infinite lower sides) by the observed minimum. With that convention the three-point distribution
//! `P(1) = .5, P(2) = P(3) = .25` split at `2.5` has norm `1/4` under `F`
//! and `7/16` under `F⁻`.

use crate::data::ObservedDataset;
use crate::error::{Error, Result};
use crate::estimators::EdfVariant;

#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox {
    /// Per-dimension lower bound `a(B)`, possibly `−∞`.
    pub lower: Vec<f64>,
    /// Per-dimension upper bound `b(B)`, possibly `+∞`.
    pub upper: Vec<f64>,
    /// Row indices assigned to the box.
    pub members: Vec<usize>,
}

impl AxisBox {
    pub fn unbounded(d: usize) -> Self {
        AxisBox {
            lower: vec![f64::NEG_INFINITY; d],
            upper: vec![f64::INFINITY; d],
            members: Vec::new(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo < v && v <= hi)
    }

    /// Splits at `x_l ≤ cut`; members are distributed with `x` (column-major).
    pub fn split(&self, l: usize, cut: f64, x: &[Vec<f64>]) -> (AxisBox, AxisBox) {
        let (left_members, right_members): (Vec<usize>, Vec<usize>) =
            self.members.iter().partition(|&&i| x[l][i] <= cut);
        let mut left = AxisBox {
            members: left_members,
            ..self.clone()
        };
        let mut right = AxisBox {
            members: right_members,
            ..self.clone()
        };
        left.upper[l] = cut;
        right.lower[l] = cut;
        (left, right)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    boxes: Vec<AxisBox>,
    d: usize,
}

impl Partition {
    /// Checks bounds and that member sets are disjoint and cover `0..n_rows`.
    pub fn new(boxes: Vec<AxisBox>, d: usize, n_rows: usize) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Invalid("partition has no boxes".into()));
        }
        let mut owner = vec![false; n_rows];
        for (b, bx) in boxes.iter().enumerate() {
            if bx.lower.len() != d || bx.upper.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: bx.lower.len().max(bx.upper.len()),
                });
            }
            if bx.lower.iter().zip(&bx.upper).any(|(a, b)| !(a <= b)) {
                return Err(Error::Invalid(format!("box {b} has lower > upper")));
            }
            for &i in &bx.members {
                match owner.get_mut(i) {
                    Some(seen) if !*seen => *seen = true,
                    Some(_) => {
                        return Err(Error::Invalid(format!("row {i} assigned to two boxes")))
                    }
                    None => return Err(Error::Invalid(format!("row {i} out of range"))),
                }
            }
        }
        if let Some(i) = owner.iter().position(|seen| !seen) {
            return Err(Error::Invalid(format!("row {i} not assigned to any box")));
        }
        Ok(Partition { boxes, d })
    }

    /// The whole space as one box holding every row.
    pub fn single(d: usize, n_rows: usize) -> Self {
        let mut bx = AxisBox::unbounded(d);
        bx.members = (0..n_rows).collect();
        Partition { boxes: vec![bx], d }
    }

    pub fn boxes(&self) -> &[AxisBox] {
        &self.boxes
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Refines box `b` with the split `x_l ≤ cut`.
    pub fn refine(&mut self, b: usize, l: usize, cut: f64, x: &[Vec<f64>]) {
        let (left, right) = self.boxes[b].split(l, cut, x);
        self.boxes[b] = left;
        self.boxes.push(right);
    }
}

/// Index of the box whose bounds contain `x`.
pub fn box_containing(p: &Partition, x: &[f64]) -> Result<usize> {
    if x.len() != p.d {
        return Err(Error::Dimension {
            expected: p.d,
            found: x.len(),
        });
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::Parameter("NaN coordinate".into()));
    }
    p.boxes
        .iter()
        .position(|b| b.contains(x))
        .ok_or_else(|| Error::Invalid(format!("point {x:?} is not covered by the partition")))
}

/// Weighted marginal EDF of one coordinate, with bounds snapped to data values.
struct Marginal {
    /// Distinct sorted values.
    values: Vec<f64>,
    /// Cumulative weight fraction at each distinct value (inclusive).
    cum: Vec<f64>,
    /// Weight fraction strictly below each distinct value.
    cum_before: Vec<f64>,
}

impl Marginal {
    fn new(col: &[f64], weight: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..col.len()).collect();
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
        let total: f64 = weight.iter().sum();
        let mut values = Vec::new();
        let mut mass = Vec::new();
        for &i in &order {
            if values.last() == Some(&col[i]) {
                *mass.last_mut().unwrap() += weight[i];
            } else {
                values.push(col[i]);
                mass.push(weight[i]);
            }
        }
        let mut cum = Vec::with_capacity(mass.len());
        let mut cum_before = Vec::with_capacity(mass.len());
        let mut running = 0.0;
        for m in mass {
            cum_before.push((running / total).min(1.0));
            running += m;
            cum.push((running / total).min(1.0));
        }
        // The largest value carries all the mass.
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Marginal {
            values,
            cum,
            cum_before,
        }
    }

    /// Position of the largest observed value `≤ bound`, with bounds below
    /// the observed range clamped to its minimum.
    fn snap(&self, bound: f64) -> usize {
        self.values.partition_point(|&v| v <= bound).saturating_sub(1)
    }

    fn at(&self, bound: f64, variant: EdfVariant) -> f64 {
        let pos = self.snap(bound);
        match variant {
            EdfVariant::Right => self.cum[pos],
            EdfVariant::LeftLimit => self.cum_before[pos],
        }
    }
}

/// Norm of `p` along variable `l` (0-based) relative to the weighted
/// empirical distribution of `data`, paired with the weighted box mass.
pub fn partition_norm(
    p: &Partition,
    data: &ObservedDataset,
    l: usize,
    variant: EdfVariant,
) -> Result<f64> {
    if data.n() == 0 {
        return Err(Error::Empty("dataset"));
    }
    if l >= p.d || l >= data.d() {
        return Err(Error::Parameter(format!(
            "variable index {l} outside 0..{}",
            p.d.min(data.d())
        )));
    }
    // Relative weights make any constant weighting identical to unit weights.
    let max_w = data.weight.iter().cloned().fold(0.0, f64::max);
    let weight: Vec<f64> = data.weight.iter().map(|w| w / max_w).collect();
    let marginal = Marginal::new(&data.x[l], &weight);
    let total: f64 = weight.iter().sum();
    let mut norm = 0.0;
    for bx in &p.boxes {
        if bx.members.is_empty() {
            continue;
        }
        let mass: f64 = bx.members.iter().map(|&i| weight[i]).sum::<f64>() / total;
        let width = marginal.at(bx.upper[l], variant) - marginal.at(bx.lower[l], variant);
        norm += width.max(0.0) * mass;
    }
    Ok(norm.clamp(0.0, 1.0))
}
