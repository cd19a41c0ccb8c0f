//! Split search and leaf estimation for a single node.

use crate::data::ObservedDataset;
use crate::estimators::{hajek_mean, trimmed_mean, weighted_quantile, WeightedSlice};

use super::{FitConfig, SparseLeaf};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseSplit {
    pub variable: usize,
    pub cutpoint: f64,
    /// Reduction in design-weighted SSE, `SSE(parent) − SSE(left) − SSE(right)`.
    pub delta: f64,
}

fn gather(members: &[usize], v: &[f64]) -> Vec<f64> {
    members.iter().map(|&i| v[i]).collect()
}

/// Midpoint of two consecutive distinct values that stays strictly below `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let c = lo + (hi - lo) / 2.0;
    if c < hi {
        c
    } else {
        lo
    }
}

/// Members sorted by variable `l`, ties by row index.
fn sorted_by(members: &[usize], col: &[f64]) -> Vec<usize> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
    order
}

/// Exhaustive search for the split with the largest weighted SSE reduction
/// among splits leaving at least `k` rows on each side.
///
/// Candidates are midpoints between consecutive distinct values. Ties go to
/// the smallest variable, then the smallest cutpoint.
pub fn best_mse_split(members: &[usize], data: &ObservedDataset, k: usize) -> Option<MseSplit> {
    let m = members.len();
    let k = k.max(1);
    if m < 2 || m < 2 * k {
        return None;
    }
    let y = gather(members, &data.y);
    let w = gather(members, &data.weight);
    let mean = hajek_mean(&WeightedSlice::new(&y, &w).ok()?);

    let mut best: Option<MseSplit> = None;
    for (l, col) in data.x.iter().enumerate() {
        let order = sorted_by(members, col);
        let (mut w_all, mut s_all) = (0.0, 0.0);
        for &i in &order {
            w_all += data.weight[i];
            s_all += data.weight[i] * (data.y[i] - mean);
        }
        let (mut w_left, mut s_left) = (0.0, 0.0);
        for pos in 0..m - 1 {
            let i = order[pos];
            w_left += data.weight[i];
            s_left += data.weight[i] * (data.y[i] - mean);
            let left_count = pos + 1;
            if left_count < k {
                continue;
            }
            if m - left_count < k {
                break;
            }
            let (lo, hi) = (col[i], col[order[pos + 1]]);
            if lo == hi {
                continue;
            }
            let w_right = w_all - w_left;
            if w_right <= 0.0 {
                continue;
            }
            // Between-group form of the weighted ANOVA identity.
            let gap = s_left / w_left - (s_all - s_left) / w_right;
            let delta = (w_left * w_right / w_all * gap * gap).max(0.0);
            if best.is_none_or(|b| delta > b.delta) {
                best = Some(MseSplit {
                    variable: l,
                    cutpoint: midpoint(lo, hi),
                    delta,
                });
            }
        }
    }
    best
}

/// Median split on the least recently used variable that admits one.
///
/// For each variable in `lru_order` the (weighted, per `cfg`) lower median is
/// found and the cut placed at the largest member value strictly below it.
/// The first variable whose cut leaves at least `k` rows per side wins.
pub fn fallback_median_split(
    members: &[usize],
    data: &ObservedDataset,
    lru_order: &[usize],
    k: usize,
    cfg: &FitConfig,
) -> Option<(usize, f64)> {
    let k = k.max(1);
    if members.len() < 2 {
        return None;
    }
    let unit = vec![1.0; members.len()];
    let w = if cfg.use_weighted_median {
        gather(members, &data.weight)
    } else {
        unit
    };
    for &l in lru_order {
        let x = gather(members, &data.x[l]);
        let slice = WeightedSlice::new(&x, &w).ok()?;
        let median = weighted_quantile(&slice, 0.5).ok()?;
        let cut = x
            .iter()
            .copied()
            .filter(|&v| v < median)
            .fold(f64::NEG_INFINITY, f64::max);
        if cut == f64::NEG_INFINITY {
            continue;
        }
        let left = x.iter().filter(|&&v| v <= cut).count();
        if left >= k && x.len() - left >= k {
            return Some((l, cut));
        }
    }
    None
}

/// Box estimate: the trimmed Hájek mean when the box holds more than `k`
/// rows, otherwise the configured sparse-box value.
pub fn leaf_estimate(
    members: &[usize],
    data: &ObservedDataset,
    k: usize,
    gamma: f64,
    cfg: &FitConfig,
) -> f64 {
    if members.is_empty() {
        return 0.0;
    }
    let y = gather(members, &data.y);
    let w = gather(members, &data.weight);
    let Ok(slice) = WeightedSlice::new(&y, &w) else {
        return 0.0;
    };
    if members.len() > k {
        trimmed_mean(&slice, gamma).unwrap_or_else(|_| hajek_mean(&slice))
    } else {
        match cfg.sparse_leaf_value {
            SparseLeaf::Zero => 0.0,
            SparseLeaf::Hajek => hajek_mean(&slice),
        }
    }
}
