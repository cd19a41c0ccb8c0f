use crate::data::{validate_dataset, ObservedDataset};
use crate::error::{Error, Result};
use crate::estimators::{weighted_quantile, weighted_sse, WeightedSlice};

use super::rates::{rate_values, GammaScale, RateParams, RateValues};
use super::split::{best_mse_split, fallback_median_split, leaf_estimate};
use super::{FitConfig, Leaf, SplitKind, TreeModel, TreeNode};

/// Trimming target used by the automatic gamma scale.
const AUTO_GAMMA_QUANTILE: f64 = 0.99;

/// Resolves an automatic gamma scale against `data` and evaluates the rates
/// at `data.n()`.
pub fn resolve_rates(data: &ObservedDataset, cfg: &FitConfig) -> Result<(RateParams, RateValues)> {
    cfg.validate()?;
    let n = data.n();
    if n == 0 {
        return Err(Error::Empty("dataset"));
    }
    let rates = match cfg.rates.gamma_scale {
        GammaScale::Value(_) => cfg.rates,
        GammaScale::Auto => {
            let abs: Vec<f64> = data.y.iter().map(|v| v.abs()).collect();
            let slice = WeightedSlice::new(&abs, &data.weight)?;
            let mut target = weighted_quantile(&slice, AUTO_GAMMA_QUANTILE)?;
            if target <= 0.0 {
                target = abs.iter().cloned().fold(0.0, f64::max);
            }
            if target <= 0.0 {
                // Every response is zero; any cutoff leaves them unchanged.
                target = 1.0;
            }
            cfg.rates.resolve_scale(n, target)
        }
    };
    let values = rate_values(&rates, n)?;
    Ok((rates, values))
}

struct Grower<'a> {
    /// Fitting data with weights divided by their maximum.
    data: &'a ObservedDataset,
    /// `n / Σ w`, so leaf weighted counts sum to `n`.
    count_scale: f64,
    cfg: &'a FitConfig,
    k: usize,
    gamma: f64,
}

impl Grower<'_> {
    fn leaf(&self, members: &[usize], exhausted: bool) -> TreeNode {
        TreeNode::Leaf(Leaf {
            estimate: leaf_estimate(members, self.data, self.k, self.gamma, self.cfg),
            sample_count: members.len(),
            weighted_count: members.iter().map(|&i| self.data.weight[i]).sum::<f64>() * self.count_scale,
            dense: members.len() > self.k,
            exhausted,
        })
    }

    fn choose(&self, members: &[usize], lru: &[usize]) -> Option<(usize, f64, SplitKind)> {
        if let Some(split) = best_mse_split(members, self.data, self.k) {
            let y: Vec<f64> = members.iter().map(|&i| self.data.y[i]).collect();
            let w: Vec<f64> = members.iter().map(|&i| self.data.weight[i]).collect();
            let sse = weighted_sse(&WeightedSlice::new(&y, &w).ok()?);
            if split.delta > 0.0 && split.delta >= self.cfg.p_threshold / 100.0 * sse {
                return Some((split.variable, split.cutpoint, SplitKind::Mse));
            }
        }
        fallback_median_split(members, self.data, lru, self.k, self.cfg)
            .map(|(l, c)| (l, c, SplitKind::MedianFallback))
    }

    fn grow(&self, members: Vec<usize>, lru: Vec<usize>) -> TreeNode {
        if members.len() <= 2 * self.k {
            return self.leaf(&members, false);
        }
        let Some((variable, cutpoint, split_kind)) = self.choose(&members, &lru) else {
            return self.leaf(&members, true);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = members
            .into_iter()
            .partition(|&i| self.data.x[variable][i] <= cutpoint);
        debug_assert!(left.len() >= self.k && right.len() >= self.k);
        let mut child_lru = lru;
        child_lru.retain(|&l| l != variable);
        child_lru.push(variable);
        TreeNode::Internal {
            variable,
            cutpoint,
            split_kind,
            left: Box::new(self.grow(left, child_lru.clone())),
            right: Box::new(self.grow(right, child_lru)),
        }
    }
}

/// Fits a design-weighted regression tree to `data`.
///
/// Weights enter only through ratios, so the fit depends on them up to a
/// common factor: internally they are divided by their maximum, which makes
/// any constant weighting identical to unit weights.
pub fn fit_tree(data: &ObservedDataset, cfg: &FitConfig) -> Result<TreeModel> {
    let report = validate_dataset(data);
    if let Some(v) = report.violations.first() {
        return Err(Error::Invalid(v.to_string()));
    }
    let max_w = data.weight.iter().cloned().fold(0.0, f64::max);
    let work = ObservedDataset {
        y: data.y.clone(),
        x: data.x.clone(),
        weight: data.weight.iter().map(|w| w / max_w).collect(),
        origin: None,
    };
    let (_, values) = resolve_rates(&work, cfg)?;
    let grower = Grower {
        data: &work,
        count_scale: data.n() as f64 / work.weight.iter().sum::<f64>(),
        cfg,
        k: values.k,
        gamma: values.gamma,
    };
    let root = grower.grow((0..data.n()).collect(), (0..data.d()).collect());
    Ok(TreeModel {
        root,
        d: data.d(),
        n: data.n(),
        config: *cfg,
        k: values.k,
        gamma: values.gamma,
        variable_names: (1..=data.d()).map(|l| format!("x{l}")).collect(),
    })
}
