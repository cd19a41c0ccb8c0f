//! Design-weighted point and distribution estimators.
//!
//! Every estimator here is a ratio of weighted sums, so all of them are
//! unchanged when the weights are multiplied by a positive constant.
//! Sums run in index order so results are bit-reproducible.

use crate::error::{Error, Result};

/// Paired values and positive weights, e.g. `(y_i, 1/π_i)` for the sampled
/// rows of one box.
#[derive(Clone, Copy, Debug)]
pub struct WeightedSlice<'a> {
    values: &'a [f64],
    weights: &'a [f64],
}

impl<'a> WeightedSlice<'a> {
    pub fn new(values: &'a [f64], weights: &'a [f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("weighted slice"));
        }
        if values.len() != weights.len() {
            return Err(Error::Length(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Parameter(format!("weight {w} is not positive")));
        }
        Ok(WeightedSlice { values, weights })
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Estimated population count `Σ w_i`.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.values.iter().copied().zip(self.weights.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdfVariant {
    /// `F(t)`: mass at values `≤ t`.
    Right,
    /// `F(t−)`: mass at values `< t`.
    LeftLimit,
}

impl EdfVariant {
    #[inline]
    pub fn counts(self, value: f64, t: f64) -> bool {
        match self {
            EdfVariant::Right => value <= t,
            EdfVariant::LeftLimit => value < t,
        }
    }
}

/// Hájek ratio `Σ w y / Σ w`.
pub fn hajek_mean(s: &WeightedSlice) -> f64 {
    let (num, den) = s
        .pairs()
        .fold((0.0, 0.0), |(num, den), (y, w)| (num + w * y, den + w));
    let mean = num / den;
    // A ratio of rounded sums can land a hair outside the data range.
    let (lo, hi) = min_max(s.values);
    mean.clamp(lo, hi)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Weighted empirical distribution function evaluated at `t`.
pub fn weighted_edf(s: &WeightedSlice, t: f64, variant: EdfVariant) -> f64 {
    let (below, total) = s.pairs().fold((0.0, 0.0), |(below, total), (y, w)| {
        let hit = if variant.counts(y, t) { w } else { 0.0 };
        (below + hit, total + w)
    });
    (below / total).clamp(0.0, 1.0)
}

/// Lower weighted quantile: the smallest observed value `v` with
/// `F(v) ≥ q`. No interpolation, so the result is always a data value.
pub fn weighted_quantile(s: &WeightedSlice, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Parameter(format!("quantile level {q} outside (0, 1]")));
    }
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.values[a].total_cmp(&s.values[b]).then(a.cmp(&b)));
    let total = s.total_weight();
    let target = q * total;
    let mut cum = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        cum += s.weights[i];
        let last_of_value = order
            .get(pos + 1)
            .is_none_or(|&j| s.values[j] != s.values[i]);
        if last_of_value && cum >= target {
            return Ok(s.values[i]);
        }
    }
    // Rounding can leave the full cumulative sum a hair below q·total at q = 1.
    Ok(s.values[order[order.len() - 1]])
}

/// Mean of the responses clamped to `[−γ, γ]`.
///
/// For the positive and negative parts `Y = Y⁺ − Y⁻` this equals
/// `∫₀^γ {1 − F̃_{Y⁺}} dy − ∫₀^γ {1 − F̃_{Y⁻}} dy`. `γ = ∞` gives the Hájek mean.
pub fn trimmed_mean(s: &WeightedSlice, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Parameter(format!("trimming cutoff {gamma} must be > 0")));
    }
    if gamma.is_infinite() {
        return Ok(hajek_mean(s));
    }
    let clamped: Vec<f64> = s.values.iter().map(|y| y.clamp(-gamma, gamma)).collect();
    let trimmed = WeightedSlice {
        values: &clamped,
        weights: s.weights,
    };
    Ok(hajek_mean(&trimmed))
}

/// `Σ w (y − ȳ_w)²` about the Hájek mean. Exactly zero when all values agree.
pub fn weighted_sse(s: &WeightedSlice) -> f64 {
    let first = s.values[0];
    if s.values.iter().all(|&v| v == first) {
        return 0.0;
    }
    let mean = hajek_mean(s);
    s.pairs().map(|(y, w)| w * (y - mean) * (y - mean)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ws<'a>(v: &'a [f64], w: &'a [f64]) -> WeightedSlice<'a> {
        WeightedSlice::new(v, w).unwrap()
    }

    #[test]
    fn hajek_examples() {
        assert_eq!(hajek_mean(&ws(&[2.0, 4.0, 6.0], &[1.0, 1.0, 1.0])), 4.0);
        // (2·1 + 4·3) / 4
        assert_eq!(hajek_mean(&ws(&[2.0, 4.0], &[1.0, 3.0])), 3.5);
        assert_eq!(hajek_mean(&ws(&[5.0], &[0.2])), 5.0);
    }

    #[test]
    fn slice_rejects_bad_input() {
        assert!(WeightedSlice::new(&[], &[]).is_err());
        assert!(WeightedSlice::new(&[1.0], &[0.0]).is_err());
        assert!(WeightedSlice::new(&[1.0], &[f64::INFINITY]).is_err());
        assert!(WeightedSlice::new(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn edf_examples() {
        let v = [1.0, 2.0, 3.0];
        let w = [1.0, 1.0, 2.0];
        let s = ws(&v, &w);
        assert_eq!(weighted_edf(&s, 2.0, EdfVariant::Right), 0.5);
        assert_eq!(weighted_edf(&s, 2.0, EdfVariant::LeftLimit), 0.25);
        assert_eq!(weighted_edf(&s, 0.5, EdfVariant::Right), 0.0);
        assert_eq!(weighted_edf(&s, 0.5, EdfVariant::LeftLimit), 0.0);
        assert_eq!(weighted_edf(&s, 3.0, EdfVariant::Right), 1.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(weighted_quantile(&ws(&[1.0, 2.0, 3.0], &[1.0; 3]), 0.5).unwrap(), 2.0);
        assert_eq!(weighted_quantile(&ws(&[1.0, 10.0], &[3.0, 1.0]), 0.5).unwrap(), 1.0);
        assert_eq!(weighted_quantile(&ws(&[4.0, 9.0, 1.0], &[1.0, 2.0, 3.0]), 1.0).unwrap(), 9.0);
        let s = ws(&[1.0], &[1.0]);
        assert!(weighted_quantile(&s, 0.0).is_err());
        assert!(weighted_quantile(&s, 1.5).is_err());
        assert!(weighted_quantile(&s, f64::NAN).is_err());
    }

    #[test]
    fn trimmed_examples() {
        let t = trimmed_mean(&ws(&[1.0, 2.0, 10.0], &[1.0; 3]), 5.0).unwrap();
        assert!((t - 8.0 / 3.0).abs() < 1e-15);
        let s = ws(&[1.0, -3.0, 2.0], &[0.5, 1.0, 2.0]);
        assert_eq!(trimmed_mean(&s, 3.0).unwrap(), hajek_mean(&s));
        assert_eq!(trimmed_mean(&s, f64::INFINITY).unwrap(), hajek_mean(&s));
        assert_eq!(trimmed_mean(&ws(&[-4.0, 4.0], &[1.0, 1.0]), 2.0).unwrap(), 0.0);
        assert!(trimmed_mean(&s, 0.0).is_err());
        assert!(trimmed_mean(&s, -1.0).is_err());
    }

    #[test]
    fn sse_examples() {
        assert_eq!(weighted_sse(&ws(&[1.0; 3], &[0.3, 2.0, 9.0])), 0.0);
        assert_eq!(weighted_sse(&ws(&[0.0, 2.0], &[1.0, 1.0])), 2.0);
        assert_eq!(weighted_sse(&ws(&[0.0, 3.0], &[2.0, 1.0])), 6.0);
    }

    fn slice_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (
                prop::collection::vec(-50.0f64..50.0, n),
                prop::collection::vec(0.01f64..20.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn edf_is_monotone_and_ordered((v, w) in slice_strategy(), a in -60.0f64..60.0, b in -60.0f64..60.0) {
            let s = ws(&v, &w);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for variant in [EdfVariant::Right, EdfVariant::LeftLimit] {
                let f_lo = weighted_edf(&s, lo, variant);
                let f_hi = weighted_edf(&s, hi, variant);
                prop_assert!((0.0..=1.0).contains(&f_lo));
                prop_assert!(f_lo <= f_hi);
            }
            prop_assert!(weighted_edf(&s, a, EdfVariant::Right) >= weighted_edf(&s, a, EdfVariant::LeftLimit));
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(weighted_edf(&s, max, EdfVariant::Right), 1.0);
        }

        #[test]
        fn ratio_estimators_ignore_weight_scale((v, w) in slice_strategy(), c in 0.001f64..1000.0, q in 0.01f64..1.0, g in 0.1f64..60.0) {
            let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
            let s = ws(&v, &w);
            let t = ws(&v, &scaled);
            let tol = |a: f64| 1e-9 * (1.0 + a.abs());
            prop_assert!((hajek_mean(&s) - hajek_mean(&t)).abs() <= tol(hajek_mean(&s)));
            prop_assert!((trimmed_mean(&s, g).unwrap() - trimmed_mean(&t, g).unwrap()).abs() <= tol(g));
            let sse = weighted_sse(&s);
            prop_assert!((sse * c - weighted_sse(&t)).abs() <= 1e-9 * (1.0 + sse * c));
            // Power-of-two scaling is exact, so the quantile must agree bit for bit.
            let pow2: Vec<f64> = w.iter().map(|x| x * 8.0).collect();
            prop_assert_eq!(weighted_quantile(&s, q).unwrap(), weighted_quantile(&ws(&v, &pow2), q).unwrap());
        }

        #[test]
        fn quantile_is_lowest_value_reaching_level((v, w) in slice_strategy(), q in 0.01f64..=1.0) {
            let s = ws(&v, &w);
            let got = weighted_quantile(&s, q).unwrap();
            prop_assert!(v.contains(&got));
            prop_assert!(weighted_edf(&s, got, EdfVariant::Right) >= q - 1e-12);
            for &other in v.iter().filter(|&&o| o < got) {
                prop_assert!(weighted_edf(&s, other, EdfVariant::Right) < q + 1e-12);
            }
        }

        #[test]
        fn trimmed_mean_is_bounded((v, w) in slice_strategy(), g in 0.1f64..60.0) {
            let s = ws(&v, &w);
            prop_assert!(trimmed_mean(&s, g).unwrap().abs() <= g);
        }

        #[test]
        fn split_never_raises_sse((v, w) in slice_strategy(), cut in 0usize..40) {
            prop_assume!(v.len() >= 2);
            let cut = 1 + cut % (v.len() - 1);
            let parent = weighted_sse(&ws(&v, &w));
            let left = weighted_sse(&ws(&v[..cut], &w[..cut]));
            let right = weighted_sse(&ws(&v[cut..], &w[cut..]));
            prop_assert!(parent >= (left + right) - 1e-9 * (1.0 + parent));
        }
    }
}
