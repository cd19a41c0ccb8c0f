//! Single-stage probability-proportional-to-size designs.
//!
//! Inclusion probabilities are `π_i = n z_i / Σz`, with units whose
//! probability would exceed one fixed as certainty units and the remaining
//! sample size spread over the rest. Samples are drawn without replacement
//! by systematic PPS over a seeded random permutation of the frame.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::FinitePopulation;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PpsDesign {
    pub size_measures: Vec<f64>,
    pub n: usize,
}

impl PpsDesign {
    pub fn new(size_measures: Vec<f64>, n: usize) -> Result<Self> {
        validate(&size_measures, n)?;
        Ok(PpsDesign { size_measures, n })
    }

    pub fn inclusion_probs(&self) -> Result<Vec<f64>> {
        pps_inclusion_probs(&self.size_measures, self.n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrawnSample {
    /// Selected frame rows, ascending.
    pub indices: Vec<usize>,
    pub inclusion_probs: Vec<f64>,
    /// `1/π` for each selected row.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSummary {
    pub n: usize,
    pub certainty_count: usize,
    pub min_pi: f64,
    pub max_pi: f64,
    pub cv_pi: f64,
    pub cor_y_pi: f64,
    pub sampling_fraction: f64,
    /// `N⁻¹ Σ y²`.
    pub pop_second_moment: f64,
}

fn validate(z: &[f64], n: usize) -> Result<()> {
    if z.is_empty() {
        return Err(Error::Empty("size measures"));
    }
    if n == 0 || n > z.len() {
        return Err(Error::Parameter(format!(
            "sample size {n} must lie in 1..={}",
            z.len()
        )));
    }
    if let Some(i) = z.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Parameter(format!(
            "size measure of unit {} must be positive, got {}",
            i + 1,
            z[i]
        )));
    }
    Ok(())
}

/// Capped PPS inclusion probabilities summing to `n`.
pub fn pps_inclusion_probs(z: &[f64], n: usize) -> Result<Vec<f64>> {
    validate(z, n)?;
    let mut certain = vec![false; z.len()];
    let mut pi = vec![0.0; z.len()];
    loop {
        let taken = certain.iter().filter(|&&c| c).count();
        let remaining = (n - taken) as f64;
        let rest: f64 = z
            .iter()
            .zip(&certain)
            .filter(|(_, &c)| !c)
            .map(|(v, _)| v)
            .sum();
        let mut capped = false;
        for i in 0..z.len() {
            if certain[i] {
                pi[i] = 1.0;
                continue;
            }
            pi[i] = if rest > 0.0 { remaining * z[i] / rest } else { 0.0 };
            if pi[i] >= 1.0 {
                capped = true;
            }
        }
        if !capped {
            break;
        }
        for i in 0..z.len() {
            if pi[i] >= 1.0 {
                certain[i] = true;
                pi[i] = 1.0;
            }
        }
    }
    Ok(pi)
}

/// Fixed-size systematic PPS sample; depends only on `(design, seed)`.
pub fn draw_pps_sample(design: &PpsDesign, seed: u64) -> Result<DrawnSample> {
    let pi = design.inclusion_probs()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frame: Vec<usize> = (0..pi.len()).collect();
    frame.shuffle(&mut rng);

    let mut selected: Vec<usize> = (0..pi.len()).filter(|&i| pi[i] >= 1.0).collect();
    let wanted = design.n - selected.len();
    let candidates: Vec<usize> = frame.into_iter().filter(|&i| pi[i] < 1.0).collect();
    let start: f64 = rng.random();
    let mut chosen = vec![false; pi.len()];
    let mut taken = 0;
    let mut cum = 0.0;
    for &i in &candidates {
        cum += pi[i];
        if taken < wanted && start + (taken as f64) < cum {
            chosen[i] = true;
            taken += 1;
        }
    }
    // Rounding in Σπ can leave the last point just past the end of the frame.
    for &i in candidates.iter().rev() {
        if taken >= wanted {
            break;
        }
        if !chosen[i] {
            chosen[i] = true;
            taken += 1;
        }
    }
    selected.extend(candidates.iter().filter(|&&i| chosen[i]));
    selected.sort_unstable();
    let inclusion_probs: Vec<f64> = selected.iter().map(|&i| pi[i]).collect();
    let weights = inclusion_probs.iter().map(|p| 1.0 / p).collect();
    Ok(DrawnSample {
        indices: selected,
        inclusion_probs,
        weights,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation with population denominators; 0 when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Coefficient of variation `sd/mean` with the population denominator.
pub fn coefficient_of_variation(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    var.sqrt() / m.abs()
}

pub fn design_summary(pop: &FinitePopulation, pi: &[f64]) -> Result<DesignSummary> {
    if pi.len() != pop.n() {
        return Err(Error::Length(format!(
            "{} inclusion probabilities for {} units",
            pi.len(),
            pop.n()
        )));
    }
    let total: f64 = pi.iter().sum();
    let n = total.round() as usize;
    Ok(DesignSummary {
        n,
        certainty_count: pi.iter().filter(|&&p| p >= 1.0).count(),
        min_pi: pi.iter().cloned().fold(f64::INFINITY, f64::min),
        max_pi: pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        cv_pi: coefficient_of_variation(pi),
        cor_y_pi: correlation(&pop.y, pi),
        sampling_fraction: n as f64 / pop.n() as f64,
        pop_second_moment: pop.second_moment(),
    })
}

/// Writes labelled summaries as CSV with one row per design and sample size.
pub fn write_design_summaries<W: Write>(rows: &[(String, DesignSummary)], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "design",
        "n",
        "certainty_units",
        "min_pi",
        "max_pi",
        "cv_pi",
        "cor_y_pi",
        "sampling_fraction",
    ])?;
    for (label, s) in rows {
        w.write_record([
            label.clone(),
            s.n.to_string(),
            s.certainty_count.to_string(),
            s.min_pi.to_string(),
            s.max_pi.to_string(),
            s.cv_pi.to_string(),
            s.cor_y_pi.to_string(),
            s.sampling_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
