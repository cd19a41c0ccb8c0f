//! Repeated-sampling comparison of weighted and unweighted trees against the
//! population tree.

use std::io::Write;

use rayon::prelude::*;

use crate::data::FinitePopulation;
use crate::design::{design_summary, draw_pps_sample, pps_inclusion_probs, DesignSummary, PpsDesign};
use crate::error::{Error, Result};
use crate::estimators::{trimmed_mean, WeightedSlice};
use crate::tree::{fit_tree, FitConfig, GammaScale, Leaf, SparseLeaf, TreeModel};

use super::generator::{synth_population, GeneratorSpec};

#[derive(Clone, Debug, PartialEq)]
pub enum PopulationSource {
    Generated { spec: GeneratorSpec, seed: u64 },
    Given(FinitePopulation),
}

impl PopulationSource {
    pub fn materialize(&self) -> Result<FinitePopulation> {
        match self {
            PopulationSource::Generated { spec, seed } => synth_population(spec, *seed),
            PopulationSource::Given(pop) => Ok(pop.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub population: PopulationSource,
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub fit: FitConfig,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn validate(&self, population_size: usize) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Parameter("reps must be ≥ 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Parameter("no sample sizes given".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("sample sizes must be strictly increasing".into()));
        }
        if self.sample_sizes[0] == 0 {
            return Err(Error::Parameter("sample sizes must be ≥ 1".into()));
        }
        let largest = *self.sample_sizes.last().unwrap();
        if largest > population_size {
            return Err(Error::Parameter(format!(
                "sample size {largest} exceeds population size {population_size}"
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Parameter("threads must be ≥ 1".into()));
        }
        self.fit.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Weighted,
    Unweighted,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Weighted => "weighted",
            Method::Unweighted => "unweighted",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepRecord {
    pub method: Method,
    pub n: usize,
    pub rep: usize,
    pub mean_error: f64,
    pub mse: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub method: Method,
    pub n: usize,
    pub bias: f64,
    pub bias_se: f64,
    pub rmse: f64,
    /// Delta-method standard error of `rmse`.
    pub rmse_se: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    /// Ordered by `n`, then `rep`, then method (weighted first).
    pub records: Vec<RepRecord>,
    /// Ordered by `n`, then method.
    pub aggregates: Vec<Aggregate>,
    /// Design summary at each sample size.
    pub designs: Vec<DesignSummary>,
    pub population_size: usize,
    pub population_leaves: usize,
}

impl SimResult {
    pub fn aggregate(&self, method: Method, n: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.method == method && a.n == n)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` at sample size `n`: nested SplitMix64 finalizers
/// over `(base, n, rep)`, so any subset of the grid reproduces exactly.
pub fn rep_seed(base: u64, n: usize, rep: usize) -> u64 {
    splitmix(splitmix(splitmix(base) ^ n as u64) ^ rep as u64)
}

/// The population tree `T`: `fit_tree` on every population row with unit
/// weights.
pub fn fit_population_tree(pop: &FinitePopulation, cfg: &FitConfig) -> Result<TreeModel> {
    fit_tree(&pop.as_dataset(), cfg)
}

/// The sample tree's partition with each leaf re-estimated from the
/// population rows it contains (unit weights, trimmed at `gamma`, sparse
/// when the population count is at most `k`).
pub fn population_on_sample_partition(
    sample_model: &TreeModel,
    pop: &FinitePopulation,
    k: usize,
    gamma: f64,
) -> Result<TreeModel> {
    let routes = sample_model.route(&pop.as_dataset())?;
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); sample_model.n_leaves()];
    for (i, b) in routes.into_iter().enumerate() {
        rows[b].push(pop.y[i]);
    }
    let sparse = sample_model.config.sparse_leaf_value;
    let mut failure = None;
    let mut model = sample_model.map_leaves(|b, _| {
        let y = &rows[b];
        let ones = vec![1.0; y.len()];
        let count = y.len();
        let estimate = match WeightedSlice::new(y, &ones) {
            Err(_) => 0.0,
            Ok(s) if count > k => trimmed_mean(&s, gamma).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                0.0
            }),
            Ok(s) => match sparse {
                SparseLeaf::Zero => 0.0,
                SparseLeaf::Hajek => crate::estimators::hajek_mean(&s),
            },
        };
        Leaf {
            estimate,
            sample_count: count,
            weighted_count: count as f64,
            dense: count > k,
            exhausted: false,
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    model.n = pop.n();
    model.k = k;
    model.gamma = gamma;
    Ok(model)
}

fn discrepancy(pred: &[f64], reference: &[f64]) -> (f64, f64) {
    let n = pred.len() as f64;
    let (mut e, mut e2) = (0.0, 0.0);
    for (a, b) in pred.iter().zip(reference) {
        let diff = a - b;
        e += diff;
        e2 += diff * diff;
    }
    (e / n, e2 / n)
}

/// `(N⁻¹ Σ (t − T), N⁻¹ Σ (t − T)²)` over the population rows.
pub fn tree_discrepancy(
    model: &TreeModel,
    reference: &TreeModel,
    pop: &FinitePopulation,
) -> Result<(f64, f64)> {
    if model.d != reference.d {
        return Err(Error::Dimension {
            expected: reference.d,
            found: model.d,
        });
    }
    let t = model.predict_columns(&pop.x)?;
    let big_t = reference.predict_columns(&pop.x)?;
    Ok(discrepancy(&t, &big_t))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; zero for a single value.
fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn aggregate(method: Method, n: usize, records: &[RepRecord]) -> Aggregate {
    let errors: Vec<f64> = records.iter().map(|r| r.mean_error).collect();
    let mses: Vec<f64> = records.iter().map(|r| r.mse).collect();
    let reps = records.len() as f64;
    let rmse = mean(&mses).sqrt();
    let mse_se = sd(&mses) / reps.sqrt();
    Aggregate {
        method,
        n,
        bias: mean(&errors),
        bias_se: sd(&errors) / reps.sqrt(),
        rmse,
        rmse_se: if rmse > 0.0 { mse_se / (2.0 * rmse) } else { 0.0 },
    }
}

/// Runs the repeated-sampling protocol. Results do not depend on the number
/// of worker threads.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    let pop = cfg.population.materialize()?;
    cfg.validate(pop.n())?;
    let fit_cfg = cfg.fit;
    let reference = fit_population_tree(&pop, &fit_cfg)?;
    let reference_pred = reference.predict_columns(&pop.x)?;

    let mut designs = Vec::with_capacity(cfg.sample_sizes.len());
    let mut jobs = Vec::new();
    for &n in &cfg.sample_sizes {
        let design = PpsDesign::new(pop.z.clone(), n)?;
        designs.push(design_summary(&pop, &pps_inclusion_probs(&pop.z, n)?)?);
        for rep in 0..cfg.reps {
            jobs.push((n, rep, design.clone()));
        }
    }

    let one = |(n, rep, design): &(usize, usize, PpsDesign)| -> Result<[RepRecord; 2]> {
        let drawn = draw_pps_sample(design, rep_seed(cfg.seed, *n, *rep))?;
        let weighted = pop.sample(&drawn.indices, drawn.weights.clone());
        let unweighted = weighted.with_unit_weights();
        let mut out = [Method::Weighted, Method::Unweighted].map(|method| RepRecord {
            method,
            n: *n,
            rep: *rep,
            mean_error: 0.0,
            mse: 0.0,
        });
        for (slot, data) in out.iter_mut().zip([&weighted, &unweighted]) {
            let model = fit_tree(data, &fit_cfg)?;
            let (e, e2) = discrepancy(&model.predict_columns(&pop.x)?, &reference_pred);
            slot.mean_error = e;
            slot.mse = e2;
        }
        Ok(out)
    };

    let run = || -> Result<Vec<[RepRecord; 2]>> { jobs.par_iter().map(one).collect() };
    let pairs = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let records: Vec<RepRecord> = pairs.into_iter().flatten().collect();
    let mut aggregates = Vec::new();
    for &n in &cfg.sample_sizes {
        for method in [Method::Weighted, Method::Unweighted] {
            let group: Vec<RepRecord> = records
                .iter()
                .filter(|r| r.n == n && r.method == method)
                .copied()
                .collect();
            aggregates.push(aggregate(method, n, &group));
        }
    }
    Ok(SimResult {
        records,
        aggregates,
        designs,
        population_size: pop.n(),
        population_leaves: reference.n_leaves(),
    })
}

/// `# key=value` lines describing the run, written ahead of each CSV.
pub fn config_header(cfg: &SimConfig, result: &SimResult) -> Vec<(String, String)> {
    let fit = &cfg.fit;
    let mut out = vec![
        ("N".to_string(), result.population_size.to_string()),
        (
            "sizes".to_string(),
            cfg.sample_sizes
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ),
        ("reps".to_string(), cfg.reps.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("alpha".to_string(), fit.rates.alpha.to_string()),
        ("epsilon".to_string(), fit.rates.epsilon.to_string()),
        (
            "gamma_form".to_string(),
            format!("{:?}", fit.rates.gamma_form).to_lowercase(),
        ),
        (
            "gamma_scale".to_string(),
            match fit.rates.gamma_scale {
                GammaScale::Auto => "auto".to_string(),
                GammaScale::Value(v) => v.to_string(),
            },
        ),
        ("p_threshold".to_string(), fit.p_threshold.to_string()),
        (
            "use_weighted_median".to_string(),
            fit.use_weighted_median.to_string(),
        ),
        (
            "sparse_leaf".to_string(),
            format!("{:?}", fit.sparse_leaf_value).to_lowercase(),
        ),
        (
            "population_tree_leaves".to_string(),
            result.population_leaves.to_string(),
        ),
    ];
    if let PopulationSource::Generated { spec, seed } = &cfg.population {
        out.extend([
            ("generator_shape".to_string(), spec.shape.as_str().to_string()),
            ("generator_d".to_string(), spec.d.to_string()),
            ("generator_noise".to_string(), spec.noise_scale.to_string()),
            ("generator_target_cor".to_string(), spec.target_cor.to_string()),
            ("generator_size_dispersion".to_string(), spec.size_dispersion.to_string()),
            ("generator_seed".to_string(), seed.to_string()),
        ]);
    }
    out
}

fn write_header<W: Write>(sink: &mut W, header: &[(String, String)]) -> Result<()> {
    for (k, v) in header {
        writeln!(sink, "# {k}={v}")?;
    }
    Ok(())
}

pub fn write_rep_records<W: Write>(
    records: &[RepRecord],
    header: &[(String, String)],
    mut sink: W,
) -> Result<()> {
    write_header(&mut sink, header)?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["method", "n", "rep", "mean_error", "mse"])?;
    for r in records {
        w.write_record([
            r.method.as_str().to_string(),
            r.n.to_string(),
            r.rep.to_string(),
            r.mean_error.to_string(),
            r.mse.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates<W: Write>(
    aggregates: &[Aggregate],
    header: &[(String, String)],
    mut sink: W,
) -> Result<()> {
    write_header(&mut sink, header)?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["method", "n", "bias", "bias_se", "rmse", "rmse_se"])?;
    for a in aggregates {
        w.write_record([
            a.method.as_str().to_string(),
            a.n.to_string(),
            a.bias.to_string(),
            a.bias_se.to_string(),
            a.rmse.to_string(),
            a.rmse_se.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
