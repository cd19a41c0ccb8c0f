//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on data or runtime errors, 2 on usage errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::{read_dataset, read_population, read_predictors, DatasetSchema};
use crate::design::write_design_summaries;
use crate::error::Error;
use crate::simlab::{
    config_header, diagnose, render_chart, run_simulation, write_aggregates, write_diagnostics,
    write_rep_records, GeneratorSpec, PopulationSource, Shape, SimConfig,
};
use crate::tree::{fit_tree, parse_tree, serialize_tree, FitConfig, GammaForm, GammaScale, RateParams, SparseLeaf};

/// Seed used when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(name = "svytree", version, about = "Regression trees for survey data with design weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a tree to a sample and write the tree file.
    Fit(FitCmd),
    /// Predict from a tree file for every row of a CSV.
    Predict(PredictCmd),
    /// Run the repeated-sampling comparison of weighted and unweighted trees.
    Simulate(SimulateCmd),
    /// Report partition norms and dense-box mass of a tree over a sample.
    Diagnose(DiagnoseCmd),
}

#[derive(Args, Debug)]
struct SchemaFlags {
    /// Response column.
    #[arg(long, default_value = "y")]
    schema_response: String,
    /// Comma-separated predictor columns.
    #[arg(long, value_delimiter = ',')]
    schema_predictors: Vec<String>,
    /// Design-weight column; unit weights when omitted.
    #[arg(long)]
    schema_weight: Option<String>,
    /// Size-measure column of a population file.
    #[arg(long)]
    schema_size: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormFlag {
    Log,
    Power,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SparseFlag {
    Zero,
    Hajek,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MedianFlag {
    Weighted,
    Unweighted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShapeFlag {
    Step,
    Smooth,
    Constant,
}

#[derive(Args, Debug)]
struct TreeFlags {
    /// Occupancy exponent: k = ceil(n^alpha).
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Slack for the power trimming rate.
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "log")]
    gamma_form: FormFlag,
    /// Trimming scale: "auto", "inf" or a positive number.
    #[arg(long, default_value = "auto")]
    gamma_scale: String,
    /// Minimum SSE reduction, in percent of the node SSE, for an MSE split.
    #[arg(long, default_value_t = 5.0)]
    p_threshold: f64,
    /// Estimate in leaves with at most k rows [default: zero; hajek for simulate].
    #[arg(long, value_enum)]
    sparse_leaf: Option<SparseFlag>,
    /// Median used by the fallback split.
    #[arg(long, value_enum, default_value = "weighted")]
    median: MedianFlag,
}

#[derive(Args, Debug)]
struct FitCmd {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    schema: SchemaFlags,
    #[command(flatten)]
    tree: TreeFlags,
    /// Tree file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictCmd {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Predictor columns; defaults to the tree's variable names.
    #[arg(long, value_delimiter = ',')]
    schema_predictors: Vec<String>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateCmd {
    /// Population CSV; a synthetic population is generated when omitted.
    #[arg(long)]
    population: Option<PathBuf>,
    #[command(flatten)]
    schema: SchemaFlags,
    #[command(flatten)]
    tree: TreeFlags,
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800,1600")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
    /// Synthetic population size.
    #[arg(long, default_value_t = 7112)]
    population_size: usize,
    /// Synthetic predictor count.
    #[arg(long, default_value_t = 3)]
    predictors: usize,
    #[arg(long, value_enum, default_value = "step")]
    shape: ShapeFlag,
    /// Standard deviation of the synthetic response error.
    #[arg(long, default_value_t = 2.0)]
    noise_scale: f64,
    /// Target correlation between the response and the size measure.
    #[arg(long, default_value_t = 0.22)]
    target_cor: f64,
    /// Log-scale spread of the synthetic size measure.
    #[arg(long, default_value_t = 1.0)]
    size_dispersion: f64,
    /// Output directory for per_rep.csv, aggregate.csv and design.csv.
    #[arg(long)]
    out: PathBuf,
    /// SVG chart of bias and RMSE against n.
    #[arg(long)]
    chart: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseCmd {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    schema: SchemaFlags,
    /// Population size N, for the sampling fraction.
    #[arg(long)]
    population_size: Option<usize>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn data_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> std::result::Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| data_err(path, e))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| data_err(path, e))
}

fn sink(path: Option<&Path>) -> std::result::Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

impl TreeFlags {
    fn config(&self, default_sparse: SparseFlag) -> std::result::Result<FitConfig, Failure> {
        let gamma_scale = match self.gamma_scale.trim() {
            "auto" => GammaScale::Auto,
            "inf" => GammaScale::Value(f64::INFINITY),
            text => match text.parse::<f64>() {
                Ok(v) => GammaScale::Value(v),
                Err(_) => {
                    return Err(Failure::Usage(format!(
                        "--gamma-scale expects \"auto\", \"inf\" or a number, got `{text}`"
                    )))
                }
            },
        };
        let cfg = FitConfig {
            rates: RateParams {
                alpha: self.alpha,
                epsilon: self.epsilon,
                gamma_form: match self.gamma_form {
                    FormFlag::Log => GammaForm::Log,
                    FormFlag::Power => GammaForm::Power,
                },
                gamma_scale,
            },
            p_threshold: self.p_threshold,
            use_weighted_median: matches!(self.median, MedianFlag::Weighted),
            sparse_leaf_value: match self.sparse_leaf.unwrap_or(default_sparse) {
                SparseFlag::Zero => SparseLeaf::Zero,
                SparseFlag::Hajek => SparseLeaf::Hajek,
            },
        };
        cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

impl SchemaFlags {
    fn schema(&self) -> std::result::Result<DatasetSchema, Failure> {
        if self.schema_predictors.is_empty() {
            return Err(Failure::Usage("--schema-predictors is required".into()));
        }
        let mut schema = DatasetSchema::new(self.schema_response.clone(), self.schema_predictors.clone());
        schema.weight = self.schema_weight.clone();
        schema.size = self.schema_size.clone();
        schema.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(schema)
    }
}

fn cmd_fit(cmd: &FitCmd) -> Outcome {
    let cfg = cmd.tree.config(SparseFlag::Zero)?;
    let schema = cmd.schema.schema()?;
    let data = read_dataset(open(&cmd.data)?, &schema).map_err(|e| data_err(&cmd.data, e))?;
    let mut model = fit_tree(&data, &cfg)?;
    model.variable_names = schema.predictors.clone();
    fs::write(&cmd.out, serialize_tree(&model)).map_err(|e| data_err(&cmd.out, e))?;
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "# n={} k={} gamma={} leaves={}", model.n, model.k, model.gamma, model.n_leaves());
    let _ = out.write_all(model.render(&data)?.as_bytes());
    Ok(())
}

fn read_tree(path: &Path) -> std::result::Result<crate::tree::TreeModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e))?;
    parse_tree(&text).map_err(|e| data_err(path, e))
}

fn cmd_predict(cmd: &PredictCmd) -> Outcome {
    let model = read_tree(&cmd.tree)?;
    let names = if cmd.schema_predictors.is_empty() {
        model.variable_names.clone()
    } else {
        cmd.schema_predictors.clone()
    };
    if names.len() != model.d {
        return Err(Failure::Data(format!(
            "tree has {} predictors but {} columns were named",
            model.d,
            names.len()
        )));
    }
    let x = read_predictors(open(&cmd.data)?, &names).map_err(|e| data_err(&cmd.data, e))?;
    let predictions = model.predict_columns(&x)?;
    let mut w = csv::Writer::from_writer(sink(cmd.out.as_deref())?);
    let io_err = |e: csv::Error| Failure::Data(e.to_string());
    w.write_record(["row_id", "prediction"]).map_err(io_err)?;
    for (i, p) in predictions.iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.to_string()]).map_err(io_err)?;
    }
    w.flush().map_err(|e| Failure::Data(e.to_string()))?;
    Ok(())
}

fn cmd_simulate(cmd: &SimulateCmd) -> Outcome {
    let fit = cmd.tree.config(SparseFlag::Hajek)?;
    let population = match &cmd.population {
        Some(path) => {
            let schema = cmd.schema.schema()?;
            if schema.size.is_none() {
                return Err(Failure::Usage("--population needs --schema-size".into()));
            }
            PopulationSource::Given(read_population(open(path)?, &schema).map_err(|e| data_err(path, e))?)
        }
        None => {
            let spec = GeneratorSpec {
                n: cmd.population_size,
                d: cmd.predictors,
                shape: match cmd.shape {
                    ShapeFlag::Step => Shape::Step,
                    ShapeFlag::Smooth => Shape::Smooth,
                    ShapeFlag::Constant => Shape::Constant,
                },
                noise_scale: cmd.noise_scale,
                target_cor: cmd.target_cor,
                size_dispersion: cmd.size_dispersion,
            };
            spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            PopulationSource::Generated { spec, seed: cmd.seed }
        }
    };
    let cfg = SimConfig {
        population,
        sample_sizes: cmd.sizes.clone(),
        reps: cmd.reps,
        seed: cmd.seed,
        fit,
        threads: cmd.threads,
    };
    let result = run_simulation(&cfg)?;
    fs::create_dir_all(&cmd.out).map_err(|e| data_err(&cmd.out, e))?;
    let header = config_header(&cfg, &result);
    let path = cmd.out.join("per_rep.csv");
    write_rep_records(&result.records, &header, create(&path)?).map_err(|e| data_err(&path, e))?;
    let path = cmd.out.join("aggregate.csv");
    write_aggregates(&result.aggregates, &header, create(&path)?).map_err(|e| data_err(&path, e))?;
    let path = cmd.out.join("design.csv");
    let rows: Vec<(String, _)> = result.designs.iter().map(|s| ("pps".to_string(), s.clone())).collect();
    write_design_summaries(&rows, create(&path)?).map_err(|e| data_err(&path, e))?;
    if let Some(chart) = &cmd.chart {
        fs::write(chart, render_chart(&result.aggregates)).map_err(|e| data_err(chart, e))?;
    }
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "method,n,bias,rmse");
    for a in &result.aggregates {
        let _ = writeln!(out, "{},{},{:.6},{:.6}", a.method.as_str(), a.n, a.bias, a.rmse);
    }
    Ok(())
}

fn cmd_diagnose(cmd: &DiagnoseCmd) -> Outcome {
    let model = read_tree(&cmd.tree)?;
    let mut flags_schema = cmd.schema.schema_predictors.clone();
    if flags_schema.is_empty() {
        flags_schema = model.variable_names.clone();
    }
    let mut schema = DatasetSchema::new(cmd.schema.schema_response.clone(), flags_schema);
    schema.weight = cmd.schema.schema_weight.clone();
    schema.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if schema.predictors.len() != model.d {
        return Err(Failure::Data(format!(
            "tree has {} predictors but {} columns were named",
            model.d,
            schema.predictors.len()
        )));
    }
    if cmd.population_size == Some(0) {
        return Err(Failure::Usage("--population-size must be ≥ 1".into()));
    }
    let data = read_dataset(open(&cmd.data)?, &schema).map_err(|e| data_err(&cmd.data, e))?;
    let report = diagnose(&model, &data, cmd.population_size)?;
    write_diagnostics(&report, sink(cmd.out.as_deref())?)?;
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match &cli.command {
        Command::Fit(c) => cmd_fit(c),
        Command::Predict(c) => cmd_predict(c),
        Command::Simulate(c) => cmd_simulate(c),
        Command::Diagnose(c) => cmd_diagnose(c),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
