//! Population and sample containers, CSV ingestion and validation.
//!
//! Predictors are stored column-major (`x[l][i]` is variable `l` of row `i`)
//! since every consumer in the crate walks one coordinate at a time.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// The full synthetic (or file-backed) universe the simulation lab samples from.
#[derive(Clone, Debug, PartialEq)]
pub struct FinitePopulation {
    pub ids: Vec<u64>,
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    /// Size measure driving the design; strictly positive.
    pub z: Vec<f64>,
}

/// Analyst-visible rows of `(y, x, w)`, where `w = 1/π` is the design weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedDataset {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub weight: Vec<f64>,
    /// Row indices into the population a sample was drawn from, if any.
    pub origin: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSchema {
    pub response: String,
    pub predictors: Vec<String>,
    pub weight: Option<String>,
    pub size: Option<String>,
}

impl DatasetSchema {
    pub fn new(response: impl Into<String>, predictors: Vec<String>) -> Self {
        DatasetSchema {
            response: response.into(),
            predictors,
            weight: None,
            size: None,
        }
    }

    pub fn with_weight(mut self, column: impl Into<String>) -> Self {
        self.weight = Some(column.into());
        self
    }

    pub fn with_size(mut self, column: impl Into<String>) -> Self {
        self.size = Some(column.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.predictors.is_empty() {
            return Err(Error::Schema("at least one predictor is required".into()));
        }
        let mut seen = HashSet::new();
        let all = std::iter::once(&self.response)
            .chain(self.predictors.iter())
            .chain(self.weight.iter())
            .chain(self.size.iter());
        for name in all {
            if name.is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("column `{name}` named more than once")));
            }
        }
        Ok(())
    }
}

impl ObservedDataset {
    /// Builds a dataset, rejecting it if any invariant is violated.
    pub fn new(y: Vec<f64>, x: Vec<Vec<f64>>, weight: Vec<f64>) -> Result<Self> {
        let data = ObservedDataset {
            y,
            x,
            weight,
            origin: None,
        };
        let report = validate_dataset(&data);
        if let Some(first) = report.violations.first() {
            return Err(Error::Invalid(first.to_string()));
        }
        Ok(data)
    }

    /// Unit design weights.
    pub fn unweighted(y: Vec<f64>, x: Vec<Vec<f64>>) -> Result<Self> {
        let n = y.len();
        Self::new(y, x, vec![1.0; n])
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|col| col[i]).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Same rows with every weight replaced by 1.
    pub fn with_unit_weights(&self) -> ObservedDataset {
        ObservedDataset {
            weight: vec![1.0; self.n()],
            ..self.clone()
        }
    }
}

impl FinitePopulation {
    pub fn new(y: Vec<f64>, x: Vec<Vec<f64>>, z: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::Empty("population has no rows"));
        }
        if x.is_empty() {
            return Err(Error::Invalid("population has no predictors".into()));
        }
        if x.iter().any(|c| c.len() != n) || z.len() != n {
            return Err(Error::Length("population columns differ in length".into()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Cell {
                row: i + 1,
                column: "y".into(),
                message: "non-finite response".into(),
            });
        }
        for (l, col) in x.iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Cell {
                    row: i + 1,
                    column: format!("x{}", l + 1),
                    message: "non-finite predictor".into(),
                });
            }
        }
        if let Some(i) = z.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Cell {
                row: i + 1,
                column: "z".into(),
                message: "size measure must be positive and finite".into(),
            });
        }
        Ok(FinitePopulation {
            ids: (1..=n as u64).collect(),
            y,
            x,
            z,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.iter().map(|col| col[i]).collect()
    }

    /// All population rows as a unit-weight dataset.
    pub fn as_dataset(&self) -> ObservedDataset {
        ObservedDataset {
            y: self.y.clone(),
            x: self.x.clone(),
            weight: vec![1.0; self.n()],
            origin: Some((0..self.n()).collect()),
        }
    }

    /// The rows at `indices` carrying the given design weights.
    pub fn sample(&self, indices: &[usize], weight: Vec<f64>) -> ObservedDataset {
        ObservedDataset {
            y: indices.iter().map(|&i| self.y[i]).collect(),
            x: self
                .x
                .iter()
                .map(|col| indices.iter().map(|&i| col[i]).collect())
                .collect(),
            weight,
            origin: Some(indices.to_vec()),
        }
    }

    /// `N⁻¹ Σ y²`.
    pub fn second_moment(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>() / self.n() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NoPredictors,
    RowCount {
        field: String,
        expected: usize,
        found: usize,
    },
    NonFinite {
        row: usize,
        column: String,
    },
    NonPositiveWeight {
        row: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "dataset has no rows"),
            Violation::NoPredictors => write!(f, "dataset has no predictors"),
            Violation::RowCount {
                field,
                expected,
                found,
            } => write!(f, "{field} has {found} rows, expected {expected}"),
            Violation::NonFinite { row, column } => {
                write!(f, "row {row}, column {column}: value is not finite")
            }
            Violation::NonPositiveWeight { row } => {
                write!(f, "row {row}: weight must be positive and finite")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every invariant violation of `data`. Rows are reported 1-based.
pub fn validate_dataset(data: &ObservedDataset) -> ValidationReport {
    let mut violations = Vec::new();
    let n = data.y.len();
    if n == 0 {
        violations.push(Violation::Empty);
    }
    if data.x.is_empty() {
        violations.push(Violation::NoPredictors);
    }
    let mut check_len = |field: String, found: usize| {
        if found != n {
            violations.push(Violation::RowCount {
                field,
                expected: n,
                found,
            });
        }
    };
    check_len("weight".into(), data.weight.len());
    for (l, col) in data.x.iter().enumerate() {
        check_len(format!("x{}", l + 1), col.len());
    }
    if let Some(origin) = &data.origin {
        check_len("origin".into(), origin.len());
    }

    for (i, v) in data.y.iter().enumerate() {
        if !v.is_finite() {
            violations.push(Violation::NonFinite {
                row: i + 1,
                column: "y".into(),
            });
        }
    }
    for (l, col) in data.x.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFinite {
                    row: i + 1,
                    column: format!("x{}", l + 1),
                });
            }
        }
    }
    for (i, w) in data.weight.iter().enumerate() {
        if !(w.is_finite() && *w > 0.0) {
            violations.push(Violation::NonPositiveWeight { row: i + 1 });
        }
    }
    ValidationReport { violations }
}

struct Columns {
    response: Option<usize>,
    predictors: Vec<usize>,
    weight: Option<usize>,
    size: Option<usize>,
    names: Vec<String>,
}

fn locate_columns(
    headers: &csv::StringRecord,
    schema: &DatasetSchema,
    with_response: bool,
) -> Result<Columns> {
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    Ok(Columns {
        response: if with_response {
            Some(find(&schema.response)?)
        } else {
            None
        },
        predictors: schema
            .predictors
            .iter()
            .map(|p| find(p))
            .collect::<Result<_>>()?,
        weight: schema.weight.as_deref().map(find).transpose()?,
        size: schema.size.as_deref().map(find).transpose()?,
        names: headers.iter().map(|h| h.trim().to_string()).collect(),
    })
}

fn parse_cell(record: &csv::StringRecord, idx: usize, row: usize, cols: &Columns) -> Result<f64> {
    let column = cols.names[idx].clone();
    let raw = record.get(idx).ok_or_else(|| Error::Cell {
        row,
        column: column.clone(),
        message: "missing cell".into(),
    })?;
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(Error::Cell {
            row,
            column,
            message: "missing value".into(),
        });
    }
    let v: f64 = raw.parse().map_err(|_| Error::Cell {
        row,
        column: column.clone(),
        message: format!("`{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Cell {
            row,
            column,
            message: format!("`{raw}` is not finite"),
        });
    }
    Ok(v)
}

fn positive(v: f64, row: usize, cols: &Columns, idx: usize, what: &str) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Cell {
            row,
            column: cols.names[idx].clone(),
            message: format!("{what} must be positive, got {v}"),
        })
    }
}

struct RawTable {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    weight: Option<Vec<f64>>,
    size: Option<Vec<f64>>,
}

fn read_table<R: Read>(source: R, schema: &DatasetSchema, with_response: bool) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Empty("file has no header row"));
    }
    let cols = locate_columns(&headers, schema, with_response)?;
    let mut table = RawTable {
        y: Vec::new(),
        x: vec![Vec::new(); cols.predictors.len()],
        weight: cols.weight.map(|_| Vec::new()),
        size: cols.size.map(|_| Vec::new()),
    };
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        rows = row;
        if record.iter().all(|c| c.trim().is_empty()) {
            return Err(Error::Row {
                row,
                message: "all cells are empty".into(),
            });
        }
        if let Some(idx) = cols.response {
            table.y.push(parse_cell(&record, idx, row, &cols)?);
        }
        for (col, &idx) in table.x.iter_mut().zip(&cols.predictors) {
            col.push(parse_cell(&record, idx, row, &cols)?);
        }
        if let (Some(ws), Some(idx)) = (table.weight.as_mut(), cols.weight) {
            let w = parse_cell(&record, idx, row, &cols)?;
            ws.push(positive(w, row, &cols, idx, "weight")?);
        }
        if let (Some(zs), Some(idx)) = (table.size.as_mut(), cols.size) {
            let z = parse_cell(&record, idx, row, &cols)?;
            zs.push(positive(z, row, &cols, idx, "size measure")?);
        }
    }
    if rows == 0 {
        return Err(Error::Empty("file has no data rows"));
    }
    Ok(table)
}

/// Reads an observed sample. A schema without a weight column yields unit weights.
pub fn read_dataset<R: Read>(source: R, schema: &DatasetSchema) -> Result<ObservedDataset> {
    schema.validate()?;
    let table = read_table(source, schema, true)?;
    let n = table.y.len();
    Ok(ObservedDataset {
        y: table.y,
        x: table.x,
        weight: table.weight.unwrap_or_else(|| vec![1.0; n]),
        origin: None,
    })
}

/// Reads a finite population; the schema must name a size-measure column.
pub fn read_population<R: Read>(source: R, schema: &DatasetSchema) -> Result<FinitePopulation> {
    if schema.size.is_none() {
        return Err(Error::Schema(
            "a population needs a size-measure column".into(),
        ));
    }
    schema.validate()?;
    let table = read_table(source, schema, true)?;
    FinitePopulation::new(table.y, table.x, table.size.expect("size column"))
}

/// Reads only the named predictor columns, column-major.
pub fn read_predictors<R: Read>(source: R, predictors: &[String]) -> Result<Vec<Vec<f64>>> {
    if predictors.is_empty() {
        return Err(Error::Schema("at least one predictor is required".into()));
    }
    let schema = DatasetSchema::new(String::new(), predictors.to_vec());
    Ok(read_table(source, &schema, false)?.x)
}

/// Writes `data` with the schema's column names. Values use shortest
/// round-trip formatting so a re-read yields the same container.
pub fn write_dataset<W: Write>(
    data: &ObservedDataset,
    schema: &DatasetSchema,
    sink: W,
) -> Result<()> {
    if schema.predictors.len() != data.d() {
        return Err(Error::Dimension {
            expected: data.d(),
            found: schema.predictors.len(),
        });
    }
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec![schema.response.clone()];
    header.extend(schema.predictors.iter().cloned());
    if let Some(w) = &schema.weight {
        header.push(w.clone());
    }
    writer.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![data.y[i].to_string()];
        rec.extend(data.x.iter().map(|c| c[i].to_string()));
        if schema.weight.is_some() {
            rec.push(data.weight[i].to_string());
        }
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(())
}
