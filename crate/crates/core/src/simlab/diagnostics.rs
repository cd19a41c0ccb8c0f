//! Empirical checks of the dense-box and shrinking-width conditions.

use std::io::Write;

use crate::data::ObservedDataset;
use crate::error::Result;
use crate::estimators::EdfVariant;
use crate::partition::partition_norm;
use crate::tree::TreeModel;

/// Weighted fraction of `data` lying in leaves that hold at least `k` of
/// its rows.
pub fn dense_box_mass(model: &TreeModel, data: &ObservedDataset, k: usize) -> Result<f64> {
    let routes = model.route(data)?;
    let mut counts = vec![0usize; model.n_leaves()];
    for &b in &routes {
        counts[b] += 1;
    }
    let dense: f64 = routes
        .iter()
        .zip(&data.weight)
        .filter(|(b, _)| counts[**b] >= k)
        .map(|(_, w)| w)
        .sum();
    Ok(dense / data.total_weight())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormRow {
    pub variable: String,
    pub right: f64,
    pub left_limit: f64,
}

/// Partition norms of the model's leaves over `data`, per variable.
pub fn norm_report(model: &TreeModel, data: &ObservedDataset) -> Result<Vec<NormRow>> {
    let partition = model.partition(data)?;
    (0..model.d)
        .map(|l| {
            Ok(NormRow {
                variable: model
                    .variable_names
                    .get(l)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", l + 1)),
                right: partition_norm(&partition, data, l, EdfVariant::Right)?,
                left_limit: partition_norm(&partition, data, l, EdfVariant::LeftLimit)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticReport {
    pub norms: Vec<NormRow>,
    pub dense_box_mass: f64,
    pub k: usize,
    pub gamma: f64,
    pub n: usize,
    /// `n / N` when the population size is known.
    pub sampling_fraction: Option<f64>,
}

pub fn diagnose(
    model: &TreeModel,
    data: &ObservedDataset,
    population_size: Option<usize>,
) -> Result<DiagnosticReport> {
    Ok(DiagnosticReport {
        norms: norm_report(model, data)?,
        dense_box_mass: dense_box_mass(model, data, model.k)?,
        k: model.k,
        gamma: model.gamma,
        n: data.n(),
        sampling_fraction: population_size.map(|big_n| data.n() as f64 / big_n as f64),
    })
}

/// CSV with one row per variable followed by a `dense_box_mass` row whose
/// value sits in both norm columns.
pub fn write_diagnostics<W: Write>(report: &DiagnosticReport, mut sink: W) -> Result<()> {
    writeln!(sink, "# n={}", report.n)?;
    writeln!(sink, "# k={}", report.k)?;
    writeln!(sink, "# gamma={}", report.gamma)?;
    if let Some(f) = report.sampling_fraction {
        writeln!(sink, "# sampling_fraction={f}")?;
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["variable", "norm_right", "norm_left_limit"])?;
    for row in &report.norms {
        w.write_record([
            row.variable.clone(),
            row.right.to_string(),
            row.left_limit.to_string(),
        ])?;
    }
    let mass = report.dense_box_mass.to_string();
    w.write_record(["dense_box_mass", mass.as_str(), mass.as_str()])?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{FitConfig, Leaf, SplitKind, TreeNode};

    fn leaf() -> TreeNode {
        TreeNode::Leaf(Leaf {
            estimate: 0.0,
            sample_count: 0,
            weighted_count: 0.0,
            dense: true,
            exhausted: false,
        })
    }

    fn split_at(cut: f64) -> TreeModel {
        TreeModel {
            root: TreeNode::Internal {
                variable: 0,
                cutpoint: cut,
                split_kind: SplitKind::Mse,
                left: Box::new(leaf()),
                right: Box::new(leaf()),
            },
            d: 1,
            n: 4,
            config: FitConfig::default(),
            k: 1,
            gamma: f64::INFINITY,
            variable_names: vec!["x1".into()],
        }
    }

    #[test]
    fn dense_mass_weighted() {
        // Left leaf holds two rows of weight 1.5 each, right leaf one row.
        let data = ObservedDataset::new(
            vec![0.0; 3],
            vec![vec![1.0, 1.0, 3.0]],
            vec![1.5, 1.5, 1.0],
        )
        .unwrap();
        let model = split_at(2.0);
        assert_eq!(dense_box_mass(&model, &data, 2).unwrap(), 0.75);
        assert_eq!(dense_box_mass(&model, &data, 1).unwrap(), 1.0);
        assert_eq!(dense_box_mass(&model, &data, 3).unwrap(), 0.0);
    }

    #[test]
    fn three_point_example_through_report() {
        let data = ObservedDataset::unweighted(vec![0.0; 4], vec![vec![1.0, 1.0, 2.0, 3.0]]).unwrap();
        let report = diagnose(&split_at(2.5), &data, Some(8)).unwrap();
        assert_eq!(report.norms[0].right, 0.25);
        assert_eq!(report.norms[0].left_limit, 0.4375);
        assert_eq!(report.sampling_fraction, Some(0.5));
        let mut buf = Vec::new();
        write_diagnostics(&report, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# n=4\n# k=1\n# gamma=inf\n# sampling_fraction=0.5\n\
             variable,norm_right,norm_left_limit\nx1,0.25,0.4375\n\
             dense_box_mass,1,1\n"
        );
    }

    #[test]
    fn constant_weights_match_unweighted_norms() {
        let x = vec![vec![0.3, 0.9, 0.1, 0.5, 0.7, 0.2]];
        let plain = ObservedDataset::unweighted(vec![0.0; 6], x.clone()).unwrap();
        let scaled = ObservedDataset::new(vec![0.0; 6], x, vec![4.2; 6]).unwrap();
        let model = split_at(0.4);
        assert_eq!(norm_report(&model, &plain).unwrap(), norm_report(&model, &scaled).unwrap());
    }
}
