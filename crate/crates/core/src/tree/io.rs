//! JSON tree files.
//!
//! Floats are written with shortest round-trip precision; infinite values
//! (trimming disabled) are written as the string `"inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

use super::rates::{GammaForm, GammaScale, RateParams};
use super::{FitConfig, Leaf, SparseLeaf, SplitKind, TreeModel, TreeNode};

pub const FORMAT_VERSION: u32 = 1;

mod maybe_inf {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScaleRepr {
    Value(#[serde(with = "maybe_inf")] f64),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRepr {
    alpha: f64,
    epsilon: f64,
    gamma_form: GammaForm,
    /// `"auto"`, `"inf"` or a number.
    gamma_scale: serde_json::Value,
    p_threshold: f64,
    use_weighted_median: bool,
    sparse_leaf_value: SparseRepr,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum SparseRepr {
    Zero,
    Hajek,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum SplitKindRepr {
    Mse,
    MedianFallback,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum NodeRepr {
    Internal {
        variable: usize,
        cutpoint: f64,
        split_kind: SplitKindRepr,
        left: Box<NodeRepr>,
        right: Box<NodeRepr>,
    },
    Leaf {
        estimate: f64,
        sample_count: usize,
        weighted_count: f64,
        dense: bool,
        exhausted: bool,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    format_version: u64,
    config: ConfigRepr,
    n: usize,
    d: usize,
    variable_names: Vec<String>,
    k: usize,
    #[serde(with = "maybe_inf")]
    gamma: f64,
    root: NodeRepr,
}

/// Reads only the version; the rest of the document is checked for syntax.
#[derive(Deserialize)]
struct VersionProbe {
    format_version: Option<u64>,
}

fn to_repr(node: &TreeNode) -> NodeRepr {
    match node {
        TreeNode::Leaf(l) => NodeRepr::Leaf {
            estimate: l.estimate,
            sample_count: l.sample_count,
            weighted_count: l.weighted_count,
            dense: l.dense,
            exhausted: l.exhausted,
        },
        TreeNode::Internal {
            variable,
            cutpoint,
            split_kind,
            left,
            right,
        } => NodeRepr::Internal {
            variable: *variable,
            cutpoint: *cutpoint,
            split_kind: match split_kind {
                SplitKind::Mse => SplitKindRepr::Mse,
                SplitKind::MedianFallback => SplitKindRepr::MedianFallback,
            },
            left: Box::new(to_repr(left)),
            right: Box::new(to_repr(right)),
        },
    }
}

fn from_repr(node: NodeRepr, d: usize) -> Result<TreeNode> {
    Ok(match node {
        NodeRepr::Leaf {
            estimate,
            sample_count,
            weighted_count,
            dense,
            exhausted,
        } => TreeNode::Leaf(Leaf {
            estimate,
            sample_count,
            weighted_count,
            dense,
            exhausted,
        }),
        NodeRepr::Internal {
            variable,
            cutpoint,
            split_kind,
            left,
            right,
        } => {
            if variable >= d {
                return Err(Error::Invalid(format!(
                    "split variable {variable} outside 0..{d}"
                )));
            }
            if !cutpoint.is_finite() {
                return Err(Error::Invalid("non-finite cutpoint".into()));
            }
            TreeNode::Internal {
                variable,
                cutpoint,
                split_kind: match split_kind {
                    SplitKindRepr::Mse => SplitKind::Mse,
                    SplitKindRepr::MedianFallback => SplitKind::MedianFallback,
                },
                left: Box::new(from_repr(*left, d)?),
                right: Box::new(from_repr(*right, d)?),
            }
        }
    })
}

fn scale_to_json(scale: GammaScale) -> serde_json::Value {
    match scale {
        GammaScale::Auto => serde_json::Value::String("auto".into()),
        GammaScale::Value(v) => serde_json::to_value(ScaleRepr::Value(v)).expect("scale"),
    }
}

fn scale_from_json(v: &serde_json::Value) -> Result<GammaScale> {
    match v {
        serde_json::Value::String(s) if s == "auto" => Ok(GammaScale::Auto),
        serde_json::Value::String(s) if s == "inf" => Ok(GammaScale::Value(f64::INFINITY)),
        serde_json::Value::Number(n) => n
            .as_f64()
            .map(GammaScale::Value)
            .ok_or_else(|| Error::Invalid("gamma_scale out of range".into())),
        other => Err(Error::Invalid(format!("invalid gamma_scale {other}"))),
    }
}

/// Serializes `model` as a pretty-printed JSON document ending in a newline.
pub fn serialize_tree(model: &TreeModel) -> String {
    let cfg = &model.config;
    let file = TreeFile {
        format_version: FORMAT_VERSION as u64,
        config: ConfigRepr {
            alpha: cfg.rates.alpha,
            epsilon: cfg.rates.epsilon,
            gamma_form: cfg.rates.gamma_form,
            gamma_scale: scale_to_json(cfg.rates.gamma_scale),
            p_threshold: cfg.p_threshold,
            use_weighted_median: cfg.use_weighted_median,
            sparse_leaf_value: match cfg.sparse_leaf_value {
                SparseLeaf::Zero => SparseRepr::Zero,
                SparseLeaf::Hajek => SparseRepr::Hajek,
            },
        },
        n: model.n,
        d: model.d,
        variable_names: model.variable_names.clone(),
        k: model.k,
        gamma: model.gamma,
        root: to_repr(&model.root),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("tree serializes");
    out.push('\n');
    out
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn from_str_unbounded<'a, T: Deserialize<'a>>(text: &'a str) -> std::result::Result<T, serde_json::Error> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}

/// Parses a tree file produced by [`serialize_tree`].
pub fn parse_tree(text: &str) -> Result<TreeModel> {
    let probe: VersionProbe = from_str_unbounded(text).map_err(parse_error)?;
    match probe.format_version {
        None => return Err(Error::Invalid("missing format_version".into())),
        Some(v) if v != FORMAT_VERSION as u64 => {
            return Err(Error::Version {
                expected: FORMAT_VERSION,
                found: v,
            })
        }
        Some(_) => {}
    }
    let file: TreeFile = from_str_unbounded(text).map_err(parse_error)?;
    if file.d == 0 {
        return Err(Error::Invalid("tree has zero predictors".into()));
    }
    if file.variable_names.len() != file.d {
        return Err(Error::Invalid(format!(
            "{} variable names for d = {}",
            file.variable_names.len(),
            file.d
        )));
    }
    let config = FitConfig {
        rates: RateParams {
            alpha: file.config.alpha,
            epsilon: file.config.epsilon,
            gamma_form: file.config.gamma_form,
            gamma_scale: scale_from_json(&file.config.gamma_scale)?,
        },
        p_threshold: file.config.p_threshold,
        use_weighted_median: file.config.use_weighted_median,
        sparse_leaf_value: match file.config.sparse_leaf_value {
            SparseRepr::Zero => SparseLeaf::Zero,
            SparseRepr::Hajek => SparseLeaf::Hajek,
        },
    };
    config.validate()?;
    Ok(TreeModel {
        root: from_repr(file.root, file.d)?,
        d: file.d,
        n: file.n,
        config,
        k: file.k,
        gamma: file.gamma,
        variable_names: file.variable_names,
    })
}
