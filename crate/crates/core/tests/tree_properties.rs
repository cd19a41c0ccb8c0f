mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{node_stats, random_dataset, strip_weighted_counts};
use svytree::data::ObservedDataset;
use svytree::tree::{
    fit_tree, parse_tree, predict, serialize_tree, FitConfig, GammaScale, RateParams, SparseLeaf,
    SplitKind, TreeNode,
};

fn hajek_config() -> FitConfig {
    FitConfig {
        sparse_leaf_value: SparseLeaf::Hajek,
        ..FitConfig::default()
    }
}

#[test]
fn step_function_splits_at_the_step() {
    let n = 200;
    let x1: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let x2: Vec<f64> = (0..n).map(|i| ((i * 37) % n) as f64 / n as f64).collect();
    let y: Vec<f64> = x1.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
    let data = ObservedDataset::unweighted(y.clone(), vec![x1.clone(), x2]).unwrap();
    let model = fit_tree(&data, &hajek_config()).unwrap();
    match &model.root {
        TreeNode::Internal {
            variable,
            cutpoint,
            split_kind,
            ..
        } => {
            assert_eq!(*variable, 0);
            assert_eq!(*split_kind, SplitKind::Mse);
            assert!(x1[99] < *cutpoint && *cutpoint < x1[100]);
        }
        TreeNode::Leaf(_) => panic!("expected a split"),
    }
    for (i, &yi) in y.iter().enumerate() {
        assert_eq!(model.predict(&data.row(i)).unwrap(), yi);
    }
    assert_eq!(predict(&model, &[0.1, 0.5]).unwrap(), 0.0);
    assert_eq!(predict(&model, &[0.9, 0.5]).unwrap(), 1.0);
}

#[test]
fn constant_response_splits_by_medians() {
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| rng.random()).collect()).collect();
    let data = ObservedDataset::unweighted(vec![7.5; n], x).unwrap();
    let model = fit_tree(&data, &FitConfig::default()).unwrap();
    assert!(model.gamma >= 7.5);
    let stats = node_stats(&model, &data);
    assert!(stats.len() > 1);
    for s in &stats {
        match s.kind {
            Some(kind) => assert_eq!(kind, SplitKind::MedianFallback),
            None => assert!(s.rows <= 2 * model.k),
        }
    }
    for leaf in model.leaves() {
        if leaf.dense {
            assert_eq!(leaf.estimate, 7.5);
        }
    }
}

#[test]
fn small_sample_is_a_single_leaf() {
    let data = random_dataset(1, 5, 2);
    let model = fit_tree(&data, &hajek_config()).unwrap();
    assert_eq!(model.n_leaves(), 1);
    let only = model.leaves()[0].estimate;
    assert_eq!(model.predict(&[0.3, 0.3]).unwrap(), only);
    assert_eq!(model.predict(&[-1e9, 1e9]).unwrap(), only);
}

#[test]
fn split_validity_and_leaf_bound() {
    for seed in 0..20 {
        let n = 300 + 97 * seed as usize;
        let data = random_dataset(seed, n, 3);
        let model = fit_tree(&data, &FitConfig::default()).unwrap();
        let k = model.k;
        for s in node_stats(&model, &data) {
            if s.kind.is_some() {
                assert!(s.left_rows >= k && s.right_rows >= k, "seed {seed}");
            } else {
                assert!(s.rows <= 2 * k || s.exhausted, "seed {seed}");
            }
        }
        assert!(model.n_leaves() <= n / k, "seed {seed}: {} leaves", model.n_leaves());
    }
}

#[test]
fn accepted_mse_splits_clear_the_threshold() {
    for p in [0.0, 1.0, 5.0, 20.0] {
        let cfg = FitConfig {
            p_threshold: p,
            ..FitConfig::default()
        };
        for seed in 0..10 {
            let data = random_dataset(100 + seed, 1500, 3);
            let model = fit_tree(&data, &cfg).unwrap();
            for s in node_stats(&model, &data) {
                if s.kind == Some(SplitKind::Mse) {
                    let delta = s.sse - s.child_sse;
                    assert!(delta >= -1e-9 * s.sse.max(1.0));
                    assert!(delta >= p / 100.0 * s.sse - 1e-9 * s.sse.max(1.0));
                }
            }
        }
    }
}

#[test]
fn equal_weights_match_unit_weights() {
    for seed in 0..10 {
        let data = random_dataset(200 + seed, 500, 3);
        let unit = data.with_unit_weights();
        let mut constant = unit.clone();
        constant.weight = vec![3.7; unit.n()];
        let a = serialize_tree(&fit_tree(&unit, &FitConfig::default()).unwrap());
        let b = serialize_tree(&fit_tree(&constant, &FitConfig::default()).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn weight_scale_keeps_structure() {
    let data = random_dataset(5, 800, 3);
    let base = fit_tree(&data, &FitConfig::default()).unwrap();
    for c in [0.1, 7.3, 1000.0] {
        let mut scaled = data.clone();
        scaled.weight = data.weight.iter().map(|w| w * c).collect();
        let other = fit_tree(&scaled, &FitConfig::default()).unwrap();
        assert_eq!(
            strip_weighted_counts(&serialize_tree(&base.map_leaves(|_, l| svytree::tree::Leaf {
                estimate: 0.0,
                ..l.clone()
            }))),
            strip_weighted_counts(&serialize_tree(&other.map_leaves(|_, l| svytree::tree::Leaf {
                estimate: 0.0,
                ..l.clone()
            })))
        );
        for (a, b) in base.leaves().iter().zip(other.leaves()) {
            assert!((a.estimate - b.estimate).abs() <= 1e-9);
        }
    }
}

#[test]
fn fitting_is_deterministic() {
    let data = random_dataset(9, 1200, 3);
    let a = serialize_tree(&fit_tree(&data, &FitConfig::default()).unwrap());
    let b = serialize_tree(&fit_tree(&data, &FitConfig::default()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn every_query_reaches_one_leaf() {
    let data = random_dataset(11, 2000, 3);
    let model = fit_tree(&data, &hajek_config()).unwrap();
    let boxes = model.leaf_boxes();
    let estimates: Vec<f64> = model.leaves().iter().map(|l| l.estimate).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..1.5)).collect();
        let hits: Vec<usize> = (0..boxes.len()).filter(|&b| boxes[b].contains(&x)).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(model.leaf_index(&x).unwrap(), hits[0]);
        assert_eq!(model.predict(&x).unwrap(), estimates[hits[0]]);
    }
    assert!(model.predict(&[f64::NAN, 0.0, 0.0]).is_err());
    assert!(model.predict(&[0.0, 0.0]).is_err());
}

#[test]
fn cutpoint_ties_go_left() {
    let data = random_dataset(13, 600, 2);
    let model = fit_tree(&data, &FitConfig::default()).unwrap();
    if let TreeNode::Internal {
        variable,
        cutpoint,
        left,
        ..
    } = &model.root
    {
        let mut x = vec![0.5; 2];
        x[*variable] = *cutpoint;
        let on_cut = model.leaf_index(&x).unwrap();
        let left_leaves = {
            let sub = svytree::tree::TreeModel {
                root: (**left).clone(),
                ..model.clone()
            };
            sub.n_leaves()
        };
        assert!(on_cut < left_leaves);
    } else {
        panic!("expected a split");
    }
}

#[test]
fn trimming_bounds_dense_leaf_estimates() {
    let data = random_dataset(17, 900, 2);
    let untrimmed = FitConfig {
        rates: RateParams {
            gamma_scale: GammaScale::Value(f64::INFINITY),
            ..RateParams::default()
        },
        ..hajek_config()
    };
    let model = fit_tree(&data, &untrimmed).unwrap();
    assert_eq!(model.gamma, f64::INFINITY);
    let tight = FitConfig {
        rates: RateParams {
            gamma_scale: GammaScale::Value(0.1),
            ..RateParams::default()
        },
        ..hajek_config()
    };
    let model = fit_tree(&data, &tight).unwrap();
    for leaf in model.leaves() {
        if leaf.dense {
            assert!(leaf.estimate.abs() <= model.gamma + 1e-12);
        }
    }
}

#[test]
fn round_trip_and_corruption() {
    let data = random_dataset(21, 700, 3);
    let model = fit_tree(&data, &FitConfig::default()).unwrap();
    let text = serialize_tree(&model);
    let back = parse_tree(&text).unwrap();
    assert_eq!(back, model);
    assert_eq!(serialize_tree(&back), text);

    let truncated = &text[..text.len() / 2];
    assert!(matches!(parse_tree(truncated), Err(svytree::Error::Parse { .. })));
    let wrong = text.replacen("\"format_version\": 1", "\"format_version\": 9", 1);
    assert!(matches!(parse_tree(&wrong), Err(svytree::Error::Version { found: 9, .. })));
    let bad_var = text.replacen("\"variable\": ", "\"variable\": 4", 1);
    assert!(parse_tree(&bad_var).is_err());
}
