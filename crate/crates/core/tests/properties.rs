use ndarray::Array2;
use proptest::prelude::*;
use windstack::cluster::{self, ClusterKind, FitSettings};
use windstack::ensemble::{adaboost_fit_traced, AdaBoostConfig, WeakLearnerSpec};
use windstack::ingest::{kfold_indices, split_indices, SplitMode, StandardizationParams};
use windstack::tree::{rf_fit, ForestParams, RepTreeParams, TrainingSet};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-50.0f64..50.0, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn xy(max_rows: usize) -> impl Strategy<Value = (Array2<f64>, Vec<f64>)> {
    (12..max_rows, 1usize..4).prop_flat_map(|(n, d)| {
        (matrix(n, d), prop::collection::vec(-10.0f64..10.0, n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn split_is_a_partition(n in 10usize..500, frac in 0.05f64..0.95, shuffled: bool, seed: u64) {
        let mode = if shuffled { SplitMode::Shuffled } else { SplitMode::Chronological };
        let (train, test) = split_indices(n, frac, mode, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn folds_partition_and_repeat(n in 10usize..400, k in 2usize..10, seed: u64) {
        let a = kfold_indices(n, k, seed).unwrap();
        prop_assert_eq!(&a, &kfold_indices(n, k, seed).unwrap());
        let mut all: Vec<usize> = a.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn standardization_round_trips(x in (3usize..40, 1usize..6).prop_flat_map(|(n, d)| matrix(n, d))) {
        let p = StandardizationParams::fit(x.view()).unwrap();
        let back = p.inverse_transform(p.transform(x.view()).unwrap().view()).unwrap();
        for (a, b) in x.iter().zip(back.iter()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn assignment_is_nearest_center((x, _) in xy(60), k in 1usize..5, seed: u64) {
        for kind in [ClusterKind::KMeans, ClusterKind::FarthestFirst, ClusterKind::Canopy] {
            let Ok(fit) = cluster::fit(kind, x.view(), k, seed, &FitSettings::default()) else { continue };
            let m = fit.model;
            for r in x.rows() {
                let row = r.to_vec();
                let d: Vec<f64> = m.centers.rows().into_iter()
                    .map(|c| c.iter().zip(&row).map(|(a, b)| (a - b).powi(2)).sum())
                    .collect();
                let best = d.iter().cloned().fold(f64::INFINITY, f64::min);
                let got = m.assign(&row).unwrap();
                prop_assert_eq!(d[got], best);
                prop_assert_eq!(got, d.iter().position(|&v| v == best).unwrap());
            }
        }
    }

    #[test]
    fn forest_ignores_tree_order((x, y) in xy(80), seed: u64) {
        let mut forest = rf_fit(x.view(), &y, &ForestParams { n_trees: 5, ..Default::default() }, seed).unwrap();
        let before = forest.predict_all(x.view());
        forest.trees.reverse();
        forest.trees.rotate_left(2);
        for (a, b) in before.iter().zip(forest.predict_all(x.view())) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn boosting_keeps_distributions((x, y) in xy(80), seed: u64, rounds in 1usize..8) {
        let cfg = AdaBoostConfig {
            n_iter: rounds,
            weak: WeakLearnerSpec::Tree(RepTreeParams { max_depth: 3, prune: false, ..Default::default() }),
            ..AdaBoostConfig::adadt()
        };
        let data = TrainingSet::new(x.view(), &y).unwrap();
        let (model, trace) = adaboost_fit_traced(&data, &cfg, seed).unwrap();
        prop_assert!(model.weights.iter().all(|&w| w >= 0.0));
        prop_assert!((model.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        for (&s, &m) in trace.weight_sums.iter().zip(&trace.weight_mins) {
            prop_assert!((s - 1.0).abs() <= 1e-9);
            prop_assert!(m >= 0.0);
        }
    }
}
