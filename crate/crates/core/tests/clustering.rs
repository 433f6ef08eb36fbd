use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use windstack::cluster::*;
use windstack::ingest::{engineer_features, StandardizationParams};
use windstack::seed;
use windstack::synth::{generate_labeled, SynthConfig};

fn blobs(n: usize, d: usize, centers: usize, seed: u64) -> Array2<f64> {
    let mut rng = seed::rng(seed);
    let c: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..d).map(|_| rng.random_range(-6.0..6.0)).collect())
        .collect();
    Array2::from_shape_fn((n, d), |(i, j)| c[i % centers][j] + rng.sample::<f64, _>(StandardNormal))
}

fn dist(a: ArrayView2<'_, f64>, i: usize, b: ArrayView2<'_, f64>, j: usize) -> f64 {
    a.row(i).iter().zip(b.row(j)).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

fn standardized_regimes(n: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let synth = generate_labeled(&SynthConfig::separated_regimes(n, separation, seed)).unwrap();
    let ds = engineer_features(&synth.records).unwrap();
    let p = StandardizationParams::fit(ds.features.view()).unwrap();
    (p.transform(ds.features.view()).unwrap(), synth.regimes)
}

#[test]
fn kmeans_objective_never_increases() {
    for s in 0..100u64 {
        let mut rng = seed::rng(s);
        let n = rng.random_range(40..200);
        let d = rng.random_range(1..5);
        let k = rng.random_range(2..7);
        let x = blobs(n, d, rng.random_range(1..6), s);
        let params = KMeansParams { n_restarts: 1, ..Default::default() };
        let fit = kmeans_fit(x.view(), k, s, &params).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "instance {s}: {} -> {}", w[0], w[1]);
        }
        // final labels are nearest-center assignments
        for (i, &l) in fit.labels.iter().enumerate() {
            let best = (0..k)
                .map(|c| dist(x.view(), i, fit.model.centers.view(), c))
                .fold(f64::INFINITY, f64::min);
            assert!((dist(x.view(), i, fit.model.centers.view(), l) - best).abs() < 1e-9);
        }
    }
}

#[test]
fn farthest_first_steps_match_exhaustive_search() {
    for s in 0..25u64 {
        let mut rng = seed::rng(1000 + s);
        let n = rng.random_range(20..=200);
        let k = rng.random_range(1..=10);
        let x = blobs(n, 3, 4, s);
        let first = rng.random_range(0..n);
        let fit = ff_fit_from(x.view(), k, first, FfCriterion::MinDistance).unwrap();
        // replay: each chosen center must be the unchosen row farthest from
        // the centers chosen before it (lowest index on ties)
        let mut chosen: Vec<usize> = vec![first];
        for step in 1..k {
            let mut best = None;
            let mut best_d = -1.0;
            for i in 0..n {
                if chosen.contains(&i) {
                    continue;
                }
                let d = chosen.iter().map(|&c| dist(x.view(), i, x.view(), c)).fold(f64::INFINITY, f64::min);
                if d > best_d {
                    best_d = d;
                    best = Some(i);
                }
            }
            let i = best.unwrap();
            assert_eq!(fit.model.centers.row(step), x.row(i), "instance {s}, step {step}");
            chosen.push(i);
        }
    }
}

#[test]
fn farthest_first_is_within_twice_the_optimal_radius() {
    for s in 0..10u64 {
        let x = blobs(12, 2, 3, 50 + s);
        let k = 3;
        let radius = |centers: &[usize]| {
            (0..12)
                .map(|i| centers.iter().map(|&c| dist(x.view(), i, x.view(), c)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        let mut opt = f64::INFINITY;
        for a in 0..12 {
            for b in a + 1..12 {
                for c in b + 1..12 {
                    opt = opt.min(radius(&[a, b, c]));
                }
            }
        }
        let fit = ff_fit(x.view(), k, s).unwrap();
        let got = *fit.objective_trace.last().unwrap();
        assert!(got <= 2.0 * opt + 1e-12, "{got} vs optimal {opt}");
    }
}

#[test]
fn em_log_likelihood_is_monotone() {
    for s in 0..20u64 {
        let x = blobs(150, 2, 3, 300 + s);
        let fit = em_fit(x.view(), 3, s, &EmParams::default()).unwrap();
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "seed {s}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn xmeans_recovers_three_regimes() {
    let hits = (0..5u64)
        .filter(|&s| {
            let (x, _) = standardized_regimes(3000, 5.0, s);
            xmeans(x.view(), 2, 10, s).unwrap().best_k == 3
        })
        .count();
    assert!(hits >= 4, "{hits}/5");
}

#[test]
fn kmeans_recovers_regime_labels() {
    let (x, truth) = standardized_regimes(3000, 3.0, 8);
    let fit = kmeans_fit(x.view(), 3, 8, &KMeansParams::default()).unwrap();
    assert!(purity(&fit.labels, &truth, 3) >= 0.9);
}

#[test]
fn elbow_curve_is_non_increasing() {
    let x = blobs(300, 2, 4, 7);
    let curve = elbow_curve(x.view(), 2..=10, 3, 2).unwrap();
    assert_eq!(curve.entries.first().unwrap().0, 2);
    assert_eq!(curve.entries.len(), 9);
    for w in curve.entries.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-9);
    }
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("k,sse"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn every_kind_round_trips_through_json() {
    let x = blobs(120, 3, 3, 2);
    for kind in ClusterKind::ALL {
        let fit = fit(kind, x.view(), 3, 4, &FitSettings::default()).unwrap();
        let back = ClusterModel::from_json(&fit.model.to_json()).unwrap();
        assert_eq!(back, fit.model);
        assert_eq!(back.assign_all(x.view()).unwrap(), fit.model.assign_all(x.view()).unwrap());
    }
}
