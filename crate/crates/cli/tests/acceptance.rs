//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Exits non-zero on a failed criterion only when
//! `WINDSTACK_ACCEPTANCE_STRICT=1` is set. Criteria 4-6 fit the full model
//! zoo on five seeds and take several minutes on one core; set
//! `WINDSTACK_ACCEPTANCE_QUICK=1` to skip them.

use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use windstack::baseline::{loss_and_gradient, ols_fit, MlpWeights};
use windstack::cluster::{
    em_fit, empirical_k, ff_fit_from, kmeans_fit, xmeans, EmParams, FfCriterion, KMeansParams,
};
use windstack::ensemble::ridge_fit;
use windstack::ingest::{engineer_features, Dataset, StandardizationParams};
use windstack::seed;
use windstack::stats::{chi_square_sf, friedman, nmae, nrmse, studentized_range_quantile, tukey};
use windstack::synth::{generate, generate_labeled, SynthConfig};
use windstack_cli::commands::{cmd_compare, cmd_synth};
use windstack_cli::config::{CompareSection, RunConfig, SynthSection};
use windstack_cli::pipeline::ModelSpec;
use windstack_cli::study::{median, run_cell, Study};

fn standard_normal(rng: &mut seed::Rng) -> f64 {
    rng.sample(StandardNormal)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn criterion_1() -> Outcome {
    let k = empirical_k(52560);
    outcome(k.rounded == 16, format!("empirical k(52560) = {:.4} -> {}", k.raw, k.rounded))
}

fn criterion_2() -> Outcome {
    let mut rng = seed::rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..100.0)).collect();
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..120.0)).collect();
        let mut abs = 0.0;
        let mut sq = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            let e = pred[i] - obs[i];
            abs += e.abs();
            sq += e * e;
            total += obs[i];
        }
        let mean = total / n as f64;
        let want_mae = abs / n as f64 / mean;
        let want_rmse = (sq / n as f64).sqrt() / mean;
        worst = worst
            .max(rel(nmae(&pred, &obs).unwrap(), want_mae))
            .max(rel(nrmse(&pred, &obs).unwrap(), want_rmse));
    }
    let hand_a = nmae(&[2.0, 4.0], &[1.0, 3.0]).unwrap();
    let hand_r = nrmse(&[2.0, 4.0], &[1.0, 3.0]).unwrap();
    outcome(
        worst <= 1e-12 && hand_a == 0.5 && hand_r == 0.5,
        format!("max relative deviation {worst:.2e}; hand case nmae {hand_a}, nrmse {hand_r}"),
    )
}

fn blobs(n: usize, d: usize, centers: usize, s: u64) -> Array2<f64> {
    let mut rng = seed::rng(s);
    let c: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..d).map(|_| rng.random_range(-6.0..6.0)).collect())
        .collect();
    Array2::from_shape_fn((n, d), |(i, j)| c[i % centers][j] + standard_normal(&mut rng))
}

fn dist(x: &Array2<f64>, i: usize, j: usize) -> f64 {
    x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn criterion_3() -> Outcome {
    // (a) Lloyd objective
    let mut a = true;
    for s in 0..100u64 {
        let mut rng = seed::rng(s);
        let x = blobs(rng.random_range(40..200), rng.random_range(1..5), rng.random_range(1..6), s);
        let k = rng.random_range(2..7);
        let fit = kmeans_fit(x.view(), k, s, &KMeansParams { n_restarts: 1, ..Default::default() }).unwrap();
        a &= fit.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
    }
    // (b) farthest-first replay against exhaustive search
    let mut b = true;
    for s in 0..25u64 {
        let mut rng = seed::rng(1000 + s);
        let n = rng.random_range(20..=200);
        let k = rng.random_range(1..=10);
        let x = blobs(n, 3, 4, s);
        let first = rng.random_range(0..n);
        let fit = ff_fit_from(x.view(), k, first, FfCriterion::MinDistance).unwrap();
        let mut chosen = vec![first];
        for step in 1..k {
            let (mut best, mut best_d) = (0, -1.0);
            for i in (0..n).filter(|i| !chosen.contains(i)) {
                let d = chosen.iter().map(|&c| dist(&x, i, c)).fold(f64::INFINITY, f64::min);
                if d > best_d {
                    best = i;
                    best_d = d;
                }
            }
            b &= fit.model.centers.row(step) == x.row(best);
            chosen.push(best);
        }
    }
    // (c) X-means on separated regimes
    let hits = (0..5u64)
        .filter(|&s| {
            let synth = generate_labeled(&SynthConfig::separated_regimes(3000, 5.0, s)).unwrap();
            let ds = engineer_features(&synth.records).unwrap();
            let p = StandardizationParams::fit(ds.features.view()).unwrap();
            let x = p.transform(ds.features.view()).unwrap();
            xmeans(x.view(), 2, 10, s).unwrap().best_k == 3
        })
        .count();
    // (d) EM log-likelihood
    let mut d = true;
    for s in 0..20u64 {
        let x = blobs(150, 2, 3, 300 + s);
        let fit = em_fit(x.view(), 3, s, &EmParams::default()).unwrap();
        d &= fit.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    }
    outcome(
        a && b && hits >= 4 && d,
        format!("(a) kmeans monotone {a}; (b) ff replay {b}; (c) x-means k=3 on {hits}/5 seeds; (d) em monotone {d}"),
    )
}

const MODELS: [&str; 8] = [
    "adarf",
    "layered:kmeans",
    "layered:em",
    "layered:ff",
    "layered:canopy",
    "stacking",
    "adadt",
    "lr",
];

/// Test NMAE per seed, one row per entry of `MODELS`.
fn regime_runs() -> Vec<Vec<f64>> {
    let models: Vec<(String, ModelSpec)> =
        MODELS.iter().map(|m| (m.to_string(), m.parse().unwrap())).collect();
    let settings = windstack_cli::config::ModelSettings { k: Some(3), ..Default::default() };
    let mut table = vec![Vec::new(); MODELS.len()];
    for s in 1..=5u64 {
        let t = Instant::now();
        let mut cfg = SynthConfig::three_regime(10_000, s);
        cfg.noise_frac = 0.05;
        let ds: Dataset = engineer_features(&generate(&cfg).unwrap()).unwrap();
        let reports = run_cell(&ds, &models, &settings, s).unwrap();
        let row: Vec<String> = reports.iter().map(|r| format!("{:.4}", r.nmae)).collect();
        println!("  seed {s} nmae [{}] ({:.0?})", row.join(", "), t.elapsed());
        for (m, r) in reports.iter().enumerate() {
            table[m].push(r.nmae);
        }
    }
    table
}

fn criterion_4(runs: &[Vec<f64>]) -> Outcome {
    let reduction = |m: usize| {
        let per_seed: Vec<f64> = runs[0].iter().zip(&runs[m]).map(|(g, l)| (g - l) / g).collect();
        100.0 * median(&per_seed)
    };
    let red: Vec<f64> = (1..=4).map(reduction).collect();
    let ff = red[2];
    let others = [red[0], red[1], red[3]];
    let pass = red.iter().all(|&r| r >= 5.0) && others.iter().all(|&r| ff >= r);
    outcome(
        pass,
        format!(
            "median NMAE reduction vs AdaRF: kmeans {:.1}%, em {:.1}%, ff {:.1}%, canopy {:.1}%",
            red[0], red[1], red[2], red[3]
        ),
    )
}

fn criterion_5(runs: &[Vec<f64>]) -> Outcome {
    let best = (1..=4).map(|m| median(&runs[m])).fold(f64::INFINITY, f64::min);
    let stacked = median(&runs[5]);
    outcome(
        stacked <= best * 1.01,
        format!("stacked median NMAE {stacked:.4}, best layered {best:.4}"),
    )
}

fn criterion_6(runs: &[Vec<f64>]) -> Outcome {
    let (rf, dt, lr) = (median(&runs[0]), median(&runs[6]), median(&runs[7]));
    let gain = 100.0 * (lr - rf) / lr;
    outcome(
        rf < dt && dt < lr && gain >= 20.0,
        format!("median NMAE AdaRF {rf:.4}, AdaDT {dt:.4}, LR {lr:.4}; AdaRF vs LR {gain:.1}%"),
    )
}

fn criterion_7() -> Outcome {
    let m = ndarray::array![[0.1, 0.2, 0.3], [1.0, 2.0, 3.0]];
    let f = friedman(m.view()).unwrap();
    let chi = chi_square_sf(4.0, 2.0);
    let q = studentized_range_quantile(0.95, 3, 10.0).unwrap();
    let g = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
    let t = tukey(&g, 0.05).unwrap();
    let centered = t.pairs.iter().all(|p| p.mean_diff == 0.0 && p.lower == -p.upper);
    let pass = (f.statistic - 4.0).abs() <= 1e-6
        && f.df == 2
        && (f.p_value - 0.1353).abs() <= 1e-4
        && (chi - (-2.0f64).exp()).abs() <= 1e-9
        && (q - 3.877).abs() <= 5e-3
        && centered;
    outcome(
        pass,
        format!(
            "friedman {:.6} (df {}, p {:.4}); chi2 sf {chi:.12}; q(0.95,3,10) {q:.4}; tukey centered {centered}",
            f.statistic, f.df, f.p_value
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = seed::rng(8);
    let mut grad: f64 = 0.0;
    for _ in 0..5 {
        let w = MlpWeights::init(6, 16, &mut rng);
        let x = Array2::from_shape_fn((5, 6), |_| standard_normal(&mut rng));
        let y: Vec<f64> = (0..5).map(|_| standard_normal(&mut rng)).collect();
        let g = loss_and_gradient(&w, x.view(), &y).1.to_flat();
        let flat = w.to_flat();
        for i in 0..flat.len() {
            let mut p = flat.clone();
            let eps = 1e-6;
            p[i] += eps;
            let up = loss_and_gradient(&MlpWeights::from_flat(6, 16, &p), x.view(), &y).0;
            p[i] -= 2.0 * eps;
            let down = loss_and_gradient(&MlpWeights::from_flat(6, 16, &p), x.view(), &y).0;
            let fd = (up - down) / (2.0 * eps);
            grad = grad.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8));
        }
    }
    let mut ridge: f64 = 0.0;
    for _ in 0..10 {
        let z = Array2::from_shape_fn((60, 4), |_| standard_normal(&mut rng));
        let y: Vec<f64> = (0..60).map(|_| 2.0 + 3.0 * standard_normal(&mut rng)).collect();
        let r = ridge_fit(z.view(), &y, 0.0).unwrap();
        let o = ols_fit(z.view(), &y).unwrap();
        for (a, b) in r.weights.iter().zip(&o.coefficients) {
            ridge = ridge.max(rel(*a, *b));
        }
        ridge = ridge.max(rel(r.intercept, o.intercept));
    }
    let x = Array2::from_shape_fn((200, 6), |(_, j)| 10f64.powi(j as i32 - 2) * (1.0 + standard_normal(&mut rng)));
    let p = StandardizationParams::fit(x.view()).unwrap();
    let back = p.inverse_transform(p.transform(x.view()).unwrap().view()).unwrap();
    let round = x.iter().zip(back.iter()).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    outcome(
        grad <= 1e-5 && ridge <= 1e-6 && round <= 1e-9,
        format!("gradient {grad:.2e}; ridge vs ols {ridge:.2e}; standardization {round:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("synth.csv");
    let mut cfg = RunConfig {
        seed: 9,
        synth: SynthSection { n_records: 4000, ..Default::default() },
        compare: CompareSection { study: Study::Clusterings, seeds: vec![1, 2], ..Default::default() },
        ..Default::default()
    };
    cfg.model.k = Some(3);
    cfg.model.adarf.n_iter = 3;
    cmd_synth(&cfg, &data).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let r = cmd_compare(&cfg, &data).unwrap();
            (r.to_json(), r.to_csv())
        })
    };
    let one = run(1);
    let again = run(1);
    let three = run(3);
    outcome(
        one == again && one == three,
        format!("clusterings study, {} report bytes, 1 vs 1 vs 3 threads", one.0.len()),
    )
}

fn main() {
    let strict = std::env::var("WINDSTACK_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let quick = std::env::var("WINDSTACK_ACCEPTANCE_QUICK").is_ok_and(|v| v == "1");
    let mut failed = 0;
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    if quick {
        println!("criteria 4-6: skipped (quick mode)");
    } else {
        let runs = regime_runs();
        report(4, criterion_4(&runs));
        report(5, criterion_5(&runs));
        report(6, criterion_6(&runs));
    }
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    println!("{failed} criteria failed");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
