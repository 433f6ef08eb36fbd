use std::path::Path;

use serde::{Deserialize, Serialize};
use windstack::cluster::{elbow_curve, empirical_k, xmeans, EmpiricalK};
use windstack::document::TrainedModel;
use windstack::ingest::{kfold_indices, write_csv, StandardizationParams};
use windstack::seed::{self, Role};
use windstack::stats::{metric_report, MetricReport};
use windstack::synth::generate;

use crate::config::{file_sha256, RunConfig};
use crate::error::{CliError, CliResult};
use crate::pipeline::{evaluate, load_dataset, prepare, Fitter, ModelSpec};
use crate::study::{partitions, run_study, ComparisonReport, Provenance};

/// Writes synthetic records in the ingest CSV schema.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> CliResult<usize> {
    let synth = cfg.synth.build(cfg.seed);
    let records = generate(&synth)?;
    let file = std::fs::File::create(out)?;
    write_csv(&records, std::io::BufWriter::new(file))?;
    Ok(records.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChooseKReport {
    pub n: usize,
    pub empirical: EmpiricalK,
    /// `(k, SSE)` pairs.
    pub elbow: Vec<(usize, f64)>,
    pub elbow_knee: Option<usize>,
    pub xmeans_best_k: usize,
    pub xmeans_bic: Vec<(usize, f64)>,
    /// The X-means choice; the other two are context.
    pub recommended_k: usize,
    pub config_hash: String,
    pub seed: u64,
}

pub fn cmd_choose_k(cfg: &RunConfig, data: &Path, elbow_csv: Option<&Path>) -> CliResult<ChooseKReport> {
    let c = &cfg.choose_k;
    c.validate()?;
    let (ds, _) = load_dataset(data)?;
    let params = StandardizationParams::fit(ds.features.view())?;
    let x = params.transform(ds.features.view())?;
    let n = x.nrows();
    let elbow_max = c.elbow_max.min(n);
    let elbow = elbow_curve(x.view(), c.elbow_min..=elbow_max, seed::derive(cfg.seed, Role::Cluster, 0), c.restarts)?;
    if let Some(path) = elbow_csv {
        elbow.write_csv(std::fs::File::create(path)?)?;
    }
    let xm = xmeans(x.view(), c.k_min, c.k_max.min(n), seed::derive(cfg.seed, Role::Cluster, 1))?;
    Ok(ChooseKReport {
        n,
        empirical: empirical_k(n),
        elbow: elbow.entries,
        elbow_knee: elbow.knee,
        xmeans_best_k: xm.best_k,
        xmeans_bic: xm.bic_by_k,
        recommended_k: xm.best_k,
        config_hash: cfg.hash(),
        seed: cfg.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvDiagnostics {
    pub folds: Vec<MetricReport>,
    pub mean_nmae: f64,
    pub mean_nrmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub n_train: usize,
    pub n_test: usize,
    pub k: Option<usize>,
    pub cv: Option<CvDiagnostics>,
    pub test: MetricReport,
    pub config_hash: String,
    pub data_sha256: String,
    pub seed: u64,
}

/// Split, cross-validate on the training part, fit on all of it and score
/// the held-out rows.
pub fn cmd_train(cfg: &RunConfig, data: &Path, spec: &str) -> CliResult<(TrainedModel, TrainReport)> {
    let spec: ModelSpec = spec.parse()?;
    let s = &cfg.model;
    let (ds, _) = load_dataset(data)?;
    let prepared = prepare(&ds, s, cfg.seed)?;
    let (x, y) = (prepared.train.features.view(), &prepared.train.targets[..]);

    let cv = if s.cv_folds >= 2 {
        let folds = kfold_indices(x.nrows(), s.cv_folds, seed::derive(cfg.seed, Role::Fold, 0))?;
        let mut reports = Vec::with_capacity(folds.len());
        for (f, held) in folds.iter().enumerate() {
            let mut mask = vec![false; x.nrows()];
            held.iter().for_each(|&i| mask[i] = true);
            let rest: Vec<usize> = (0..x.nrows()).filter(|&i| !mask[i]).collect();
            let part = prepared.train.select(&rest);
            let hold = prepared.train.select(held);
            let fold_seed = seed::derive(cfg.seed, Role::Fold, f as u64 + 1);
            let body = Fitter::new(part.features.view(), &part.targets, s, fold_seed).fit(spec)?;
            reports.push(evaluate(&body, &hold)?);
        }
        let m = reports.len() as f64;
        Some(CvDiagnostics {
            mean_nmae: reports.iter().map(|r| r.nmae).sum::<f64>() / m,
            mean_nrmse: reports.iter().map(|r| r.nrmse).sum::<f64>() / m,
            folds: reports,
        })
    } else {
        None
    };

    let mut fitter = Fitter::new(x, y, s, cfg.seed);
    let body = fitter.fit(spec)?;
    let k = match spec {
        ModelSpec::Single(_) => None,
        _ => Some(fitter.k()?),
    };
    let test = evaluate(&body, &prepared.test)?;
    let mut doc = TrainedModel::new(spec.to_string(), cfg.hash(), cfg.seed, body);
    doc.standardization = Some(prepared.standardization.clone());
    let report = TrainReport {
        model: spec.to_string(),
        n_train: prepared.train.len(),
        n_test: prepared.test.len(),
        k,
        cv,
        test,
        config_hash: cfg.hash(),
        data_sha256: file_sha256(data)?,
        seed: cfg.seed,
    };
    Ok((doc, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub model: String,
    pub model_config_hash: String,
    pub metrics: MetricReport,
    pub data_sha256: String,
}

/// Scores a saved model on every row of a CSV file.
pub fn cmd_evaluate(model: &Path, data: &Path) -> CliResult<EvaluateReport> {
    let text = std::fs::read_to_string(model)?;
    let doc = TrainedModel::from_json(&text)?;
    let (ds, _) = load_dataset(data)?;
    let pred = doc.predict_all(ds.features.view())?;
    Ok(EvaluateReport {
        model: doc.name.clone(),
        model_config_hash: doc.config_hash.clone(),
        metrics: metric_report(&pred, &ds.targets)?,
        data_sha256: file_sha256(data)?,
    })
}

pub fn cmd_compare(cfg: &RunConfig, data: &Path) -> CliResult<ComparisonReport> {
    let c = &cfg.compare;
    let (ds, mut warnings) = load_dataset(data)?;
    let (parts, w) = partitions(&ds, c.min_rows)?;
    warnings.extend(w);
    let provenance = Provenance {
        config_hash: cfg.hash(),
        data_sha256: Some(file_sha256(data)?),
        seeds: c.seeds.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    run_study(c.study, &parts, &c.seeds, &cfg.model, c.alpha, provenance, warnings)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

