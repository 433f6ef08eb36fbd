use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use windstack::cluster::ClusterKind;
use windstack::ingest::{quarter_split, Dataset};
use windstack::stats::{friedman, relative_reduction, tukey, FriedmanResult, MetricReport, TukeyResult};

use crate::config::ModelSettings;
use crate::error::{CliError, CliResult};
use crate::pipeline::{evaluate, prepare, BaseLearner, Fitter, ModelSpec};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    /// AdaRF against LR, ANN and AdaDT.
    #[default]
    Baselines,
    /// AdaRF without clustering against the four layered variants.
    Clusterings,
    /// The stacking fusion against its strongest single competitors and
    /// stackings of other learners.
    Stacking,
}

impl std::str::FromStr for Study {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "baselines" => Ok(Study::Baselines),
            "clusterings" => Ok(Study::Clusterings),
            "stacking" => Ok(Study::Stacking),
            _ => Err(CliError::Config(format!("unknown study `{s}`"))),
        }
    }
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Baselines => "baselines",
            Study::Clusterings => "clusterings",
            Study::Stacking => "stacking",
        }
    }

    /// Column labels and the models behind them.
    pub fn models(self) -> Vec<(String, ModelSpec)> {
        use BaseLearner::*;
        let list: Vec<(&str, ModelSpec)> = match self {
            Study::Baselines => vec![
                ("LR", ModelSpec::Single(Lr)),
                ("ANN", ModelSpec::Single(Ann)),
                ("AdaDT", ModelSpec::Single(Adadt)),
                ("AdaRF", ModelSpec::Single(Adarf)),
            ],
            Study::Clusterings => vec![
                ("none", ModelSpec::Single(Adarf)),
                ("kmeans", ModelSpec::Layered(ClusterKind::KMeans)),
                ("em", ModelSpec::Layered(ClusterKind::Em)),
                ("ff", ModelSpec::Layered(ClusterKind::FarthestFirst)),
                ("canopy", ModelSpec::Layered(ClusterKind::Canopy)),
            ],
            Study::Stacking => vec![
                ("NCl-AdaRF", ModelSpec::Single(Adarf)),
                ("FF-AdaRF", ModelSpec::Layered(ClusterKind::FarthestFirst)),
                ("Cls-AdaRF", ModelSpec::Stacking(Adarf)),
                ("Cls-LR", ModelSpec::Stacking(Lr)),
                ("Cls-ANN", ModelSpec::Stacking(Ann)),
                ("Cls-AdaDT", ModelSpec::Stacking(Adadt)),
            ],
        };
        list.into_iter().map(|(l, s)| (l.to_string(), s)).collect()
    }

    /// `(better, reference)` label pairs whose improvement is reported.
    pub fn pairs(self) -> Vec<(String, String)> {
        let labels: Vec<String> = self.models().into_iter().map(|m| m.0).collect();
        let (head, rest): (&str, Vec<&String>) = match self {
            Study::Baselines => ("AdaRF", labels.iter().filter(|l| *l != "AdaRF").collect()),
            Study::Clusterings => {
                return labels[1..].iter().map(|l| (l.clone(), "none".to_string())).collect();
            }
            Study::Stacking => ("Cls-AdaRF", labels.iter().filter(|l| *l != "Cls-AdaRF").collect()),
        };
        rest.into_iter().map(|l| (head.to_string(), l.clone())).collect()
    }
}

/// Year plus each non-empty quarter with at least `min_rows` rows.
pub fn partitions(ds: &Dataset, min_rows: usize) -> CliResult<(Vec<(String, Dataset)>, Vec<String>)> {
    let mut out = vec![("Year".to_string(), ds.clone())];
    let mut warnings = Vec::new();
    let quarters = quarter_split(ds)?;
    for (q, part) in quarters.parts.into_iter().enumerate() {
        match part {
            Some(p) if p.len() >= min_rows => out.push((format!("Q{}", q + 1), p)),
            Some(p) => warnings.push(format!("Q{} skipped: {} rows < {min_rows}", q + 1, p.len())),
            None => warnings.push(format!("Q{} skipped: no rows", q + 1)),
        }
    }
    Ok((out, warnings))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub model: String,
    pub seed: u64,
    pub metrics: MetricReport,
}

/// Fits every model on one dataset/seed and scores it on the held-out rows.
pub fn run_cell(
    ds: &Dataset,
    models: &[(String, ModelSpec)],
    settings: &ModelSettings,
    seed: u64,
) -> CliResult<Vec<MetricReport>> {
    let prepared = prepare(ds, settings, seed)?;
    let mut fitter = Fitter::new(prepared.train.features.view(), &prepared.train.targets, settings, seed);
    models
        .iter()
        .map(|(_, spec)| evaluate(&fitter.fit(*spec)?, &prepared.test))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub better: String,
    pub reference: String,
    /// `(reference − better) / reference` of the dataset-averaged seed
    /// medians, in percent.
    pub nmae_pct: f64,
    pub nrmse_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub data_sha256: Option<String>,
    pub seeds: Vec<u64>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub study: Study,
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub cells: Vec<Cell>,
    /// Seed-median NMAE, rows = datasets, columns = models.
    pub median_nmae: Vec<Vec<f64>>,
    pub median_nrmse: Vec<Vec<f64>>,
    pub improvements: Vec<Improvement>,
    pub friedman_nmae: Option<FriedmanResult>,
    pub friedman_nrmse: Option<FriedmanResult>,
    pub tukey_nmae: Option<TukeyResult>,
    pub tukey_nrmse: Option<TukeyResult>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Runs `study` over the given datasets and seeds. Cells run in parallel;
/// the report is assembled in (dataset, model, seed) order.
pub fn run_study(
    study: Study,
    datasets: &[(String, Dataset)],
    seeds: &[u64],
    settings: &ModelSettings,
    alpha: f64,
    provenance: Provenance,
    mut warnings: Vec<String>,
) -> CliResult<ComparisonReport> {
    if seeds.is_empty() {
        return Err(CliError::Config("at least one seed is required".into()));
    }
    let models = study.models();
    let jobs: Vec<(usize, u64)> = (0..datasets.len())
        .flat_map(|d| seeds.iter().map(move |&s| (d, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(d, s)| run_cell(&datasets[d].1, &models, settings, s))
        .collect::<CliResult<Vec<_>>>()?;

    let n_models = models.len();
    let mut cells = Vec::new();
    let mut median_nmae = vec![vec![0.0; n_models]; datasets.len()];
    let mut median_nrmse = median_nmae.clone();
    for (d, (name, _)) in datasets.iter().enumerate() {
        for (m, (label, _)) in models.iter().enumerate() {
            let mut a = Vec::new();
            let mut r = Vec::new();
            for (j, &(jd, s)) in jobs.iter().enumerate() {
                if jd != d {
                    continue;
                }
                let metrics = results[j][m];
                a.push(metrics.nmae);
                r.push(metrics.nrmse);
                cells.push(Cell {
                    dataset: name.clone(),
                    model: label.clone(),
                    seed: s,
                    metrics,
                });
            }
            median_nmae[d][m] = median(&a);
            median_nrmse[d][m] = median(&r);
        }
    }

    let col_mean = |t: &[Vec<f64>], m: usize| t.iter().map(|row| row[m]).sum::<f64>() / t.len() as f64;
    let index = |label: &str| models.iter().position(|(l, _)| l == label).expect("known label");
    let improvements = study
        .pairs()
        .into_iter()
        .map(|(better, reference)| {
            let (b, r) = (index(&better), index(&reference));
            Improvement {
                nmae_pct: 100.0 * relative_reduction(col_mean(&median_nmae, b), col_mean(&median_nmae, r)),
                nrmse_pct: 100.0 * relative_reduction(col_mean(&median_nrmse, b), col_mean(&median_nrmse, r)),
                better,
                reference,
            }
        })
        .collect();

    let (friedman_nmae, friedman_nrmse, tukey_nmae, tukey_nrmse) = if datasets.len() >= 2 {
        let table = |t: &[Vec<f64>]| Array2::from_shape_fn((t.len(), n_models), |(i, j)| t[i][j]);
        let groups = |t: &[Vec<f64>]| (0..n_models).map(|m| t.iter().map(|row| row[m]).collect()).collect::<Vec<Vec<f64>>>();
        let run = |t: &[Vec<f64>]| -> (Option<FriedmanResult>, Option<TukeyResult>) {
            (friedman(table(t).view()).ok(), tukey(&groups(t), alpha).ok())
        };
        let (fa, ta) = run(&median_nmae);
        let (fr, tr) = run(&median_nrmse);
        (fa, fr, ta, tr)
    } else {
        warnings.push("fewer than two datasets: Friedman and Tukey skipped".into());
        (None, None, None, None)
    };

    Ok(ComparisonReport {
        study,
        datasets: datasets.iter().map(|d| d.0.clone()).collect(),
        models: models.into_iter().map(|m| m.0).collect(),
        cells,
        median_nmae,
        median_nrmse,
        improvements,
        friedman_nmae,
        friedman_nrmse,
        tukey_nmae,
        tukey_nrmse,
        warnings,
        provenance,
    })
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `dataset,model,seed,nmae,nrmse` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,model,seed,nmae,nrmse\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{},{}\n", c.dataset, c.model, c.seed, c.metrics.nmae, c.metrics.nrmse));
        }
        out
    }

    /// Aligned table of seed-median NMAE / NRMSE (percent) plus the
    /// improvements and test results.
    pub fn summary(&self) -> String {
        let width = self.models.iter().map(|m| m.len()).max().unwrap_or(0).max(13);
        let mut out = format!("study: {}\n", self.study.name());
        for (title, table) in [("NMAE %", &self.median_nmae), ("NRMSE %", &self.median_nrmse)] {
            out.push_str(&format!("\n{title:<8}"));
            for m in &self.models {
                out.push_str(&format!(" {m:>width$}"));
            }
            out.push('\n');
            for (d, row) in self.datasets.iter().zip(table.iter()) {
                out.push_str(&format!("{d:<8}"));
                for v in row {
                    out.push_str(&format!(" {:>width$.3}", 100.0 * v));
                }
                out.push('\n');
            }
        }
        out.push('\n');
        for i in &self.improvements {
            out.push_str(&format!(
                "{} over {}: NMAE {:.2}%  NRMSE {:.2}%\n",
                i.better, i.reference, i.nmae_pct, i.nrmse_pct
            ));
        }
        if let Some(f) = &self.friedman_nmae {
            out.push_str(&format!("Friedman (NMAE): Q = {:.4}, df = {}, p = {:.4}\n", f.statistic, f.df, f.p_value));
        }
        if let Some(t) = &self.tukey_nmae {
            for p in t.pairs.iter().filter(|p| p.excludes_zero()) {
                out.push_str(&format!(
                    "Tukey (NMAE): {} - {} in [{:.5}, {:.5}]\n",
                    self.models[p.a], self.models[p.b], p.lower, p.upper
                ));
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}
