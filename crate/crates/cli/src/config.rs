use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use windstack::baseline::MlpConfig;
use windstack::cluster::FitSettings;
use windstack::ensemble::{AdaBoostConfig, MetaFeatureMode, RidgeConfig};
use windstack::ingest::SplitMode;
use windstack::synth::SynthConfig;

use crate::error::{CliError, CliResult};
use crate::study::Study;

/// Everything that determines a command's output. Loaded from TOML, then
/// patched by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthSection,
    pub choose_k: ChooseKSection,
    pub model: ModelSettings,
    pub compare: CompareSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            synth: SynthSection::default(),
            choose_k: ChooseKSection::default(),
            model: ModelSettings::default(),
            compare: CompareSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex(&Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPreset {
    #[default]
    ThreeRegime,
    /// Three regimes whose speed means sit `separation` standard deviations
    /// apart.
    Separated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub preset: SynthPreset,
    /// One year of 10-minute records.
    pub n_records: usize,
    pub separation: f64,
    pub noise_frac: Option<f64>,
    /// Full generator configuration; replaces the preset when present.
    pub custom: Option<SynthConfig>,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            preset: SynthPreset::ThreeRegime,
            n_records: 52_560,
            separation: 5.0,
            noise_frac: None,
            custom: None,
        }
    }
}

impl SynthSection {
    pub fn build(&self, seed: u64) -> SynthConfig {
        if let Some(c) = &self.custom {
            return SynthConfig { seed, ..c.clone() };
        }
        let mut cfg = match self.preset {
            SynthPreset::ThreeRegime => SynthConfig::three_regime(self.n_records, seed),
            SynthPreset::Separated => SynthConfig::separated_regimes(self.n_records, self.separation, seed),
        };
        if let Some(noise) = self.noise_frac {
            cfg.noise_frac = noise;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChooseKSection {
    /// X-means search interval.
    pub k_min: usize,
    pub k_max: usize,
    pub elbow_min: usize,
    pub elbow_max: usize,
    pub restarts: usize,
}

impl Default for ChooseKSection {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 30,
            elbow_min: 2,
            elbow_max: 30,
            restarts: 3,
        }
    }
}

impl ChooseKSection {
    pub fn validate(&self) -> CliResult<()> {
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(CliError::Config(format!("k_min {} > k_max {}", self.k_min, self.k_max)));
        }
        if self.elbow_min == 0 || self.elbow_min > self.elbow_max {
            return Err(CliError::Config(format!(
                "elbow range {}..={} is empty",
                self.elbow_min, self.elbow_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub train_frac: f64,
    pub split: SplitMode,
    /// Folds for training diagnostics in `train`; 0 skips them.
    pub cv_folds: usize,
    /// Cluster count for layered models; X-means over `[k_min, k_max]`
    /// on the training rows when absent.
    pub k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub clustering: FitSettings,
    pub adarf: AdaBoostConfig,
    pub adadt: AdaBoostConfig,
    pub mlp: MlpConfig,
    /// Pick the hidden size from 6..=20 on a validation fold.
    pub mlp_sweep: bool,
    pub min_cluster_train: usize,
    pub ridge: RidgeConfig,
    /// Select the meta-learner penalty by cross-validation.
    pub lambda_cv: bool,
    pub meta_mode: MetaFeatureMode,
    pub stacking_folds: usize,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            train_frac: 0.9,
            split: SplitMode::Chronological,
            cv_folds: 10,
            k: None,
            k_min: 2,
            k_max: 10,
            clustering: FitSettings::default(),
            adarf: AdaBoostConfig::adarf(),
            adadt: AdaBoostConfig::adadt(),
            mlp: MlpConfig::default(),
            mlp_sweep: false,
            min_cluster_train: 30,
            ridge: RidgeConfig::default(),
            lambda_cv: false,
            meta_mode: MetaFeatureMode::OutOfFold,
            stacking_folds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub study: Study,
    pub seeds: Vec<u64>,
    /// Significance level for the Tukey intervals.
    pub alpha: f64,
    /// Quarters with fewer rows are skipped with a warning.
    pub min_rows: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            study: Study::Baselines,
            seeds: vec![1, 2, 3, 4, 5],
            alpha: 0.05,
            min_rows: 100,
        }
    }
}
