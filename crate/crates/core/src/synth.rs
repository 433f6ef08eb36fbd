//! Synthetic wind-farm records driven by a turbine power curve.
//!
//! Each record samples a weather regime by mixing weight, draws speed,
//! direction, temperature and pressure from that regime, and converts the
//! speed into power through the cut-in / cubic / rated / cut-out curve at
//! the air density implied by temperature and pressure. Turbulence raises
//! output in the lower half of the cubic band and lowers it close to
//! cut-out. Regime labels are kept alongside the records for test oracles
//! and never written to CSV.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{normalize_degrees, turbulence_intensity, WindRecord, INTENSITY_EPS};
use crate::seed::{self, Role};

/// Upper bound of the power coefficient.
pub const BETZ_LIMIT: f64 = 0.593;
/// Specific gas constant of dry air, J/(kg·K).
pub const R_DRY_AIR: f64 = 287.05;
const CHUNK: usize = 4096;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

fn invalid(msg: impl Into<String>) -> SynthError {
    SynthError::InvalidConfig(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineSpec {
    /// Power coefficient in `(0, 0.593]`.
    pub cp: f64,
    /// Reference air density, kg/m³.
    pub rho0: f64,
    /// Swept area, m².
    pub area: f64,
    /// Cut-in speed, m/s.
    pub v_min: f64,
    /// Rated speed, m/s.
    pub v_n: f64,
    /// Cut-out speed, m/s.
    pub v_max: f64,
    /// Rated power, kW.
    pub p_n: f64,
}

impl TurbineSpec {
    /// A 54 MW farm treated as one aggregate machine.
    pub fn aggregate_farm() -> Self {
        Self {
            cp: 0.45,
            rho0: 1.225,
            area: 100_000.0,
            v_min: 3.0,
            v_n: 12.5,
            v_max: 25.0,
            p_n: 54_000.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.cp > 0.0 && self.cp <= BETZ_LIMIT) {
            return Err(invalid(format!("cp {} outside (0, {BETZ_LIMIT}]", self.cp)));
        }
        if !(0.0 < self.v_min && self.v_min < self.v_n && self.v_n < self.v_max) {
            return Err(invalid("speeds must satisfy 0 < v_min < v_n < v_max"));
        }
        if !(self.p_n > 0.0 && self.area > 0.0 && self.rho0 > 0.0) {
            return Err(invalid("p_n, area and rho0 must be positive"));
        }
        Ok(())
    }
}

/// Turbine output in kW at speed `v` (m/s) and air density `rho` (kg/m³).
///
/// The cubic branch `0.5·cp·rho·A·v³` is in watts and divided by 1000; it is
/// capped at the rated power so dense air cannot overshoot the plateau.
pub fn power_curve(spec: &TurbineSpec, v: f64, rho: f64) -> f64 {
    if v < spec.v_min || v > spec.v_max {
        0.0
    } else if v < spec.v_n {
        (0.5 * spec.cp * rho * spec.area * v.powi(3) / 1000.0).min(spec.p_n)
    } else {
        spec.p_n
    }
}

/// Ideal-gas air density from temperature (°C) and pressure (hPa).
pub fn air_density(temp_c: f64, pressure_hpa: f64) -> f64 {
    pressure_hpa * 100.0 / (R_DRY_AIR * (temp_c + 273.15))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpeedDistribution {
    #[default]
    TruncatedNormal,
    /// Weibull with shape and scale matched to the regime mean and std.
    Weibull,
}

fn default_power_factor() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.2
}

fn default_jitter() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub label: String,
    pub speed_mean: f64,
    pub speed_std: f64,
    pub dir_mean: f64,
    pub dir_std: f64,
    pub temp_mean: f64,
    pub temp_std: f64,
    pub pressure_mean: f64,
    pub pressure_std: f64,
    /// Typical speed turbulence intensity of the regime.
    pub turbulence_scale: f64,
    pub mixing_weight: f64,
    /// Output multiplier in `(0, 1]`, e.g. direction-dependent wake losses.
    #[serde(default = "default_power_factor")]
    pub power_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub turbine: TurbineSpec,
    pub regimes: Vec<RegimeSpec>,
    pub n_records: usize,
    pub start_time: DateTime<Utc>,
    /// Half-width of the uniform relative power noise.
    pub noise_frac: f64,
    pub seed: u64,
    #[serde(default)]
    pub speed_distribution: SpeedDistribution,
    /// Strength of the turbulence effect on power.
    #[serde(default = "default_alpha")]
    pub turbulence_alpha: f64,
    /// Log-scale spread of the per-record turbulence intensity around the
    /// regime level; 0 makes the intensity a regime constant.
    #[serde(default = "default_jitter")]
    pub turbulence_jitter: f64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.turbine.validate()?;
        if self.n_records == 0 {
            return Err(invalid("n_records must be positive"));
        }
        if !(self.noise_frac >= 0.0) || !(self.turbulence_alpha >= 0.0) || !(self.turbulence_jitter >= 0.0) {
            return Err(invalid("noise_frac, turbulence_alpha and turbulence_jitter must be non-negative"));
        }
        if self.regimes.is_empty() {
            return Err(invalid("at least one regime is required"));
        }
        let total: f64 = self.regimes.iter().map(|r| r.mixing_weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("mixing weights sum to {total}, expected 1")));
        }
        for r in &self.regimes {
            let stds = [r.speed_std, r.dir_std, r.temp_std, r.pressure_std];
            if r.mixing_weight < 0.0 || stds.iter().any(|s| !(*s >= 0.0)) {
                return Err(invalid(format!("regime `{}` has negative weight or spread", r.label)));
            }
            if !(r.speed_mean >= 0.0) || !(r.pressure_mean > 0.0) || !(r.turbulence_scale >= 0.0) {
                return Err(invalid(format!("regime `{}` has out-of-range means", r.label)));
            }
            if !(r.power_factor > 0.0 && r.power_factor <= 1.0) {
                return Err(invalid(format!("regime `{}` power_factor outside (0, 1]", r.label)));
            }
            if self.speed_distribution == SpeedDistribution::Weibull
                && !(r.speed_mean > 0.0 && r.speed_std > 0.0)
            {
                return Err(invalid("Weibull speeds need positive mean and std"));
            }
        }
        Ok(())
    }

    /// Three weather regimes over one synthetic year with distinct
    /// direction-dependent power losses: a westerly storm track, a calm
    /// easterly and a cold northerly.
    pub fn three_regime(n_records: usize, seed: u64) -> Self {
        let regime = |label: &str, speed: (f64, f64), dir: (f64, f64), temp: (f64, f64), pressure: (f64, f64), turb: f64, w: f64, pf: f64| RegimeSpec {
            label: label.into(),
            speed_mean: speed.0,
            speed_std: speed.1,
            dir_mean: dir.0,
            dir_std: dir.1,
            temp_mean: temp.0,
            temp_std: temp.1,
            pressure_mean: pressure.0,
            pressure_std: pressure.1,
            turbulence_scale: turb,
            mixing_weight: w,
            power_factor: pf,
        };
        Self {
            turbine: TurbineSpec::aggregate_farm(),
            regimes: vec![
                regime("westerly", (11.0, 3.5), (250.0, 15.0), (3.0, 2.0), (995.0, 6.0), 0.10, 0.40, 1.0),
                regime("easterly", (6.0, 2.0), (90.0, 15.0), (9.0, 2.5), (1018.0, 5.0), 0.18, 0.35, 0.70),
                regime("northerly", (9.0, 3.0), (20.0, 10.0), (-8.0, 3.0), (1008.0, 5.0), 0.14, 0.25, 0.85),
            ],
            n_records,
            start_time: Utc.with_ymd_and_hms(2017, 1, 1, 0, 0, 0).unwrap(),
            noise_frac: 0.05,
            seed,
            speed_distribution: SpeedDistribution::TruncatedNormal,
            turbulence_alpha: 0.2,
            turbulence_jitter: 0.25,
        }
    }

    /// Three regimes whose means differ by at least `separation` standard
    /// deviations in every engineered feature they drive.
    pub fn separated_regimes(n_records: usize, separation: f64, seed: u64) -> Self {
        let mut cfg = Self::three_regime(n_records, seed);
        let s = separation;
        // adjacent regimes sit `s` within-regime deviations apart in speed,
        // temperature and pressure. Both turbulence columns follow the same
        // intensity draw, so its levels are spaced by sqrt(2) s on a log scale
        // to give that shared direction the same within-regime spread.
        let jitter = 0.01;
        cfg.turbulence_jitter = jitter;
        let spread = |r: &mut RegimeSpec, step: f64, dir: f64, temp: f64, pressure: f64| {
            r.speed_mean = 4.0 + 0.5 * s * step;
            r.speed_std = 0.5;
            r.dir_mean = dir;
            r.dir_std = 1.0;
            r.temp_mean = temp;
            r.temp_std = 1.0;
            r.pressure_mean = pressure;
            r.pressure_std = 1.0;
            r.turbulence_scale = 0.1 * (std::f64::consts::SQRT_2 * s * jitter * step).exp();
            r.mixing_weight = 1.0 / 3.0;
        };
        spread(&mut cfg.regimes[0], 0.0, 270.0, 0.0, 1000.0);
        spread(&mut cfg.regimes[1], 1.0, 90.0, s, 1000.0 + s);
        spread(&mut cfg.regimes[2], 2.0, 90.0, -s, 1000.0 - s);
        cfg.regimes[2].mixing_weight = 1.0 - 2.0 / 3.0;
        cfg
    }
}

/// Generated records with their ground-truth regime index.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub records: Vec<WindRecord>,
    pub regimes: Vec<usize>,
}

pub fn generate(config: &SynthConfig) -> Result<Vec<WindRecord>, SynthError> {
    Ok(generate_labeled(config)?.records)
}

struct Sampler<'a> {
    cfg: &'a SynthConfig,
    cumulative: Vec<f64>,
    weibull: Vec<Option<Weibull<f64>>>,
}

impl<'a> Sampler<'a> {
    fn new(cfg: &'a SynthConfig) -> Result<Self, SynthError> {
        let mut acc = 0.0;
        let cumulative = cfg
            .regimes
            .iter()
            .map(|r| {
                acc += r.mixing_weight;
                acc
            })
            .collect();
        let weibull = cfg
            .regimes
            .iter()
            .map(|r| match cfg.speed_distribution {
                SpeedDistribution::TruncatedNormal => Ok(None),
                SpeedDistribution::Weibull => {
                    // Justus moment approximation for the shape parameter
                    let shape = (r.speed_std / r.speed_mean).powf(-1.086);
                    let scale = r.speed_mean / statrs::function::gamma::gamma(1.0 + 1.0 / shape);
                    Weibull::new(scale, shape)
                        .map(Some)
                        .map_err(|e| invalid(format!("weibull: {e}")))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            cfg,
            cumulative,
            weibull,
        })
    }

    fn normal<R: Rng>(rng: &mut R, mean: f64, std: f64) -> f64 {
        mean + std * rng.sample::<f64, _>(StandardNormal)
    }

    fn speed<R: Rng>(&self, rng: &mut R, k: usize) -> f64 {
        let r = &self.cfg.regimes[k];
        if let Some(w) = &self.weibull[k] {
            return w.sample(rng);
        }
        if r.speed_std == 0.0 {
            return r.speed_mean;
        }
        let dist = Normal::new(r.speed_mean, r.speed_std).expect("validated spread");
        for _ in 0..100 {
            let v = dist.sample(rng);
            if v >= 0.0 {
                return v;
            }
        }
        0.0
    }

    fn record<R: Rng>(&self, rng: &mut R, i: usize) -> (WindRecord, usize) {
        let cfg = self.cfg;
        let u: f64 = rng.random();
        let k = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(cfg.regimes.len() - 1);
        let r = &cfg.regimes[k];

        let v = self.speed(rng, k);
        // lognormal jitter with unit mean around the regime turbulence level
        let sj = cfg.turbulence_jitter;
        let jitter = (sj * rng.sample::<f64, _>(StandardNormal) - 0.5 * sj * sj).exp();
        let intensity = r.turbulence_scale * jitter;
        let wind_speed_std = intensity * v;
        let wind_dir = normalize_degrees(Self::normal(rng, r.dir_mean, r.dir_std));
        let wind_dir_std = (0.8 * intensity).to_degrees();
        let temperature = Self::normal(rng, r.temp_mean, r.temp_std);
        let pressure = Self::normal(rng, r.pressure_mean, r.pressure_std).max(1.0);
        let noise = if cfg.noise_frac > 0.0 {
            rng.random_range(-cfg.noise_frac..=cfg.noise_frac)
        } else {
            0.0
        };

        let t = &cfg.turbine;
        let base = power_curve(t, v, air_density(temperature, pressure)) * r.power_factor;
        let i_sp = turbulence_intensity(v, wind_speed_std, INTENSITY_EPS);
        let adjustment = if v >= t.v_min && v < 0.5 * (t.v_min + t.v_n) {
            cfg.turbulence_alpha * i_sp
        } else if v <= t.v_max && v >= t.v_max - 0.25 * (t.v_max - t.v_n) {
            -cfg.turbulence_alpha * i_sp
        } else {
            0.0
        };
        let power = base * (1.0 + adjustment).max(0.0) * (1.0 + noise);

        let record = WindRecord {
            timestamp: cfg.start_time + Duration::minutes(10 * i as i64),
            wind_speed: v,
            wind_speed_std,
            wind_dir,
            wind_dir_std,
            temperature,
            pressure,
            power,
        };
        (record, k)
    }
}

/// Generates records in fixed-size chunks with per-chunk seeds, so output
/// does not depend on the number of threads.
pub fn generate_labeled(config: &SynthConfig) -> Result<Synthetic, SynthError> {
    config.validate()?;
    let sampler = Sampler::new(config)?;
    let n = config.n_records;
    let chunks: Vec<Vec<(WindRecord, usize)>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng_for(config.seed, Role::Chunk, c as u64);
            (c * CHUNK..((c + 1) * CHUNK).min(n))
                .map(|i| sampler.record(&mut rng, i))
                .collect()
        })
        .collect();
    let (records, regimes) = chunks.into_iter().flatten().unzip();
    Ok(Synthetic { records, regimes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> TurbineSpec {
        TurbineSpec {
            cp: 0.4,
            rho0: 1.225,
            area: 1000.0,
            v_min: 3.0,
            v_n: 12.0,
            v_max: 25.0,
            p_n: 600.0,
        }
    }

    #[test]
    fn power_curve_branches() {
        let s = spec();
        assert_eq!(power_curve(&s, 0.5 * s.v_min, 1.225), 0.0);
        assert!((power_curve(&s, 10.0, 1.225) - 245.0).abs() < 1e-9);
        assert_eq!(power_curve(&s, 0.5 * (s.v_n + s.v_max), 1.225), s.p_n);
        assert_eq!(power_curve(&s, 26.0, 1.225), 0.0);
        assert_eq!(power_curve(&s, s.v_max, 1.225), s.p_n);
    }

    #[test]
    fn air_density_at_standard_conditions() {
        assert!((air_density(15.0, 1013.25) - 1.225).abs() < 1e-3);
    }

    #[test]
    fn plateau_without_noise() {
        let mut cfg = SynthConfig::three_regime(500, 1);
        cfg.regimes.truncate(1);
        let r = &mut cfg.regimes[0];
        r.mixing_weight = 1.0;
        r.speed_mean = 18.0;
        r.speed_std = 0.0;
        r.turbulence_scale = 0.0;
        cfg.noise_frac = 0.0;
        let recs = generate(&cfg).unwrap();
        assert_eq!(recs.len(), 500);
        assert!(recs.iter().all(|r| r.power == cfg.turbine.p_n));
        assert_eq!(
            recs[1].timestamp - recs[0].timestamp,
            Duration::minutes(10)
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig::three_regime(9000, 42);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 43, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn regime_means_within_three_standard_errors() {
        let cfg = SynthConfig::separated_regimes(3000, 5.0, 9);
        let syn = generate_labeled(&cfg).unwrap();
        for (k, r) in cfg.regimes.iter().enumerate() {
            let rows: Vec<&WindRecord> = syn
                .records
                .iter()
                .zip(&syn.regimes)
                .filter(|(_, &lab)| lab == k)
                .map(|(rec, _)| rec)
                .collect();
            let n = rows.len() as f64;
            assert!(n > 800.0, "regime {k} has {n} rows");
            let check = |vals: Vec<f64>, mean: f64, std: f64| {
                let m = vals.iter().sum::<f64>() / n;
                assert!((m - mean).abs() < 3.0 * std / n.sqrt(), "{m} vs {mean}");
            };
            check(rows.iter().map(|r| r.wind_speed).collect(), r.speed_mean, r.speed_std);
            check(rows.iter().map(|r| r.temperature).collect(), r.temp_mean, r.temp_std);
            check(rows.iter().map(|r| r.pressure).collect(), r.pressure_mean, r.pressure_std);
        }
    }

    #[test]
    fn zero_outside_operating_band_without_noise() {
        let mut cfg = SynthConfig::three_regime(5000, 3);
        cfg.noise_frac = 0.0;
        for r in generate(&cfg).unwrap() {
            if r.wind_speed < cfg.turbine.v_min || r.wind_speed > cfg.turbine.v_max {
                assert_eq!(r.power, 0.0);
            }
        }
    }

    #[test]
    fn power_is_bounded() {
        let mut cfg = SynthConfig::three_regime(20_000, 5);
        for r in &mut cfg.regimes {
            r.turbulence_scale = 0.6;
        }
        let bound = cfg.turbine.p_n
            * (1.0 + cfg.noise_frac + cfg.turbulence_alpha * crate::ingest::INTENSITY_CAP);
        assert!(generate(&cfg).unwrap().iter().all(|r| r.power <= bound && r.power >= 0.0));
    }

    #[test]
    fn weibull_speeds() {
        let mut cfg = SynthConfig::three_regime(20_000, 8);
        cfg.speed_distribution = SpeedDistribution::Weibull;
        let recs = generate(&cfg).unwrap();
        let mean = recs.iter().map(|r| r.wind_speed).sum::<f64>() / recs.len() as f64;
        let expected: f64 = cfg.regimes.iter().map(|r| r.mixing_weight * r.speed_mean).sum();
        assert!((mean - expected).abs() < 0.15, "{mean} vs {expected}");
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = SynthConfig::three_regime(10, 0);
        cfg.regimes[0].mixing_weight = 0.9;
        assert!(matches!(cfg.validate(), Err(SynthError::InvalidConfig(_))));
        let mut cfg = SynthConfig::three_regime(10, 0);
        cfg.turbine.v_n = 30.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SynthConfig::three_regime(0, 0);
        cfg.n_records = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SynthConfig::three_regime(10, 0);
        cfg.turbine.cp = 0.6;
        assert!(cfg.validate().is_err());
    }
}
