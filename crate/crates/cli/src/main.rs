use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use windstack_cli::commands::{cmd_choose_k, cmd_compare, cmd_evaluate, cmd_synth, cmd_train, write_text};
use windstack_cli::config::SynthPreset;
use windstack_cli::study::Study;
use windstack_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "windstack", version, about = "Cluster-routed ensemble wind-power modeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic wind-farm CSV.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n_records: Option<usize>,
        #[arg(long, value_parser = parse_preset)]
        preset: Option<SynthPreset>,
        #[arg(long)]
        noise_frac: Option<f64>,
    },
    /// Report the empirical, elbow and X-means cluster counts.
    ChooseK {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        elbow_max: Option<usize>,
        /// Write the `k,sse` elbow curve here.
        #[arg(long)]
        elbow_csv: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train a model and score it on the held-out tenth.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// lr, ann, adadt, adarf, layered:<kmeans|em|ff|canopy>, stacking[:<learner>]
        #[arg(long)]
        model: String,
        /// Model document output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        cv_folds: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a saved model on a CSV file.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a comparison study over Year and Q1–Q4.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_study)]
        study: Option<Study>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-cell metrics as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_preset(s: &str) -> Result<SynthPreset, String> {
    match s {
        "three-regime" => Ok(SynthPreset::ThreeRegime),
        "separated" => Ok(SynthPreset::Separated),
        _ => Err(format!("unknown preset `{s}`")),
    }
}

fn parse_study(s: &str) -> Result<Study, String> {
    s.parse().map_err(|e: CliError| e.to_string())
}

fn emit(report: Option<&PathBuf>, json: String) -> CliResult<()> {
    match report {
        Some(p) => write_text(p, &json),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Synth { common, out, n_records, preset, noise_frac } => {
            let mut cfg = common.load()?;
            if let Some(n) = n_records {
                cfg.synth.n_records = n;
            }
            if let Some(p) = preset {
                cfg.synth.preset = p;
            }
            if noise_frac.is_some() {
                cfg.synth.noise_frac = noise_frac;
            }
            let n = cmd_synth(&cfg, &out)?;
            eprintln!("wrote {n} records to {}", out.display());
        }
        Command::ChooseK { common, data, k_min, k_max, elbow_max, elbow_csv, report } => {
            let mut cfg = common.load()?;
            let c = &mut cfg.choose_k;
            c.k_min = k_min.unwrap_or(c.k_min);
            c.k_max = k_max.unwrap_or(c.k_max);
            c.elbow_max = elbow_max.unwrap_or(c.elbow_max);
            let r = cmd_choose_k(&cfg, &data, elbow_csv.as_deref())?;
            eprintln!(
                "n = {}: empirical k = {:.2} (≈{}), elbow knee = {:?}, X-means k = {}",
                r.n, r.empirical.raw, r.empirical.rounded, r.elbow_knee, r.xmeans_best_k
            );
            emit(report.as_ref(), serde_json::to_string_pretty(&r).expect("serializes"))?;
        }
        Command::Train { common, data, model, out, k, cv_folds, report } => {
            let mut cfg = common.load()?;
            if k.is_some() {
                cfg.model.k = k;
            }
            cfg.model.cv_folds = cv_folds.unwrap_or(cfg.model.cv_folds);
            let (doc, r) = cmd_train(&cfg, &data, &model)?;
            write_text(&out, &doc.to_json())?;
            eprintln!(
                "{}: test NMAE {:.4}, NRMSE {:.4} on {} rows",
                r.model, r.test.nmae, r.test.nrmse, r.n_test
            );
            emit(report.as_ref(), serde_json::to_string_pretty(&r).expect("serializes"))?;
        }
        Command::Evaluate { model, data, report } => {
            let r = cmd_evaluate(&model, &data)?;
            eprintln!("{}: NMAE {:.4}, NRMSE {:.4}", r.model, r.metrics.nmae, r.metrics.nrmse);
            emit(report.as_ref(), serde_json::to_string_pretty(&r).expect("serializes"))?;
        }
        Command::Compare { common, data, study, seeds, k, report, csv } => {
            let mut cfg = common.load()?;
            if let Some(s) = study {
                cfg.compare.study = s;
            }
            if let Some(s) = seeds {
                cfg.compare.seeds = s;
            }
            if k.is_some() {
                cfg.model.k = k;
            }
            let r = cmd_compare(&cfg, &data)?;
            eprint!("{}", r.summary());
            if let Some(p) = csv {
                write_text(&p, &r.to_csv())?;
            }
            emit(report.as_ref(), r.to_json())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
