//! Command-line front end: argument definitions and dispatch.
//!
//! Exit codes: 0 success, 2 usage/configuration, 3 data, 4 numeric
//! non-convergence (only when escalated by `--strict`).

pub mod commands;
pub mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::ml::forest::FeaturesPerSplit;
use commands::{
    cmd_denoise, cmd_eval, cmd_features, cmd_plot, cmd_run_all, cmd_synth, cmd_train,
    FeatureOptions, ModelKind, PlotRequest, RunContext, TrainOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "emgesture",
    version,
    about = "Gesture sensing from wireless-charger EM emissions: synthesize recordings, extract averaged power spectra, denoise, train, evaluate, plot"
)]
pub struct Cli {
    /// Master seed overriding every stage seed in the config
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Pipeline config: a TOML file, or a previous run's manifest.json
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Treat wav channel 0 as quadrature and channel 1 as in-phase
    #[arg(long, global = true)]
    pub swap_iq: bool,

    /// Plain whole-spectrum subtraction instead of mode-wise denoising
    #[arg(long, global = true)]
    pub no_vmd: bool,

    /// Classifier evaluated by `eval`
    #[arg(long, global = true, value_enum, default_value_t = ModelArg::Rf)]
    pub model: ModelArg,

    /// PCA components in front of the knn baseline
    #[arg(long, global = true)]
    pub pca: Option<usize>,

    /// Use the 20 MHz full-rate geometry preset (large files, slow)
    #[arg(long, global = true)]
    pub fidelity: bool,

    /// Escalate numeric non-convergence warnings to exit code 4
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Rf,
    Knn,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one wav per (class, take) plus a charger-off noise wav
    Synth {
        /// Override the configured recording duration (seconds)
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Turn wav recordings into labeled averaged-power-spectrum CSV rows
    Features {
        /// Directory of <class>_<take>.wav files
        #[arg(long)]
        wav_dir: Option<PathBuf>,
        #[arg(long)]
        features_csv: Option<PathBuf>,
        #[arg(long)]
        noise_csv: Option<PathBuf>,
        #[arg(long)]
        trim_start: Option<f64>,
        #[arg(long)]
        trim_end: Option<f64>,
        #[arg(long)]
        segment_len: Option<f64>,
        #[arg(long)]
        subwindow_len: Option<f64>,
    },
    /// Subtract the averaged noise profile from every gesture spectrum
    Denoise {
        #[arg(long)]
        features_csv: Option<PathBuf>,
        #[arg(long)]
        noise_csv: Option<PathBuf>,
        #[arg(long)]
        denoised_csv: Option<PathBuf>,
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Dump the noise-profile decomposition trace (iteration, centers,
        /// residual) as CSV
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        #[arg(long)]
        vmd_k: Option<usize>,
        #[arg(long)]
        vmd_alpha: Option<f64>,
        #[arg(long)]
        vmd_tau: Option<f64>,
        #[arg(long)]
        vmd_tol: Option<f64>,
        #[arg(long)]
        vmd_max_iter: Option<usize>,
    },
    /// Fit the random forest on the train split and report held-out accuracy
    Train {
        #[arg(long)]
        features_csv: Option<PathBuf>,
        #[command(flatten)]
        opts: SplitModelArgs,
    },
    /// Score a stored model (or the knn baseline) on the held-out split
    Eval {
        #[arg(long)]
        features_csv: Option<PathBuf>,
        /// Stored forest to score (defaults to <out>/model.json)
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Neighborhood size for the knn baseline
        #[arg(long)]
        knn_k: Option<usize>,
        #[command(flatten)]
        opts: SplitModelArgs,
    },
    /// Emit tidy plot data (x, y, series) and optionally a simple SVG
    Plot {
        #[arg(long, value_enum)]
        kind: PlotKindArg,
        /// Input file: bundle.json (spectrum), report JSON (confusion),
        /// or trace CSV (convergence)
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Sample label to plot (spectrum)
        #[arg(long)]
        label: Option<String>,
        /// Emit power in dB instead of linear units (spectrum)
        #[arg(long)]
        db: bool,
        /// Conductivity in S/m (decay)
        #[arg(long, default_value_t = 5.8e7)]
        conductivity: f64,
        /// Frequency in Hz (decay)
        #[arg(long, default_value_t = 1e6)]
        frequency: f64,
        /// Number of skin-depth steps (decay)
        #[arg(long, default_value_t = 4)]
        points: usize,
    },
    /// The whole chain: synth -> features -> denoise -> train, manifested
    RunAll {
        #[command(flatten)]
        opts: SplitModelArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKindArg {
    Spectrum,
    Confusion,
    Convergence,
    Decay,
}

/// Split and forest overrides accepted by train/eval/run-all.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SplitModelArgs {
    /// Train/test split seed (defaults to the config's)
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Plain random split instead of the stratified default
    #[arg(long)]
    pub no_stratify: bool,
    #[arg(long)]
    pub trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    /// Feature subset rule per split: sqrt, log2, or a fixed count
    #[arg(long)]
    pub features_per_split: Option<String>,
}

impl SplitModelArgs {
    fn to_options(&self) -> Result<TrainOptions> {
        let features_per_split = match self.features_per_split.as_deref() {
            None => None,
            Some("sqrt") => Some(FeaturesPerSplit::Sqrt),
            Some("log2") => Some(FeaturesPerSplit::Log2),
            Some(other) => match other.parse::<usize>() {
                Ok(m) if m >= 1 => Some(FeaturesPerSplit::Fixed(m)),
                _ => {
                    return Err(Error::InvalidParam {
                        name: "features_per_split",
                        reason: format!("expected sqrt, log2, or a positive count, got {other:?}"),
                    })
                }
            },
        };
        Ok(TrainOptions {
            split_seed: self.split_seed,
            test_fraction: self.test_fraction,
            no_stratify: self.no_stratify,
            n_trees: self.trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split,
        })
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        None => {
            if cli.fidelity {
                PipelineConfig::fidelity()
            } else {
                PipelineConfig::reference()
            }
        }
        Some(path) => {
            if cli.fidelity {
                eprintln!("note: --fidelity is ignored when --config is given");
            }
            if path.extension().is_some_and(|e| e == "json") {
                manifest::PipelineManifest::read(path)?.config
            } else {
                PipelineConfig::from_toml_file(path)?
            }
        }
    };
    if let Some(seed) = cli.seed {
        config = config.with_master_seed(seed);
    }
    config.validate()?;
    Ok(config)
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli)?;
    let mut ctx = RunContext::new(config, cli.out.clone());
    ctx.swap_iq = cli.swap_iq;
    ctx.no_vmd = cli.no_vmd;
    ctx.strict = cli.strict;
    std::fs::create_dir_all(&ctx.out_dir)?;

    match &cli.command {
        Command::Synth { duration } => {
            cmd_synth(&ctx, *duration)?;
        }
        Command::Features {
            wav_dir,
            features_csv,
            noise_csv,
            trim_start,
            trim_end,
            segment_len,
            subwindow_len,
        } => {
            let wav_dir = wav_dir.clone().unwrap_or_else(|| ctx.path(commands::WAV_DIR));
            let features_csv = features_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::FEATURES_CSV));
            let noise_csv = noise_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::NOISE_CSV));
            cmd_features(
                &ctx,
                &wav_dir,
                &features_csv,
                &noise_csv,
                FeatureOptions {
                    trim_start_s: *trim_start,
                    trim_end_s: *trim_end,
                    segment_len_s: *segment_len,
                    subwindow_len_s: *subwindow_len,
                },
            )?;
        }
        Command::Denoise {
            features_csv,
            noise_csv,
            denoised_csv,
            bundle,
            trace_csv,
            vmd_k,
            vmd_alpha,
            vmd_tau,
            vmd_tol,
            vmd_max_iter,
        } => {
            if let Some(k) = vmd_k {
                ctx.config.vmd.k_modes = *k;
            }
            if let Some(alpha) = vmd_alpha {
                ctx.config.vmd.alpha = *alpha;
            }
            if let Some(tau) = vmd_tau {
                ctx.config.vmd.tau = *tau;
            }
            if let Some(tol) = vmd_tol {
                ctx.config.vmd.tol = *tol;
            }
            if let Some(max_iter) = vmd_max_iter {
                ctx.config.vmd.max_iter = *max_iter;
            }
            let features_csv = features_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::FEATURES_CSV));
            let noise_csv = noise_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::NOISE_CSV));
            let denoised_csv = denoised_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::DENOISED_CSV));
            let bundle = bundle
                .clone()
                .unwrap_or_else(|| ctx.path(commands::BUNDLE_JSON));
            cmd_denoise(
                &ctx,
                &features_csv,
                &noise_csv,
                &denoised_csv,
                &bundle,
                trace_csv.as_deref(),
            )?;
        }
        Command::Train { features_csv, opts } => {
            let features_csv = features_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::DENOISED_CSV));
            cmd_train(&ctx, &features_csv, &opts.to_options()?)?;
        }
        Command::Eval {
            features_csv,
            model_file,
            knn_k,
            opts,
        } => {
            let features_csv = features_csv
                .clone()
                .unwrap_or_else(|| ctx.path(commands::DENOISED_CSV));
            let kind = match cli.model {
                ModelArg::Rf => ModelKind::Rf,
                ModelArg::Knn => ModelKind::Knn,
            };
            cmd_eval(
                &ctx,
                &features_csv,
                kind,
                model_file.as_deref(),
                cli.pca,
                *knn_k,
                &opts.to_options()?,
            )?;
        }
        Command::Plot {
            kind,
            input,
            out_csv,
            svg,
            label,
            db,
            conductivity,
            frequency,
            points,
        } => {
            let request = match kind {
                PlotKindArg::Spectrum => PlotRequest::Spectrum {
                    bundle: input
                        .clone()
                        .unwrap_or_else(|| ctx.path(commands::BUNDLE_JSON)),
                    label: label.clone(),
                    db: *db,
                },
                PlotKindArg::Confusion => PlotRequest::Confusion {
                    report: input
                        .clone()
                        .unwrap_or_else(|| ctx.path(commands::REPORT_JSON)),
                },
                PlotKindArg::Convergence => PlotRequest::Convergence {
                    trace: input.clone().ok_or(Error::InvalidParam {
                        name: "input",
                        reason: "convergence plots need --input <trace.csv>".into(),
                    })?,
                },
                PlotKindArg::Decay => PlotRequest::Decay {
                    conductivity_s_per_m: *conductivity,
                    frequency_hz: *frequency,
                    points: (*points).max(2),
                },
            };
            let kind_name = match kind {
                PlotKindArg::Spectrum => "spectrum",
                PlotKindArg::Confusion => "confusion",
                PlotKindArg::Convergence => "convergence",
                PlotKindArg::Decay => "decay",
            };
            let out_csv = out_csv
                .clone()
                .unwrap_or_else(|| ctx.path(&format!("plot-{kind_name}.csv")));
            cmd_plot(&ctx, &request, &out_csv, svg.as_deref())?;
        }
        Command::RunAll { opts } => {
            cmd_run_all(&ctx, &opts.to_options()?)?;
        }
    }
    Ok(())
}
