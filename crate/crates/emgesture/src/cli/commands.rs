//! Implementations behind the CLI subcommands. Everything is a plain
//! function over a [`RunContext`] so integration tests drive the pipeline
//! without spawning processes.

use std::path::{Path, PathBuf};

use crate::config::{recording_seed, PipelineConfig};
use crate::denoise::{
    denoise_whole_spectrum, mean_aps, DenoiseBundle, NoiseProfile,
};
use crate::error::{Error, Result};
use crate::ml::forest::{ForestModel, ForestParams};
use crate::ml::knn::KnnClassifier;
use crate::ml::{evaluate, train_test_split, train_test_split_unstratified, EvalReport, LabeledDataset};
use crate::plot::{write_heatmap_svg, write_line_svg, write_tidy_csv, Series};
use crate::signal_io::{load_iq_wav, write_iq_wav, ChannelOrder};
use crate::spectrum::{
    average_power_spectrum, read_features_csv, write_features_csv, FeatureRow, SpectrumSource,
};
use crate::synth::{skin_depth, synth_noise, synth_recording};
use crate::vmd;

use super::manifest::PipelineManifest;

pub const WAV_DIR: &str = "wav";
pub const FEATURES_CSV: &str = "features.csv";
pub const NOISE_CSV: &str = "noise.csv";
pub const DENOISED_CSV: &str = "denoised.csv";
pub const BUNDLE_JSON: &str = "bundle.json";
pub const MODEL_JSON: &str = "model.json";
pub const REPORT_JSON: &str = "report.json";
pub const CONFUSION_CSV: &str = "confusion.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const NOISE_LABEL: &str = "noise";

/// Resolved global options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    pub swap_iq: bool,
    pub no_vmd: bool,
    pub strict: bool,
    /// Suppress per-file progress lines (used by tests).
    pub quiet: bool,
}

impl RunContext {
    pub fn new(config: PipelineConfig, out_dir: PathBuf) -> Self {
        Self {
            config,
            out_dir,
            swap_iq: false,
            no_vmd: false,
            strict: false,
            quiet: false,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn channel_order(&self) -> ChannelOrder {
        if self.swap_iq {
            ChannelOrder::QThenI
        } else {
            ChannelOrder::IThenQ
        }
    }

    fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }
}

/// `synth`: one wav per (class, take) plus the charger-off noise wav.
pub fn cmd_synth(ctx: &RunContext, duration_override_s: Option<f64>) -> Result<Vec<PathBuf>> {
    let cfg = &ctx.config;
    cfg.validate()?;
    let duration = duration_override_s.unwrap_or(cfg.geometry.duration_s);
    let wav_dir = ctx.path(WAV_DIR);
    std::fs::create_dir_all(&wav_dir)?;

    let mut written = Vec::new();
    for (c, profile) in cfg.profiles.iter().enumerate() {
        for take in 0..cfg.geometry.takes {
            let seed = recording_seed(cfg.synth.seed, c, take, cfg.geometry.takes);
            let synth_cfg = crate::synth::SynthConfig {
                seed,
                ..cfg.synth.clone()
            };
            let rec = synth_recording(&synth_cfg, profile, duration)?;
            let path = wav_dir.join(format!("{}_{take}.wav", profile.name));
            write_iq_wav(&path, &rec)?;
            ctx.say(&format!("wrote {} seed={seed}", path.display()));
            written.push(path);
        }
    }
    let noise = synth_noise(&cfg.synth, duration)?;
    let noise_path = wav_dir.join(format!("{NOISE_LABEL}_0.wav"));
    write_iq_wav(&noise_path, &noise)?;
    ctx.say(&format!("wrote {} seed={}", noise_path.display(), cfg.synth.seed));
    written.push(noise_path);
    Ok(written)
}

/// Geometry overrides for `features`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FeatureOptions {
    pub trim_start_s: Option<f64>,
    pub trim_end_s: Option<f64>,
    pub segment_len_s: Option<f64>,
    pub subwindow_len_s: Option<f64>,
}

/// `features`: every wav in the directory becomes labeled spectrum rows,
/// one per segment; rows labeled `noise` are routed to the noise CSV.
pub fn cmd_features(
    ctx: &RunContext,
    wav_dir: &Path,
    features_csv: &Path,
    noise_csv: &Path,
    opts: FeatureOptions,
) -> Result<(usize, usize)> {
    let g = &ctx.config.geometry;
    let trim_start = opts.trim_start_s.unwrap_or(g.trim_start_s);
    let trim_end = opts.trim_end_s.unwrap_or(g.trim_end_s);
    let segment_len = opts.segment_len_s.unwrap_or(g.segment_len_s);
    let subwindow_len = opts.subwindow_len_s.unwrap_or(g.subwindow_len_s);

    if !wav_dir.exists() {
        return Err(Error::MissingFile(wav_dir.to_path_buf()));
    }
    let mut wavs: Vec<PathBuf> = std::fs::read_dir(wav_dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "wav"))
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(Error::MissingFile(wav_dir.join("*.wav")));
    }

    let mut gesture_rows: Vec<FeatureRow> = Vec::new();
    let mut noise_rows: Vec<FeatureRow> = Vec::new();
    for path in &wavs {
        let label = label_from_path(path)?;
        let rec = load_iq_wav(path, ctx.channel_order())?;
        let trimmed = rec.trim(trim_start, trim_end)?;
        let source = if label == NOISE_LABEL {
            SpectrumSource::Noise
        } else {
            SpectrumSource::Gesture
        };
        for segment in trimmed.segment(segment_len)? {
            let aps = average_power_spectrum(&segment, subwindow_len, ctx.config.window)?
                .with_source(source);
            let row = FeatureRow {
                label: label.clone(),
                aps,
            };
            if source == SpectrumSource::Noise {
                noise_rows.push(row);
            } else {
                gesture_rows.push(row);
            }
        }
    }

    if gesture_rows.is_empty() {
        return Err(Error::DegenerateDataset(
            "no gesture-labeled wav files found".into(),
        ));
    }
    write_features_csv(features_csv, &gesture_rows)?;
    ctx.say(&format!(
        "wrote {} rows to {}",
        gesture_rows.len(),
        features_csv.display()
    ));
    if !noise_rows.is_empty() {
        write_features_csv(noise_csv, &noise_rows)?;
        ctx.say(&format!(
            "wrote {} rows to {}",
            noise_rows.len(),
            noise_csv.display()
        ));
    }
    Ok((gesture_rows.len(), noise_rows.len()))
}

fn label_from_path(path: &Path) -> Result<String> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::UnlabeledFile(path.to_path_buf()))?;
    match stem.rsplit_once('_') {
        Some((class, take)) if !class.is_empty() && take.parse::<u32>().is_ok() => {
            Ok(class.to_string())
        }
        _ => Err(Error::UnlabeledFile(path.to_path_buf())),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DenoiseStats {
    pub rows: usize,
    pub non_converged: usize,
}

/// `denoise`: build the averaged noise profile and subtract it from every
/// gesture row, mode-wise by default or bin-by-bin under `--no-vmd`.
pub fn cmd_denoise(
    ctx: &RunContext,
    features_csv: &Path,
    noise_csv: &Path,
    denoised_csv: &Path,
    bundle_path: &Path,
    trace_csv: Option<&Path>,
) -> Result<DenoiseStats> {
    let gesture_rows = read_features_csv(features_csv)?;
    let noise_rows = read_features_csv(noise_csv)?;
    if noise_rows.is_empty() {
        return Err(Error::DegenerateDataset("noise csv has no rows".into()));
    }
    let noise_spectra: Vec<_> = noise_rows.iter().map(|r| r.aps.clone()).collect();
    let profile_aps = mean_aps(&noise_spectra)?;
    if let Some(first) = gesture_rows.first() {
        if first.aps.len() != profile_aps.len() {
            return Err(Error::LengthMismatch {
                left: first.aps.len(),
                right: profile_aps.len(),
            });
        }
    }

    let mut non_converged = 0usize;
    let mut denoised_rows: Vec<FeatureRow> = Vec::with_capacity(gesture_rows.len());
    let vmd_cfg = ctx.config.vmd.clone();
    let bundle;

    if ctx.no_vmd {
        for row in &gesture_rows {
            let aps = denoise_whole_spectrum(&row.aps, &profile_aps)?;
            denoised_rows.push(FeatureRow {
                label: row.label.clone(),
                aps,
            });
        }
        bundle = DenoiseBundle {
            original_csv: features_csv.to_path_buf(),
            noise_csv: noise_csv.to_path_buf(),
            denoised_csv: denoised_csv.to_path_buf(),
            vmd: None,
            pairing_threshold: ctx.config.pairing_threshold,
            noise_mode_centers: Vec::new(),
            n_noise_rows: noise_rows.len(),
        };
    } else {
        let (profile, trace) = NoiseProfile::from_aps_traced(profile_aps, &vmd_cfg)?;
        if let Some(path) = trace_csv {
            vmd::write_trace_csv(path, &trace)?;
        }
        if !profile.mode_set.converged {
            non_converged += 1;
        }
        for row in &gesture_rows {
            let (aps, converged) = crate::denoise::denoise_aps_with_status(
                &row.aps,
                &profile,
                &vmd_cfg,
                ctx.config.pairing_threshold,
            )?;
            if !converged {
                non_converged += 1;
            }
            denoised_rows.push(FeatureRow {
                label: row.label.clone(),
                aps,
            });
        }
        bundle = DenoiseBundle {
            original_csv: features_csv.to_path_buf(),
            noise_csv: noise_csv.to_path_buf(),
            denoised_csv: denoised_csv.to_path_buf(),
            vmd: Some(vmd_cfg),
            pairing_threshold: ctx.config.pairing_threshold,
            noise_mode_centers: profile.mode_set.center_freqs.clone(),
            n_noise_rows: noise_rows.len(),
        };
    }

    write_features_csv(denoised_csv, &denoised_rows)?;
    bundle.write(bundle_path)?;
    ctx.say(&format!(
        "wrote {} denoised rows to {}",
        denoised_rows.len(),
        denoised_csv.display()
    ));

    let stats = DenoiseStats {
        rows: denoised_rows.len(),
        non_converged,
    };
    if non_converged > 0 {
        if ctx.strict {
            return Err(Error::NonConvergence {
                what: "mode decomposition",
                iterations: ctx.config.vmd.max_iter,
                residual: f64::NAN,
            });
        }
        eprintln!(
            "warning: {non_converged} decomposition(s) hit max_iter before tolerance; results kept"
        );
    }
    Ok(stats)
}

/// Split and model options shared by train and eval.
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub split_seed: Option<u64>,
    pub test_fraction: Option<f64>,
    pub no_stratify: bool,
    pub n_trees: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub features_per_split: Option<crate::ml::forest::FeaturesPerSplit>,
}

fn load_dataset(ctx: &RunContext, features_csv: &Path) -> Result<LabeledDataset> {
    let rows = read_features_csv(features_csv)?;
    if rows.is_empty() {
        return Err(Error::DegenerateDataset(format!(
            "{} has no rows",
            features_csv.display()
        )));
    }
    // canonical class order when the labels all come from the configured
    // profiles, otherwise lexicographic
    let config_names = ctx.config.class_names();
    let present: Vec<String> = config_names
        .iter()
        .filter(|n| rows.iter().any(|r| &&r.label == n))
        .cloned()
        .collect();
    let all_known = rows.iter().all(|r| present.contains(&r.label));
    let order = if all_known && !present.is_empty() {
        Some(present)
    } else {
        None
    };
    let ds = LabeledDataset::from_feature_rows(&rows, order.as_deref())?;
    Ok(ds.pooled(ctx.config.pool_max_bins))
}

fn split_dataset(
    ctx: &RunContext,
    ds: &LabeledDataset,
    opts: &TrainOptions,
) -> Result<(LabeledDataset, LabeledDataset, u64)> {
    let seed = opts.split_seed.unwrap_or(ctx.config.split.seed);
    let fraction = opts.test_fraction.unwrap_or(ctx.config.split.test_fraction);
    let stratified = ctx.config.split.stratified && !opts.no_stratify;
    let (train, test) = if stratified {
        train_test_split(ds, fraction, seed)?
    } else {
        train_test_split_unstratified(ds, fraction, seed)?
    };
    Ok((train, test, seed))
}

/// `train`: fit the forest on the train split, persist the model, report
/// held-out accuracy.
pub fn cmd_train(
    ctx: &RunContext,
    features_csv: &Path,
    opts: &TrainOptions,
) -> Result<(PathBuf, EvalReport)> {
    let ds = load_dataset(ctx, features_csv)?;
    let (train, test, seed) = split_dataset(ctx, &ds, opts)?;

    let params = ForestParams {
        n_trees: opts.n_trees.unwrap_or(ctx.config.forest.n_trees),
        max_depth: opts.max_depth.or(ctx.config.forest.max_depth),
        min_samples_leaf: opts
            .min_samples_leaf
            .unwrap_or(ctx.config.forest.min_samples_leaf),
        features_per_split: opts
            .features_per_split
            .unwrap_or(ctx.config.forest.features_per_split),
        seed: ctx.config.forest.seed,
        bootstrap: ctx.config.forest.bootstrap,
    };
    let model = ForestModel::fit(&train, &params)?;
    if model.degenerate_single_class {
        eprintln!("warning: single-class training data; the model is constant");
    }
    let model_path = ctx.path(MODEL_JSON);
    model.write_json(&model_path)?;

    let report = evaluate(&model, &test, "random-forest", seed)?;
    report.write_json(&ctx.path(REPORT_JSON))?;
    report.write_confusion_csv(&ctx.path(CONFUSION_CSV))?;
    ctx.say(&format!(
        "random-forest: accuracy {:.4} on {} held-out samples (oob {})",
        report.accuracy,
        report.n_test,
        model
            .oob_estimate
            .map_or("n/a".to_string(), |v| format!("{v:.4}")),
    ));
    Ok((model_path, report))
}

/// Which classifier `eval` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rf,
    Knn,
}

/// `eval`: score a stored forest or the KNN(PCA) baseline on the held-out
/// split of a feature CSV.
pub fn cmd_eval(
    ctx: &RunContext,
    features_csv: &Path,
    kind: ModelKind,
    model_file: Option<&Path>,
    pca_components: Option<usize>,
    knn_k: Option<usize>,
    opts: &TrainOptions,
) -> Result<EvalReport> {
    let ds = load_dataset(ctx, features_csv)?;
    let (train, test, seed) = split_dataset(ctx, &ds, opts)?;

    let (report, tag) = match kind {
        ModelKind::Rf => {
            let default_path = ctx.path(MODEL_JSON);
            let path = model_file.unwrap_or(&default_path);
            let model = ForestModel::read_json(path)?;
            if model.n_dims != ds.n_dims() {
                return Err(Error::DimensionMismatch {
                    expected: model.n_dims,
                    got: ds.n_dims(),
                });
            }
            (evaluate(&model, &test, "random-forest", seed)?, "rf")
        }
        ModelKind::Knn => {
            let k = knn_k.unwrap_or(ctx.config.knn_k);
            let pca = pca_components.unwrap_or(ctx.config.pca_components);
            let pca = pca.min(train.n_samples().min(train.n_dims()));
            let clf = KnnClassifier::fit(&train, k, Some(pca))?;
            (evaluate(&clf, &test, &clf.name(), seed)?, "knn")
        }
    };
    let report_path = ctx.path(&format!("report-{tag}.json"));
    report.write_json(&report_path)?;
    report.write_confusion_csv(&ctx.path(&format!("confusion-{tag}.csv")))?;
    ctx.say(&format!(
        "{}: accuracy {:.4} on {} held-out samples",
        report.model_name, report.accuracy, report.n_test
    ));
    Ok(report)
}

/// What `plot` should render.
#[derive(Debug, Clone)]
pub enum PlotRequest {
    /// Original/noise/denoised triple for one sample label from a bundle.
    Spectrum {
        bundle: PathBuf,
        label: Option<String>,
        db: bool,
    },
    /// Confusion counts from a report JSON.
    Confusion { report: PathBuf },
    /// Center-frequency and residual trajectories from a decomposition
    /// trace CSV.
    Convergence { trace: PathBuf },
    /// Exponential field decay over multiples of the skin depth.
    Decay {
        conductivity_s_per_m: f64,
        frequency_hz: f64,
        points: usize,
    },
}

/// `plot`: emit tidy CSV plot data (x, y, series) and optionally a simple
/// SVG rendering.
pub fn cmd_plot(
    ctx: &RunContext,
    request: &PlotRequest,
    out_csv: &Path,
    svg: Option<&Path>,
) -> Result<()> {
    let series: Vec<Series> = match request {
        PlotRequest::Spectrum { bundle, label, db } => {
            let bundle = DenoiseBundle::read(bundle)?;
            let originals = read_features_csv(&bundle.original_csv)?;
            let noise_rows = read_features_csv(&bundle.noise_csv)?;
            let denoised = read_features_csv(&bundle.denoised_csv)?;

            let pick = |rows: &[FeatureRow]| -> Result<FeatureRow> {
                match label {
                    None => Ok(rows[0].clone()),
                    Some(want) => rows
                        .iter()
                        .find(|r| &r.label == want)
                        .cloned()
                        .ok_or_else(|| {
                            Error::DegenerateDataset(format!("no row labeled {want:?}"))
                        }),
                }
            };
            let original = pick(&originals)?;
            let cleaned = pick(&denoised)?;
            let noise_spectra: Vec<_> = noise_rows.iter().map(|r| r.aps.clone()).collect();
            let profile = mean_aps(&noise_spectra)?;

            let to_series = |name: &str, row: &crate::spectrum::AveragePowerSpectrum| Series {
                name: name.to_string(),
                points: row
                    .power
                    .iter()
                    .enumerate()
                    .take(row.len() / 2) // positive half is what figures show
                    .map(|(k, &p)| {
                        let y = if *db { 10.0 * (p.max(1e-30)).log10() } else { p };
                        (k as f64 * row.bin_width_hz, y)
                    })
                    .collect(),
            };
            vec![
                to_series("original", &original.aps),
                to_series("noise", &profile),
                to_series("denoised", &cleaned.aps),
            ]
        }
        PlotRequest::Confusion { report } => {
            let report = EvalReport::read_json(report)?;
            if let Some(path) = svg {
                write_heatmap_svg(path, &report.confusion, &report.class_names, "confusion")?;
            }
            let series: Vec<Series> = report
                .confusion
                .iter()
                .enumerate()
                .map(|(true_class, row)| Series {
                    name: report.class_names[true_class].clone(),
                    points: row
                        .iter()
                        .enumerate()
                        .map(|(pred, &count)| (pred as f64, f64::from(count)))
                        .collect(),
                })
                .collect();
            write_tidy_csv(out_csv, &series)?;
            ctx.say(&format!("wrote {}", out_csv.display()));
            return Ok(()); // heatmap already rendered
        }
        PlotRequest::Convergence { trace } => read_trace_series(trace)?,
        PlotRequest::Decay {
            conductivity_s_per_m,
            frequency_hz,
            points,
        } => {
            let delta = skin_depth(*conductivity_s_per_m, *frequency_hz)?;
            let pts: Vec<(f64, f64)> = (0..*points)
                .map(|i| {
                    let d = i as f64 * delta;
                    (d, crate::synth::distance_attenuation(1.0, d, delta))
                })
                .collect();
            vec![Series {
                name: format!("decay(delta={delta:.3e} m)"),
                points: pts,
            }]
        }
    };

    write_tidy_csv(out_csv, &series)?;
    if let Some(path) = svg {
        let log_y = matches!(request, PlotRequest::Decay { .. } | PlotRequest::Spectrum { .. });
        write_line_svg(path, &series, "emgesture plot", log_y)?;
    }
    ctx.say(&format!("wrote {}", out_csv.display()));
    Ok(())
}

fn read_trace_series(path: &Path) -> Result<Vec<Series>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let body = std::fs::read_to_string(path)?;
    let mut lines = body.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let columns: Vec<&str> = header.split(',').collect();
    let mut series: Vec<Series> = columns
        .iter()
        .skip(1)
        .map(|name| Series {
            name: (*name).to_string(),
            points: Vec::new(),
        })
        .collect();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::MalformedRecord {
                what: "trace csv",
                line: idx + 1,
                reason: format!("{} fields, expected {}", fields.len(), columns.len()),
            });
        }
        let x: f64 = fields[0].parse().map_err(|_| Error::MalformedRecord {
            what: "trace csv",
            line: idx + 1,
            reason: "bad iteration".into(),
        })?;
        for (s, value) in series.iter_mut().zip(&fields[1..]) {
            let y: f64 = value.parse().map_err(|_| Error::MalformedRecord {
                what: "trace csv",
                line: idx + 1,
                reason: "bad value".into(),
            })?;
            s.points.push((x, y));
        }
    }
    Ok(series)
}

/// `run-all`: the full deterministic chain with a manifest tying the
/// stages together.
pub fn cmd_run_all(ctx: &RunContext, opts: &TrainOptions) -> Result<PathBuf> {
    std::fs::create_dir_all(&ctx.out_dir)?;
    let mut manifest = PipelineManifest::new(ctx.config.clone());

    let wavs = cmd_synth(ctx, None)?;
    manifest.record_stage("synth", wavs);

    let features_csv = ctx.path(FEATURES_CSV);
    let noise_csv = ctx.path(NOISE_CSV);
    cmd_features(
        ctx,
        &ctx.path(WAV_DIR),
        &features_csv,
        &noise_csv,
        FeatureOptions::default(),
    )?;
    manifest.record_stage("features", vec![features_csv.clone(), noise_csv.clone()]);

    let denoised_csv = ctx.path(DENOISED_CSV);
    let bundle = ctx.path(BUNDLE_JSON);
    cmd_denoise(ctx, &features_csv, &noise_csv, &denoised_csv, &bundle, None)?;
    manifest.record_stage("denoise", vec![denoised_csv.clone(), bundle]);

    let (model_path, _report) = cmd_train(ctx, &denoised_csv, opts)?;
    manifest.record_stage(
        "train",
        vec![model_path, ctx.path(REPORT_JSON), ctx.path(CONFUSION_CSV)],
    );

    manifest.finalize()?;
    let manifest_path = ctx.path(MANIFEST_JSON);
    manifest.write(&manifest_path)?;
    ctx.say(&format!(
        "run {} complete; manifest at {}",
        manifest.run_id,
        manifest_path.display()
    ));
    Ok(manifest_path)
}
