// dev probe: sweep scenario variants, measuring raw / whole-spectrum /
// mode-wise denoised accuracy to engineer the reference config
use emgesture::config::{recording_seed, PipelineConfig};
use emgesture::denoise::{denoise_aps_with_status, denoise_whole_spectrum, mean_aps, NoiseProfile};
use emgesture::ml::forest::ForestModel;
use emgesture::ml::knn::KnnClassifier;
use emgesture::ml::{evaluate, train_test_split, LabeledDataset};
use emgesture::spectrum::{average_power_spectrum, FeatureRow, SpectrumSource};
use emgesture::synth::{synth_noise, synth_recording, SynthConfig};

fn build_rows(cfg: &PipelineConfig) -> (Vec<FeatureRow>, Vec<FeatureRow>) {
    let g = &cfg.geometry;
    let mut gesture_rows = Vec::new();
    for (c, profile) in cfg.profiles.iter().enumerate() {
        let seed = recording_seed(cfg.synth.seed, c, 0, g.takes);
        let scfg = SynthConfig { seed, ..cfg.synth.clone() };
        let rec = synth_recording(&scfg, profile, g.duration_s).unwrap();
        let trimmed = rec.trim(g.trim_start_s, g.trim_end_s).unwrap();
        for seg in trimmed.segment(g.segment_len_s).unwrap() {
            let aps = average_power_spectrum(&seg, g.subwindow_len_s, cfg.window).unwrap();
            gesture_rows.push(FeatureRow { label: profile.name.clone(), aps });
        }
    }
    let noise = synth_noise(&cfg.synth, g.duration_s).unwrap();
    let trimmed = noise.trim(g.trim_start_s, g.trim_end_s).unwrap();
    let noise_rows: Vec<FeatureRow> = trimmed
        .segment(g.segment_len_s)
        .unwrap()
        .iter()
        .map(|seg| FeatureRow {
            label: "noise".into(),
            aps: average_power_spectrum(seg, g.subwindow_len_s, cfg.window)
                .unwrap()
                .with_source(SpectrumSource::Noise),
        })
        .collect();
    (gesture_rows, noise_rows)
}

fn dataset(cfg: &PipelineConfig, rows: &[FeatureRow]) -> LabeledDataset {
    let names = cfg.class_names();
    LabeledDataset::from_feature_rows(rows, Some(&names))
        .unwrap()
        .pooled(cfg.pool_max_bins)
}

fn rf_accuracy(cfg: &PipelineConfig, ds: &LabeledDataset, seed: u64) -> f64 {
    let (train, test) = train_test_split(ds, cfg.split.test_fraction, seed).unwrap();
    let params = emgesture::ml::forest::ForestParams { seed, ..cfg.forest.clone() };
    let model = ForestModel::fit(&train, &params).unwrap();
    evaluate(&model, &test, "rf", seed).unwrap().accuracy
}

fn knn_accuracy(cfg: &PipelineConfig, ds: &LabeledDataset, seed: u64) -> f64 {
    let (train, test) = train_test_split(ds, cfg.split.test_fraction, seed).unwrap();
    let pca = cfg.pca_components.min(train.n_samples().min(train.n_dims()));
    let clf = KnnClassifier::fit(&train, cfg.knn_k, Some(pca)).unwrap();
    evaluate(&clf, &test, "knn", seed).unwrap().accuracy
}

struct Scenario {
    name: &'static str,
    noise_std: f64,
    floor_wander: f64,
    ambient_wander: f64,
    carrier_drift: f64,
    k_modes: usize,
    alpha: f64,
}

fn evaluate_scenario(s: &Scenario, n_seeds: u64, with_knn: bool) {
    let mut cfg = PipelineConfig::reference();
    cfg.synth.noise_std = s.noise_std;
    cfg.synth.noise_wander_std = s.floor_wander;
    cfg.synth.ambient_wander_std = s.ambient_wander;
    cfg.synth.carrier_level_wander_std = s.carrier_drift;
    cfg.vmd.k_modes = s.k_modes;
    cfg.vmd.alpha = s.alpha;

    let t0 = std::time::Instant::now();
    let (gesture_rows, noise_rows) = build_rows(&cfg);
    let noise_spectra: Vec<_> = noise_rows.iter().map(|r| r.aps.clone()).collect();
    let profile_aps = mean_aps(&noise_spectra).unwrap();

    let ng = &gesture_rows[0].aps;
    let mut snrs = Vec::new();
    for center in [80usize, 180, 300, 440] {
        let w = 10usize;
        let sig: f64 = (center - w..=center + w).map(|k| ng.power[k]).sum::<f64>()
            / (2 * w + 1) as f64;
        let noi: f64 = (center - w..=center + w)
            .map(|k| profile_aps.power[k])
            .sum::<f64>()
            / (2 * w + 1) as f64;
        snrs.push(10.0 * ((sig - noi).max(1e-9) / noi).log10());
    }

    let (profile, _) = NoiseProfile::from_aps_traced(profile_aps.clone(), &cfg.vmd).unwrap();
    let mut nonconv = usize::from(!profile.mode_set.converged);
    let vmd_rows: Vec<FeatureRow> = gesture_rows
        .iter()
        .map(|r| {
            let (aps, ok) =
                denoise_aps_with_status(&r.aps, &profile, &cfg.vmd, cfg.pairing_threshold).unwrap();
            nonconv += usize::from(!ok);
            FeatureRow { label: r.label.clone(), aps }
        })
        .collect();
    let plain_rows: Vec<FeatureRow> = gesture_rows
        .iter()
        .map(|r| FeatureRow {
            label: r.label.clone(),
            aps: denoise_whole_spectrum(&r.aps, &profile_aps).unwrap(),
        })
        .collect();

    let raw_ds = dataset(&cfg, &gesture_rows);
    let plain_ds = dataset(&cfg, &plain_rows);
    let vmd_ds = dataset(&cfg, &vmd_rows);

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut raw_acc = Vec::new();
    let mut plain_acc = Vec::new();
    let mut vmd_acc = Vec::new();
    let mut knn_acc = Vec::new();
    for seed in 0..n_seeds {
        raw_acc.push(rf_accuracy(&cfg, &raw_ds, seed));
        plain_acc.push(rf_accuracy(&cfg, &plain_ds, seed));
        vmd_acc.push(rf_accuracy(&cfg, &vmd_ds, seed));
        if with_knn {
            knn_acc.push(knn_accuracy(&cfg, &vmd_ds, seed));
        }
        eprintln!("  seed {seed}: raw {:.3} plain {:.3} vmd {:.3}{}",
            raw_acc.last().unwrap(), plain_acc.last().unwrap(), vmd_acc.last().unwrap(),
            if with_knn { format!(" knn {:.3}", knn_acc.last().unwrap()) } else { String::new() });
    }
    println!(
        "{:<22} snr[{:+.1} {:+.1} {:+.1} {:+.1}] nc={nonconv:<3} raw {:.3} plain {:.3} vmd {:.3}{} | gap {:+.1}pp  vmd>=.95: {}/{} rf>=knn: {} ({:.0?})",
        s.name,
        snrs[0], snrs[1], snrs[2], snrs[3],
        mean(&raw_acc),
        mean(&plain_acc),
        mean(&vmd_acc),
        if with_knn { format!(" knn {:.3}", mean(&knn_acc)) } else { String::new() },
        100.0 * (mean(&vmd_acc) - mean(&raw_acc)),
        vmd_acc.iter().filter(|&&a| a >= 0.95).count(),
        n_seeds,
        if with_knn { vmd_acc.iter().zip(&knn_acc).all(|(v, k)| v >= k).to_string() } else { "-".into() },
        t0.elapsed(),
    );
}

fn main() {
    let n_seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let mk = |name: &'static str, noise_std: f64, floor_w: f64, ambient_wander: f64, k: usize, alpha: f64| Scenario {
        name,
        noise_std,
        floor_wander: floor_w,
        ambient_wander,
        carrier_drift: 0.0,
        k_modes: k,
        alpha,
    };
    let scenarios = vec![
        mk("s1.85-f.05-a.40", 1.85, 0.05, 0.40, 6, 800.0),
        mk("s1.80-f.05-a.40", 1.80, 0.05, 0.40, 6, 800.0),
    ];
    for s in &scenarios {
        evaluate_scenario(s, n_seeds, true);
    }
}
