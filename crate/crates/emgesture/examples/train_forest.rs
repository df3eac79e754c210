//! Classification on a small synthetic dataset: random forest against the
//! KNN(PCA) baseline, with a confusion matrix.
//!
//! Uses shortened recordings (10 segments per class) so it finishes in
//! seconds; the full 46-per-class reference run lives in `full_pipeline`.
//!
//! ```bash
//! cargo run --example train_forest
//! ```

use emgesture::config::{recording_seed, PipelineConfig};
use emgesture::ml::forest::{ForestModel, ForestParams};
use emgesture::ml::knn::KnnClassifier;
use emgesture::ml::{evaluate, train_test_split, LabeledDataset};
use emgesture::spectrum::{average_power_spectrum, FeatureRow};
use emgesture::synth::{synth_recording, SynthConfig};

fn main() -> emgesture::Result<()> {
    let cfg = PipelineConfig::reference();
    let g = &cfg.geometry;

    let mut rows: Vec<FeatureRow> = Vec::new();
    for (c, profile) in cfg.profiles.iter().enumerate() {
        let scfg = SynthConfig {
            seed: recording_seed(cfg.synth.seed, c, 0, 1),
            ..cfg.synth.clone()
        };
        let rec = synth_recording(&scfg, profile, 5.0)?;
        for seg in rec.segment(g.segment_len_s)? {
            rows.push(FeatureRow {
                label: profile.name.clone(),
                aps: average_power_spectrum(&seg, g.subwindow_len_s, cfg.window)?,
            });
        }
    }
    let names = cfg.class_names();
    let ds = LabeledDataset::from_feature_rows(&rows, Some(&names))?.pooled(cfg.pool_max_bins);
    println!(
        "dataset: {} samples x {} dims, {} classes",
        ds.n_samples(),
        ds.n_dims(),
        ds.n_classes()
    );

    let (train, test) = train_test_split(&ds, 0.2, 1)?;
    let model = ForestModel::fit(
        &train,
        &ForestParams {
            seed: 1,
            ..cfg.forest.clone()
        },
    )?;
    let rf = evaluate(&model, &test, "random-forest", 1)?;
    println!(
        "random forest: accuracy {:.3} (oob {:.3})",
        rf.accuracy,
        model.oob_estimate.unwrap_or(f64::NAN)
    );

    let knn = KnnClassifier::fit(&train, cfg.knn_k, Some(32))?;
    let kr = evaluate(&knn, &test, &knn.name(), 1)?;
    println!("{}: accuracy {:.3}", kr.model_name, kr.accuracy);

    println!("forest confusion (rows = truth):");
    for (i, row) in rf.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>2}")).collect();
        println!("  {:<14} {}", rf.class_names[i], cells.join(" "));
    }
    Ok(())
}
