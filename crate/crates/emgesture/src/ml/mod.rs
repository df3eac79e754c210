//! Dataset handling, train/test splitting, and evaluation.
//!
//! Feature vectors are averaged power spectra, one row per segment. The
//! classifiers live in the submodules: the random forest (`forest`), the
//! nearest-neighbor baseline (`knn`), and the principal-component reducer
//! used in front of it (`pca`).

pub mod forest;
pub mod knn;
pub mod pca;

use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::spectrum::FeatureRow;

/// Provenance of the feature dimensions, carried through training into the
/// model file.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureMeta {
    pub bin_width_hz: f64,
    pub n_subwindows: usize,
    /// Max-pooling width applied to the raw spectrum; 1 means unpooled.
    pub pool_width: usize,
}

/// Feature matrix with per-sample gesture labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub feature_meta: FeatureMeta,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
        feature_meta: FeatureMeta,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DegenerateDataset(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if features.is_empty() {
            return Err(Error::DegenerateDataset("empty dataset".into()));
        }
        let dims = features[0].len();
        if features.iter().any(|f| f.len() != dims) {
            return Err(Error::DegenerateDataset("ragged feature matrix".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::DegenerateDataset(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            features,
            labels,
            class_names,
            feature_meta,
        })
    }

    /// Build a dataset from labeled spectrum rows. Class ids follow
    /// `class_order` when given, otherwise the lexicographically sorted
    /// distinct labels.
    pub fn from_feature_rows(rows: &[FeatureRow], class_order: Option<&[String]>) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput)?;
        let class_names: Vec<String> = match class_order {
            Some(order) => order.to_vec(),
            None => {
                let mut names: Vec<String> = rows.iter().map(|r| r.label.clone()).collect();
                names.sort();
                names.dedup();
                names
        }
        };
        let mut features = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for row in rows {
            let id = class_names
                .iter()
                .position(|n| *n == row.label)
                .ok_or_else(|| {
                    Error::DegenerateDataset(format!("label {:?} not in class list", row.label))
                })?;
            labels.push(id);
            features.push(row.aps.power.clone());
        }
        LabeledDataset::new(
            features,
            labels,
            class_names,
            FeatureMeta {
                bin_width_hz: first.aps.bin_width_hz,
                n_subwindows: first.aps.n_subwindows,
                pool_width: 1,
            },
        )
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_dims(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Max-pool wide spectra down to at most `max_bins` dimensions so tree
    /// training stays fast; band-level attenuation features survive pooling.
    pub fn pooled(&self, max_bins: usize) -> LabeledDataset {
        let dims = self.n_dims();
        if dims <= max_bins || max_bins == 0 {
            return self.clone();
        }
        let width = dims.div_ceil(max_bins);
        let features: Vec<Vec<f64>> = self
            .features
            .iter()
            .map(|row| {
                row.chunks(width)
                    .map(|chunk| chunk.iter().cloned().fold(f64::MIN, f64::max))
                    .collect()
            })
            .collect();
        LabeledDataset {
            features,
            labels: self.labels.clone(),
            class_names: self.class_names.clone(),
            feature_meta: FeatureMeta {
                pool_width: self.feature_meta.pool_width * width,
                ..self.feature_meta.clone()
            },
        }
    }

    fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            feature_meta: self.feature_meta.clone(),
        }
    }
}

/// Stratified train/test partition, deterministic under `seed`.
///
/// Each class contributes `ceil(class_count * test_fraction)` test samples
/// (clamped so at least one training sample remains), which keeps the
/// per-class counts within one of the exact ratio.
pub fn train_test_split(
    ds: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    validate_fraction(test_fraction)?;
    for (c, count) in ds.class_counts().iter().enumerate() {
        if *count < 2 {
            return Err(Error::DegenerateDataset(format!(
                "class {:?} has {count} sample(s); need at least 2",
                ds.class_names[c]
            )));
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut test_indices = Vec::new();
    let mut train_indices = Vec::new();
    for class in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..ds.n_samples())
            .filter(|&i| ds.labels[i] == class)
            .collect();
        members.shuffle(&mut rng);
        let count = members.len();
        let n_test = ((count as f64 * test_fraction).ceil() as usize).clamp(1, count - 1);
        test_indices.extend_from_slice(&members[..n_test]);
        train_indices.extend_from_slice(&members[n_test..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok((ds.subset(&train_indices), ds.subset(&test_indices)))
}

/// Plain random split without per-class balancing.
pub fn train_test_split_unstratified(
    ds: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    validate_fraction(test_fraction)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..ds.n_samples()).collect();
    indices.shuffle(&mut rng);
    let n_test = ((ds.n_samples() as f64 * test_fraction).ceil() as usize)
        .clamp(1, ds.n_samples() - 1);
    let mut test_indices = indices[..n_test].to_vec();
    let mut train_indices = indices[n_test..].to_vec();
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    Ok((ds.subset(&train_indices), ds.subset(&test_indices)))
}

fn validate_fraction(test_fraction: f64) -> Result<()> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParam {
            name: "test_fraction",
            reason: format!("must be in (0, 1), got {test_fraction}"),
        });
    }
    Ok(())
}

/// Anything that maps a feature vector to a class id.
pub trait Classifier {
    fn predict(&self, x: &[f64]) -> Result<usize>;
}

/// Accuracy, confusion matrix, and per-class recall on a test set.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub model_name: String,
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]` counts.
    pub confusion: Vec<Vec<u32>>,
    pub per_class_recall: Vec<Option<f64>>,
    pub class_names: Vec<String>,
    pub n_test: usize,
    pub split_seed: u64,
}

impl EvalReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<EvalReport> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Confusion matrix as CSV with a class-name header column/row.
    pub fn write_confusion_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        write!(out, "true\\predicted")?;
        for name in &self.class_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for (i, row) in self.confusion.iter().enumerate() {
            write!(out, "{}", self.class_names[i])?;
            for v in row {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Run a classifier over a test set and tabulate the results.
pub fn evaluate(
    model: &dyn Classifier,
    test: &LabeledDataset,
    model_name: &str,
    split_seed: u64,
) -> Result<EvalReport> {
    if test.n_samples() == 0 {
        return Err(Error::DegenerateDataset("empty test set".into()));
    }
    let n_classes = test.n_classes();
    let mut confusion = vec![vec![0u32; n_classes]; n_classes];
    for (x, &label) in test.features.iter().zip(&test.labels) {
        let predicted = model.predict(x)?;
        confusion[label][predicted.min(n_classes - 1)] += 1;
    }
    let trace: u32 = (0..n_classes).map(|i| confusion[i][i]).sum();
    let accuracy = f64::from(trace) / test.n_samples() as f64;
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u32 = row.iter().sum();
            (total > 0).then(|| f64::from(row[i]) / f64::from(total))
        })
        .collect();
    Ok(EvalReport {
        model_name: model_name.to_string(),
        accuracy,
        confusion,
        per_class_recall,
        class_names: test.class_names.clone(),
        n_test: test.n_samples(),
        split_seed,
    })
}
