//! K-nearest-neighbor baseline, usually run on PCA-reduced features.

use super::pca::PcaModel;
use super::{Classifier, LabeledDataset};
use crate::error::{Error, Result};

/// Majority label among the `k` training points nearest to `x` in
/// Euclidean distance. Distance ties are broken by sample index, label
/// ties by lowest class id.
pub fn knn_predict(train: &LabeledDataset, x: &[f64], k: usize) -> Result<usize> {
    if k == 0 {
        return Err(Error::InvalidParam {
            name: "k",
            reason: "must be at least 1".into(),
        });
    }
    if k > train.n_samples() {
        return Err(Error::InvalidParam {
            name: "k",
            reason: format!("k={k} exceeds {} training samples", train.n_samples()),
        });
    }
    if x.len() != train.n_dims() {
        return Err(Error::DimensionMismatch {
            expected: train.n_dims(),
            got: x.len(),
        });
    }
    let mut dist_idx: Vec<(f64, usize)> = train
        .features
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let d2: f64 = row.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            (d2, i)
        })
        .collect();
    dist_idx.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut votes = vec![0u32; train.n_classes()];
    for &(_, i) in dist_idx.iter().take(k) {
        votes[train.labels[i]] += 1;
    }
    Ok(super::forest::argmax_lowest(&votes))
}

/// A fitted baseline: the training set, `k`, and an optional PCA front end.
pub struct KnnClassifier {
    train: LabeledDataset,
    k: usize,
    pca: Option<PcaModel>,
}

impl KnnClassifier {
    /// Fit on `train`, reducing to `pca_components` dimensions first when
    /// `Some` (the paper-style protocol for distance-based baselines).
    pub fn fit(train: &LabeledDataset, k: usize, pca_components: Option<usize>) -> Result<Self> {
        match pca_components {
            None => Ok(Self {
                train: train.clone(),
                k,
                pca: None,
            }),
            Some(n_components) => {
                let pca = PcaModel::fit(&train.features, n_components)?;
                let reduced: Vec<Vec<f64>> =
                    train.features.iter().map(|x| pca.transform(x)).collect();
                let train = LabeledDataset::new(
                    reduced,
                    train.labels.clone(),
                    train.class_names.clone(),
                    train.feature_meta.clone(),
                )?;
                Ok(Self {
                    train,
                    k,
                    pca: Some(pca),
                })
            }
        }
    }

    pub fn name(&self) -> String {
        match &self.pca {
            Some(pca) => format!("knn-k{}-pca{}", self.k, pca.n_components()),
            None => format!("knn-k{}", self.k),
        }
    }
}

impl Classifier for KnnClassifier {
    fn predict(&self, x: &[f64]) -> Result<usize> {
        match &self.pca {
            Some(pca) => knn_predict(&self.train, &pca.transform(x), self.k),
            None => knn_predict(&self.train, x, self.k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::FeatureMeta;

    fn dataset(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> LabeledDataset {
        LabeledDataset::new(
            features,
            labels,
            (0..n_classes).map(|c| format!("c{c}")).collect(),
            FeatureMeta {
                bin_width_hz: 1.0,
                n_subwindows: 1,
                pool_width: 1,
            },
        )
        .unwrap()
    }

    #[test]
    fn nearest_single_neighbor_returns_its_label() {
        let ds = dataset(
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![0, 1, 0],
            2,
        );
        assert_eq!(knn_predict(&ds, &[1.0, 1.0], 1).unwrap(), 1);
    }

    #[test]
    fn full_neighborhood_tie_goes_to_lowest_class_id() {
        let ds = dataset(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1, 0, 1, 0],
            2,
        );
        assert_eq!(knn_predict(&ds, &[1.5], 4).unwrap(), 0);
    }

    #[test]
    fn k_bounds_are_validated() {
        let ds = dataset(vec![vec![0.0], vec![1.0]], vec![0, 1], 2);
        assert!(matches!(
            knn_predict(&ds, &[0.0], 0),
            Err(Error::InvalidParam { name: "k", .. })
        ));
        assert!(matches!(
            knn_predict(&ds, &[0.0], 3),
            Err(Error::InvalidParam { name: "k", .. })
        ));
    }

    /// Exhaustive-scan selection written from the definition.
    fn oracle_knn(ds: &LabeledDataset, x: &[f64], k: usize) -> usize {
        let mut all: Vec<(f64, usize, usize)> = ds
            .features
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let d: f64 = row
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, i, ds.labels[i])
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = vec![0u32; ds.n_classes()];
        for &(_, _, label) in all.iter().take(k) {
            votes[label] += 1;
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        best
    }

    #[test]
    fn matches_exhaustive_scan_oracle_on_random_queries() {
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let features: Vec<Vec<f64>> = (0..50).map(|_| vec![next(), next(), next()]).collect();
        let labels: Vec<usize> = (0..50).map(|i| i % 4).collect();
        let ds = dataset(features, labels, 4);
        for _ in 0..100 {
            let q = vec![next(), next(), next()];
            assert_eq!(knn_predict(&ds, &q, 5).unwrap(), oracle_knn(&ds, &q, 5));
        }
    }

    #[test]
    fn pca_front_end_reduces_before_distance() {
        // 3-D data varying along one axis: PCA to 1 component must keep
        // the classes separable
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            features.push(vec![i as f64, 0.1 * i as f64, -0.2 * i as f64]);
            labels.push(usize::from(i >= 5));
        }
        let ds = dataset(features, labels, 2);
        let clf = KnnClassifier::fit(&ds, 3, Some(1)).unwrap();
        assert_eq!(clf.name(), "knn-k3-pca1");
        assert_eq!(clf.predict(&[1.0, 0.1, -0.2]).unwrap(), 0);
        assert_eq!(clf.predict(&[8.0, 0.8, -1.6]).unwrap(), 1);
    }
}
