//! Principal component analysis by iterative eigen-extraction.
//!
//! The top eigenvectors of the sample covariance are pulled out one at a
//! time by power iteration with deflation. When there are fewer samples
//! than dimensions the iteration runs on the n x n Gram matrix instead and
//! the eigenvectors are mapped back, which is exact for the leading
//! components and much cheaper at spectrum-size dimensionality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Convergence threshold for a single eigenvector.
const EIGEN_TOL: f64 = 1e-10;
const EIGEN_MAX_ITER: usize = 20_000;
// fixed stream so fits are reproducible without a caller-provided seed
const EIGEN_SEED: u64 = 0x9a5c_e121;

/// Mean vector plus projection onto the leading principal components.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-major components, unit length, sign-canonicalized.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the sample covariance, one per component.
    pub explained_variance: Vec<f64>,
    /// Fraction of the total variance each component explains.
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    /// Fit on a sample matrix (rows are observations).
    pub fn fit(features: &[Vec<f64>], n_components: usize) -> Result<PcaModel> {
        let n = features.len();
        let d = features.first().map_or(0, Vec::len);
        if n < 2 || d == 0 {
            return Err(Error::DegenerateDataset(
                "PCA needs at least two samples with at least one dimension".into(),
            ));
        }
        if n_components == 0 || n_components > n.min(d) {
            return Err(Error::InvalidParam {
                name: "n_components",
                reason: format!("must be in 1..={} (min of samples and dims), got {n_components}", n.min(d)),
            });
        }

        let mut mean = vec![0.0f64; d];
        for row in features {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let centered: Vec<Vec<f64>> = features
            .iter()
            .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect();

        // total variance = trace of the covariance, independent of basis
        let norm = 1.0 / (n as f64 - 1.0);
        let total_variance: f64 = centered
            .iter()
            .flat_map(|row| row.iter().map(|v| v * v))
            .sum::<f64>()
            * norm;

        let (explained_variance, components) = if d <= n {
            // d x d covariance, eigenvectors are the components directly
            let mut cov = vec![vec![0.0f64; d]; d];
            for row in &centered {
                for i in 0..d {
                    let ri = row[i];
                    for j in i..d {
                        cov[i][j] += ri * row[j];
                    }
                }
            }
            for i in 0..d {
                for j in i..d {
                    cov[i][j] *= norm;
                    cov[j][i] = cov[i][j];
                }
            }
            symmetric_top_eigen(&mut cov, n_components)
        } else {
            // n x n Gram dual: same nonzero eigenvalues; v = X^T u / ||X^T u||
            let mut gram = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for j in i..n {
                    let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                    gram[i][j] = dot * norm;
                    gram[j][i] = gram[i][j];
                }
            }
            let (values, dual_vectors) = symmetric_top_eigen(&mut gram, n_components);
            let components = dual_vectors
                .iter()
                .map(|u| {
                    let mut v = vec![0.0f64; d];
                    for (ui, row) in u.iter().zip(&centered) {
                        for (vj, xj) in v.iter_mut().zip(row) {
                            *vj += ui * xj;
                        }
                    }
                    normalize(&mut v);
                    canonicalize_sign(&mut v);
                    v
                })
                .collect();
            (values, components)
        };

        let explained_variance_ratio = explained_variance
            .iter()
            .map(|&v| if total_variance > 0.0 { v / total_variance } else { 0.0 })
            .collect();

        Ok(PcaModel {
            mean,
            components,
            explained_variance,
            explained_variance_ratio,
        })
    }

    /// Project a centered `x` onto the components.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|comp| {
                comp.iter()
                    .zip(x.iter().zip(&self.mean))
                    .map(|(c, (v, m))| c * (v - m))
                    .sum()
            })
            .collect()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

// fix the overall sign so results don't depend on the start vector
fn canonicalize_sign(v: &mut [f64]) {
    let lead = v
        .iter()
        .cloned()
        .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
        .unwrap_or(0.0);
    if lead < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Top eigenpairs of a symmetric matrix by power iteration with deflation.
/// The matrix is consumed (deflated in place).
pub(crate) fn symmetric_top_eigen(
    a: &mut [Vec<f64>],
    n_components: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut rng = ChaCha20Rng::seed_from_u64(EIGEN_SEED);
    let mut values = Vec::with_capacity(n_components);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(n_components);

    for _ in 0..n_components {
        let mut v: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
        normalize(&mut v);
        let mut lambda = 0.0f64;
        let mut next = vec![0.0f64; d];
        for _ in 0..EIGEN_MAX_ITER {
            for (i, slot) in next.iter_mut().enumerate() {
                *slot = a[i].iter().zip(&v).map(|(m, x)| m * x).sum();
            }
            lambda = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if lambda == 0.0 {
                break; // deflated to the null space
            }
            for x in next.iter_mut() {
                *x /= lambda;
            }
            // sign-insensitive change between iterates, linear in the angle
            let mut diff_pos = 0.0f64;
            let mut diff_neg = 0.0f64;
            for (a, b) in next.iter().zip(&v) {
                diff_pos += (a - b) * (a - b);
                diff_neg += (a + b) * (a + b);
            }
            let delta = diff_pos.min(diff_neg).sqrt();
            std::mem::swap(&mut v, &mut next);
            if delta < EIGEN_TOL {
                break;
            }
        }
        // Rayleigh quotient gives the signed eigenvalue (power iteration's
        // growth factor loses the sign)
        let mut av = vec![0.0f64; d];
        for (i, slot) in av.iter_mut().enumerate() {
            *slot = a[i].iter().zip(&v).map(|(m, x)| m * x).sum();
        }
        let rayleigh: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
        let _ = lambda;

        canonicalize_sign(&mut v);
        for i in 0..d {
            for j in 0..d {
                a[i][j] -= rayleigh * v[i] * v[j];
            }
        }
        values.push(rayleigh);
        vectors.push(v);
    }
    (values, vectors)
}
