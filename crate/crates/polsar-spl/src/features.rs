//! Cloude-Pottier feature extraction: eigenvalues, span, entropy, mean
//! alpha angle, and anisotropy, plus z-score normalization.

use crate::coherency::{eig3_hermitian, CoherencyMatrix, EigenSystem};
use crate::dataset::{FeatureGrid, GridDataset, PixelSample, Split};
use crate::error::{Error, Result};
use crate::parallel::{try_maybe_par_map, try_seq_map};

pub const FEATURE_DIM: usize = 7;

/// The 7 per-pixel features, in fixed order
/// `[lambda1, lambda2, lambda3, span, H, alpha_mean, A]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Entropy `H`, mean alpha angle and anisotropy `A` from a sorted
/// eigensystem.
///
/// `H` uses log base 3 so that an equal spectrum gives exactly 1; the
/// alpha angle of component k is `arccos(|e_k[0]|)` and the mean is
/// weighted by the eigenvalue probabilities. `A = (l2-l3)/(l2+l3)` with
/// the convention `A = 0` when the denominator vanishes.
pub fn cloude_pottier(es: &EigenSystem) -> Result<(f64, f64, f64)> {
    let span: f64 = es.eigenvalues.iter().sum();
    if span <= 0.0 {
        return Err(Error::DegenerateSpan(span));
    }
    let mut entropy = 0.0;
    let mut alpha_mean = 0.0;
    for k in 0..3 {
        let p = es.eigenvalues[k] / span;
        if p > 0.0 {
            entropy -= p * p.ln();
        }
        let cos_alpha = es.eigenvectors[k][0].norm().clamp(0.0, 1.0);
        alpha_mean += p * cos_alpha.acos();
    }
    let entropy = (entropy / 3f64.ln()).clamp(0.0, 1.0);
    let denom = es.eigenvalues[1] + es.eigenvalues[2];
    let anisotropy = if denom > 0.0 {
        ((es.eigenvalues[1] - es.eigenvalues[2]) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok((entropy, alpha_mean, anisotropy))
}

/// The full 7-feature vector of one coherency matrix.
pub fn feature_vector(t: &CoherencyMatrix) -> Result<FeatureVector> {
    let es = eig3_hermitian(t)?;
    let (h, alpha, a) = cloude_pottier(&es)?;
    let [l1, l2, l3] = es.eigenvalues;
    Ok(FeatureVector([l1, l2, l3, l1 + l2 + l3, h, alpha, a]))
}

/// Per-dimension mean and standard deviation used for z-scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: [f64; FEATURE_DIM],
    pub std: [f64; FEATURE_DIM],
}

const STD_FLOOR: f64 = 1e-12;

impl FeatureStats {
    /// Identity transform (used when normalization is disabled).
    pub fn identity() -> Self {
        Self {
            mean: [0.0; FEATURE_DIM],
            std: [1.0; FEATURE_DIM],
        }
    }

    /// Population statistics of the given samples.
    pub fn fit(samples: &[FeatureVector]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::EmptyInput {
                needed: 2,
                got: samples.len(),
            });
        }
        let n = samples.len() as f64;
        let mut mean = [0.0; FEATURE_DIM];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s.0.iter()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; FEATURE_DIM];
        for s in samples {
            for d in 0..FEATURE_DIM {
                let diff = s.0[d] - mean[d];
                var[d] += diff * diff;
            }
        }
        let mut std = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            std[d] = (var[d] / n).sqrt();
        }
        Ok(Self { mean, std })
    }

    /// Applies the z-score; dimensions with degenerate variance map to 0.
    pub fn apply(&self, f: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; FEATURE_DIM];
        for d in 0..FEATURE_DIM {
            out[d] = if self.std[d] < STD_FLOOR {
                0.0
            } else {
                (f.0[d] - self.mean[d]) / self.std[d]
            };
        }
        FeatureVector(out)
    }
}

/// Z-scores the samples with their own statistics and returns the
/// statistics for reuse on held-out pixels.
pub fn normalize_features(samples: &[FeatureVector]) -> Result<(Vec<FeatureVector>, FeatureStats)> {
    let stats = FeatureStats::fit(samples)?;
    let scaled = samples.iter().map(|s| stats.apply(s)).collect();
    Ok((scaled, stats))
}

/// Extracts raw (unnormalized) features for every pixel of a grid.
pub fn extract_grid(ds: &GridDataset) -> Result<FeatureGrid> {
    let samples = try_maybe_par_map(ds.pixels.len(), |i| sample_at(ds, i))?;
    Ok(FeatureGrid {
        width: ds.width,
        height: ds.height,
        samples,
    })
}

/// Sequential reference path for [`extract_grid`].
pub fn extract_grid_seq(ds: &GridDataset) -> Result<FeatureGrid> {
    let samples = try_seq_map(ds.pixels.len(), |i| sample_at(ds, i))?;
    Ok(FeatureGrid {
        width: ds.width,
        height: ds.height,
        samples,
    })
}

fn sample_at(ds: &GridDataset, i: usize) -> Result<PixelSample> {
    let px = &ds.pixels[i];
    let features = feature_vector(&px.matrix)?;
    Ok(PixelSample {
        x: (i % ds.width) as u32,
        y: (i / ds.width) as u32,
        label: px.label,
        split: px.split,
        features,
    })
}

/// Statistics fitted on the training split only, for reuse everywhere.
pub fn fit_training_stats(grid: &FeatureGrid) -> Result<FeatureStats> {
    let train: Vec<FeatureVector> = grid
        .samples
        .iter()
        .filter(|s| s.split == Split::Train)
        .map(|s| s.features)
        .collect();
    FeatureStats::fit(&train)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_spectrum_extremes() {
        let es = eig3_hermitian(&CoherencyMatrix::identity()).unwrap();
        let (h, _alpha, a) = cloude_pottier(&es).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn rank_one_spectrum() {
        let es = eig3_hermitian(&CoherencyMatrix::diagonal(1.0, 0.0, 0.0)).unwrap();
        let (h, alpha, a) = cloude_pottier(&es).unwrap();
        assert!(h.abs() < 1e-12);
        // dominant eigenvector is (1,0,0), so arccos(1) = 0
        assert!(alpha.abs() < 1e-12);
        assert_eq!(a, 0.0);
    }

    #[test]
    fn direct_formula_oracle() {
        let es = eig3_hermitian(&CoherencyMatrix::diagonal(0.5, 0.3, 0.2)).unwrap();
        let (h, _alpha, a) = cloude_pottier(&es).unwrap();
        // independent evaluation of the defining formulas
        let ps: [f64; 3] = [0.5, 0.3, 0.2];
        let h_expect: f64 = -ps.iter().map(|p| p * p.ln()).sum::<f64>() / 3f64.ln();
        assert!((h - h_expect).abs() < 1e-12);
        assert!((a - 0.2).abs() < 1e-15);
    }

    #[test]
    fn feature_vector_identity() {
        let f = feature_vector(&CoherencyMatrix::identity()).unwrap();
        assert!((f.0[0] - 1.0).abs() < 1e-12);
        assert!((f.0[1] - 1.0).abs() < 1e-12);
        assert!((f.0[2] - 1.0).abs() < 1e-12);
        assert!((f.0[3] - 3.0).abs() < 1e-12);
        assert!((f.0[4] - 1.0).abs() < 1e-12);
        assert_eq!(f.0[6], 0.0);
    }

    #[test]
    fn feature_vector_rank_one() {
        let f = feature_vector(&CoherencyMatrix::diagonal(1.0, 0.0, 0.0)).unwrap();
        let expect = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        for (got, want) in f.0.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn features_compose_from_parts() {
        let mut state = 0xfeed_beef_dead_cafeu64;
        for _ in 0..100 {
            let t = crate::coherency::test_support::random_psd(&mut state);
            let es = eig3_hermitian(&t).unwrap();
            let (h, alpha, a) = cloude_pottier(&es).unwrap();
            let f = feature_vector(&t).unwrap();
            assert_eq!(f.0[0], es.eigenvalues[0]);
            assert_eq!(f.0[3], es.eigenvalues.iter().sum::<f64>());
            assert_eq!(f.0[4], h);
            assert_eq!(f.0[5], alpha);
            assert_eq!(f.0[6], a);
        }
    }

    #[test]
    fn scaling_invariance() {
        let mut state = 0x0123_4567_89ab_cdefu64;
        for _ in 0..100 {
            let t = crate::coherency::test_support::random_psd(&mut state);
            let f1 = feature_vector(&t).unwrap();
            let f2 = feature_vector(&t.scale(7.3)).unwrap();
            for d in 4..7 {
                assert!(
                    (f1.0[d] - f2.0[d]).abs() < 1e-12,
                    "dim {d}: {} vs {}",
                    f1.0[d],
                    f2.0[d]
                );
            }
        }
    }

    #[test]
    fn normalize_two_point_symmetry() {
        let a = FeatureVector([0.0; 7]);
        let b = FeatureVector([2.0; 7]);
        let (scaled, _) = normalize_features(&[a, b]).unwrap();
        for d in 0..7 {
            assert!((scaled[0].0[d] + 1.0).abs() < 1e-12);
            assert!((scaled[1].0[d] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_constant_column_is_zero() {
        let mut a = FeatureVector([1.0; 7]);
        let mut b = FeatureVector([3.0; 7]);
        a.0[2] = 5.0;
        b.0[2] = 5.0;
        let (scaled, _) = normalize_features(&[a, b]).unwrap();
        assert_eq!(scaled[0].0[2], 0.0);
        assert_eq!(scaled[1].0[2], 0.0);
    }

    #[test]
    fn normalize_recomputed_moments() {
        let mut state = 0x5555_aaaa_5555_aaaau64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let samples: Vec<FeatureVector> = (0..200)
            .map(|_| {
                let mut f = [0.0; 7];
                for v in &mut f {
                    *v = next() * 10.0 - 3.0;
                }
                FeatureVector(f)
            })
            .collect();
        let (scaled, _) = normalize_features(&samples).unwrap();
        let n = scaled.len() as f64;
        for d in 0..7 {
            let mean: f64 = scaled.iter().map(|s| s.0[d]).sum::<f64>() / n;
            let var: f64 = scaled.iter().map(|s| (s.0[d] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn normalize_rejects_single_sample() {
        let err = normalize_features(&[FeatureVector([0.0; 7])]).unwrap_err();
        assert!(matches!(err, Error::EmptyInput { .. }));
    }
}
