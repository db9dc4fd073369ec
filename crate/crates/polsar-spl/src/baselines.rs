//! Comparison classifiers: the conventional SVM (all weights one, no
//! self-paced loop) and the nearest-center Wishart classifier.

use num_complex::Complex64;

use crate::coherency::{eig3_hermitian, CoherencyMatrix};
use crate::dataset::{GridDataset, LabelMap, Split};
use crate::error::{Error, Result};
use crate::parallel::{maybe_par_map, seq_map};
use crate::scene::cholesky3;
use crate::trainer::{train_multiclass_plain, MulticlassModel, TrainerConfig, TrainingTrace};

/// Conventional multiclass SVM: one-vs-rest with `v = 1` everywhere and a
/// single dual solve per class.
pub fn train_plain_svm(
    ds: &GridDataset,
    config: &TrainerConfig,
) -> Result<(MulticlassModel, Vec<TrainingTrace>)> {
    train_multiclass_plain(ds, config)
}

/// Per-class mean coherency matrices with cached inverse and
/// log-determinant.
#[derive(Debug, Clone)]
pub struct WishartCenters {
    pub classes: Vec<u32>,
    pub sigmas: Vec<CoherencyMatrix>,
    pub log_dets: Vec<f64>,
    pub inverses: Vec<[[Complex64; 3]; 3]>,
}

/// Arithmetic per-class means of the training coherency matrices.
///
/// Near-singular means are regularized by `1e-9 * trace/3` on the
/// diagonal before inversion so tiny classes stay usable.
pub fn wishart_centers(ds: &GridDataset) -> Result<WishartCenters> {
    let classes = ds.training_classes();
    if classes.is_empty() {
        return Err(Error::TooFewClasses(0));
    }
    let mut sigmas = Vec::with_capacity(classes.len());
    for &class in &classes {
        let mut sum = CoherencyMatrix::zero();
        let mut count = 0usize;
        for px in &ds.pixels {
            if px.split == Split::Train && px.label == class {
                sum = sum.add(&px.matrix);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyClass(class));
        }
        sigmas.push(sum.scale(1.0 / count as f64));
    }
    centers_from_means(classes, sigmas)
}

/// Builds the cached inverses and log-determinants for stored class
/// means; shared by training and model loading.
pub(crate) fn centers_from_means(
    classes: Vec<u32>,
    sigmas: Vec<CoherencyMatrix>,
) -> Result<WishartCenters> {
    let mut log_dets = Vec::with_capacity(classes.len());
    let mut inverses = Vec::with_capacity(classes.len());
    for (k, sigma) in sigmas.iter().enumerate() {
        let trace = sigma.trace();
        let needs_ridge = match eig3_hermitian(sigma) {
            Ok(es) => es.eigenvalues[2] < 1e-9 * trace,
            Err(_) => true,
        };
        let stabilized = if needs_ridge {
            sigma.add(&CoherencyMatrix::identity().scale(1e-9 * trace / 3.0))
        } else {
            *sigma
        };
        let chol = cholesky3(&stabilized.full())
            .map_err(|_| Error::SingularCenter(classes[k]))?;
        let log_det: f64 = 2.0 * (0..3).map(|i| chol[i][i].re.ln()).sum::<f64>();
        if !log_det.is_finite() || log_det < -690.0 {
            // determinant underflowed below ~1e-300
            return Err(Error::SingularCenter(classes[k]));
        }
        log_dets.push(log_det);
        inverses.push(invert_from_cholesky(&chol));
    }
    Ok(WishartCenters {
        classes,
        sigmas,
        log_dets,
        inverses,
    })
}

/// Inverse of `L L^H` by forward/back substitution on the identity.
fn invert_from_cholesky(l: &[[Complex64; 3]; 3]) -> [[Complex64; 3]; 3] {
    let mut inv = [[Complex64::ZERO; 3]; 3];
    for col in 0..3 {
        // forward solve L y = e_col
        let mut y = [Complex64::ZERO; 3];
        for i in 0..3 {
            let mut sum = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::ZERO
            };
            for k in 0..i {
                sum -= l[i][k] * y[k];
            }
            y[i] = sum / l[i][i].re;
        }
        // back solve L^H x = y
        let mut x = [Complex64::ZERO; 3];
        for i in (0..3).rev() {
            let mut sum = y[i];
            for k in (i + 1)..3 {
                sum -= l[k][i].conj() * x[k];
            }
            x[i] = sum / l[i][i].re;
        }
        for row in 0..3 {
            inv[row][col] = x[row];
        }
    }
    inv
}

/// Wishart distance `ln|Sigma| + Tr(Sigma^{-1} T)`.
pub fn wishart_distance(t: &CoherencyMatrix, sigma: &CoherencyMatrix) -> Result<f64> {
    let chol = cholesky3(&sigma.full()).map_err(|_| Error::SingularCenter(0))?;
    let log_det: f64 = 2.0 * (0..3).map(|i| chol[i][i].re.ln()).sum::<f64>();
    let inv = invert_from_cholesky(&chol);
    Ok(log_det + trace_product(&inv, &t.full()))
}

fn trace_product(a: &[[Complex64; 3]; 3], b: &[[Complex64; 3]; 3]) -> f64 {
    let mut tr = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr += (a[i][k] * b[k][i]).re;
        }
    }
    tr
}

/// Nearest Wishart center; distance ties go to the lowest class id.
pub fn wishart_classify(t: &CoherencyMatrix, centers: &WishartCenters) -> u32 {
    let full = t.full();
    let mut best = centers.classes[0];
    let mut best_d = f64::INFINITY;
    for k in 0..centers.classes.len() {
        let d = centers.log_dets[k] + trace_product(&centers.inverses[k], &full);
        if d < best_d {
            best_d = d;
            best = centers.classes[k];
        }
    }
    best
}

/// Classifies every pixel of a grid.
pub fn wishart_classify_map(ds: &GridDataset, centers: &WishartCenters) -> LabelMap {
    let labels = maybe_par_map(ds.pixels.len(), |i| wishart_classify(&ds.pixels[i].matrix, centers));
    LabelMap {
        width: ds.width,
        height: ds.height,
        labels,
    }
}

/// Sequential reference path for [`wishart_classify_map`].
pub fn wishart_classify_map_seq(ds: &GridDataset, centers: &WishartCenters) -> LabelMap {
    let labels = seq_map(ds.pixels.len(), |i| wishart_classify(&ds.pixels[i].matrix, centers));
    LabelMap {
        width: ds.width,
        height: ds.height,
        labels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Pixel;

    fn dataset_from(matrices: Vec<(CoherencyMatrix, u32)>) -> GridDataset {
        let width = matrices.len();
        let pixels: Vec<Pixel> = matrices
            .into_iter()
            .map(|(matrix, label)| Pixel {
                matrix,
                label,
                split: Split::Train,
            })
            .collect();
        GridDataset {
            width,
            height: 1,
            pixels,
        }
    }

    #[test]
    fn center_of_single_pixel_is_that_pixel() {
        let t = CoherencyMatrix::diagonal(2.0, 1.5, 0.5);
        let ds = dataset_from(vec![(t, 1), (CoherencyMatrix::identity(), 2)]);
        let centers = wishart_centers(&ds).unwrap();
        assert_eq!(centers.sigmas[0].to_scalars(), t.to_scalars());
    }

    #[test]
    fn center_is_arithmetic_mean() {
        let ds = dataset_from(vec![
            (CoherencyMatrix::diagonal(1.0, 1.0, 1.0), 1),
            (CoherencyMatrix::diagonal(3.0, 3.0, 3.0), 1),
            (CoherencyMatrix::identity(), 2),
        ]);
        let centers = wishart_centers(&ds).unwrap();
        assert_eq!(
            centers.sigmas[0].to_scalars(),
            CoherencyMatrix::diagonal(2.0, 2.0, 2.0).to_scalars()
        );
    }

    #[test]
    fn random_centers_match_direct_averaging() {
        let mut state = 0xabcdef12_34567890u64;
        let mut mats = Vec::new();
        for i in 0..30 {
            mats.push((crate::coherency::test_support::random_psd(&mut state), 1 + (i % 3)));
        }
        let ds = dataset_from(mats.clone());
        let centers = wishart_centers(&ds).unwrap();
        for (ci, class) in [1u32, 2, 3].iter().enumerate() {
            let members: Vec<&CoherencyMatrix> =
                mats.iter().filter(|(_, l)| l == class).map(|(m, _)| m).collect();
            let mut mean = CoherencyMatrix::zero();
            for m in &members {
                mean = mean.add(m);
            }
            mean = mean.scale(1.0 / members.len() as f64);
            let got = centers.sigmas[ci].to_scalars();
            for (g, e) in got.iter().zip(mean.to_scalars().iter()) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_distance_value() {
        let d = wishart_distance(&CoherencyMatrix::identity(), &CoherencyMatrix::identity())
            .unwrap();
        assert!((d - 3.0).abs() < 1e-12); // ln|I| + tr(I) = 0 + 3
    }

    #[test]
    fn pixel_at_center_classifies_to_it() {
        let a = CoherencyMatrix::diagonal(2.0, 0.5, 0.2);
        let b = CoherencyMatrix::diagonal(0.2, 0.5, 2.0);
        let ds = dataset_from(vec![(a, 1), (b, 2)]);
        let centers = wishart_centers(&ds).unwrap();
        assert_eq!(wishart_classify(&a, &centers), 1);
        assert_eq!(wishart_classify(&b, &centers), 2);
    }

    #[test]
    fn identical_centers_tie_to_lowest_id() {
        let t = CoherencyMatrix::identity();
        let ds = dataset_from(vec![(t, 3), (t, 7)]);
        let centers = wishart_centers(&ds).unwrap();
        assert_eq!(wishart_classify(&t, &centers), 3);
    }

    #[test]
    fn inverse_satisfies_identity() {
        let mut state = 0x7777_1111_3333_9999u64;
        for _ in 0..50 {
            let mut m = crate::coherency::test_support::random_psd(&mut state);
            // keep it comfortably positive definite
            m = m.add(&CoherencyMatrix::identity().scale(0.1));
            let chol = cholesky3(&m.full()).unwrap();
            let inv = invert_from_cholesky(&chol);
            let full = m.full();
            for r in 0..3 {
                for c in 0..3 {
                    let mut sum = Complex64::ZERO;
                    for k in 0..3 {
                        sum += full[r][k] * inv[k][c];
                    }
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((sum.re - expect).abs() < 1e-8);
                    assert!(sum.im.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn argmin_matches_brute_force_and_shift_invariance() {
        let mut state = 0x1357_9bdf_2468_aceu64;
        let protos: Vec<CoherencyMatrix> = (0..4)
            .map(|_| {
                crate::coherency::test_support::random_psd(&mut state)
                    .add(&CoherencyMatrix::identity().scale(0.5))
            })
            .collect();
        let mats: Vec<(CoherencyMatrix, u32)> = protos
            .iter()
            .enumerate()
            .map(|(i, m)| (*m, i as u32 + 1))
            .collect();
        let ds = dataset_from(mats);
        let centers = wishart_centers(&ds).unwrap();
        for _ in 0..1000 {
            let t = crate::coherency::test_support::random_psd(&mut state);
            let got = wishart_classify(&t, &centers);
            // brute force over the distance definition, plus a constant shift
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (k, sigma) in centers.sigmas.iter().enumerate() {
                let d = wishart_distance(&t, sigma).unwrap() + 42.0;
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            assert_eq!(got, centers.classes[best]);
        }
    }

    #[test]
    fn empty_class_is_rejected() {
        let mut ds = dataset_from(vec![(CoherencyMatrix::identity(), 1)]);
        ds.pixels[0].split = Split::Test;
        assert!(matches!(wishart_centers(&ds), Err(Error::TooFewClasses(0))));
    }
}
