//! Synthetic scene generation: class covariances with controllable
//! similarity, complex-Wishart speckle at a chosen look count, spatial
//! layouts, and block training masks.

use num_complex::Complex64;
use rand::Rng;

use crate::coherency::CoherencyMatrix;
use crate::dataset::{GridDataset, Pixel, Split};
use crate::error::{Error, Result};
use crate::parallel::{maybe_par_map, seq_map};
use crate::rng::{complex_standard_normal, stream, STREAM_LAYOUT, STREAM_PIXEL_BASE};

/// Spatial class layout of a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Horizontal bands of equal height; row `r` gets class
    /// `floor(r * K / height) + 1`.
    Stripes,
    /// Nearest of `seeds` random sites, sites colored round-robin;
    /// distance ties go to the lowest site index.
    Voronoi { seeds: usize },
    /// Square tiles of side `max(1, min(w,h)/4)` colored round-robin in
    /// row-major tile order.
    Blocks,
}

impl Layout {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "stripes" {
            Some(Layout::Stripes)
        } else if s == "blocks" {
            Some(Layout::Blocks)
        } else if let Some(rest) = s.strip_prefix("voronoi:") {
            rest.parse().ok().map(|seeds| Layout::Voronoi { seeds })
        } else {
            None
        }
    }

    pub fn to_string_repr(&self) -> String {
        match self {
            Layout::Stripes => "stripes".to_string(),
            Layout::Voronoi { seeds } => format!("voronoi:{seeds}"),
            Layout::Blocks => "blocks".to_string(),
        }
    }
}

/// Parameters of a synthetic scene.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub classes: usize,
    pub layout: Layout,
    pub looks: u32,
    pub similarity: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.width * self.height < self.classes {
            return Err(Error::InvalidConfig("grid smaller than class count".into()));
        }
        if self.looks < 1 {
            return Err(Error::InvalidConfig("looks must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.similarity) {
            return Err(Error::BadSimilarity(self.similarity));
        }
        if let Layout::Voronoi { seeds } = self.layout {
            if seeds < self.classes {
                return Err(Error::InvalidConfig(format!(
                    "voronoi needs at least {} seeds",
                    self.classes
                )));
            }
        }
        Ok(())
    }
}

/// Fixed, well-separated covariance prototypes.
///
/// Synthetic constants loosely modeled on canonical scattering responses
/// (surface-, double-bounce- and volume-dominated mixes at varying
/// brightness). They are frozen: benchmark results depend on them.
const PROTOTYPES: [[f64; 9]; 8] = [
    // t11,  t22,  t33,  re12,  im12,  re13,  im13,  re23,  im23
    [0.80, 0.12, 0.08, 0.15, 0.05, 0.02, 0.01, 0.01, 0.00],
    [0.15, 0.75, 0.10, -0.12, 0.06, 0.01, -0.01, 0.04, 0.02],
    [0.34, 0.33, 0.33, 0.02, 0.01, 0.01, 0.01, 0.02, -0.01],
    [1.10, 0.45, 0.25, 0.20, -0.08, 0.05, 0.02, 0.03, 0.01],
    [0.20, 0.50, 0.40, -0.05, -0.04, 0.02, 0.00, 0.10, 0.05],
    [1.60, 0.30, 0.15, 0.25, 0.10, 0.04, -0.02, 0.02, 0.00],
    [0.18, 0.16, 0.15, 0.01, 0.00, 0.00, 0.01, 0.01, 0.00],
    [0.45, 0.90, 0.35, -0.15, 0.08, 0.03, 0.01, 0.08, -0.03],
];

/// `K` positive-definite class covariances blended toward their common
/// mean: `Sigma_k(s) = (1-s) * P_k + s * mean(P)`.
///
/// Beyond the 8 stored prototypes, entries repeat with a deterministic
/// power doubling so spectra stay distinct.
pub fn builtin_class_sigmas(classes: usize, similarity: f64) -> Result<Vec<CoherencyMatrix>> {
    if !(0.0..=1.0).contains(&similarity) {
        return Err(Error::BadSimilarity(similarity));
    }
    let protos: Vec<CoherencyMatrix> = (0..classes)
        .map(|k| {
            let base = CoherencyMatrix::from_scalars(PROTOTYPES[k % PROTOTYPES.len()]);
            base.scale((1u64 << (k / PROTOTYPES.len())) as f64)
        })
        .collect();
    let mut mean = CoherencyMatrix::zero();
    for p in &protos {
        mean = mean.add(p);
    }
    mean = mean.scale(1.0 / classes as f64);
    Ok(protos
        .iter()
        .map(|p| p.scale(1.0 - similarity).add(&mean.scale(similarity)))
        .collect())
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite
/// matrix.
pub(crate) fn cholesky3(m: &[[Complex64; 3]; 3]) -> Result<[[Complex64; 3]; 3]> {
    let mut l = [[Complex64::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = m[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k].conj();
            }
            if i == j {
                let d = sum.re;
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i][j] = Complex64::new(d.sqrt(), 0.0);
            } else {
                l[i][j] = sum / l[j][j].re;
            }
        }
    }
    Ok(l)
}

/// One multilook coherency sample: `T = (1/L) sum_k z_k z_k^H` with
/// `z_k = chol(Sigma) * w`, `w` i.i.d. circular complex standard normal.
pub fn sample_wishart_coherency<R: Rng>(
    sigma: &CoherencyMatrix,
    looks: u32,
    rng: &mut R,
) -> Result<CoherencyMatrix> {
    let chol = cholesky3(&sigma.full())?;
    Ok(sample_with_chol(&chol, looks, rng))
}

fn sample_with_chol<R: Rng>(chol: &[[Complex64; 3]; 3], looks: u32, rng: &mut R) -> CoherencyMatrix {
    let mut acc = [[Complex64::ZERO; 3]; 3];
    for _ in 0..looks {
        let w = [
            complex_standard_normal(rng),
            complex_standard_normal(rng),
            complex_standard_normal(rng),
        ];
        let mut z = [Complex64::ZERO; 3];
        for r in 0..3 {
            for k in 0..=r {
                z[r] += chol[r][k] * w[k];
            }
        }
        for r in 0..3 {
            for c in 0..3 {
                acc[r][c] += z[r] * z[c].conj();
            }
        }
    }
    let inv = 1.0 / looks as f64;
    for row in &mut acc {
        for v in row.iter_mut() {
            *v *= inv;
        }
    }
    CoherencyMatrix::from_full(&acc)
}

/// Class id (1-based) of each pixel under the layout.
fn layout_labels(spec: &SceneSpec) -> Vec<u32> {
    let (w, h, k) = (spec.width, spec.height, spec.classes);
    match spec.layout {
        Layout::Stripes => {
            let mut labels = Vec::with_capacity(w * h);
            for y in 0..h {
                let class = (y * k / h) as u32 + 1;
                labels.extend(std::iter::repeat(class).take(w));
            }
            labels
        }
        Layout::Voronoi { seeds } => {
            let mut rng = stream(spec.seed, STREAM_LAYOUT);
            let sites: Vec<(f64, f64, u32)> = (0..seeds)
                .map(|i| {
                    let x = rng.random::<f64>() * w as f64;
                    let y = rng.random::<f64>() * h as f64;
                    (x, y, (i % k) as u32 + 1)
                })
                .collect();
            let mut labels = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let mut best = 0usize;
                    let mut best_d = f64::INFINITY;
                    for (i, (sx, sy, _)) in sites.iter().enumerate() {
                        let d = (px - sx) * (px - sx) + (py - sy) * (py - sy);
                        if d < best_d {
                            best_d = d;
                            best = i;
                        }
                    }
                    labels.push(sites[best].2);
                }
            }
            labels
        }
        Layout::Blocks => {
            let tile = (w.min(h) / 4).max(1);
            let ntx = w.div_ceil(tile);
            let mut labels = Vec::with_capacity(w * h);
            for y in 0..h {
                for x in 0..w {
                    let t = (y / tile) * ntx + x / tile;
                    labels.push((t % k) as u32 + 1);
                }
            }
            labels
        }
    }
}

/// Precomputed per-class factors and labels for pixel generation.
struct ScenePlan {
    chols: Vec<[[Complex64; 3]; 3]>,
    labels: Vec<u32>,
    seed: u64,
    looks: u32,
}

impl ScenePlan {
    fn new(spec: &SceneSpec) -> Result<Self> {
        spec.validate()?;
        let sigmas = builtin_class_sigmas(spec.classes, spec.similarity)?;
        let chols = sigmas
            .iter()
            .map(|s| cholesky3(&s.full()))
            .collect::<Result<_>>()?;
        Ok(Self {
            chols,
            labels: layout_labels(spec),
            seed: spec.seed,
            looks: spec.looks,
        })
    }

    fn pixel(&self, i: usize) -> Pixel {
        let label = self.labels[i];
        let mut rng = stream(self.seed, STREAM_PIXEL_BASE + i as u64);
        let matrix = sample_with_chol(&self.chols[(label - 1) as usize], self.looks, &mut rng);
        Pixel {
            matrix,
            label,
            split: Split::Test,
        }
    }
}

/// Generates a scene: layout labels plus per-pixel Wishart speckle.
///
/// Every pixel draws from its own ChaCha stream (`STREAM_PIXEL_BASE + i`),
/// so the result is identical however the loop is scheduled. All pixels
/// start in the test split; apply [`sample_training_mask`] afterwards.
pub fn generate_scene(spec: &SceneSpec) -> Result<GridDataset> {
    let plan = ScenePlan::new(spec)?;
    let pixels = maybe_par_map(spec.width * spec.height, |i| plan.pixel(i));
    Ok(GridDataset {
        width: spec.width,
        height: spec.height,
        pixels,
    })
}

/// Sequential reference path for [`generate_scene`].
pub fn generate_scene_seq(spec: &SceneSpec) -> Result<GridDataset> {
    let plan = ScenePlan::new(spec)?;
    let pixels = seq_map(spec.width * spec.height, |i| plan.pixel(i));
    Ok(GridDataset {
        width: spec.width,
        height: spec.height,
        pixels,
    })
}

/// Marks contiguous square training blocks per class until each class
/// reaches `fraction` of its pixels (within one block's overshoot).
///
/// Blocks must lie entirely inside one class region; after 1000 straddling
/// rejections the block side shrinks by one. At side one, placement draws
/// directly from the not-yet-training pixels, so the loop always
/// terminates. Every class receives at least one block.
pub fn sample_training_mask<R: Rng>(
    ds: &mut GridDataset,
    fraction: f64,
    block_size: usize,
    rng: &mut R,
) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "training fraction must lie in (0,1], got {fraction}"
        )));
    }
    if block_size < 1 {
        return Err(Error::InvalidConfig("block size must be >= 1".into()));
    }
    let mut classes: Vec<u32> = ds.pixels.iter().filter(|p| p.label > 0).map(|p| p.label).collect();
    classes.sort_unstable();
    classes.dedup();

    for &class in &classes {
        let members: Vec<usize> = (0..ds.pixels.len())
            .filter(|&i| ds.pixels[i].label == class)
            .collect();
        if members.is_empty() {
            return Err(Error::FractionTooLargeForClass { class, fraction });
        }
        let target = fraction * members.len() as f64;
        let mut count = 0usize;
        let mut blocks = 0usize;
        let mut side = block_size;
        let mut rejections = 0usize;
        while (count as f64) < target || blocks == 0 {
            if side == 1 {
                // direct draw from the remaining pixels; always progresses
                let remaining: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&i| ds.pixels[i].split != Split::Train)
                    .collect();
                if remaining.is_empty() {
                    break; // class saturated
                }
                let pick = remaining[rng.random_range(0..remaining.len())];
                ds.pixels[pick].split = Split::Train;
                count += 1;
                blocks += 1;
                continue;
            }
            let anchor = members[rng.random_range(0..members.len())];
            let (ax, ay) = (anchor % ds.width, anchor / ds.width);
            let fits = ax + side <= ds.width
                && ay + side <= ds.height
                && (0..side).all(|dy| {
                    (0..side).all(|dx| ds.pixels[ds.index(ax + dx, ay + dy)].label == class)
                });
            let mut added = 0usize;
            if fits {
                for dy in 0..side {
                    for dx in 0..side {
                        let idx = ds.index(ax + dx, ay + dy);
                        if ds.pixels[idx].split != Split::Train {
                            ds.pixels[idx].split = Split::Train;
                            added += 1;
                        }
                    }
                }
            }
            if added > 0 {
                count += added;
                blocks += 1;
                rejections = 0;
            } else {
                rejections += 1;
                if rejections >= 1000 {
                    side -= 1;
                    rejections = 0;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::eig3_hermitian;

    #[test]
    fn blend_endpoints() {
        let protos = builtin_class_sigmas(5, 0.0).unwrap();
        for (k, p) in protos.iter().enumerate() {
            assert_eq!(p.to_scalars(), PROTOTYPES[k]);
        }
        let merged = builtin_class_sigmas(5, 1.0).unwrap();
        for p in &merged[1..] {
            let a = merged[0].to_scalars();
            let b = p.to_scalars();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blend_midpoint_arithmetic() {
        let k = 4;
        let s0 = builtin_class_sigmas(k, 0.0).unwrap();
        let mut mean = CoherencyMatrix::zero();
        for p in &s0 {
            mean = mean.add(p);
        }
        mean = mean.scale(1.0 / k as f64);
        let mid = builtin_class_sigmas(k, 0.5).unwrap();
        for (p, m) in s0.iter().zip(mid.iter()) {
            let expect = p.scale(0.5).add(&mean.scale(0.5)).to_scalars();
            let got = m.to_scalars();
            for (e, g) in expect.iter().zip(got.iter()) {
                assert!((e - g).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blends_stay_positive_definite() {
        for &k in &[2usize, 5, 8, 11] {
            for &s in &[0.0, 0.25, 0.5, 0.75, 1.0] {
                for sigma in builtin_class_sigmas(k, s).unwrap() {
                    let es = eig3_hermitian(&sigma).unwrap();
                    assert!(es.eigenvalues[2] > 0.0, "k={k} s={s}");
                }
            }
        }
    }

    #[test]
    fn bad_similarity_rejected() {
        assert!(matches!(builtin_class_sigmas(3, 1.5), Err(Error::BadSimilarity(_))));
    }

    #[test]
    fn single_look_sample_is_rank_one() {
        let mut rng = stream(7, 0);
        let t = sample_wishart_coherency(&CoherencyMatrix::identity(), 1, &mut rng).unwrap();
        let es = eig3_hermitian(&t).unwrap();
        assert!(es.eigenvalues[1].abs() < 1e-12 * es.eigenvalues[0].max(1.0));
        assert!(es.eigenvalues[2].abs() < 1e-12 * es.eigenvalues[0].max(1.0));
    }

    #[test]
    fn samples_satisfy_psd_invariants() {
        let sigma = CoherencyMatrix::from_scalars(PROTOTYPES[3]);
        let mut rng = stream(11, 0);
        for _ in 0..200 {
            let t = sample_wishart_coherency(&sigma, 4, &mut rng).unwrap();
            assert!(t.is_finite());
            assert!(t.trace() > 0.0);
            assert!(eig3_hermitian(&t).is_ok());
        }
    }

    #[test]
    fn sampler_mean_matches_sigma() {
        // empirical 3-standard-error check on every stored component
        let sigma = CoherencyMatrix::diagonal(2.0, 1.0, 0.5);
        let mut rng = stream(5, 0);
        let n = 100_000usize;
        let mut sums = [0.0f64; 9];
        let mut sq = [0.0f64; 9];
        for _ in 0..n {
            let t = sample_wishart_coherency(&sigma, 4, &mut rng).unwrap();
            for (k, v) in t.to_scalars().iter().enumerate() {
                sums[k] += v;
                sq[k] += v * v;
            }
        }
        let expect = sigma.to_scalars();
        for k in 0..9 {
            let mean = sums[k] / n as f64;
            let var = (sq[k] / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - expect[k]).abs() <= 3.0 * se + 1e-12,
                "component {k}: mean {mean}, expect {}, se {se}",
                expect[k]
            );
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = CoherencyMatrix::diagonal(1.0, -1.0, 1.0);
        assert!(matches!(
            sample_wishart_coherency(&m, 1, &mut stream(1, 0)),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn stripes_rule() {
        let spec = SceneSpec {
            width: 4,
            height: 4,
            classes: 2,
            layout: Layout::Stripes,
            looks: 1,
            similarity: 0.0,
            seed: 1,
        };
        let ds = generate_scene(&spec).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expect = if y < 2 { 1 } else { 2 };
                assert_eq!(ds.pixels[ds.index(x, y)].label, expect);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SceneSpec {
            width: 16,
            height: 12,
            classes: 3,
            layout: Layout::Voronoi { seeds: 6 },
            looks: 2,
            similarity: 0.3,
            seed: 99,
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene(&spec).unwrap();
        for (pa, pb) in a.pixels.iter().zip(b.pixels.iter()) {
            assert_eq!(pa.label, pb.label);
            assert_eq!(pa.matrix.to_scalars(), pb.matrix.to_scalars());
        }
    }

    #[test]
    fn parallel_and_sequential_generation_agree() {
        let spec = SceneSpec {
            width: 20,
            height: 10,
            classes: 4,
            layout: Layout::Blocks,
            looks: 3,
            similarity: 0.5,
            seed: 3,
        };
        let a = generate_scene(&spec).unwrap();
        let b = generate_scene_seq(&spec).unwrap();
        for (pa, pb) in a.pixels.iter().zip(b.pixels.iter()) {
            assert_eq!(pa.matrix.to_scalars(), pb.matrix.to_scalars());
        }
    }

    #[test]
    fn per_class_scene_mean_matches_sigma() {
        let spec = SceneSpec {
            width: 128,
            height: 128,
            classes: 5,
            layout: Layout::Stripes,
            looks: 4,
            similarity: 0.6,
            seed: 17,
        };
        let ds = generate_scene(&spec).unwrap();
        let sigmas = builtin_class_sigmas(5, 0.6).unwrap();
        for class in 1..=5u32 {
            let members: Vec<&Pixel> =
                ds.pixels.iter().filter(|p| p.label == class).collect();
            let n = members.len();
            assert!(n > 1000);
            let expect = sigmas[(class - 1) as usize].to_scalars();
            for k in 0..9 {
                let vals: Vec<f64> = members.iter().map(|p| p.matrix.to_scalars()[k]).collect();
                let mean: f64 = vals.iter().sum::<f64>() / n as f64;
                let var: f64 =
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                let se = (var / n as f64).sqrt();
                assert!(
                    (mean - expect[k]).abs() <= 3.0 * se + 1e-12,
                    "class {class} component {k}"
                );
            }
        }
    }

    #[test]
    fn mask_saturation() {
        let spec = SceneSpec {
            width: 8,
            height: 8,
            classes: 2,
            layout: Layout::Stripes,
            looks: 1,
            similarity: 0.0,
            seed: 4,
        };
        let mut ds = generate_scene(&spec).unwrap();
        sample_training_mask(&mut ds, 1.0, 1, &mut stream(4, 100)).unwrap();
        assert!(ds.pixels.iter().all(|p| p.split == Split::Train));
    }

    #[test]
    fn two_percent_block_mask_count() {
        // 1747 x 96 grid: 167712 labeled pixels in two stripes
        let width = 1747;
        let height = 96;
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for _ in 0..width {
                pixels.push(Pixel {
                    matrix: CoherencyMatrix::identity(),
                    label: if y < height / 2 { 1 } else { 2 },
                    split: Split::Test,
                });
            }
        }
        let mut ds = GridDataset {
            width,
            height,
            pixels,
        };
        sample_training_mask(&mut ds, 0.02, 3, &mut stream(8, 0)).unwrap();
        let train = ds.train_count() as f64;
        // 2% of 167712 is 3354.24; each class may overshoot by one 3x3 block
        assert!((train - 3354.24).abs() <= 18.0, "train count {train}");
        let achieved = ds.achieved_training_fraction();
        assert!((achieved - 0.02).abs() / 0.02 <= 0.2);
    }

    #[test]
    fn mask_is_deterministic() {
        let spec = SceneSpec {
            width: 32,
            height: 32,
            classes: 3,
            layout: Layout::Stripes,
            looks: 2,
            similarity: 0.2,
            seed: 21,
        };
        let mut a = generate_scene(&spec).unwrap();
        let mut b = generate_scene(&spec).unwrap();
        sample_training_mask(&mut a, 0.05, 2, &mut stream(21, 1_000_000)).unwrap();
        sample_training_mask(&mut b, 0.05, 2, &mut stream(21, 1_000_000)).unwrap();
        for (pa, pb) in a.pixels.iter().zip(b.pixels.iter()) {
            assert_eq!(pa.split, pb.split);
        }
        assert!(a.train_count() > 0);
    }

    #[test]
    fn every_class_gets_a_block() {
        let spec = SceneSpec {
            width: 30,
            height: 30,
            classes: 5,
            layout: Layout::Voronoi { seeds: 10 },
            looks: 1,
            similarity: 0.0,
            seed: 13,
        };
        let mut ds = generate_scene(&spec).unwrap();
        sample_training_mask(&mut ds, 0.01, 2, &mut stream(13, 1_000_000)).unwrap();
        for class in ds.truth_map().labels.iter().copied().collect::<std::collections::BTreeSet<_>>() {
            if class == 0 {
                continue;
            }
            let has_train = ds
                .pixels
                .iter()
                .any(|p| p.label == class && p.split == Split::Train);
            assert!(has_train, "class {class} lacks a training block");
        }
    }

    #[test]
    fn similarity_shrinks_center_distances() {
        // mean pairwise Wishart distance between class centers must be
        // non-increasing in the similarity parameter
        let mut prev = f64::INFINITY;
        for &s in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let sigmas = builtin_class_sigmas(5, s).unwrap();
            let mut total = 0.0;
            let mut pairs = 0usize;
            for a in 0..sigmas.len() {
                for b in 0..sigmas.len() {
                    if a == b {
                        continue;
                    }
                    let d = crate::baselines::wishart_distance(&sigmas[a], &sigmas[b]).unwrap();
                    total += d;
                    pairs += 1;
                }
            }
            let mean = total / pairs as f64;
            assert!(mean <= prev + 1e-9, "similarity {s}: {mean} > {prev}");
            prev = mean;
        }
    }

    #[test]
    fn fewer_looks_mean_noisier_features() {
        // documented margin: variance ratio at least 1.5x across look counts.
        // H degenerates at L=1 (a single outer product is rank one, so the
        // entropy is identically zero), so H is compared at L=2 vs L=8 and
        // the span carries the L=1 comparison.
        let base = SceneSpec {
            width: 48,
            height: 48,
            classes: 2,
            layout: Layout::Stripes,
            looks: 1,
            similarity: 0.0,
            seed: 23,
        };
        let var_of = |looks: u32, dim: usize| {
            let spec = SceneSpec { looks, ..base.clone() };
            let ds = generate_scene(&spec).unwrap();
            let vals: Vec<f64> = ds
                .pixels
                .iter()
                .filter(|p| p.label == 1)
                .map(|p| crate::features::feature_vector(&p.matrix).unwrap().0[dim])
                .collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
        };
        let h2 = var_of(2, 4);
        let h8 = var_of(8, 4);
        assert!(h2 > 1.25 * h8, "var(H) at L=2 {h2} vs L=8 {h8}");
        let s1 = var_of(1, 3);
        let s8 = var_of(8, 3);
        assert!(s1 > 4.0 * s8, "var(span) at L=1 {s1} vs L=8 {s8}");
    }
}
