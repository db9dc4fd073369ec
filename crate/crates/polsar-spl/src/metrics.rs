//! Classification metrics and class-map rendering.

use std::fmt::Write as _;

use crate::dataset::{LabelMap, Split};
use crate::error::{Error, Result};

/// Which pixels enter the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalScope {
    /// Labeled pixels outside the training split.
    Test,
    /// Every labeled pixel.
    AllLabeled,
}

impl EvalScope {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalScope::Test => "test",
            EvalScope::AllLabeled => "all-labeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "test" => Some(EvalScope::Test),
            "all-labeled" => Some(EvalScope::AllLabeled),
            _ => None,
        }
    }
}

/// Integer confusion counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<u32>,
    /// Row-major `classes.len() x classes.len()` counts.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn at(&self, true_idx: usize, pred_idx: usize) -> u64 {
        self.counts[true_idx * self.classes.len() + pred_idx]
    }

    /// CSV rendering: header `class,<id>...`, one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class");
        for c in &self.classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (i, c) in self.classes.iter().enumerate() {
            let _ = write!(out, "{c}");
            for j in 0..self.classes.len() {
                let _ = write!(out, ",{}", self.at(i, j));
            }
            out.push('\n');
        }
        out
    }
}

/// Counts prediction agreement over the evaluated pixels.
///
/// Unlabeled pixels (truth 0) never count; `Test` scope also excludes
/// training pixels. A prediction outside the truth's class set is an
/// error, not a silent extra column.
pub fn confusion_matrix(
    predicted: &LabelMap,
    truth: &LabelMap,
    splits: &[Split],
    scope: EvalScope,
) -> Result<ConfusionMatrix> {
    if predicted.width != truth.width || predicted.height != truth.height {
        return Err(Error::ShapeMismatch(
            predicted.width,
            predicted.height,
            truth.width,
            truth.height,
        ));
    }
    if splits.len() != truth.labels.len() {
        return Err(Error::ShapeMismatch(splits.len(), 1, truth.labels.len(), 1));
    }
    let mut classes: Vec<u32> = truth.labels.iter().copied().filter(|&l| l > 0).collect();
    classes.sort_unstable();
    classes.dedup();
    let index_of = |label: u32| classes.binary_search(&label).ok();

    let k = classes.len();
    let mut counts = vec![0u64; k * k];
    for i in 0..truth.labels.len() {
        let t = truth.labels[i];
        if t == 0 {
            continue;
        }
        if scope == EvalScope::Test && splits[i] == Split::Train {
            continue;
        }
        let p = predicted.labels[i];
        let ti = index_of(t).expect("truth label is in its own class set");
        let pi = index_of(p).ok_or(Error::UnknownPredictedClass(p))?;
        counts[ti * k + pi] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

/// Per-class accuracy (diagonal over row sum), overall accuracy, and
/// average accuracy over classes that actually appear.
#[derive(Debug, Clone, PartialEq)]
pub struct Accuracy {
    pub oa: f64,
    pub aa: f64,
    /// Per class: `None` when the class has no evaluated pixels.
    pub per_class: Vec<(u32, Option<f64>)>,
}

pub fn oa_aa(cm: &ConfusionMatrix) -> Result<Accuracy> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let k = cm.classes.len();
    let mut per_class = Vec::with_capacity(k);
    let mut diag = 0u64;
    let mut aa_sum = 0.0;
    let mut aa_count = 0usize;
    for i in 0..k {
        let row: u64 = (0..k).map(|j| cm.at(i, j)).sum();
        diag += cm.at(i, i);
        if row == 0 {
            per_class.push((cm.classes[i], None));
        } else {
            let acc = cm.at(i, i) as f64 / row as f64;
            per_class.push((cm.classes[i], Some(acc)));
            aa_sum += acc;
            aa_count += 1;
        }
    }
    Ok(Accuracy {
        oa: diag as f64 / total as f64,
        aa: aa_sum / aa_count as f64,
        per_class,
    })
}

/// An RGB palette entry.
pub type Rgb = [u8; 3];

/// 16 visually distinct colors; index 0 is reserved (label 0 renders
/// black regardless).
pub const DEFAULT_PALETTE: [Rgb; 17] = [
    [0, 0, 0],
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 190],
    [0, 128, 128],
    [230, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

/// Renders a label map as a binary PPM (P6) document.
///
/// Header `P6\n{width} {height}\n255\n` followed by raw RGB triplets;
/// label 0 is black, label `k > 0` uses `palette[k]`.
pub fn render_class_map(map: &LabelMap, palette: &[Rgb]) -> Result<Vec<u8>> {
    let header = format!("P6\n{} {}\n255\n", map.width, map.height);
    let mut out = Vec::with_capacity(header.len() + map.labels.len() * 3);
    out.extend_from_slice(header.as_bytes());
    for &label in &map.labels {
        let color = if label == 0 {
            [0, 0, 0]
        } else {
            *palette
                .get(label as usize)
                .ok_or(Error::PaletteTooSmall {
                    label,
                    palette: palette.len(),
                })?
        };
        out.extend_from_slice(&color);
    }
    Ok(out)
}
