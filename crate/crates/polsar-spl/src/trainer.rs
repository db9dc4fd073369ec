//! The self-paced training loop and multiclass composition.
//!
//! One outer iteration fixes the weights and solves the weighted SVM
//! dual, recomputes hinge losses, refreshes the weights with the current
//! pace, and grows the pace geometrically. The loop stops once the mean
//! weight reaches `1 - stop_eps`, so the returned model was trained with
//! (approximately) full sample inclusion.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::baselines::WishartCenters;
use crate::coherency::CoherencyMatrix;
use crate::dataset::{FeatureGrid, GridDataset, LabelMap, PixelSample, Split};
use crate::error::{Error, Result};
use crate::features::{extract_grid, FeatureStats, FEATURE_DIM};
use crate::kernel::KernelParams;
use crate::parallel::try_maybe_par_map;
use crate::rng::stream;
use crate::spl::{
    advance_pace, init_pace, neighborhood_gamma, weight_binary, weight_linear, EntropyMode,
    NeighborLosses, Regularizer, SplState,
};
use crate::svm::{hinge_losses, solve_weighted_dual, BinaryLabel, SvmModel};

/// Stream id for the warm-start subset draw (shared by every one-vs-rest
/// problem so mirrored label flips yield mirrored models).
const STREAM_WARM_START: u64 = u64::MAX;

/// Size cap of the uniform-weight warm-start subset.
const WARM_SUBSET: usize = 200;

/// How the initial pace is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PaceInit {
    /// Nearest-rank quantile of the warm-start losses.
    Auto { quantile: f64 },
    Fixed(f64),
}

/// Configuration of the self-paced trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub c: f64,
    pub gamma: f64,
    pub lambda0: PaceInit,
    pub kappa: f64,
    pub regularizer: Regularizer,
    pub entropy_mode: EntropyMode,
    pub stop_eps: f64,
    pub max_outer: usize,
    pub tol: f64,
    pub seed: u64,
    pub normalize: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            c: 100.0,
            gamma: 1.0,
            lambda0: PaceInit::Auto { quantile: 0.3 },
            kappa: 1.05,
            regularizer: Regularizer::Neighborhood,
            entropy_mode: EntropyMode::Normalized,
            stop_eps: 0.01,
            max_outer: 200,
            tol: 1e-3,
            seed: 0,
            normalize: true,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        match self.lambda0 {
            PaceInit::Auto { quantile } => {
                if !(quantile > 0.0 && quantile < 1.0) {
                    return Err(Error::InvalidConfig(format!(
                        "quantile must lie in (0,1), got {quantile}"
                    )));
                }
            }
            PaceInit::Fixed(l) => {
                if !(l > 0.0) {
                    return Err(Error::InvalidConfig(format!("lambda0 must be positive, got {l}")));
                }
            }
        }
        if !(self.kappa > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "kappa must exceed 1, got {}",
                self.kappa
            )));
        }
        if !(self.stop_eps > 0.0 && self.stop_eps < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "stop epsilon must lie in (0,1), got {}",
                self.stop_eps
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidConfig("max outer iterations must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "solver tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<KernelParams> {
        KernelParams::gaussian(self.gamma)
    }
}

/// One completed outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub mean_weight: f64,
    pub mean_loss: f64,
    /// Samples with strictly positive weight.
    pub active: usize,
    /// Training accuracy of the iteration's model on its own samples.
    pub train_oa: f64,
    pub lambda: f64,
}

/// Full per-iteration trace of one binary SPL run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Class id of the one-vs-rest problem; 0 for a standalone binary run.
    pub class: u32,
    pub records: Vec<TraceRecord>,
    /// False if any inner dual solve hit its iteration cap.
    pub solver_converged: bool,
    /// True when the mean-weight stop fired before the outer cap.
    pub outer_converged: bool,
}

/// One training sample of a binary problem, with its grid position.
#[derive(Debug, Clone)]
pub struct BinarySample {
    pub x: u32,
    pub y: u32,
    pub features: Vec<f64>,
    pub label: BinaryLabel,
}

/// 8-connected adjacency among the given samples.
fn neighbor_indices(samples: &[BinarySample]) -> Vec<Vec<usize>> {
    let mut by_coord: HashMap<(u32, u32), usize> = HashMap::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        by_coord.insert((s.x, s.y), i);
    }
    samples
        .iter()
        .map(|s| {
            let mut out = Vec::new();
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nx = s.x as i64 + dx;
                    let ny = s.y as i64 + dy;
                    if nx < 0 || ny < 0 {
                        continue;
                    }
                    if let Some(&j) = by_coord.get(&(nx as u32, ny as u32)) {
                        out.push(j);
                    }
                }
            }
            out
        })
        .collect()
}

fn weights_from_losses(
    losses: &[f64],
    neighbors: &[Vec<usize>],
    lambda: f64,
    regularizer: Regularizer,
    mode: EntropyMode,
) -> Result<Vec<f64>> {
    match regularizer {
        Regularizer::Binary => losses.iter().map(|&l| weight_binary(l, lambda)).collect(),
        Regularizer::Linear => losses.iter().map(|&l| weight_linear(l, lambda)).collect(),
        Regularizer::Neighborhood => losses
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let nb: Vec<f64> = neighbors[i].iter().map(|&j| losses[j]).collect();
                let nl = NeighborLosses::new(l, &nb);
                let gamma = neighborhood_gamma(&nl, mode);
                let combined = l + gamma * nl.neighbor_mean();
                if combined < lambda {
                    Ok(1.0 - combined / lambda)
                } else {
                    Ok(0.0)
                }
            })
            .collect(),
    }
}

fn class_weight_totals(y: &[BinaryLabel], v: &[f64]) -> (f64, f64) {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (label, w) in y.iter().zip(v.iter()) {
        match label {
            BinaryLabel::Plus => plus += w,
            BinaryLabel::Minus => minus += w,
        }
    }
    (plus, minus)
}

/// Deterministic warm-start subset: a seeded shuffle prefix, patched to
/// contain both classes.
fn warm_subset(y: &[BinaryLabel], seed: u64) -> Vec<usize> {
    let n = y.len();
    let size = n.min(WARM_SUBSET);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream(seed, STREAM_WARM_START);
    use rand::Rng;
    for i in 0..size.min(n.saturating_sub(1)) {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut subset: Vec<usize> = order[..size].to_vec();
    for missing in [BinaryLabel::Plus, BinaryLabel::Minus] {
        if !subset.iter().any(|&i| y[i] == missing) {
            if let Some(&fix) = order[size..].iter().find(|&&i| y[i] == missing) {
                let last = subset.len() - 1;
                // keep at least one sample of the other class in front
                let slot = if subset.len() > 1 { last } else { 0 };
                subset[slot] = fix;
            }
        }
    }
    subset
}

/// Trains one binary SPL-SVM and returns the final model plus the full
/// iteration trace.
pub fn train_spl_svm_binary(
    samples: &[BinarySample],
    config: &TrainerConfig,
) -> Result<(SvmModel, TrainingTrace)> {
    config.validate()?;
    let xs: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let y: Vec<BinaryLabel> = samples.iter().map(|s| s.label).collect();
    train_binary_inner(&xs, &y, &neighbor_indices(samples), config, 0)
}

fn train_binary_inner(
    xs: &[Vec<f64>],
    y: &[BinaryLabel],
    neighbors: &[Vec<usize>],
    config: &TrainerConfig,
    class: u32,
) -> Result<(SvmModel, TrainingTrace)> {
    let n = xs.len();
    if !y.contains(&BinaryLabel::Plus) || !y.contains(&BinaryLabel::Minus) {
        let missing = if y.contains(&BinaryLabel::Plus) {
            "negative"
        } else {
            "positive"
        };
        return Err(Error::DegenerateProblem(missing));
    }
    let params = config.kernel()?;

    // warm start: a uniform-weight model on a small subset produces the
    // initial loss estimates; v near zero would deadlock the first solve
    let subset = warm_subset(y, config.seed);
    let mut v0 = vec![0.0; n];
    for &i in &subset {
        v0[i] = 1.0;
    }
    let warm = solve_weighted_dual(xs, y, &v0, config.c, &params, config.tol)?;
    let warm_model = SvmModel::from_solution(xs, y, &warm, config.c, &params)?;
    let mut losses = hinge_losses(&warm_model, xs, y)?;
    let mut solver_converged = warm.converged;

    let lambda0 = match config.lambda0 {
        PaceInit::Auto { quantile } => init_pace(&losses, quantile)?,
        PaceInit::Fixed(l) => l,
    };
    let mut state = SplState::new(n, lambda0, config.kappa)?;

    let mut records = Vec::new();
    let mut outer_converged = false;
    let mut model = None;
    while state.iteration < config.max_outer {
        state.weights = weights_from_losses(
            &losses,
            neighbors,
            state.lambda,
            config.regularizer,
            config.entropy_mode,
        )?;
        // if one class lost all weight the dual is degenerate; grow the
        // pace (still the geometric schedule) until both sides return
        let mut boosts = 0;
        loop {
            let (plus, minus) = class_weight_totals(y, &state.weights);
            if plus > 0.0 && minus > 0.0 {
                break;
            }
            boosts += 1;
            if boosts > 10_000 {
                return Err(Error::DegenerateProblem("weighted"));
            }
            state.lambda *= state.kappa;
            state.weights = weights_from_losses(
                &losses,
                neighbors,
                state.lambda,
                config.regularizer,
                config.entropy_mode,
            )?;
        }

        let solution = solve_weighted_dual(xs, y, &state.weights, config.c, &params, config.tol)?;
        solver_converged &= solution.converged;
        let iter_model = SvmModel::from_solution(xs, y, &solution, config.c, &params)?;
        losses = hinge_losses(&iter_model, xs, y)?;

        let mean_weight = state.weights.iter().sum::<f64>() / n as f64;
        let mean_loss = losses.iter().sum::<f64>() / n as f64;
        let active = state.weights.iter().filter(|&&w| w > 0.0).count();
        // hinge loss below one is exactly a correct sign
        let train_oa = losses.iter().filter(|&&l| l < 1.0).count() as f64 / n as f64;
        records.push(TraceRecord {
            iter: state.iteration + 1,
            mean_weight,
            mean_loss,
            active,
            train_oa,
            lambda: state.lambda,
        });
        model = Some(iter_model);

        if mean_weight >= 1.0 - config.stop_eps {
            outer_converged = true;
            break;
        }
        state = advance_pace(state);
    }

    let model = model.expect("at least one outer iteration runs");
    Ok((
        model,
        TrainingTrace {
            class,
            records,
            solver_converged,
            outer_converged,
        },
    ))
}

/// Uniform-weight single solve (the conventional SVM), with a one-record
/// trace for uniform reporting.
fn train_plain_binary(
    xs: &[Vec<f64>],
    y: &[BinaryLabel],
    config: &TrainerConfig,
    class: u32,
) -> Result<(SvmModel, TrainingTrace)> {
    let params = config.kernel()?;
    let n = xs.len();
    let v = vec![1.0; n];
    let solution = solve_weighted_dual(xs, y, &v, config.c, &params, config.tol)?;
    let model = SvmModel::from_solution(xs, y, &solution, config.c, &params)?;
    let losses = hinge_losses(&model, xs, y)?;
    let record = TraceRecord {
        iter: 1,
        mean_weight: 1.0,
        mean_loss: losses.iter().sum::<f64>() / n as f64,
        active: n,
        train_oa: losses.iter().filter(|&&l| l < 1.0).count() as f64 / n as f64,
        lambda: 0.0,
    };
    Ok((
        model,
        TrainingTrace {
            class,
            records: vec![record],
            solver_converged: solution.converged,
            outer_converged: true,
        },
    ))
}

/// A one-vs-rest ensemble over the training classes.
#[derive(Debug, Clone)]
pub struct MulticlassModel {
    pub classes: Vec<u32>,
    pub models: Vec<SvmModel>,
    pub stats: FeatureStats,
    pub config: TrainerConfig,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TrainMode {
    Spl,
    Plain,
}

/// Trains the one-vs-rest SPL ensemble from a coherency grid.
pub fn train_multiclass(
    ds: &GridDataset,
    config: &TrainerConfig,
) -> Result<(MulticlassModel, Vec<TrainingTrace>)> {
    let grid = extract_grid(ds)?;
    train_multiclass_features(&grid, config)
}

/// As [`train_multiclass`] but starting from extracted features.
pub fn train_multiclass_features(
    grid: &FeatureGrid,
    config: &TrainerConfig,
) -> Result<(MulticlassModel, Vec<TrainingTrace>)> {
    train_features_mode(grid, config, TrainMode::Spl)
}

/// Conventional-SVM counterpart used by the baselines.
pub(crate) fn train_multiclass_plain(
    ds: &GridDataset,
    config: &TrainerConfig,
) -> Result<(MulticlassModel, Vec<TrainingTrace>)> {
    let grid = extract_grid(ds)?;
    train_features_mode(&grid, config, TrainMode::Plain)
}

/// Plain-SVM training from extracted features.
pub fn train_plain_svm_features(
    grid: &FeatureGrid,
    config: &TrainerConfig,
) -> Result<(MulticlassModel, Vec<TrainingTrace>)> {
    train_features_mode(grid, config, TrainMode::Plain)
}

fn train_features_mode(
    grid: &FeatureGrid,
    config: &TrainerConfig,
    mode: TrainMode,
) -> Result<(MulticlassModel, Vec<TrainingTrace>)> {
    config.validate()?;
    let train: Vec<&PixelSample> = grid
        .samples
        .iter()
        .filter(|s| s.split == Split::Train && s.label > 0)
        .collect();
    let mut classes: Vec<u32> = train.iter().map(|s| s.label).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }

    let stats = if config.normalize {
        let feats: Vec<_> = train.iter().map(|s| s.features).collect();
        FeatureStats::fit(&feats)?
    } else {
        FeatureStats::identity()
    };
    let xs: Vec<Vec<f64>> = train
        .iter()
        .map(|s| stats.apply(&s.features).0.to_vec())
        .collect();
    let coords: Vec<(u32, u32)> = train.iter().map(|s| (s.x, s.y)).collect();
    let labels: Vec<u32> = train.iter().map(|s| s.label).collect();

    // adjacency over training pixels; identical for every binary problem
    let proxy: Vec<BinarySample> = coords
        .iter()
        .map(|&(x, y)| BinarySample {
            x,
            y,
            features: Vec::new(),
            label: BinaryLabel::Plus,
        })
        .collect();
    let neighbors = neighbor_indices(&proxy);

    let outputs = try_maybe_par_map(classes.len(), |k| {
        let class = classes[k];
        let y: Vec<BinaryLabel> = labels
            .iter()
            .map(|&l| {
                if l == class {
                    BinaryLabel::Plus
                } else {
                    BinaryLabel::Minus
                }
            })
            .collect();
        match mode {
            TrainMode::Spl => train_binary_inner(&xs, &y, &neighbors, config, class),
            TrainMode::Plain => train_plain_binary(&xs, &y, config, class),
        }
    })?;

    let mut models = Vec::with_capacity(classes.len());
    let mut traces = Vec::with_capacity(classes.len());
    for (model, trace) in outputs {
        models.push(model);
        traces.push(trace);
    }
    Ok((
        MulticlassModel {
            classes,
            models,
            stats,
            config: config.clone(),
        },
        traces,
    ))
}

impl MulticlassModel {
    /// Argmax of the per-class decision values; ties take the lowest
    /// class id.
    pub fn classify(&self, raw_features: &[f64]) -> Result<u32> {
        if raw_features.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                left: FEATURE_DIM,
                right: raw_features.len(),
            });
        }
        let mut arr = [0.0; FEATURE_DIM];
        arr.copy_from_slice(raw_features);
        let z = self.stats.apply(&crate::features::FeatureVector(arr));
        let mut best = self.classes[0];
        let mut best_f = f64::NEG_INFINITY;
        for (class, model) in self.classes.iter().zip(self.models.iter()) {
            let f = model.decision(&z.0)?;
            if f > best_f {
                best_f = f;
                best = *class;
            }
        }
        Ok(best)
    }
}

/// Predicts a label map for every pixel of a coherency grid.
pub fn predict_map(model: &MulticlassModel, ds: &GridDataset) -> Result<LabelMap> {
    let grid = extract_grid(ds)?;
    predict_features(model, &grid)
}

/// Predicts from extracted features; parallel over pixels.
pub fn predict_features(model: &MulticlassModel, grid: &FeatureGrid) -> Result<LabelMap> {
    let labels = try_maybe_par_map(grid.samples.len(), |i| {
        model.classify(grid.samples[i].features.as_slice())
    })?;
    Ok(LabelMap {
        width: grid.width,
        height: grid.height,
        labels,
    })
}

/// Sequential reference path for [`predict_features`].
pub fn predict_features_seq(model: &MulticlassModel, grid: &FeatureGrid) -> Result<LabelMap> {
    let labels: Result<Vec<u32>> = (0..grid.samples.len())
        .map(|i| model.classify(grid.samples[i].features.as_slice()))
        .collect();
    Ok(LabelMap {
        width: grid.width,
        height: grid.height,
        labels: labels?,
    })
}

/// A persistable classifier: either the SVM ensemble or Wishart centers.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Svm(MulticlassModel),
    Wishart(WishartCenters),
}

impl AnyModel {
    pub fn predict(&self, ds: &GridDataset) -> Result<LabelMap> {
        match self {
            AnyModel::Svm(m) => predict_map(m, ds),
            AnyModel::Wishart(c) => Ok(crate::baselines::wishart_classify_map(ds, c)),
        }
    }
}

/// Writes the per-iteration traces as CSV with header
/// `class,iter,mean_v,mean_loss,active,train_oa`.
pub fn write_trace_csv(traces: &[TrainingTrace], path: &Path) -> Result<()> {
    let mut out = String::from("class,iter,mean_v,mean_loss,active,train_oa\n");
    for trace in traces {
        for r in &trace.records {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{},{:.6}",
                trace.class, r.iter, r.mean_weight, r.mean_loss, r.active, r.train_oa
            );
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

const MODEL_MAGIC: &str = "polsar-spl model v1";

fn fmt_floats(values: impl IntoIterator<Item = f64>) -> String {
    let mut out = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

/// Serializes a model as a self-describing text document. Floats use
/// shortest round-trip formatting, so save/load/predict is bit-identical.
pub fn save_model(model: &AnyModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(MODEL_MAGIC);
    out.push('\n');
    match model {
        AnyModel::Svm(m) => {
            out.push_str("model = svm\n");
            let _ = writeln!(
                out,
                "classes = {}",
                m.classes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
            );
            out.push_str("[config]\n");
            let cfg = &m.config;
            let _ = writeln!(out, "c = {}", cfg.c);
            let _ = writeln!(out, "gamma = {}", cfg.gamma);
            match cfg.lambda0 {
                PaceInit::Auto { quantile } => {
                    let _ = writeln!(out, "lambda0 = auto");
                    let _ = writeln!(out, "quantile = {quantile}");
                }
                PaceInit::Fixed(l) => {
                    let _ = writeln!(out, "lambda0 = {l}");
                    let _ = writeln!(out, "quantile = 0.3");
                }
            }
            let _ = writeln!(out, "kappa = {}", cfg.kappa);
            let _ = writeln!(out, "regularizer = {}", cfg.regularizer.as_str());
            let _ = writeln!(out, "entropy_mode = {}", cfg.entropy_mode.as_str());
            let _ = writeln!(out, "stop_eps = {}", cfg.stop_eps);
            let _ = writeln!(out, "max_outer = {}", cfg.max_outer);
            let _ = writeln!(out, "tol = {}", cfg.tol);
            let _ = writeln!(out, "seed = {}", cfg.seed);
            let _ = writeln!(out, "normalize = {}", cfg.normalize);
            out.push_str("[normalization]\n");
            let _ = writeln!(out, "mean = {}", fmt_floats(m.stats.mean));
            let _ = writeln!(out, "std = {}", fmt_floats(m.stats.std));
            for (class, svm) in m.classes.iter().zip(m.models.iter()) {
                let _ = writeln!(out, "[class {class}]");
                let _ = writeln!(out, "bias = {}", svm.bias);
                for (sv, coef) in svm.support_features.iter().zip(svm.coefficients.iter()) {
                    let _ = writeln!(
                        out,
                        "sv = {} {}",
                        coef,
                        fmt_floats(sv.iter().copied())
                    );
                }
            }
        }
        AnyModel::Wishart(c) => {
            out.push_str("model = wc\n");
            let _ = writeln!(
                out,
                "classes = {}",
                c.classes.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
            );
            for (class, sigma) in c.classes.iter().zip(c.sigmas.iter()) {
                let _ = writeln!(out, "[class {class}]");
                let _ = writeln!(out, "sigma = {}", fmt_floats(sigma.to_scalars()));
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a model document written by [`save_model`].
pub fn load_model(path: &Path) -> Result<AnyModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut lines = text.lines().enumerate().peekable();
    match lines.next() {
        Some((_, MODEL_MAGIC)) => {}
        _ => return Err(Error::parse(&name, 1, format!("expected `{MODEL_MAGIC}`"))),
    }
    let kind = expect_kv(&name, lines.next(), "model")?;
    let classes_line = expect_kv(&name, lines.next(), "classes")?;
    let classes: Vec<u32> = parse_float_list(&name, 3, &classes_line)?
        .into_iter()
        .map(|v| v as u32)
        .collect();
    if classes.len() < 2 {
        return Err(Error::parse(&name, 3, "need at least two classes"));
    }

    match kind.as_str() {
        "svm" => load_svm_model(&name, classes, lines),
        "wc" => load_wc_model(&name, classes, lines),
        other => Err(Error::parse(&name, 2, format!("unknown model kind `{other}`"))),
    }
}

type Lines<'a> = std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>;

fn expect_kv(name: &str, line: Option<(usize, &str)>, key: &str) -> Result<String> {
    match line {
        Some((idx, text)) => {
            let (k, v) = split_kv(name, idx + 1, text)?;
            if k != key {
                return Err(Error::parse(name, idx + 1, format!("expected key `{key}`, got `{k}`")));
            }
            Ok(v)
        }
        None => Err(Error::parse(name, 0, format!("missing key `{key}`"))),
    }
}

fn split_kv(name: &str, lineno: usize, text: &str) -> Result<(String, String)> {
    match text.split_once('=') {
        Some((k, v)) => Ok((k.trim().to_string(), v.trim().to_string())),
        None => Err(Error::parse(name, lineno, format!("expected `key = value`, got `{text}`"))),
    }
}

fn parse_float_list(name: &str, lineno: usize, text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::parse(name, lineno, format!("bad number `{tok}`")))
        })
        .collect()
}

fn load_svm_model(name: &str, classes: Vec<u32>, mut lines: Lines) -> Result<AnyModel> {
    let mut config = TrainerConfig::default();
    let mut stats = FeatureStats::identity();
    let mut models: Vec<SvmModel> = Vec::new();
    let mut current: Option<(u32, f64, Vec<Vec<f64>>, Vec<f64>)> = None;
    let mut section = String::new();
    let mut quantile = 0.3;
    let mut lambda0_auto = true;
    let mut lambda0_fixed = 0.1;

    while let Some((idx, raw)) = lines.next() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            if let Some(done) = current.take() {
                models.push(finish_class(name, lineno, done, &config)?);
            }
            if let Some(rest) = header.strip_prefix("class ") {
                let class: u32 = rest
                    .parse()
                    .map_err(|_| Error::parse(name, lineno, format!("bad class id `{rest}`")))?;
                current = Some((class, 0.0, Vec::new(), Vec::new()));
                section = "class".into();
            } else {
                section = header.to_string();
            }
            continue;
        }
        let (key, value) = split_kv(name, lineno, line)?;
        let bad = |what: &str| Error::parse(name, lineno, format!("bad {what} `{value}`"));
        match (section.as_str(), key.as_str()) {
            ("config", "c") => config.c = value.parse().map_err(|_| bad("c"))?,
            ("config", "gamma") => config.gamma = value.parse().map_err(|_| bad("gamma"))?,
            ("config", "lambda0") => {
                if value == "auto" {
                    lambda0_auto = true;
                } else {
                    lambda0_auto = false;
                    lambda0_fixed = value.parse().map_err(|_| bad("lambda0"))?;
                }
            }
            ("config", "quantile") => quantile = value.parse().map_err(|_| bad("quantile"))?,
            ("config", "kappa") => config.kappa = value.parse().map_err(|_| bad("kappa"))?,
            ("config", "regularizer") => {
                config.regularizer =
                    Regularizer::parse(&value).ok_or_else(|| bad("regularizer"))?
            }
            ("config", "entropy_mode") => {
                config.entropy_mode =
                    EntropyMode::parse(&value).ok_or_else(|| bad("entropy mode"))?
            }
            ("config", "stop_eps") => config.stop_eps = value.parse().map_err(|_| bad("stop_eps"))?,
            ("config", "max_outer") => {
                config.max_outer = value.parse().map_err(|_| bad("max_outer"))?
            }
            ("config", "tol") => config.tol = value.parse().map_err(|_| bad("tol"))?,
            ("config", "seed") => config.seed = value.parse().map_err(|_| bad("seed"))?,
            ("config", "normalize") => {
                config.normalize = value.parse().map_err(|_| bad("normalize"))?
            }
            ("normalization", "mean") => {
                let vals = parse_float_list(name, lineno, &value)?;
                if vals.len() != FEATURE_DIM {
                    return Err(bad("mean vector"));
                }
                stats.mean.copy_from_slice(&vals);
            }
            ("normalization", "std") => {
                let vals = parse_float_list(name, lineno, &value)?;
                if vals.len() != FEATURE_DIM {
                    return Err(bad("std vector"));
                }
                stats.std.copy_from_slice(&vals);
            }
            ("class", "bias") => {
                if let Some(cur) = current.as_mut() {
                    cur.1 = value.parse().map_err(|_| bad("bias"))?;
                }
            }
            ("class", "sv") => {
                if let Some(cur) = current.as_mut() {
                    let vals = parse_float_list(name, lineno, &value)?;
                    if vals.len() != 1 + FEATURE_DIM {
                        return Err(bad("support vector line"));
                    }
                    cur.3.push(vals[0]);
                    cur.2.push(vals[1..].to_vec());
                }
            }
            (_, other) => {
                return Err(Error::parse(name, lineno, format!("unknown key `{other}`")));
            }
        }
    }
    if let Some(done) = current.take() {
        models.push(finish_class(name, 0, done, &config)?);
    }
    config.lambda0 = if lambda0_auto {
        PaceInit::Auto { quantile }
    } else {
        PaceInit::Fixed(lambda0_fixed)
    };
    if models.len() != classes.len() {
        return Err(Error::parse(
            name,
            0,
            format!("expected {} class sections, got {}", classes.len(), models.len()),
        ));
    }
    Ok(AnyModel::Svm(MulticlassModel {
        classes,
        models,
        stats,
        config,
    }))
}

fn finish_class(
    name: &str,
    lineno: usize,
    (class, bias, svs, coefs): (u32, f64, Vec<Vec<f64>>, Vec<f64>),
    config: &TrainerConfig,
) -> Result<SvmModel> {
    if svs.is_empty() {
        return Err(Error::parse(name, lineno, format!("class {class} has no support vectors")));
    }
    Ok(SvmModel {
        support_features: svs,
        coefficients: coefs,
        bias,
        params: config.kernel()?,
    })
}

fn load_wc_model(name: &str, classes: Vec<u32>, lines: Lines) -> Result<AnyModel> {
    let mut sigmas: Vec<CoherencyMatrix> = Vec::new();
    let mut seen: Vec<u32> = Vec::new();
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let rest = header
                .strip_prefix("class ")
                .ok_or_else(|| Error::parse(name, lineno, format!("unknown section `{header}`")))?;
            let class: u32 = rest
                .parse()
                .map_err(|_| Error::parse(name, lineno, format!("bad class id `{rest}`")))?;
            seen.push(class);
            continue;
        }
        let (key, value) = split_kv(name, lineno, line)?;
        if key != "sigma" {
            return Err(Error::parse(name, lineno, format!("unknown key `{key}`")));
        }
        let vals = parse_float_list(name, lineno, &value)?;
        if vals.len() != 9 {
            return Err(Error::parse(name, lineno, "sigma needs 9 scalars"));
        }
        let mut arr = [0.0; 9];
        arr.copy_from_slice(&vals);
        sigmas.push(CoherencyMatrix::from_scalars(arr));
    }
    if seen != classes || sigmas.len() != classes.len() {
        return Err(Error::parse(name, 0, "class sections do not match the class list"));
    }
    Ok(AnyModel::Wishart(crate::baselines::centers_from_means(
        classes, sigmas,
    )?))
}

/// Sequential reference path for [`predict_map`].
pub fn predict_map_seq(model: &MulticlassModel, ds: &GridDataset) -> Result<LabelMap> {
    let grid = crate::features::extract_grid_seq(ds)?;
    predict_features_seq(model, &grid)
}
