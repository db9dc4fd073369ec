//! The reproducible experiment driver: a flat `key = value` config with
//! `[section]` headers, and a runner producing per-run artifacts plus a
//! summary CSV.
//!
//! Unknown keys are hard errors so typos cannot silently change an
//! experiment. Report CSVs print reals fixed to six decimals.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::baselines::{wishart_centers, wishart_classify_map};
use crate::dataset::{read_coherency_csv, GridDataset, LabelMap};
use crate::error::{Error, Result};
use crate::features::extract_grid;
use crate::metrics::{confusion_matrix, oa_aa, render_class_map, Accuracy, EvalScope, DEFAULT_PALETTE};
use crate::scene::{generate_scene, sample_training_mask, Layout, SceneSpec};
use crate::spl::Regularizer;
use crate::trainer::{
    predict_features, train_multiclass_features, train_plain_svm_features, write_trace_csv,
    PaceInit, TrainerConfig,
};

/// Where the pixels come from.
#[derive(Debug, Clone)]
pub enum DatasetSource {
    Synthetic {
        width: usize,
        height: usize,
        classes: usize,
        layout: Layout,
        looks: u32,
        similarity: f64,
        train_fraction: f64,
        block_size: usize,
    },
    File {
        coherency: PathBuf,
    },
}

/// A method under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Svm,
    Wc,
    SvmSpl,
    SvmSplnc,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Svm => "svm",
            Method::Wc => "wc",
            Method::SvmSpl => "svm_spl",
            Method::SvmSplnc => "svm_splnc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "svm" => Some(Method::Svm),
            "wc" => Some(Method::Wc),
            "svm_spl" => Some(Method::SvmSpl),
            "svm_splnc" => Some(Method::SvmSplnc),
            _ => None,
        }
    }
}

/// A fully parsed experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub train: TrainerConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub evaluate_on: EvalScope,
    pub output: PathBuf,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_config(&path.display().to_string(), &text)
    }
}

fn parse_config(name: &str, text: &str) -> Result<ExperimentConfig> {
    let mut section = String::new();

    let mut source: Option<String> = None;
    let mut coherency: Option<PathBuf> = None;
    let mut width = 64usize;
    let mut height = 64usize;
    let mut classes = 5usize;
    let mut layout = Layout::Stripes;
    let mut looks = 4u32;
    let mut similarity = 0.6f64;
    let mut train_fraction = 0.02f64;
    let mut block_size = 3usize;

    let mut train = TrainerConfig::default();
    let mut quantile = 0.3f64;
    let mut lambda0_auto = true;
    let mut lambda0_fixed = 0.1f64;

    let mut methods: Option<Vec<Method>> = None;
    let mut seeds: Option<Vec<u64>> = None;
    let mut evaluate_on = EvalScope::Test;
    let mut output = PathBuf::from("experiment_out");

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            match header {
                "dataset" | "train" | "run" => section = header.to_string(),
                other => {
                    return Err(Error::parse(name, lineno, format!("unknown section `[{other}]`")))
                }
            }
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("expected `key = value`, got `{line}`"),
                ))
            }
        };
        let bad = |what: &str| Error::parse(name, lineno, format!("bad {what} `{value}`"));
        match (section.as_str(), key) {
            ("dataset", "source") => source = Some(value.to_string()),
            ("dataset", "coherency") => coherency = Some(PathBuf::from(value)),
            ("dataset", "width") => width = value.parse().map_err(|_| bad("width"))?,
            ("dataset", "height") => height = value.parse().map_err(|_| bad("height"))?,
            ("dataset", "classes") => classes = value.parse().map_err(|_| bad("classes"))?,
            ("dataset", "layout") => {
                layout = Layout::parse(value).ok_or_else(|| bad("layout"))?;
            }
            ("dataset", "looks") => looks = value.parse().map_err(|_| bad("looks"))?,
            ("dataset", "similarity") => {
                similarity = value.parse().map_err(|_| bad("similarity"))?
            }
            ("dataset", "train_fraction") => {
                train_fraction = value.parse().map_err(|_| bad("train_fraction"))?
            }
            ("dataset", "block_size") => {
                block_size = value.parse().map_err(|_| bad("block_size"))?
            }
            ("train", "c") => train.c = value.parse().map_err(|_| bad("c"))?,
            ("train", "gamma") => train.gamma = value.parse().map_err(|_| bad("gamma"))?,
            ("train", "lambda0") => {
                if value == "auto" {
                    lambda0_auto = true;
                } else {
                    lambda0_auto = false;
                    lambda0_fixed = value.parse().map_err(|_| bad("lambda0"))?;
                }
            }
            ("train", "quantile") => quantile = value.parse().map_err(|_| bad("quantile"))?,
            ("train", "kappa") => train.kappa = value.parse().map_err(|_| bad("kappa"))?,
            ("train", "entropy_mode") => {
                train.entropy_mode =
                    crate::spl::EntropyMode::parse(value).ok_or_else(|| bad("entropy_mode"))?
            }
            ("train", "stop_eps") => train.stop_eps = value.parse().map_err(|_| bad("stop_eps"))?,
            ("train", "max_iters") => {
                train.max_outer = value.parse().map_err(|_| bad("max_iters"))?
            }
            ("train", "tol") => train.tol = value.parse().map_err(|_| bad("tol"))?,
            ("train", "normalize") => {
                train.normalize = value.parse().map_err(|_| bad("normalize"))?
            }
            ("run", "methods") => {
                let mut parsed = Vec::new();
                for tok in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    parsed.push(Method::parse(tok).ok_or_else(|| {
                        Error::parse(name, lineno, format!("unknown method `{tok}` in key `methods`"))
                    })?);
                }
                methods = Some(parsed);
            }
            ("run", "seeds") => {
                let mut parsed = Vec::new();
                for tok in value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                    parsed.push(tok.parse().map_err(|_| bad("seed"))?);
                }
                seeds = Some(parsed);
            }
            ("run", "evaluate_on") => {
                evaluate_on = EvalScope::parse(value).ok_or_else(|| bad("evaluate_on"))?
            }
            ("run", "output") => output = PathBuf::from(value),
            ("", k) => {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("key `{k}` appears before any section header"),
                ))
            }
            (_, k) => {
                return Err(Error::parse(name, lineno, format!("unknown key `{k}`")));
            }
        }
    }

    train.lambda0 = if lambda0_auto {
        PaceInit::Auto { quantile }
    } else {
        PaceInit::Fixed(lambda0_fixed)
    };

    let dataset = match source.as_deref() {
        Some("synthetic") | None => DatasetSource::Synthetic {
            width,
            height,
            classes,
            layout,
            looks,
            similarity,
            train_fraction,
            block_size,
        },
        Some("file") => DatasetSource::File {
            coherency: coherency
                .ok_or_else(|| Error::parse(name, 1, "file source needs a `coherency` path"))?,
        },
        Some(other) => {
            return Err(Error::parse(name, 1, format!("unknown dataset source `{other}`")))
        }
    };
    let methods = methods.ok_or_else(|| Error::parse(name, 1, "missing `methods` in [run]"))?;
    let seeds = seeds.ok_or_else(|| Error::parse(name, 1, "missing `seeds` in [run]"))?;
    if methods.is_empty() || seeds.is_empty() {
        return Err(Error::parse(name, 1, "methods and seeds must be non-empty"));
    }
    train.validate()?;
    Ok(ExperimentConfig {
        dataset,
        train,
        methods,
        seeds,
        evaluate_on,
        output,
    })
}

/// Result of one successful (method, seed) run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: Method,
    pub seed: u64,
    pub accuracy: Accuracy,
}

/// Everything the runner produced.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub results: Vec<RunResult>,
    pub failures: Vec<(Method, u64, String)>,
    pub summary_path: PathBuf,
}

/// Stream id for the training-mask draw of synthetic runs; pixel streams
/// occupy `1..=width*height`.
pub const STREAM_MASK: u64 = u64::MAX - 1;

/// Builds the dataset for one seed.
pub fn dataset_for_seed(source: &DatasetSource, seed: u64) -> Result<GridDataset> {
    match source {
        DatasetSource::Synthetic {
            width,
            height,
            classes,
            layout,
            looks,
            similarity,
            train_fraction,
            block_size,
        } => {
            let spec = SceneSpec {
                width: *width,
                height: *height,
                classes: *classes,
                layout: *layout,
                looks: *looks,
                similarity: *similarity,
                seed,
            };
            let mut ds = generate_scene(&spec)?;
            let mut rng = crate::rng::stream(seed, STREAM_MASK);
            sample_training_mask(&mut ds, *train_fraction, *block_size, &mut rng)?;
            Ok(ds)
        }
        DatasetSource::File { coherency } => read_coherency_csv(coherency),
    }
}

fn run_one(
    method: Method,
    seed: u64,
    ds: &GridDataset,
    grid: &crate::dataset::FeatureGrid,
    base: &TrainerConfig,
    scope: EvalScope,
    out_dir: &Path,
) -> Result<Accuracy> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut config = base.clone();
    config.seed = seed;

    let predicted: LabelMap = match method {
        Method::Wc => {
            let centers = wishart_centers(ds)?;
            wishart_classify_map(ds, &centers)
        }
        Method::Svm => {
            let (model, traces) = train_plain_svm_features(grid, &config)?;
            write_trace_csv(&traces, &out_dir.join("trace.csv"))?;
            predict_features(&model, grid)?
        }
        Method::SvmSpl | Method::SvmSplnc => {
            config.regularizer = if method == Method::SvmSpl {
                Regularizer::Linear
            } else {
                Regularizer::Neighborhood
            };
            let (model, traces) = train_multiclass_features(grid, &config)?;
            write_trace_csv(&traces, &out_dir.join("trace.csv"))?;
            predict_features(&model, grid)?
        }
    };

    let truth = ds.truth_map();
    let cm = confusion_matrix(&predicted, &truth, &ds.splits(), scope)?;
    fs::write(out_dir.join("confusion.csv"), cm.to_csv())
        .map_err(|e| Error::io(out_dir.join("confusion.csv"), e))?;
    let ppm = render_class_map(&predicted, &DEFAULT_PALETTE)?;
    fs::write(out_dir.join("map.ppm"), ppm).map_err(|e| Error::io(out_dir.join("map.ppm"), e))?;
    oa_aa(&cm)
}

/// Runs every (method, seed) pair and writes the summary CSV.
///
/// Individual run failures are recorded rather than aborting the whole
/// experiment; the summary holds the successful rows in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    fs::create_dir_all(&config.output).map_err(|e| Error::io(&config.output, e))?;

    let mut results = Vec::new();
    let mut failures = Vec::new();
    let mut class_ids: Vec<u32> = Vec::new();

    for &seed in &config.seeds {
        let ds = dataset_for_seed(&config.dataset, seed)?;
        let grid = extract_grid(&ds)?;
        if class_ids.is_empty() {
            let mut ids: Vec<u32> = ds.truth_map().labels.into_iter().filter(|&l| l > 0).collect();
            ids.sort_unstable();
            ids.dedup();
            class_ids = ids;
        }
        for &method in &config.methods {
            let out_dir = config
                .output
                .join(format!("{}_seed{}", method.as_str(), seed));
            match run_one(method, seed, &ds, &grid, &config.train, config.evaluate_on, &out_dir) {
                Ok(accuracy) => results.push(RunResult {
                    method,
                    seed,
                    accuracy,
                }),
                Err(err) => failures.push((method, seed, err.to_string())),
            }
        }
    }

    // summary rows in (method, seed) config order
    let mut summary = String::from("method,seed,oa,aa");
    for c in &class_ids {
        let _ = write!(summary, ",acc_{c}");
    }
    summary.push('\n');
    for &method in &config.methods {
        for r in results.iter().filter(|r| r.method == method) {
            let _ = write!(
                summary,
                "{},{},{:.6},{:.6}",
                r.method.as_str(),
                r.seed,
                r.accuracy.oa,
                r.accuracy.aa
            );
            for c in &class_ids {
                match r.accuracy.per_class.iter().find(|(id, _)| id == c) {
                    Some((_, Some(acc))) => {
                        let _ = write!(summary, ",{acc:.6}");
                    }
                    _ => summary.push_str(",na"),
                }
            }
            summary.push('\n');
        }
    }
    let summary_path = config.output.join("summary.csv");
    fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))?;

    if !failures.is_empty() {
        let mut report = String::new();
        for (m, s, msg) in &failures {
            let _ = writeln!(report, "{} seed {}: {}", m.as_str(), s, msg);
        }
        let fail_path = config.output.join("failures.txt");
        fs::write(&fail_path, report).map_err(|e| Error::io(&fail_path, e))?;
    }

    Ok(ExperimentReport {
        results,
        failures,
        summary_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
[dataset]
source = synthetic
width = 16
height = 16
classes = 2
layout = stripes
looks = 4
similarity = 0.0
train_fraction = 0.1
block_size = 2
[train]
c = 10
gamma = 1
[run]
methods = svm,wc
seeds = 1,2
evaluate_on = test
output = out
";

    #[test]
    fn parses_a_complete_config() {
        let cfg = parse_config("test.cfg", GOOD).unwrap();
        assert_eq!(cfg.methods, vec![Method::Svm, Method::Wc]);
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.evaluate_on, EvalScope::Test);
        match cfg.dataset {
            DatasetSource::Synthetic { width, classes, .. } => {
                assert_eq!(width, 16);
                assert_eq!(classes, 2);
            }
            _ => panic!("expected synthetic"),
        }
    }

    #[test]
    fn unknown_method_names_the_key() {
        let text = GOOD.replace("methods = svm,wc", "methods = svm,banana");
        match parse_config("test.cfg", &text) {
            Err(Error::Parse { msg, line, .. }) => {
                assert!(msg.contains("banana"), "{msg}");
                assert!(msg.contains("methods"), "{msg}");
                assert!(line > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = GOOD.replace("c = 10", "cc = 10");
        match parse_config("test.cfg", &text) {
            Err(Error::Parse { msg, line, .. }) => {
                assert!(msg.contains("cc"), "{msg}");
                assert_eq!(line, 12);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_required_run_keys() {
        let text = GOOD.replace("seeds = 1,2\n", "");
        assert!(matches!(parse_config("t.cfg", &text), Err(Error::Parse { .. })));
    }
}
