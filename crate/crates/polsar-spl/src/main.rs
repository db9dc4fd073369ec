//! Command-line driver: scene synthesis, feature extraction, training,
//! prediction, evaluation, and the experiment runner.
//!
//! Exit codes: 0 success, 1 run failure, 2 usage/config error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polsar_spl::baselines::wishart_centers;
use polsar_spl::dataset::{
    read_coherency_csv, read_label_map, write_coherency_csv, write_feature_csv, write_label_map,
    Split,
};
use polsar_spl::error::Error;
use polsar_spl::experiment::{run_experiment, ExperimentConfig};
use polsar_spl::features::extract_grid;
use polsar_spl::metrics::{confusion_matrix, oa_aa, render_class_map, EvalScope, DEFAULT_PALETTE};
use polsar_spl::scene::{generate_scene, sample_training_mask, Layout, SceneSpec};
use polsar_spl::spl::{EntropyMode, Regularizer};
use polsar_spl::trainer::{
    load_model, predict_features, save_model, train_multiclass_features,
    train_plain_svm_features, write_trace_csv, AnyModel, PaceInit, TrainerConfig,
};

#[derive(Parser)]
#[command(name = "polsar-spl", version, about = "Self-paced SVM pixel classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene and write it as a coherency CSV.
    Synth(SynthArgs),
    /// Extract 7-dim feature vectors from a coherency CSV.
    Features(FeaturesArgs),
    /// Train a classifier and save the model file.
    Train(TrainArgs),
    /// Predict a label map for every pixel of a dataset.
    Predict(PredictArgs),
    /// Evaluate a predicted map against ground truth.
    Eval(EvalArgs),
    /// Run a whole experiment from a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    height: usize,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    /// stripes | voronoi:<seeds> | blocks
    #[arg(long, default_value = "stripes")]
    layout: String,
    #[arg(long, default_value_t = 4)]
    looks: u32,
    #[arg(long, default_value_t = 0.6)]
    similarity: f64,
    /// Fraction of each class marked as training pixels.
    #[arg(long, default_value_t = 0.02)]
    train_fraction: f64,
    /// Side of the square training blocks.
    #[arg(long, default_value_t = 3)]
    block_size: usize,
    #[arg(long)]
    seed: u64,
    /// Output coherency CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Optional ground-truth label map output.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Clone)]
struct TrainOpts {
    #[arg(long, default_value_t = 100.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// `auto` (quantile of warm-start losses) or a positive number.
    #[arg(long, default_value = "auto")]
    lambda0: String,
    #[arg(long, default_value_t = 0.3)]
    quantile: f64,
    #[arg(long, default_value_t = 1.05)]
    kappa: f64,
    /// binary | linear | neighborhood
    #[arg(long, default_value = "neighborhood")]
    regularizer: String,
    /// normalized | literal
    #[arg(long, default_value = "normalized")]
    entropy_mode: String,
    #[arg(long, default_value_t = 0.01)]
    stop_eps: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Disable feature z-scoring.
    #[arg(long)]
    no_normalize: bool,
}

impl TrainOpts {
    fn to_config(&self, seed: u64) -> Result<TrainerConfig, Error> {
        let lambda0 = if self.lambda0 == "auto" {
            PaceInit::Auto {
                quantile: self.quantile,
            }
        } else {
            let v: f64 = self
                .lambda0
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad lambda0 `{}`", self.lambda0)))?;
            PaceInit::Fixed(v)
        };
        let config = TrainerConfig {
            c: self.c,
            gamma: self.gamma,
            lambda0,
            kappa: self.kappa,
            regularizer: Regularizer::parse(&self.regularizer)
                .ok_or_else(|| Error::InvalidConfig(format!("bad regularizer `{}`", self.regularizer)))?,
            entropy_mode: EntropyMode::parse(&self.entropy_mode)
                .ok_or_else(|| Error::InvalidConfig(format!("bad entropy mode `{}`", self.entropy_mode)))?,
            stop_eps: self.stop_eps,
            max_outer: self.max_iters,
            tol: self.tol,
            seed,
            normalize: !self.no_normalize,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Input coherency CSV with train/test split flags.
    #[arg(long)]
    input: PathBuf,
    /// svm | wc | svm_spl | svm_splnc
    #[arg(long, default_value = "svm_splnc")]
    method: String,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    opts: TrainOpts,
    /// Model file output path.
    #[arg(long)]
    model_out: PathBuf,
    /// Optional per-iteration trace CSV.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Predicted label map output.
    #[arg(long)]
    output: PathBuf,
    /// Optional PPM rendering of the predicted map.
    #[arg(long)]
    map: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Dataset CSV providing the split flags (required for `test` scope).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// test | all-labeled
    #[arg(long, default_value = "all-labeled")]
    on: String,
    /// Optional confusion-matrix CSV output.
    #[arg(long)]
    confusion_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Parse { .. } | Error::InvalidConfig(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Synth(args) => {
            let layout = Layout::parse(&args.layout)
                .ok_or_else(|| Error::InvalidConfig(format!("bad layout `{}`", args.layout)))?;
            let spec = SceneSpec {
                width: args.width,
                height: args.height,
                classes: args.classes,
                layout,
                looks: args.looks,
                similarity: args.similarity,
                seed: args.seed,
            };
            let mut ds = generate_scene(&spec)?;
            let mut rng = polsar_spl::rng::stream(args.seed, polsar_spl::experiment::STREAM_MASK);
            sample_training_mask(&mut ds, args.train_fraction, args.block_size, &mut rng)?;
            write_coherency_csv(&ds, &args.out)?;
            if let Some(truth) = args.truth {
                write_label_map(&ds.truth_map(), &truth)?;
            }
            println!(
                "wrote {}x{} scene with {} training pixels ({:.4} of labeled)",
                ds.width,
                ds.height,
                ds.train_count(),
                ds.achieved_training_fraction()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Features(args) => {
            let ds = read_coherency_csv(&args.input)?;
            let grid = extract_grid(&ds)?;
            write_feature_csv(&grid, &args.output)?;
            println!("wrote {} feature rows", grid.samples.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train(args) => {
            let ds = read_coherency_csv(&args.input)?;
            let config = args.opts.to_config(args.seed)?;
            let model = match args.method.as_str() {
                "wc" => AnyModel::Wishart(wishart_centers(&ds)?),
                "svm" => {
                    let grid = extract_grid(&ds)?;
                    let (m, traces) = train_plain_svm_features(&grid, &config)?;
                    if let Some(path) = &args.trace_out {
                        write_trace_csv(&traces, path)?;
                    }
                    AnyModel::Svm(m)
                }
                "svm_spl" | "svm_splnc" => {
                    let mut config = config;
                    config.regularizer = if args.method == "svm_spl" {
                        Regularizer::Linear
                    } else {
                        Regularizer::Neighborhood
                    };
                    let grid = extract_grid(&ds)?;
                    let (m, traces) = train_multiclass_features(&grid, &config)?;
                    if let Some(path) = &args.trace_out {
                        write_trace_csv(&traces, path)?;
                    }
                    AnyModel::Svm(m)
                }
                other => {
                    return Err(Error::InvalidConfig(format!("unknown method `{other}`")));
                }
            };
            save_model(&model, &args.model_out)?;
            println!("saved model to {}", args.model_out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict(args) => {
            let model = load_model(&args.model)?;
            let ds = read_coherency_csv(&args.input)?;
            let predicted = match &model {
                AnyModel::Svm(m) => {
                    let grid = extract_grid(&ds)?;
                    predict_features(m, &grid)?
                }
                AnyModel::Wishart(_) => model.predict(&ds)?,
            };
            write_label_map(&predicted, &args.output)?;
            if let Some(path) = args.map {
                let bytes = render_class_map(&predicted, &DEFAULT_PALETTE)?;
                std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
            }
            println!("wrote predictions for {} pixels", predicted.labels.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(args) => {
            let pred = read_label_map(&args.pred)?;
            let truth = read_label_map(&args.truth)?;
            let scope = EvalScope::parse(&args.on)
                .ok_or_else(|| Error::InvalidConfig(format!("bad scope `{}`", args.on)))?;
            let splits: Vec<Split> = match &args.dataset {
                Some(path) => read_coherency_csv(path)?.splits(),
                None => {
                    if scope == EvalScope::Test {
                        return Err(Error::InvalidConfig(
                            "`--on test` needs `--dataset` for the split flags".into(),
                        ));
                    }
                    vec![Split::Test; truth.labels.len()]
                }
            };
            let cm = confusion_matrix(&pred, &truth, &splits, scope)?;
            if let Some(path) = &args.confusion_out {
                std::fs::write(path, cm.to_csv()).map_err(|e| Error::io(path, e))?;
            }
            let acc = oa_aa(&cm)?;
            println!("oa,{:.6}", acc.oa);
            println!("aa,{:.6}", acc.aa);
            for (class, value) in &acc.per_class {
                match value {
                    Some(v) => println!("acc_{class},{v:.6}"),
                    None => println!("acc_{class},na"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run(args) => {
            let config = ExperimentConfig::from_file(&args.config)?;
            let report = run_experiment(&config)?;
            println!("summary: {}", report.summary_path.display());
            for r in &report.results {
                println!(
                    "{},{},oa={:.6},aa={:.6}",
                    r.method.as_str(),
                    r.seed,
                    r.accuracy.oa,
                    r.accuracy.aa
                );
            }
            if report.failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                for (m, s, msg) in &report.failures {
                    eprintln!("run failed: {} seed {}: {}", m.as_str(), s, msg);
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}
