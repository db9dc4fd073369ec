//! Self-paced SVM training with neighborhood-constrained sample
//! weighting for pixel classification of polarimetric-SAR-like gridded
//! data.
//!
//! The crate bundles feature extraction from 3x3 coherency matrices
//! (eigenvalues and Cloude-Pottier parameters), a weighted kernel-SVM
//! dual solver, the self-paced training loop with binary, linear and
//! neighborhood regularizers, a plain-SVM and Wishart-classifier
//! baseline, a synthetic Wishart-speckle scene generator, and an
//! evaluation harness with a CLI.
//!
//! Data-parallel inner loops (feature extraction, Gram matrices, scene
//! synthesis, prediction) run on rayon under the default `parallel`
//! feature and fall back to sequential iteration without it; `*_seq`
//! variants expose the sequential path for benchmarks and equivalence
//! tests.

pub mod baselines;
pub mod coherency;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod features;
pub mod kernel;
pub mod metrics;
mod parallel;
pub mod rng;
pub mod scene;
pub mod spl;
pub mod svm;
pub mod trainer;

pub use error::{Error, Result};
