//! Self-paced weight computation and the pace schedule.
//!
//! Three regularizers give closed-form weights from a sample's training
//! loss `L` and the pace `lambda`: binary (0/1 admission), linear (ramp),
//! and neighborhood-constrained (the loss is blended with the mean loss
//! of the 8-connected neighbors, weighted by the Shannon entropy of the
//! neighbor loss distribution).

use crate::error::{Error, Result};

/// Maximum number of grid neighbors.
pub const MAX_NEIGHBORS: usize = 8;

/// How the neighbor-loss entropy normalizes its distribution.
///
/// `Normalized` treats the neighbor losses as a probability distribution
/// (divide by their sum). `Literal` divides each loss by the neighbor
/// mean instead; the resulting "entropy" is clamped at zero to keep the
/// combined loss non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyMode {
    Normalized,
    Literal,
}

impl EntropyMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntropyMode::Normalized => "normalized",
            EntropyMode::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "normalized" => Some(EntropyMode::Normalized),
            "literal" => Some(EntropyMode::Literal),
            _ => None,
        }
    }
}

/// The self-paced regularizer choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    Binary,
    Linear,
    Neighborhood,
}

impl Regularizer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regularizer::Binary => "binary",
            Regularizer::Linear => "linear",
            Regularizer::Neighborhood => "neighborhood",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "binary" => Some(Regularizer::Binary),
            "linear" => Some(Regularizer::Linear),
            "neighborhood" => Some(Regularizer::Neighborhood),
            _ => None,
        }
    }
}

/// A sample's loss together with the losses of its available neighbors.
#[derive(Debug, Clone, Copy)]
pub struct NeighborLosses {
    pub center: f64,
    neighbors: [f64; MAX_NEIGHBORS],
    count: usize,
}

impl NeighborLosses {
    pub fn new(center: f64, neighbors: &[f64]) -> Self {
        assert!(neighbors.len() <= MAX_NEIGHBORS, "at most 8 grid neighbors");
        let mut buf = [0.0; MAX_NEIGHBORS];
        buf[..neighbors.len()].copy_from_slice(neighbors);
        Self {
            center,
            neighbors: buf,
            count: neighbors.len(),
        }
    }

    pub fn neighbors(&self) -> &[f64] {
        &self.neighbors[..self.count]
    }

    /// Mean of the available neighbor losses, 0 when there are none.
    pub fn neighbor_mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.neighbors().iter().sum::<f64>() / self.count as f64
        }
    }
}

fn check_pace(lambda: f64) -> Result<()> {
    if lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositivePace(lambda))
    }
}

/// Binary weight: 1 when `loss < lambda`, else 0.
pub fn weight_binary(loss: f64, lambda: f64) -> Result<f64> {
    check_pace(lambda)?;
    Ok(if loss < lambda { 1.0 } else { 0.0 })
}

/// Linear weight: `1 - loss/lambda` when `loss < lambda`, else 0.
pub fn weight_linear(loss: f64, lambda: f64) -> Result<f64> {
    check_pace(lambda)?;
    Ok(if loss < lambda { 1.0 - loss / lambda } else { 0.0 })
}

/// Shannon entropy of the neighbor-loss distribution, `>= 0`.
///
/// Zero neighbors or an all-zero neighborhood give 0. In `Normalized`
/// mode this is the entropy of `p_j = L_j / sum(L)`, bounded by `ln 8`.
pub fn neighborhood_gamma(nl: &NeighborLosses, mode: EntropyMode) -> f64 {
    let losses = nl.neighbors();
    if losses.is_empty() {
        return 0.0;
    }
    let total: f64 = losses.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let denom = match mode {
        EntropyMode::Normalized => total,
        EntropyMode::Literal => total / losses.len() as f64,
    };
    let mut gamma = 0.0;
    for &l in losses {
        let p = l / denom;
        if p > 0.0 {
            gamma -= p * p.ln();
        }
    }
    gamma.max(0.0)
}

/// Neighborhood-constrained weight.
///
/// The combined loss is `L + gamma * mean(neighbor losses)`; the linear
/// ramp is applied to it. With zero neighbors this reduces exactly to
/// [`weight_linear`].
pub fn weight_neighborhood(nl: &NeighborLosses, lambda: f64, mode: EntropyMode) -> Result<f64> {
    check_pace(lambda)?;
    let gamma = neighborhood_gamma(nl, mode);
    let combined = nl.center + gamma * nl.neighbor_mean();
    Ok(if combined < lambda {
        1.0 - combined / lambda
    } else {
        0.0
    })
}

/// Per-sample weights, pace parameter, and iteration counter of one SPL
/// training loop.
#[derive(Debug, Clone)]
pub struct SplState {
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub kappa: f64,
    pub iteration: usize,
}

impl SplState {
    pub fn new(n: usize, lambda: f64, kappa: f64) -> Result<Self> {
        check_pace(lambda)?;
        if !(kappa > 1.0) {
            return Err(Error::InvalidConfig(format!("kappa must exceed 1, got {kappa}")));
        }
        Ok(Self {
            weights: vec![0.0; n],
            lambda,
            kappa,
            iteration: 0,
        })
    }
}

/// Geometric pace growth: `lambda *= kappa`, iteration counter bumped,
/// weights untouched.
pub fn advance_pace(state: SplState) -> SplState {
    SplState {
        lambda: state.lambda * state.kappa,
        iteration: state.iteration + 1,
        ..state
    }
}

/// Initial pace from a warm-start loss list: the nearest-rank quantile,
/// floored at 1e-6 so the easy set at iteration one is never empty.
pub fn init_pace(losses: &[f64], quantile: f64) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::EmptyInput { needed: 1, got: 0 });
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quantile must lie in (0,1), got {quantile}"
        )));
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((quantile * sorted.len() as f64).ceil() as usize).max(1);
    Ok(sorted[rank - 1].max(1e-6))
}
