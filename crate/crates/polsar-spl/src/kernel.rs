//! Gaussian kernel evaluation and the training Gram matrix.

use crate::error::{Error, Result};
use crate::parallel::{maybe_par_map, seq_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
}

/// Kernel function parameters; `K(x,z) = exp(-gamma * ||x-z||^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub kind: KernelKind,
    pub gamma: f64,
}

impl KernelParams {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self {
            kind: KernelKind::Gaussian,
            gamma,
        })
    }
}

/// Evaluates the kernel on a pair of equal-length feature vectors.
pub fn rbf_kernel(x: &[f64], z: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: z.len(),
        });
    }
    Ok(rbf_unchecked(x, z, params.gamma))
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    let mut d2 = 0.0;
    for (a, b) in x.iter().zip(z.iter()) {
        let d = a - b;
        d2 += d * d;
    }
    (-gamma * d2).exp()
}

/// Pairwise kernel values over a training set.
///
/// Up to [`GramMatrix::DENSE_LIMIT`] samples the full symmetric matrix is
/// precomputed; beyond that entries are recomputed on demand with the same
/// arithmetic, so both paths agree exactly.
pub struct GramMatrix<'a> {
    xs: &'a [Vec<f64>],
    gamma: f64,
    dense: Option<Vec<f64>>,
}

impl<'a> GramMatrix<'a> {
    pub const DENSE_LIMIT: usize = 4000;

    pub fn new(xs: &'a [Vec<f64>], params: &KernelParams) -> Self {
        Self::with_limit(xs, params, Self::DENSE_LIMIT)
    }

    pub fn with_limit(xs: &'a [Vec<f64>], params: &KernelParams, dense_limit: usize) -> Self {
        let n = xs.len();
        let dense = if n <= dense_limit {
            Some(dense_gram(xs, params))
        } else {
            None
        };
        Self {
            xs,
            gamma: params.gamma,
            dense,
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        match &self.dense {
            Some(d) => d[i * self.xs.len() + j],
            None => rbf_unchecked(&self.xs[i], &self.xs[j], self.gamma),
        }
    }
}

/// Full dense Gram matrix, row-major; parallel over rows by default.
pub fn dense_gram(xs: &[Vec<f64>], params: &KernelParams) -> Vec<f64> {
    let n = xs.len();
    let gamma = params.gamma;
    let rows = maybe_par_map(n, |i| {
        let mut row = vec![0.0; n];
        for (j, x) in xs.iter().enumerate() {
            row[j] = rbf_unchecked(&xs[i], x, gamma);
        }
        row
    });
    flatten(rows, n)
}

/// Sequential reference path for [`dense_gram`].
pub fn dense_gram_seq(xs: &[Vec<f64>], params: &KernelParams) -> Vec<f64> {
    let n = xs.len();
    let gamma = params.gamma;
    let rows = seq_map(n, |i| {
        let mut row = vec![0.0; n];
        for (j, x) in xs.iter().enumerate() {
            row[j] = rbf_unchecked(&xs[i], x, gamma);
        }
        row
    });
    flatten(rows, n)
}

fn flatten(rows: Vec<Vec<f64>>, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * n);
    for row in rows {
        out.extend_from_slice(&row);
    }
    out
}
