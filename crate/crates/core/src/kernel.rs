//! Gram matrices over `d x n` data (points are columns).
//!
//! The Gaussian kernel is `exp(-‖x - y‖² / σ²)` where `σ²` is either fixed or
//! the median of all pairwise squared distances of the data it is fitted on.
//! Cross-kernels for out-of-sample points reuse the bandwidth resolved on the
//! training data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, sq_dist, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Gaussian,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    /// Median pairwise squared distance of the fitted data.
    Median,
    /// Fixed `σ²`.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self::gaussian_median()
    }
}

impl KernelSpec {
    pub fn gaussian_median() -> Self {
        Self {
            kind: KernelKind::Gaussian,
            bandwidth: Bandwidth::Median,
        }
    }

    pub fn gaussian(sigma_sq: f64) -> Self {
        Self {
            kind: KernelKind::Gaussian,
            bandwidth: Bandwidth::Fixed(sigma_sq),
        }
    }

    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            bandwidth: Bandwidth::Median,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(s) = self.bandwidth {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "fixed bandwidth must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Fixes the bandwidth against `x` (a no-op for linear or fixed kernels).
    pub fn resolve(&self, x: &DenseMatrix) -> Result<ResolvedKernel> {
        self.validate()?;
        Ok(match (self.kind, self.bandwidth) {
            (KernelKind::Linear, _) => ResolvedKernel::Linear,
            (KernelKind::Gaussian, Bandwidth::Fixed(sigma_sq)) => ResolvedKernel::Gaussian { sigma_sq },
            (KernelKind::Gaussian, Bandwidth::Median) => ResolvedKernel::Gaussian {
                sigma_sq: median_sq_dist(x)?,
            },
        })
    }
}

/// A kernel function with every parameter pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResolvedKernel {
    Gaussian { sigma_sq: f64 },
    Linear,
}

impl ResolvedKernel {
    #[inline]
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            ResolvedKernel::Gaussian { sigma_sq } => (-sq_dist(a, b) / sigma_sq).exp(),
            ResolvedKernel::Linear => dot(a, b),
        }
    }

    pub fn bandwidth(&self) -> Option<f64> {
        match *self {
            ResolvedKernel::Gaussian { sigma_sq } => Some(sigma_sq),
            ResolvedKernel::Linear => None,
        }
    }
}

/// Gram matrix together with the kernel that produced it.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub gram: DenseMatrix,
    pub spec: KernelSpec,
    pub kernel: ResolvedKernel,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.gram.rows()
    }

    pub fn resolved_bandwidth(&self) -> Option<f64> {
        self.kernel.bandwidth()
    }
}

/// Median of the `n(n-1)/2` pairwise squared distances between columns.
pub fn median_sq_dist(x: &DenseMatrix) -> Result<f64> {
    let n = x.cols();
    if n < 2 {
        return Err(Error::DegenerateData(
            "median heuristic needs at least two points".into(),
        ));
    }
    let pts = x.columns();
    let mut dists: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let pts = &pts;
            ((i + 1)..n).map(move |j| sq_dist(&pts[i], &pts[j]))
        })
        .collect();
    let m = dists.len();
    let mid = m / 2;
    let (_, &mut upper, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if m % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    if median <= 0.0 {
        return Err(Error::DegenerateData(
            "median pairwise squared distance is zero; supply a fixed bandwidth".into(),
        ));
    }
    Ok(median)
}

/// `K_ij = k(x_i, x_j)` over the columns of `x`.
pub fn gram(x: &DenseMatrix, spec: &KernelSpec) -> Result<KernelMatrix> {
    let kernel = spec.resolve(x)?;
    Ok(KernelMatrix {
        gram: gram_with(x, &kernel),
        spec: *spec,
        kernel,
    })
}

pub fn gram_with(x: &DenseMatrix, kernel: &ResolvedKernel) -> DenseMatrix {
    let n = x.cols();
    let pts = x.columns();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            // evaluate the upper triangle order so k(x_i, x_j) == k(x_j, x_i) bitwise
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            *v = kernel.eval(&pts[a], &pts[b]);
        }
    });
    DenseMatrix::new(n, n, data).expect("kernel values are finite")
}

/// `n x m` matrix of `k(train_i, new_j)`.
pub fn cross_gram(
    x_train: &DenseMatrix,
    x_new: &DenseMatrix,
    kernel: &ResolvedKernel,
) -> Result<DenseMatrix> {
    if x_train.rows() != x_new.rows() {
        return Err(Error::DimensionMismatch(format!(
            "training points have dimension {}, new points {}",
            x_train.rows(),
            x_new.rows()
        )));
    }
    let train = x_train.columns();
    let new = x_new.columns();
    let m = new.len();
    let mut data = vec![0.0; train.len() * m];
    data.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        for (v, q) in row.iter_mut().zip(&new) {
            *v = kernel.eval(&train[i], q);
        }
    });
    DenseMatrix::new(train.len(), m, data)
}

/// `H = I - (1/n) 11ᵀ`.
pub fn centering_matrix(n: usize) -> DenseMatrix {
    let inv = 1.0 / n as f64;
    DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - inv } else { -inv })
}
