//! Label-similarity graph and its normalized Laplacian.

use crate::error::{Error, Result};
use crate::linalg::{sq_dist, DenseMatrix};
use crate::mmd::LabeledSplit;
use crate::Label;

/// Adjacency, degrees and `L = I - D^{-1/2} W D^{-1/2}`.
#[derive(Debug, Clone)]
pub struct GraphPieces {
    pub w: DenseMatrix,
    pub degrees: Vec<f64>,
    pub l: DenseMatrix,
}

impl GraphPieces {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_diag(&self.degrees)
    }
}

/// `w_ij = 1` when `i == j` or both points are source points sharing a label.
///
/// Target points are unlabeled and only connect to themselves.
pub fn adjacency_from_labels(source_labels: &[Label], n_target: usize) -> DenseMatrix {
    let ns = source_labels.len();
    let n = ns + n_target;
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j || (i < ns && j < ns && source_labels[i] == source_labels[j]) {
            1.0
        } else {
            0.0
        }
    })
}

pub fn adjacency(split: &LabeledSplit) -> DenseMatrix {
    adjacency_from_labels(split.source_labels(), split.n_target())
}

pub fn normalized_laplacian(w: &DenseMatrix) -> Result<GraphPieces> {
    w.check_symmetric(1e-12)?;
    if let Some(neg) = w.as_slice().iter().position(|&v| v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "negative edge weight at ({}, {})",
            neg / w.cols(),
            neg % w.cols()
        )));
    }
    let n = w.rows();
    let degrees: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroDegree(i));
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let l = DenseMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * w.get(i, j) * inv_sqrt[j]
    });
    Ok(GraphPieces {
        w: w.clone(),
        degrees,
        l,
    })
}

/// `(1/2) Σ_ij ‖z_i/√d_i - z_j/√d_j‖² w_ij` summed pair by pair; `z` is `k x n`.
pub fn embedding_objective_oracle(z: &DenseMatrix, pieces: &GraphPieces) -> Result<f64> {
    let n = pieces.n();
    if z.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} points, graph has {n}",
            z.cols()
        )));
    }
    let scaled: Vec<Vec<f64>> = z
        .columns()
        .into_iter()
        .zip(&pieces.degrees)
        .map(|(c, d)| c.iter().map(|v| v / d.sqrt()).collect())
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = pieces.w.get(i, j);
            if w != 0.0 {
                total += w * sq_dist(&scaled[i], &scaled[j]);
            }
        }
    }
    Ok(0.5 * total)
}

/// `tr(Z L Zᵀ)`.
pub fn laplacian_trace(z: &DenseMatrix, pieces: &GraphPieces) -> Result<f64> {
    let zl = z.matmul(&pieces.l)?;
    Ok(zl.as_slice().iter().zip(z.as_slice()).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_cases() {
        assert_eq!(
            adjacency_from_labels(&[1, 1], 0),
            DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]])
        );
        assert_eq!(adjacency_from_labels(&[1, 2], 0), DenseMatrix::identity(2));
        let split = LabeledSplit::new(vec![1], 1, 1).unwrap();
        assert_eq!(adjacency(&split), DenseMatrix::identity(2));
    }

    #[test]
    fn adjacency_ignores_label_ids() {
        let a = adjacency_from_labels(&[1, 2, 1, 3], 2);
        let b = adjacency_from_labels(&[3, 1, 3, 2], 2);
        assert_eq!(a, b);
    }

    #[test]
    fn laplacian_of_identity_is_zero() {
        let p = normalized_laplacian(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(p.l.max_abs(), 0.0);
        assert_eq!(p.degrees, vec![1.0; 4]);
    }

    #[test]
    fn laplacian_of_pair() {
        let w = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let p = normalized_laplacian(&w).unwrap();
        let expected = DenseMatrix::from_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        assert!(p.l.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn laplacian_block_structure() {
        let w = adjacency_from_labels(&[1, 1, 2, 2, 2], 0);
        let p = normalized_laplacian(&w).unwrap();
        for i in 0..2 {
            for j in 2..5 {
                assert_eq!(p.l.get(i, j), 0.0);
                assert_eq!(p.l.get(j, i), 0.0);
            }
        }
    }

    #[test]
    fn laplacian_errors() {
        let w = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(normalized_laplacian(&w).unwrap_err(), Error::ZeroDegree(1));
        let asym = DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(normalized_laplacian(&asym).is_err());
    }

    #[test]
    fn oracle_zero_cases() {
        let w = adjacency_from_labels(&[1, 1, 1], 0);
        let p = normalized_laplacian(&w).unwrap();
        let z = DenseMatrix::from_rows(&[&[2.0, 2.0, 2.0], &[-1.0, -1.0, -1.0]]);
        assert!(embedding_objective_oracle(&z, &p).unwrap().abs() < 1e-15);

        let p = normalized_laplacian(&DenseMatrix::identity(3)).unwrap();
        let z = DenseMatrix::from_rows(&[&[1.0, 5.0, -3.0]]);
        assert_eq!(embedding_objective_oracle(&z, &p).unwrap(), 0.0);
        assert!(embedding_objective_oracle(&DenseMatrix::zeros(1, 2), &p).is_err());
    }

    #[test]
    fn oracle_matches_trace_small() {
        let w = adjacency_from_labels(&[1, 2, 1], 1);
        let p = normalized_laplacian(&w).unwrap();
        let z = DenseMatrix::from_rows(&[&[0.3, -1.2, 2.0, 0.7], &[1.0, 0.5, -0.4, 0.0]]);
        let direct = embedding_objective_oracle(&z, &p).unwrap();
        let trace = laplacian_trace(&z, &p).unwrap();
        assert!((direct - trace).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}
