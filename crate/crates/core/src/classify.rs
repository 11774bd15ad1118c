//! 1-nearest-neighbor classification over projected columns.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{sq_dist, DenseMatrix};
use crate::Label;

/// Labels each column of `z_test` with the label of its Euclidean-nearest
/// column in `z_train`. Ties go to the lowest training index.
pub fn one_nn_predict(z_train: &DenseMatrix, y_train: &[Label], z_test: &DenseMatrix) -> Result<Vec<Label>> {
    if y_train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if y_train.len() != z_train.cols() {
        return Err(Error::LengthMismatch(y_train.len(), z_train.cols()));
    }
    if z_train.rows() != z_test.rows() {
        return Err(Error::DimensionMismatch(format!(
            "training points have dimension {}, test points {}",
            z_train.rows(),
            z_test.rows()
        )));
    }
    let train = z_train.columns();
    let test = z_test.columns();
    Ok(test
        .par_iter()
        .map(|q| {
            let mut best = (f64::INFINITY, 0usize);
            for (i, p) in train.iter().enumerate() {
                let d = sq_dist(p, q);
                if d < best.0 {
                    best = (d, i);
                }
            }
            y_train[best.1]
        })
        .collect())
}

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy(pred: &[Label], truth: &[Label]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty prediction".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_prediction() {
        let z = DenseMatrix::from_rows(&[&[0.0, 1.0, 2.0, 1.0], &[0.0, 0.0, 1.0, 0.0]]);
        let y = [4, 2, 3, 1];
        // column 3 duplicates column 1: lowest index wins
        assert_eq!(one_nn_predict(&z, &y, &z).unwrap(), vec![4, 2, 3, 2]);
    }

    #[test]
    fn single_training_point() {
        let train = DenseMatrix::from_rows(&[&[5.0]]);
        let test = DenseMatrix::from_rows(&[&[-3.0, 0.0, 100.0]]);
        assert_eq!(one_nn_predict(&train, &[7], &test).unwrap(), vec![7, 7, 7]);
    }

    #[test]
    fn nearer_point_wins() {
        let train = DenseMatrix::from_rows(&[&[0.0, 10.0]]);
        let test = DenseMatrix::from_rows(&[&[3.0]]);
        assert_eq!(one_nn_predict(&train, &[1, 2], &test).unwrap(), vec![1]);
    }

    #[test]
    fn errors() {
        let train = DenseMatrix::from_rows(&[&[0.0, 10.0]]);
        assert_eq!(
            one_nn_predict(&train, &[], &train).unwrap_err(),
            Error::EmptyTrainingSet
        );
        assert!(one_nn_predict(&train, &[1], &train).is_err());
        assert!(one_nn_predict(&train, &[1, 2], &DenseMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 1]).unwrap(), 0.75);
        assert_eq!(accuracy(&[1], &[1, 2]).unwrap_err(), Error::LengthMismatch(1, 2));
        assert!(accuracy(&[], &[]).is_err());
    }
}
