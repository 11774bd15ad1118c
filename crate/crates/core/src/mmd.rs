//! Marginal and class-conditional MMD coefficient matrices.
//!
//! Every MMD matrix here is an outer product `u uᵀ` of a signed indicator
//! vector: `+1/n_s` on the selected source points, `-1/n_t` on the selected
//! target points, zero elsewhere. [`MmdMatrices`] keeps only those vectors and
//! materializes dense matrices on request.

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::Label;

/// Source labels plus (optionally) current target pseudo-labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSplit {
    source_labels: Vec<Label>,
    n_target: usize,
    target_pred: Option<Vec<Label>>,
    classes: usize,
}

impl LabeledSplit {
    /// Labels must lie in `1..=classes`.
    pub fn new(source_labels: Vec<Label>, n_target: usize, classes: usize) -> Result<Self> {
        if source_labels.is_empty() || n_target == 0 {
            return Err(Error::InvalidArgument(format!(
                "need at least one source and one target point (n_s = {}, n_t = {n_target})",
                source_labels.len()
            )));
        }
        check_labels(&source_labels, classes)?;
        Ok(Self {
            source_labels,
            n_target,
            target_pred: None,
            classes,
        })
    }

    /// Like [`LabeledSplit::new`] with `classes` taken from the largest label.
    pub fn from_source(source_labels: Vec<Label>, n_target: usize) -> Result<Self> {
        let classes = source_labels.iter().copied().max().unwrap_or(0) as usize;
        Self::new(source_labels, n_target, classes)
    }

    pub fn with_predictions(mut self, pred: Vec<Label>) -> Result<Self> {
        if pred.len() != self.n_target {
            return Err(Error::LengthMismatch(pred.len(), self.n_target));
        }
        check_labels(&pred, self.classes)?;
        self.target_pred = Some(pred);
        Ok(self)
    }

    pub fn n_source(&self) -> usize {
        self.source_labels.len()
    }

    pub fn n_target(&self) -> usize {
        self.n_target
    }

    pub fn n(&self) -> usize {
        self.n_source() + self.n_target
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn source_labels(&self) -> &[Label] {
        &self.source_labels
    }

    pub fn target_predictions(&self) -> Option<&[Label]> {
        self.target_pred.as_deref()
    }
}

fn check_labels(labels: &[Label], classes: usize) -> Result<()> {
    match labels.iter().find(|&&l| l == 0 || l as usize > classes) {
        Some(bad) => Err(Error::InvalidArgument(format!(
            "label {bad} outside 1..={classes}"
        ))),
        None => Ok(()),
    }
}

/// `u` with `M₀ = u uᵀ`.
pub fn marginal_vector(split: &LabeledSplit) -> Vec<f64> {
    let (ns, nt) = (split.n_source() as f64, split.n_target() as f64);
    let mut u = vec![1.0 / ns; split.n_source()];
    u.resize(split.n(), -1.0 / nt);
    u
}

/// `u` with `M_c = u uᵀ`, or `None` when class `c` is empty on either side.
pub fn conditional_vector(split: &LabeledSplit, c: Label) -> Result<Option<Vec<f64>>> {
    let pred = split.target_predictions().ok_or(Error::MissingPredictions)?;
    let ns_c = split.source_labels().iter().filter(|&&l| l == c).count();
    let nt_c = pred.iter().filter(|&&l| l == c).count();
    if ns_c == 0 || nt_c == 0 {
        return Ok(None);
    }
    let (ps, pt) = (1.0 / ns_c as f64, -1.0 / nt_c as f64);
    let u = split
        .source_labels()
        .iter()
        .map(|&l| if l == c { ps } else { 0.0 })
        .chain(pred.iter().map(|&l| if l == c { pt } else { 0.0 }))
        .collect();
    Ok(Some(u))
}

fn outer(u: &[f64]) -> DenseMatrix {
    let n = u.len();
    DenseMatrix::from_fn(n, n, |i, j| u[i] * u[j])
}

/// Dense `M₀`.
pub fn marginal_mmd(split: &LabeledSplit) -> DenseMatrix {
    outer(&marginal_vector(split))
}

/// Dense `M_c`, `None` when class `c` has no source or no predicted target points.
pub fn conditional_mmd(split: &LabeledSplit, c: Label) -> Result<Option<DenseMatrix>> {
    Ok(conditional_vector(split, c)?.map(|u| outer(&u)))
}

/// The set `{M₀, M₁, …, M_C}` stored as signed indicator vectors.
#[derive(Debug, Clone)]
pub struct MmdMatrices {
    marginal: Vec<f64>,
    per_class: Vec<Option<Vec<f64>>>,
}

impl MmdMatrices {
    /// `M₀` only.
    pub fn marginal_only(split: &LabeledSplit) -> Self {
        Self {
            marginal: marginal_vector(split),
            per_class: Vec::new(),
        }
    }

    /// `M₀` plus every constructible `M_c` under the split's pseudo-labels.
    pub fn joint(split: &LabeledSplit) -> Result<Self> {
        let per_class = (1..=split.classes() as Label)
            .map(|c| conditional_vector(split, c))
            .collect::<Result<_>>()?;
        Ok(Self {
            marginal: marginal_vector(split),
            per_class,
        })
    }

    pub fn n(&self) -> usize {
        self.marginal.len()
    }

    pub fn m0(&self) -> DenseMatrix {
        outer(&self.marginal)
    }

    /// `M_c` for class `c` (1-based).
    pub fn class_matrix(&self, c: Label) -> Option<DenseMatrix> {
        self.per_class
            .get((c as usize).checked_sub(1)?)?
            .as_ref()
            .map(|u| outer(u))
    }

    /// Number of conditional terms actually present.
    pub fn conditional_count(&self) -> usize {
        self.per_class.iter().flatten().count()
    }

    /// Signed indicator vectors of `M₀` and every present `M_c`.
    pub fn factors(&self) -> impl Iterator<Item = &[f64]> {
        std::iter::once(self.marginal.as_slice()).chain(self.per_class.iter().flatten().map(Vec::as_slice))
    }

    /// `Σ_c M_c` including `M₀`.
    pub fn sum(&self) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for u in self.factors() {
            m.add_outer_assign(1.0, u, u);
        }
        m
    }
}

/// `tr(Aᵀ K M Kᵀ A)`.
pub fn mmd_objective(a: &DenseMatrix, kern: &DenseMatrix, m: &DenseMatrix) -> Result<f64> {
    let n = kern.rows();
    if !kern.is_square() || m.shape() != (n, n) || a.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{}, K {}x{}, M {}x{}",
            a.rows(),
            a.cols(),
            kern.rows(),
            kern.cols(),
            m.rows(),
            m.cols()
        )));
    }
    let p = kern.t_matmul(a)?;
    let mp = m.matmul(&p)?;
    Ok(p.as_slice().iter().zip(mp.as_slice()).map(|(x, y)| x * y).sum())
}

/// Projected points `Aᵀ k_i` for every column of `K`, one vector per point.
fn projected_points(a: &DenseMatrix, kern: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
    if a.rows() != kern.rows() || !kern.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "A {}x{} against K {}x{}",
            a.rows(),
            a.cols(),
            kern.rows(),
            kern.cols()
        )));
    }
    let at = a.transpose();
    Ok((0..kern.cols())
        .map(|i| {
            let ki = kern.column(i);
            (0..at.rows()).map(|r| dot(at.row(r), &ki)).collect()
        })
        .collect())
}

fn mean_gap(points: &[Vec<f64>], source: &[usize], target: &[usize]) -> f64 {
    let k = points[0].len();
    let mut gap = vec![0.0; k];
    for &i in source {
        for (g, p) in gap.iter_mut().zip(&points[i]) {
            *g += p / source.len() as f64;
        }
    }
    for &j in target {
        for (g, p) in gap.iter_mut().zip(&points[j]) {
            *g -= p / target.len() as f64;
        }
    }
    gap.iter().map(|g| g * g).sum()
}

/// `‖mean_s Aᵀk_i - mean_t Aᵀk_j‖²` evaluated from explicit projected means.
pub fn direct_mmd_oracle(a: &DenseMatrix, kern: &DenseMatrix, split: &LabeledSplit) -> Result<f64> {
    if kern.rows() != split.n() {
        return Err(Error::DimensionMismatch(format!(
            "K has {} rows but the split has {} points",
            kern.rows(),
            split.n()
        )));
    }
    let points = projected_points(a, kern)?;
    let source: Vec<usize> = (0..split.n_source()).collect();
    let target: Vec<usize> = (split.n_source()..split.n()).collect();
    Ok(mean_gap(&points, &source, &target))
}

/// Class-`c` analogue of [`direct_mmd_oracle`]; `None` when the class is empty
/// on either side.
pub fn direct_conditional_oracle(
    a: &DenseMatrix,
    kern: &DenseMatrix,
    split: &LabeledSplit,
    c: Label,
) -> Result<Option<f64>> {
    let pred = split.target_predictions().ok_or(Error::MissingPredictions)?;
    if kern.rows() != split.n() {
        return Err(Error::DimensionMismatch("K does not match split".into()));
    }
    let ns = split.n_source();
    let source: Vec<usize> = (0..ns).filter(|&i| split.source_labels()[i] == c).collect();
    let target: Vec<usize> = (0..pred.len()).filter(|&j| pred[j] == c).map(|j| ns + j).collect();
    if source.is_empty() || target.is_empty() {
        return Ok(None);
    }
    let points = projected_points(a, kern)?;
    Ok(Some(mean_gap(&points, &source, &target)))
}
