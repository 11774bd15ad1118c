//! The NET spectral solver and the baselines it generalizes.
//!
//! NET minimizes, over coefficient matrices `A` with `Aᵀ K D K A = I`,
//!
//! ```text
//! α tr(Aᵀ K (Σ_c M_c) K A) + β tr(Aᵀ K L K A) + γ ‖A‖²_F
//! ```
//!
//! whose minimizers are the `k` smallest generalized eigenvectors of
//! `(α K ΣM K + β K L K + γ I) a = λ K D K a`. Target pseudo-labels (which
//! select the conditional terms `M_c`) are refined by re-solving a fixed number
//! of times. JDA is the same loop with `β = 0, α = 1`; TCA is a single
//! marginal-only solve; KPCA takes the leading eigenvectors of `K H K`.

use serde::{Deserialize, Serialize};

use crate::classify::one_nn_predict;
use crate::embedding::{adjacency, laplacian_trace, normalized_laplacian, GraphPieces};
use crate::error::{Error, Result};
use crate::kernel::{centering_matrix, cross_gram, gram, KernelMatrix, KernelSpec, ResolvedKernel};
use crate::linalg::{dot, gen_sym_eigen_smallest, normalize_signs, sym_eigen, DenseMatrix};
use crate::mmd::{LabeledSplit, MmdMatrices};
use crate::Label;

/// Ridge added to the right-hand side `K D K` of the generalized problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ridge {
    /// `factor * trace(B) / n`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::Relative(1e-6)
    }
}

impl Ridge {
    pub fn resolve(&self, b: &DenseMatrix) -> f64 {
        match *self {
            Ridge::Relative(f) => f * b.trace() / b.rows() as f64,
            Ridge::Absolute(r) => r,
        }
    }

    fn value(&self) -> f64 {
        match *self {
            Ridge::Relative(v) | Ridge::Absolute(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// MMD weight.
    pub alpha: f64,
    /// Embedding weight.
    pub beta: f64,
    /// Frobenius regularization weight.
    pub gamma: f64,
    /// Subspace dimension.
    pub k: usize,
    /// Pseudo-label refinement rounds.
    pub iterations: usize,
    pub ridge: Ridge,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self::new(1.0, 1.0, 1.0, 20)
    }
}

impl HyperParams {
    pub const DEFAULT_ITERATIONS: usize = 10;

    pub fn new(alpha: f64, beta: f64, gamma: f64, k: usize) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            k,
            iterations: Self::DEFAULT_ITERATIONS,
            ridge: Ridge::default(),
        }
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_ridge(mut self, ridge: Ridge) -> Self {
        self.ridge = ridge;
        self
    }

    /// JDA's setting: `α = 1`, no embedding term.
    pub fn as_jda(mut self) -> Self {
        self.alpha = 1.0;
        self.beta = 0.0;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be >= 0, got {v}")));
            }
        }
        let r = self.ridge.value();
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {r}")));
        }
        if self.k == 0 || self.k > n {
            return Err(Error::InvalidArgument(format!(
                "k = {} must lie in 1..={n}",
                self.k
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Values of the two trace terms at one iteration's solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    /// `tr(Aᵀ K ΣM K A)` over the MMD terms used for that solve.
    pub mmd: f64,
    /// `tr(Aᵀ K L K A)`.
    pub embed: f64,
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// `n x k` coefficients.
    pub a: DenseMatrix,
    /// Ascending, one per column of `a`.
    pub eigenvalues: Vec<f64>,
    /// `k x n` projected data `Aᵀ K`.
    pub z: DenseMatrix,
    /// Predicted target labels after each solve.
    pub target_label_history: Vec<Vec<Label>>,
    pub objective_history: Vec<ObjectiveTerms>,
    pub kernel: ResolvedKernel,
    pub n_source: usize,
    /// Absolute ridge added to the right-hand side (0 for KPCA).
    pub ridge: f64,
}

impl ProjectionResult {
    pub fn k(&self) -> usize {
        self.a.cols()
    }

    pub fn z_source(&self) -> DenseMatrix {
        self.z.column_range(0, self.n_source)
    }

    pub fn z_target(&self) -> DenseMatrix {
        self.z.column_range(self.n_source, self.z.cols())
    }

    /// Final target pseudo-labels.
    pub fn target_labels(&self) -> Option<&[Label]> {
        self.target_label_history.last().map(Vec::as_slice)
    }

    /// Out-of-sample projection `Aᵀ k(X_train, x_new)` using the fitted kernel.
    pub fn project(&self, x_train: &DenseMatrix, x_new: &DenseMatrix) -> Result<DenseMatrix> {
        if x_train.cols() != self.a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "model was fitted on {} points, got {}",
                self.a.rows(),
                x_train.cols()
            )));
        }
        let kc = cross_gram(x_train, x_new, &self.kernel)?;
        self.a.t_matmul(&kc)
    }
}

/// The iteration-invariant products `K L K` (only when `β > 0`) and `K D K`.
struct FixedParts {
    klk: Option<DenseMatrix>,
    kdk: DenseMatrix,
}

impl FixedParts {
    fn new(kern: &DenseMatrix, pieces: &GraphPieces, beta: f64) -> Result<Self> {
        let n = kern.rows();
        if pieces.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} vertices, kernel {n}",
                pieces.n()
            )));
        }
        let klk = if beta != 0.0 {
            let mut m = kern.matmul(&pieces.l.matmul(kern)?)?;
            m.symmetrize();
            Some(m)
        } else {
            None
        };
        let dk = DenseMatrix::from_fn(n, n, |i, j| pieces.degrees[i] * kern.get(i, j));
        let mut kdk = kern.matmul(&dk)?;
        kdk.symmetrize();
        Ok(Self { klk, kdk })
    }

    fn assemble(&self, kern: &DenseMatrix, mmds: &MmdMatrices, hp: &HyperParams) -> Result<DenseMatrix> {
        let n = kern.rows();
        if mmds.n() != n {
            return Err(Error::DimensionMismatch(format!(
                "MMD matrices are {0}x{0}, kernel {n}x{n}",
                mmds.n()
            )));
        }
        let mut s = DenseMatrix::zeros(n, n);
        if hp.alpha != 0.0 {
            // K M_c K = (K u)(K u)ᵀ for M_c = u uᵀ
            for u in mmds.factors() {
                let ku = kern.mat_vec(u)?;
                s.add_outer_assign(hp.alpha, &ku, &ku);
            }
        }
        if hp.beta != 0.0 {
            let klk = self.klk.as_ref().expect("K L K is built whenever beta is nonzero");
            s.add_scaled_assign(hp.beta, klk)?;
        }
        s.add_diagonal(hp.gamma);
        s.symmetrize();
        Ok(s)
    }
}

/// Builds `S = α K ΣM K + β K L K + γ I` and `B = K D K`.
pub fn assemble_system(
    kern: &KernelMatrix,
    mmds: &MmdMatrices,
    pieces: &GraphPieces,
    hp: &HyperParams,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let parts = FixedParts::new(&kern.gram, pieces, hp.beta)?;
    let s = parts.assemble(&kern.gram, mmds, hp)?;
    Ok((s, parts.kdk))
}

/// The `k` smallest generalized eigenpairs of `(s, b + ridge I)` and `Z = Aᵀ K`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub a: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    pub z: DenseMatrix,
    pub ridge: f64,
}

pub fn solve_projection(
    s: &DenseMatrix,
    b: &DenseMatrix,
    kern: &DenseMatrix,
    hp: &HyperParams,
) -> Result<Projection> {
    hp.validate(s.rows())?;
    let ridge = hp.ridge.resolve(b);
    let pairs = gen_sym_eigen_smallest(s, b, hp.k, ridge)?;
    let z = pairs.vectors.t_matmul(kern)?;
    Ok(Projection {
        a: pairs.vectors,
        eigenvalues: pairs.values,
        z,
        ridge,
    })
}

/// `α tr(AᵀKΣMKA) + β tr(AᵀKLKA) + γ‖A‖²_F`.
pub fn net_objective(
    a: &DenseMatrix,
    kern: &DenseMatrix,
    mmds: &MmdMatrices,
    pieces: &GraphPieces,
    hp: &HyperParams,
) -> Result<f64> {
    let z = a.t_matmul(kern)?;
    let terms = objective_terms(&z, mmds, pieces)?;
    let frob = a.as_slice().iter().map(|v| v * v).sum::<f64>();
    Ok(hp.alpha * terms.mmd + hp.beta * terms.embed + hp.gamma * frob)
}

fn objective_terms(z: &DenseMatrix, mmds: &MmdMatrices, pieces: &GraphPieces) -> Result<ObjectiveTerms> {
    // tr(Aᵀ K u uᵀ K A) = ‖Z u‖² with Z = Aᵀ K
    let mut mmd = 0.0;
    for u in mmds.factors() {
        let zu = z.mat_vec(u)?;
        mmd += dot(&zu, &zu);
    }
    Ok(ObjectiveTerms {
        mmd,
        embed: laplacian_trace(z, pieces)?,
    })
}

/// Whether refinement rounds add the class-conditional MMD terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// `M₀` plus `M_c` from the current pseudo-labels (NET, JDA).
    Joint,
    /// `M₀` only (TCA).
    MarginalOnly,
}

fn check_inputs(x_source: &DenseMatrix, y_source: &[Label], x_target: &DenseMatrix) -> Result<()> {
    if x_source.rows() != x_target.rows() {
        return Err(Error::DimensionMismatch(format!(
            "source dimension {} differs from target dimension {}",
            x_source.rows(),
            x_target.rows()
        )));
    }
    if y_source.len() != x_source.cols() {
        return Err(Error::LengthMismatch(y_source.len(), x_source.cols()));
    }
    Ok(())
}

/// The refinement loop shared by NET, JDA and TCA.
///
/// The first solve uses `M₀` only; its 1-NN predictions seed the target
/// pseudo-labels. Each later round rebuilds the conditional terms from the
/// previous round's predictions and re-solves.
pub fn fit_spectral(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    hp: &HyperParams,
    alignment: Alignment,
) -> Result<ProjectionResult> {
    check_inputs(x_source, y_source, x_target)?;
    let split = LabeledSplit::from_source(y_source.to_vec(), x_target.cols())?;
    let n = split.n();
    let ns = split.n_source();
    hp.validate(n)?;

    let x = x_source.hstack(x_target)?;
    let kern = gram(&x, spec)?;
    let pieces = normalized_laplacian(&adjacency(&split))?;
    let parts = FixedParts::new(&kern.gram, &pieces, hp.beta)?;

    let mut mmds = MmdMatrices::marginal_only(&split);
    let mut label_history = Vec::with_capacity(hp.iterations);
    let mut objective_history = Vec::with_capacity(hp.iterations);
    let mut last = None;
    for round in 0..hp.iterations {
        let s = parts.assemble(&kern.gram, &mmds, hp)?;
        let proj = solve_projection(&s, &parts.kdk, &kern.gram, hp)?;
        let pred = one_nn_predict(
            &proj.z.column_range(0, ns),
            y_source,
            &proj.z.column_range(ns, n),
        )?;
        objective_history.push(objective_terms(&proj.z, &mmds, &pieces)?);
        if alignment == Alignment::Joint && round + 1 < hp.iterations {
            mmds = MmdMatrices::joint(&split.clone().with_predictions(pred.clone())?)?;
        }
        label_history.push(pred);
        last = Some(proj);
    }
    let proj = last.expect("at least one iteration");
    Ok(ProjectionResult {
        a: proj.a,
        eigenvalues: proj.eigenvalues,
        z: proj.z,
        target_label_history: label_history,
        objective_history,
        kernel: kern.kernel,
        n_source: ns,
        ridge: proj.ridge,
    })
}

/// Nonlinear Embedding Transform.
pub fn net_fit(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    hp: &HyperParams,
) -> Result<ProjectionResult> {
    fit_spectral(x_source, y_source, x_target, spec, hp, Alignment::Joint)
}

/// Joint distribution adaptation: NET with `α = 1, β = 0`.
pub fn jda_fit(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    hp: &HyperParams,
) -> Result<ProjectionResult> {
    net_fit(x_source, y_source, x_target, spec, &hp.as_jda())
}

/// Transfer component analysis: one marginal-only solve with `α = 1, β = 0`.
pub fn tca_fit(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    hp: &HyperParams,
) -> Result<ProjectionResult> {
    let hp = hp.as_jda().with_iterations(1);
    fit_spectral(x_source, y_source, x_target, spec, &hp, Alignment::MarginalOnly)
}

/// Kernel PCA: the `k` leading unit-norm eigenvectors of `K H K`.
///
/// Histories are empty and `n_source` is the full point count.
pub fn kpca_fit(x: &DenseMatrix, spec: &KernelSpec, k: usize) -> Result<ProjectionResult> {
    let n = x.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={n}")));
    }
    let kern = gram(x, spec)?;
    let hk = centering_matrix(n).matmul(&kern.gram)?;
    let mut khk = kern.gram.matmul(&hk)?;
    khk.symmetrize();
    let pairs = sym_eigen(&khk)?.largest(k);
    let mut a = pairs.vectors;
    normalize_signs(&mut a);
    let z = a.t_matmul(&kern.gram)?;
    Ok(ProjectionResult {
        a,
        eigenvalues: pairs.values,
        z,
        target_label_history: Vec::new(),
        objective_history: Vec::new(),
        kernel: kern.kernel,
        n_source: n,
        ridge: 0.0,
    })
}

/// KPCA over `[X_S, X_T]` followed by 1-NN transfer from source to target.
pub fn kpca_adapt(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    k: usize,
) -> Result<ProjectionResult> {
    check_inputs(x_source, y_source, x_target)?;
    let ns = x_source.cols();
    let mut res = kpca_fit(&x_source.hstack(x_target)?, spec, k)?;
    res.n_source = ns;
    let pred = one_nn_predict(&res.z_source(), y_source, &res.z_target())?;
    res.target_label_history.push(pred);
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Net,
    Jda,
    Tca,
    Kpca,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Net, Algorithm::Jda, Algorithm::Tca, Algorithm::Kpca];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Net => "net",
            Algorithm::Jda => "jda",
            Algorithm::Tca => "tca",
            Algorithm::Kpca => "kpca",
        }
    }

    /// Runs the algorithm as a source-to-target adaptation.
    pub fn fit(
        &self,
        x_source: &DenseMatrix,
        y_source: &[Label],
        x_target: &DenseMatrix,
        spec: &KernelSpec,
        hp: &HyperParams,
    ) -> Result<ProjectionResult> {
        match self {
            Algorithm::Net => net_fit(x_source, y_source, x_target, spec, hp),
            Algorithm::Jda => jda_fit(x_source, y_source, x_target, spec, hp),
            Algorithm::Tca => tca_fit(x_source, y_source, x_target, spec, hp),
            Algorithm::Kpca => kpca_adapt(x_source, y_source, x_target, spec, hp.k),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}
