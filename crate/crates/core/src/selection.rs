//! Model selection without target labels.
//!
//! Kernel mean matching reweights the source so its weighted kernel mean
//! approaches the target's. The most heavily weighted source points look most
//! like target data and are held out as a validation set; every grid cell is
//! fitted without them and scored by 1-NN accuracy on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{accuracy, one_nn_predict};
use crate::error::{Error, Result};
use crate::kernel::{cross_gram, gram_with, KernelSpec};
use crate::linalg::{dot, DenseMatrix};
use crate::solver::{Algorithm, HyperParams, Ridge};
use crate::Label;

/// Diagonal jitter keeping the KMM Hessian positive definite.
const KMM_JITTER: f64 = 1e-8;
const POWER_ITERS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmmConfig {
    /// Upper bound `B` on every weight.
    pub b_cap: f64,
    /// Sum slack; `None` means `(√n_s − 1)/√n_s`.
    pub epsilon: Option<f64>,
    pub max_iters: usize,
    /// Stop once no weight moves by more than this.
    pub step_tol: f64,
}

impl Default for KmmConfig {
    fn default() -> Self {
        Self {
            b_cap: 10.0,
            epsilon: None,
            max_iters: 20_000,
            step_tol: 1e-10,
        }
    }
}

impl KmmConfig {
    pub fn epsilon_for(&self, n_source: usize) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            let r = (n_source as f64).sqrt();
            (r - 1.0) / r
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_cap > 0.0 && self.b_cap.is_finite()) {
            return Err(Error::InvalidArgument(format!("b_cap must be > 0, got {}", self.b_cap)));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {e}")));
            }
        }
        if !(self.step_tol >= 0.0) {
            return Err(Error::InvalidArgument("step_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmmWeights {
    pub w: Vec<f64>,
    /// `½ wᵀ K_S w − κᵀ w` (jitter included).
    pub objective: f64,
    pub feasible: bool,
    pub iterations: usize,
}

/// The KMM quadratic program in a form the solver and tests share.
#[derive(Debug, Clone)]
pub struct KmmProblem {
    /// `K_S + jitter I`.
    pub hessian: DenseMatrix,
    pub kappa: Vec<f64>,
    pub b_cap: f64,
    /// Bounds on `Σ w`.
    pub sum_lo: f64,
    pub sum_hi: f64,
}

impl KmmProblem {
    pub fn n(&self) -> usize {
        self.kappa.len()
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let hw = self.hessian.mat_vec(w).expect("length checked");
        0.5 * dot(w, &hw) - dot(&self.kappa, w)
    }

    /// Whether `w` satisfies the box and sum constraints up to `tol` per unit.
    pub fn is_feasible(&self, w: &[f64], tol: f64) -> bool {
        let n = self.n() as f64;
        let sum: f64 = w.iter().sum();
        w.len() == self.n()
            && w.iter().all(|&v| v >= -tol && v <= self.b_cap + tol)
            && sum >= self.sum_lo - tol * n
            && sum <= self.sum_hi + tol * n
    }

    /// Euclidean projection onto `{0 ≤ w ≤ B} ∩ {lo ≤ Σw ≤ hi}`.
    ///
    /// The solution is `clip(v − τ, 0, B)` for the scalar `τ` that puts the sum
    /// on the violated bound (or `τ = 0` if none is violated); `τ` is found by
    /// bisection since the clipped sum is monotone in it.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let b = self.b_cap;
        let clipped = |tau: f64| -> Vec<f64> { v.iter().map(|&x| (x - tau).clamp(0.0, b)).collect() };
        let sum_at = |tau: f64| -> f64 { v.iter().map(|&x| (x - tau).clamp(0.0, b)).sum() };
        let s0 = sum_at(0.0);
        let target = if s0 > self.sum_hi {
            self.sum_hi
        } else if s0 < self.sum_lo {
            self.sum_lo
        } else {
            return clipped(0.0);
        };
        let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
        // sum_at(vmax) = 0 and sum_at(vmin - b) = n b bracket every reachable target
        let (mut lo, mut hi) = (vmin - b, vmax);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sum_at(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (wl, wh) = (clipped(lo), clipped(hi));
        // pick the bracket end that lands inside the slab
        if (self.sum_lo..=self.sum_hi).contains(&wh.iter().sum()) {
            wh
        } else {
            wl
        }
    }
}

/// Builds the KMM program; the bandwidth is resolved on `[X_S, X_T]`.
pub fn kmm_problem(
    x_source: &DenseMatrix,
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    cfg: &KmmConfig,
) -> Result<KmmProblem> {
    cfg.validate()?;
    if x_source.rows() != x_target.rows() {
        return Err(Error::DimensionMismatch(format!(
            "source dimension {} differs from target dimension {}",
            x_source.rows(),
            x_target.rows()
        )));
    }
    let (ns, nt) = (x_source.cols(), x_target.cols());
    let eps = cfg.epsilon_for(ns);
    if cfg.b_cap * (ns as f64) < ns as f64 * (1.0 - eps) {
        return Err(Error::Infeasible(format!(
            "B·n_s = {} cannot reach n_s(1 − ε) = {}",
            cfg.b_cap * ns as f64,
            ns as f64 * (1.0 - eps)
        )));
    }
    let kernel = spec.resolve(&x_source.hstack(x_target)?)?;
    let mut hessian = gram_with(x_source, &kernel);
    hessian.add_diagonal(KMM_JITTER);
    let cross = cross_gram(x_source, x_target, &kernel)?;
    let scale = ns as f64 / nt as f64;
    let kappa = (0..ns).map(|i| scale * cross.row(i).iter().sum::<f64>()).collect();
    Ok(KmmProblem {
        hessian,
        kappa,
        b_cap: cfg.b_cap,
        sum_lo: (ns as f64 * (1.0 - eps)).max(0.0),
        sum_hi: ns as f64 * (1.0 + eps),
    })
}

fn lipschitz(h: &DenseMatrix) -> f64 {
    let n = h.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lam = 0.0;
    for _ in 0..POWER_ITERS {
        let hv = h.mat_vec(&v).expect("square");
        let norm = dot(&hv, &hv).sqrt();
        if norm == 0.0 {
            break;
        }
        lam = norm;
        v = hv.into_iter().map(|x| x / norm).collect();
    }
    // power iteration approaches λ_max from below; pad it
    (1.05 * lam).max(h.diagonal().into_iter().fold(0.0, f64::max))
}

/// Accelerated projected gradient with function-value restarts.
pub fn kmm_solve(problem: &KmmProblem, cfg: &KmmConfig) -> KmmWeights {
    let n = problem.n();
    let step = 1.0 / lipschitz(&problem.hessian);
    let mut w = problem.project(&vec![1.0; n]);
    let mut f = problem.objective(&w);
    let mut best = (f, w.clone());
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let hy = problem.hessian.mat_vec(&y).expect("square");
        let v: Vec<f64> = y
            .iter()
            .zip(hy.iter().zip(&problem.kappa))
            .map(|(&yi, (&g1, &k))| yi - step * (g1 - k))
            .collect();
        let w_next = problem.project(&v);
        let f_next = problem.objective(&w_next);
        let moved = w_next
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if f_next > f {
            // momentum overshot: restart from the current point
            t = 1.0;
            y = w.clone();
            if moved <= cfg.step_tol {
                break;
            }
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = w_next
            .iter()
            .zip(&w)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        t = t_next;
        w = w_next;
        f = f_next;
        if f < best.0 {
            best = (f, w.clone());
        }
        if moved <= cfg.step_tol {
            break;
        }
    }
    let (objective, w) = best;
    KmmWeights {
        feasible: problem.is_feasible(&w, 1e-6),
        w,
        objective,
        iterations,
    }
}

/// Kernel mean matching weights for the source points.
pub fn kmm_weights(
    x_source: &DenseMatrix,
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    cfg: &KmmConfig,
) -> Result<KmmWeights> {
    let problem = kmm_problem(x_source, x_target, spec, cfg)?;
    Ok(kmm_solve(&problem, cfg))
}

/// Squared RKHS distance between the `w`-weighted source mean and the target
/// mean, computed from kernels.
pub fn weighted_mean_discrepancy(
    x_source: &DenseMatrix,
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    w: &[f64],
) -> Result<f64> {
    let kernel = spec.resolve(&x_source.hstack(x_target)?)?;
    let (ns, nt) = (x_source.cols() as f64, x_target.cols() as f64);
    let kss = gram_with(x_source, &kernel);
    let ktt = gram_with(x_target, &kernel);
    let kst = cross_gram(x_source, x_target, &kernel)?;
    let ss = dot(w, &kss.mat_vec(w)?) / (ns * ns);
    let tt = ktt.as_slice().iter().sum::<f64>() / (nt * nt);
    let st = dot(w, &kst.mat_vec(&vec![1.0; x_target.cols()])?) / (ns * nt);
    Ok(ss + tt - 2.0 * st)
}

/// Splits source indices into the `ceil(fraction · n_s)` largest-weight points
/// (ties to the lower index) and the rest, both in ascending order.
pub fn select_validation(weights: &KmmWeights, fraction: f64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let n = weights.w.len();
    // the small offset keeps e.g. 0.1 * 30 from rounding up past 3
    let count = ((fraction * n as f64 - 1e-9).ceil() as usize).clamp(1, n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| weights.w[b].total_cmp(&weights.w[a]).then(a.cmp(&b)));
    let mut chosen = vec![false; n];
    for &i in order.iter().take(count) {
        chosen[i] = true;
    }
    let (val, rest) = (0..n).partition(|&i| chosen[i]);
    Ok((val, rest))
}

fn default_fraction() -> f64 {
    0.1
}

fn default_iterations() -> usize {
    HyperParams::DEFAULT_ITERATIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub k_values: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub ridge: Ridge,
    #[serde(default = "default_fraction")]
    pub validation_fraction: f64,
}

impl ParamGrid {
    /// A grid with the default iteration count, ridge and 10% validation.
    pub fn new(k_values: Vec<usize>, alpha: Vec<f64>, beta: Vec<f64>, gamma: Vec<f64>) -> Self {
        Self {
            k_values,
            alpha,
            beta,
            gamma,
            iterations: default_iterations(),
            ridge: Ridge::default(),
            validation_fraction: default_fraction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("k_values", self.k_values.is_empty()),
            ("alpha", self.alpha.is_empty()),
            ("beta", self.beta.is_empty()),
            ("gamma", self.gamma.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidArgument(format!("grid axis {name} is empty")));
            }
        }
        Ok(())
    }

    /// Cells in grid order: `alpha`, then `beta`, then `gamma`, then `k`
    /// (innermost). JDA collapses the `alpha` and `beta` axes to `1` and `0`.
    pub fn cells(&self, algo: GridAlgo) -> Vec<HyperParams> {
        let (alphas, betas) = match algo {
            GridAlgo::Net => (self.alpha.clone(), self.beta.clone()),
            GridAlgo::Jda => (vec![1.0], vec![0.0]),
        };
        let mut out = Vec::new();
        for &a in &alphas {
            for &b in &betas {
                for &g in &self.gamma {
                    for &k in &self.k_values {
                        out.push(
                            HyperParams::new(a, b, g, k)
                                .with_iterations(self.iterations)
                                .with_ridge(self.ridge),
                        );
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridAlgo {
    Net,
    Jda,
}

impl GridAlgo {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            GridAlgo::Net => Algorithm::Net,
            GridAlgo::Jda => Algorithm::Jda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub params: HyperParams,
    pub validation_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    /// Index of the selected cell; `None` when every cell failed.
    pub best: Option<usize>,
    pub weights: KmmWeights,
    pub validation: Vec<usize>,
}

impl GridReport {
    pub fn best_params(&self) -> Option<HyperParams> {
        self.best.map(|i| self.cells[i].params)
    }

    pub fn best_accuracy(&self) -> Option<f64> {
        self.best.and_then(|i| self.cells[i].validation_accuracy)
    }
}

/// Fits on `train` plus the target and scores 1-NN on the held-out source
/// points `val`.
pub fn validation_accuracy(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    algo: Algorithm,
    hp: &HyperParams,
    val: &[usize],
    train: &[usize],
) -> Result<f64> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let xs_train = x_source.select_columns(train);
    let ys_train: Vec<Label> = train.iter().map(|&i| y_source[i]).collect();
    let fit = algo.fit(&xs_train, &ys_train, x_target, spec, hp)?;
    let z_val = fit.project(&xs_train.hstack(x_target)?, &x_source.select_columns(val))?;
    let pred = one_nn_predict(&fit.z_source(), &ys_train, &z_val)?;
    let truth: Vec<Label> = val.iter().map(|&i| y_source[i]).collect();
    accuracy(&pred, &truth)
}

pub fn grid_search(
    x_source: &DenseMatrix,
    y_source: &[Label],
    x_target: &DenseMatrix,
    spec: &KernelSpec,
    grid: &ParamGrid,
    cfg: &KmmConfig,
    algo: GridAlgo,
) -> Result<GridReport> {
    grid.validate()?;
    if y_source.len() != x_source.cols() {
        return Err(Error::LengthMismatch(y_source.len(), x_source.cols()));
    }
    let weights = kmm_weights(x_source, x_target, spec, cfg)?;
    let (val, train) = select_validation(&weights, grid.validation_fraction)?;
    let cells: Vec<GridCell> = grid
        .cells(algo)
        .into_par_iter()
        .map(|hp| {
            match validation_accuracy(x_source, y_source, x_target, spec, algo.algorithm(), &hp, &val, &train) {
                Ok(acc) => GridCell {
                    params: hp,
                    validation_accuracy: Some(acc),
                    error: None,
                },
                Err(e) => GridCell {
                    params: hp,
                    validation_accuracy: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        if let Some(acc) = c.validation_accuracy {
            if best.is_none_or(|b| acc > cells[b].validation_accuracy.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(i);
            }
        }
    }
    Ok(GridReport {
        cells,
        best,
        weights,
        validation: val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(w: &[f64]) -> KmmWeights {
        KmmWeights {
            w: w.to_vec(),
            objective: 0.0,
            feasible: true,
            iterations: 0,
        }
    }

    #[test]
    fn validation_tie_break_and_ceil() {
        let (v, r) = select_validation(&weights(&[1.0; 25]), 0.1).unwrap();
        assert_eq!(v, vec![0, 1, 2]);
        assert_eq!(r.len(), 22);
        let (v, _) = select_validation(&weights(&[1.0; 30]), 0.1).unwrap();
        assert_eq!(v, vec![0, 1, 2]);
        let (v, _) = select_validation(&weights(&[5.0, 1.0, 2.0, 4.0, 3.0]), 0.5).unwrap();
        assert_eq!(v, vec![0, 3, 4]);
        // ceil(0.34 * 3) = 2
        let (v, r) = select_validation(&weights(&[3.0, 1.0, 2.0]), 0.34).unwrap();
        assert_eq!((v, r), (vec![0, 2], vec![1]));
        let (v, _) = select_validation(&weights(&[3.0, 1.0, 2.0]), 0.3).unwrap();
        assert_eq!(v, vec![0]);
        assert!(select_validation(&weights(&[1.0]), 0.0).is_err());
        assert!(select_validation(&weights(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn projection_lands_in_slab() {
        let p = KmmProblem {
            hessian: DenseMatrix::identity(4),
            kappa: vec![0.0; 4],
            b_cap: 2.0,
            sum_lo: 3.0,
            sum_hi: 5.0,
        };
        let w = p.project(&[10.0, 10.0, 10.0, -1.0]);
        assert!(p.is_feasible(&w, 1e-12));
        assert!((w.iter().sum::<f64>() - 5.0).abs() < 1e-9);
        let w = p.project(&[0.1, 0.1, 0.1, 0.1]);
        assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-9);
        assert!(w.iter().all(|&x| (x - 0.75).abs() < 1e-9));
        let w = p.project(&[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(w, vec![1.0; 4]);
    }

    #[test]
    fn single_source_point_is_scalar_qp() {
        let xs = DenseMatrix::from_rows(&[&[0.0]]);
        let xt = DenseMatrix::from_rows(&[&[1.0, 2.0]]);
        let spec = KernelSpec::gaussian(1.0);
        let cfg = KmmConfig {
            epsilon: Some(0.3),
            ..KmmConfig::default()
        };
        let p = kmm_problem(&xs, &xt, &spec, &cfg).unwrap();
        let unconstrained = p.kappa[0] / p.hessian.get(0, 0);
        let expected = unconstrained.clamp(0.7, 1.3);
        let w = kmm_solve(&p, &cfg);
        assert!((w.w[0] - expected).abs() < 1e-9, "{} vs {expected}", w.w[0]);
        assert!(w.feasible);
    }

    #[test]
    fn infeasible_box() {
        let xs = DenseMatrix::from_rows(&[&[0.0, 1.0, 2.0]]);
        let cfg = KmmConfig {
            b_cap: 0.5,
            epsilon: Some(0.1),
            ..KmmConfig::default()
        };
        assert!(matches!(
            kmm_weights(&xs, &xs, &KernelSpec::gaussian(1.0), &cfg),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn grid_cells_order_and_jda_collapse() {
        let g = ParamGrid::new(vec![2, 4], vec![0.1, 1.0], vec![0.0, 1.0], vec![1.0]);
        let cells = g.cells(GridAlgo::Net);
        assert_eq!(cells.len(), 8);
        assert_eq!((cells[0].alpha, cells[0].k), (0.1, 2));
        assert_eq!((cells[1].alpha, cells[1].k), (0.1, 4));
        let jda = g.cells(GridAlgo::Jda);
        assert_eq!(jda.len(), 2);
        assert!(jda.iter().all(|c| c.alpha == 1.0 && c.beta == 0.0));
        assert!(ParamGrid::new(vec![], vec![1.0], vec![1.0], vec![1.0]).validate().is_err());
    }
}
