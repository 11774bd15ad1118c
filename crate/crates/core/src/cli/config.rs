//! Experiment configuration files (TOML).
//!
//! ```toml
//! algorithm = "net"                       # run: net | jda | tca | kpca
//! algorithms = ["net", "jda", "kpca"]     # compare
//! seed = 0                                # or: seeds = [0, 1, 2]
//! profile = "two-moon"                    # named parameter preset
//!
//! [data]
//! kind = "two-moon"                       # n_per_class, noise_sd, rotation_deg, translation
//! # kind = "csv"                          # source, target, target_has_labels, pca_dim
//!
//! [kernel]
//! kind = "gaussian"                       # or "linear"; sigma_sq fixes the bandwidth
//!
//! [params]                                # alpha, beta, gamma, k, iterations, ridge, ridge_absolute
//! [grid]                                  # k_values, alpha, beta, gamma, iterations, validation_fraction
//! [kmm]                                   # b_cap, epsilon, max_iters, step_tol
//! ```
//!
//! Exactly one of `[params]`, `[grid]` or `profile` supplies the parameters.
//! Relative CSV paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::profiles;
use crate::data::DomainShift;
use crate::kernel::{KernelKind, KernelSpec};
use crate::selection::{KmmConfig, ParamGrid};
use crate::solver::{Algorithm, HyperParams, Ridge};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Option<Algorithm>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub profile: Option<String>,
    pub data: DataConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub params: Option<ParamsConfig>,
    pub grid: Option<GridConfig>,
    pub kmm: Option<KmmConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    TwoMoon {
        #[serde(default = "default_n_per_class")]
        n_per_class: usize,
        #[serde(default = "default_noise")]
        noise_sd: f64,
        #[serde(default = "default_rotation")]
        rotation_deg: f64,
        #[serde(default)]
        translation: [f64; 2],
    },
    Csv {
        source: PathBuf,
        target: Option<PathBuf>,
        #[serde(default)]
        target_has_labels: bool,
        pca_dim: Option<usize>,
    },
}

fn default_n_per_class() -> usize {
    100
}

fn default_noise() -> f64 {
    0.1
}

fn default_rotation() -> f64 {
    30.0
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::TwoMoon {
            n_per_class: default_n_per_class(),
            noise_sd: default_noise(),
            rotation_deg: default_rotation(),
            translation: [0.0, 0.0],
        }
    }
}

impl DataConfig {
    pub fn shift(&self) -> Option<DomainShift> {
        match self {
            DataConfig::TwoMoon {
                rotation_deg,
                translation,
                ..
            } => Some(DomainShift {
                rotation_deg: *rotation_deg,
                translation: *translation,
            }),
            DataConfig::Csv { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_kernel_kind")]
    pub kind: KernelKind,
    /// Fixed Gaussian `σ²`; the median heuristic when absent.
    pub sigma_sq: Option<f64>,
}

fn default_kernel_kind() -> KernelKind {
    KernelKind::Gaussian
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            kind: KernelKind::Gaussian,
            sigma_sq: None,
        }
    }
}

impl KernelConfig {
    pub fn spec(&self) -> KernelSpec {
        match (self.kind, self.sigma_sq) {
            (KernelKind::Linear, _) => KernelSpec::linear(),
            (KernelKind::Gaussian, Some(s)) => KernelSpec::gaussian(s),
            (KernelKind::Gaussian, None) => KernelSpec::gaussian_median(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: usize,
    pub iterations: Option<usize>,
    /// Ridge relative to `trace(B)/n`.
    pub ridge: Option<f64>,
    /// Absolute ridge; overrides `ridge`.
    pub ridge_absolute: Option<f64>,
}

impl ParamsConfig {
    pub fn hyper_params(&self) -> HyperParams {
        let mut hp = HyperParams::new(self.alpha, self.beta, self.gamma, self.k);
        if let Some(it) = self.iterations {
            hp.iterations = it;
        }
        hp.ridge = match (self.ridge_absolute, self.ridge) {
            (Some(r), _) => Ridge::Absolute(r),
            (None, Some(r)) => Ridge::Relative(r),
            (None, None) => Ridge::default(),
        };
        hp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub k_values: Vec<usize>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub iterations: Option<usize>,
    pub validation_fraction: Option<f64>,
}

impl GridConfig {
    pub fn param_grid(&self) -> ParamGrid {
        let mut g = ParamGrid::new(
            self.k_values.clone(),
            self.alpha.clone(),
            self.beta.clone(),
            self.gamma.clone(),
        );
        if let Some(it) = self.iterations {
            g.iterations = it;
        }
        if let Some(f) = self.validation_fraction {
            g.validation_fraction = f;
        }
        g
    }
}

/// Where the parameters of an experiment come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Fixed(HyperParams),
    Grid(ParamGrid),
}

/// A validated configuration with command-line overrides applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: ExperimentConfig,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub kernel: KernelSpec,
    pub params: ParamSource,
    pub kmm: KmmConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    /// Reads a config file and makes its CSV paths absolute.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let DataConfig::Csv { source, target, .. } = &mut cfg.data {
            *source = base.join(&*source);
            if let Some(t) = target {
                *t = base.join(&*t);
            }
        }
        Ok(cfg)
    }

    /// The built-in two-moon experiment used when no config file is given.
    pub fn two_moon_default() -> Self {
        Self {
            algorithm: Some(Algorithm::Net),
            algorithms: None,
            seed: Some(0),
            seeds: None,
            profile: Some("two-moon".into()),
            data: DataConfig::default(),
            kernel: KernelConfig::default(),
            params: None,
            grid: None,
            kmm: None,
        }
    }

    /// Applies `--seed` and `--profile` and checks every cross-field rule.
    pub fn resolve(mut self, seed: Option<u64>, profile: Option<&str>) -> Result<Resolved, ConfigError> {
        if let Some(p) = profile {
            self.profile = Some(p.to_string());
        }
        if let Some(s) = seed {
            self.seed = Some(s);
            self.seeds = None;
        }
        let algorithms = match (&self.algorithm, &self.algorithms) {
            (Some(_), Some(_)) => return err("set either `algorithm` or `algorithms`, not both"),
            (Some(a), None) => vec![*a],
            (None, Some(list)) if !list.is_empty() => list.clone(),
            (None, Some(_)) => return err("`algorithms` is empty"),
            (None, None) => vec![Algorithm::Net],
        };
        let seeds = match (&self.seed, &self.seeds) {
            (Some(_), Some(_)) => return err("set either `seed` or `seeds`, not both"),
            (Some(s), None) => vec![*s],
            (None, Some(list)) if !list.is_empty() => list.clone(),
            (None, Some(_)) => return err("`seeds` is empty"),
            (None, None) => vec![0],
        };
        let params = match (&self.params, &self.grid, &self.profile) {
            (Some(_), Some(_), _) => return err("[params] and [grid] are mutually exclusive"),
            (_, Some(_), Some(_)) => return err("a profile cannot be combined with [grid]"),
            (Some(_), None, Some(_)) => return err("a profile cannot be combined with [params]"),
            (Some(p), None, None) => ParamSource::Fixed(p.hyper_params()),
            (None, Some(g), None) => ParamSource::Grid(g.param_grid()),
            (None, None, Some(name)) => match profiles::lookup(name) {
                Some(hp) => ParamSource::Fixed(hp),
                None => {
                    return err(format!(
                        "unknown profile {name:?} (known: {})",
                        profiles::names().join(", ")
                    ))
                }
            },
            (None, None, None) => return err("no parameters: add [params], [grid] or a profile"),
        };
        match &params {
            ParamSource::Fixed(hp) => {
                hp.validate(usize::MAX).map_err(|e| ConfigError(e.to_string()))?;
            }
            ParamSource::Grid(g) => {
                g.validate().map_err(|e| ConfigError(e.to_string()))?;
                if !(g.validation_fraction > 0.0 && g.validation_fraction < 1.0) {
                    return err("validation_fraction must lie in (0, 1)");
                }
                if g.iterations == 0 {
                    return err("grid iterations must be >= 1");
                }
            }
        }
        let kernel = self.kernel.spec();
        kernel.validate().map_err(|e| ConfigError(e.to_string()))?;
        let kmm = self.kmm.unwrap_or_default();
        kmm.validate().map_err(|e| ConfigError(e.to_string()))?;

        match &self.data {
            DataConfig::TwoMoon {
                n_per_class, noise_sd, ..
            } => {
                if *n_per_class == 0 {
                    return err("n_per_class must be >= 1");
                }
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    return err("noise_sd must be >= 0");
                }
            }
            DataConfig::Csv {
                source,
                target,
                target_has_labels,
                pca_dim,
            } => {
                for p in std::iter::once(source).chain(target) {
                    if !p.is_file() {
                        return err(format!("data file {} does not exist", p.display()));
                    }
                }
                if target.is_none() {
                    if *target_has_labels {
                        return err("target_has_labels is set but no target file is given");
                    }
                    if algorithms.iter().any(|a| *a != Algorithm::Kpca) {
                        return err("only kpca runs without a target file");
                    }
                }
                if *pca_dim == Some(0) {
                    return err("pca_dim must be >= 1");
                }
            }
        }
        Ok(Resolved {
            config: self,
            algorithms,
            seeds,
            kernel,
            params,
            kmm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
algorithm = "net"
seed = 3
[data]
kind = "two-moon"
n_per_class = 20
[params]
alpha = 1.0
beta = 0.5
gamma = 0.1
k = 2
"#;

    #[test]
    fn parses_and_resolves() {
        let r = ExperimentConfig::parse(BASE).unwrap().resolve(None, None).unwrap();
        assert_eq!(r.algorithms, vec![Algorithm::Net]);
        assert_eq!(r.seeds, vec![3]);
        match r.params {
            ParamSource::Fixed(hp) => assert_eq!((hp.beta, hp.k, hp.iterations), (0.5, 2, 10)),
            _ => panic!("expected fixed params"),
        }
        let r = ExperimentConfig::parse(BASE).unwrap().resolve(Some(9), None).unwrap();
        assert_eq!(r.seeds, vec![9]);
    }

    #[test]
    fn params_and_grid_conflict() {
        let text = format!("{BASE}[grid]\nk_values = [2]\nalpha = [1.0]\nbeta = [1.0]\ngamma = [1.0]\n");
        let e = ExperimentConfig::parse(&text).unwrap().resolve(None, None).unwrap_err();
        assert!(e.0.contains("mutually exclusive"));
    }

    #[test]
    fn profile_rules() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert!(cfg.clone().resolve(None, Some("coil")).is_err());
        let mut no_params = cfg;
        no_params.params = None;
        let r = no_params.clone().resolve(None, Some("coil")).unwrap();
        assert_eq!(r.params, ParamSource::Fixed(HyperParams::new(1.0, 1.0, 1.0, 60)));
        assert!(no_params.clone().resolve(None, Some("nope")).is_err());
        assert!(no_params.resolve(None, None).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse(&format!("{BASE}bogus = 1\n")).is_err());
        assert!(ExperimentConfig::parse("algorithm = \"sa\"\n[data]\nkind = \"two-moon\"\n").is_err());
    }

    #[test]
    fn missing_csv_is_config_error() {
        let text = "algorithm = \"net\"\nprofile = \"digit\"\n[data]\nkind = \"csv\"\nsource = \"/nonexistent/s.csv\"\ntarget = \"/nonexistent/t.csv\"\n";
        let e = ExperimentConfig::parse(text).unwrap().resolve(None, None).unwrap_err();
        assert!(e.0.contains("does not exist"));
    }
}
