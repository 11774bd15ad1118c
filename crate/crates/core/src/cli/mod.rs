//! Command-line experiment runner.
//!
//! Exit codes: `0` success, `1` runtime failure (the failing stage is named on
//! stderr), `2` configuration or usage error.

pub mod config;
pub mod profiles;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classify::accuracy;
use crate::data::{
    load_csv, load_csv_pair, pca_reduce, pca_reduce_pair, save_csv, toy_paths, two_moon, Dataset, DomainShift,
};
use crate::error::Error;
use crate::kernel::KernelSpec;
use crate::selection::{grid_search, GridAlgo};
use crate::solver::{kpca_fit, Algorithm, HyperParams, ProjectionResult};
use config::{ConfigError, DataConfig, ExperimentConfig, ParamSource, Resolved};
use report::{format_table, pct, rank_marks, FitRecord, Report};

#[derive(Debug, Parser)]
#[command(name = "net-adapt", version, about = "Nonlinear Embedding Transform domain adaptation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the configured algorithm(s) and report target accuracy.
    Run(CommonArgs),
    /// Compare algorithms side by side.
    Compare(CommonArgs),
    /// Select parameters on a KMM-weighted source validation set.
    Grid(CommonArgs),
    /// Write a two-moon source/target pair as CSV.
    GenToy(GenToyArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML); the built-in two-moon experiment when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed(s).
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON Lines report path; the text table goes next to it with a `.txt` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Named parameter preset (digit, face, coil, pie, office-surf, office-deep, two-moon).
    #[arg(long)]
    pub profile: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenToyArgs {
    /// Output directory for source.csv and target.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    pub rotation: f64,
    #[arg(long, num_args = 2, value_names = ["DX", "DY"], allow_hyphen_values = true)]
    pub translation: Option<Vec<f64>>,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Runtime { stage: &'static str, error: Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime { .. } => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Runtime { stage, error } => write!(f, "{stage} failed: {error}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

fn at(stage: &'static str) -> impl FnOnce(Error) -> CliError {
    move |error| CliError::Runtime { stage, error }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("net-adapt: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command and returns the human-readable table.
pub fn execute(command: Command) -> Result<String, CliError> {
    match command {
        Command::Run(a) => with_config(&a, "run", run),
        Command::Compare(a) => with_config(&a, "compare", compare),
        Command::Grid(a) => with_config(&a, "grid", grid),
        Command::GenToy(a) => gen_toy(&a),
    }
}

fn with_config(
    args: &CommonArgs,
    command: &str,
    body: fn(&Resolved, &mut Report) -> Result<String, CliError>,
) -> Result<String, CliError> {
    let started = Instant::now();
    let cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::two_moon_default(),
    };
    let resolved = cfg.resolve(args.seed, args.profile.as_deref())?;
    let mut report = Report::default();
    report.push(
        "config",
        &serde_json::json!({ "command": command, "config": resolved.config }),
    );
    let text = body(&resolved, &mut report)?;
    if let Some(out) = &args.out {
        report
            .write(out, started.elapsed().as_secs_f64())
            .map_err(|e| at("report")(e.into()))?;
        std::fs::write(out.with_extension("txt"), &text).map_err(|e| at("report")(e.into()))?;
    }
    Ok(text)
}

/// Source, optional target, and the target truth kept apart for scoring.
struct Experiment {
    source: Dataset,
    target: Option<Dataset>,
    truth: Option<Vec<crate::Label>>,
}

fn load_experiment(data: &DataConfig, seed: u64) -> Result<Experiment, CliError> {
    let (source, target) = match data {
        DataConfig::TwoMoon {
            n_per_class,
            noise_sd,
            rotation_deg,
            translation,
        } => {
            let shift = DomainShift {
                rotation_deg: *rotation_deg,
                translation: *translation,
            };
            let (s, t) = two_moon(*n_per_class, *noise_sd, &shift, seed);
            (s, Some(t))
        }
        DataConfig::Csv {
            source,
            target,
            target_has_labels,
            pca_dim,
        } => match target {
            Some(t) => {
                let (mut s, mut t) = load_csv_pair(source, t, *target_has_labels).map_err(at("data-io"))?;
                if let Some(dim) = pca_dim {
                    pca_reduce_pair(&mut s, &mut t, *dim).map_err(at("data-io"))?;
                }
                (s, Some(t))
            }
            None => {
                let mut s = load_csv(source, true).map_err(at("data-io"))?;
                if let Some(dim) = pca_dim {
                    s.x = pca_reduce(&s.x, *dim).map_err(at("data-io"))?;
                }
                (s, None)
            }
        },
    };
    if source.labels.is_none() {
        return Err(at("data-io")(Error::InvalidArgument("source data has no labels".into())));
    }
    // target labels are split off here and only ever reach `accuracy`
    let truth = target.as_ref().and_then(|t| t.labels.clone());
    let target = target.map(|t| t.unlabeled());
    Ok(Experiment { source, target, truth })
}

fn fit_one(exp: &Experiment, algo: Algorithm, spec: &KernelSpec, hp: &HyperParams, seed: u64) -> Result<FitRecord, CliError> {
    let ys = exp.source.labels().expect("checked on load");
    let Some(target) = &exp.target else {
        let res = kpca_fit(&exp.source.x, spec, hp.k).map_err(at("adapt-solver"))?;
        return Ok(FitRecord {
            seed,
            algorithm: algo.name().into(),
            source: exp.source.name.clone(),
            target: None,
            n_source: exp.source.n(),
            n_target: None,
            dim: exp.source.dim(),
            bandwidth: res.kernel.bandwidth(),
            params: *hp,
            eigenvalues: res.eigenvalues,
            ridge: None,
            objective_history: None,
            pseudo_label_accuracy: None,
            target_accuracy: None,
        });
    };
    debug_assert!(target.labels.is_none(), "target labels must not reach a fit");
    let res: ProjectionResult = algo
        .fit(&exp.source.x, ys, &target.x, spec, hp)
        .map_err(at("adapt-solver"))?;
    let score = |pred: &[crate::Label]| -> Result<Option<f64>, CliError> {
        exp.truth
            .as_ref()
            .map(|t| accuracy(pred, t))
            .transpose()
            .map_err(at("classify-eval"))
    };
    let history = res
        .target_label_history
        .iter()
        .map(|p| score(p))
        .collect::<Result<Option<Vec<f64>>, _>>()?;
    let final_acc = res.target_labels().map(score).transpose()?.flatten();
    let adaptive = algo != Algorithm::Kpca;
    Ok(FitRecord {
        seed,
        algorithm: algo.name().into(),
        source: exp.source.name.clone(),
        target: Some(target.name.clone()),
        n_source: exp.source.n(),
        n_target: Some(target.n()),
        dim: exp.source.dim(),
        bandwidth: res.kernel.bandwidth(),
        params: *hp,
        eigenvalues: res.eigenvalues,
        ridge: adaptive.then_some(res.ridge),
        objective_history: adaptive.then_some(res.objective_history),
        pseudo_label_accuracy: history.filter(|_| adaptive),
        target_accuracy: final_acc,
    })
}

fn fixed_params(r: &Resolved, command: &str) -> Result<HyperParams, CliError> {
    match &r.params {
        ParamSource::Fixed(hp) => Ok(*hp),
        ParamSource::Grid(_) => Err(CliError::Config(ConfigError(format!(
            "`{command}` needs fixed parameters; use `grid` for [grid] configs"
        )))),
    }
}

fn experiment_label(exp: &Experiment, seed: u64, seeds: usize) -> String {
    let base = match &exp.target {
        Some(t) => format!("{}->{}", exp.source.name, t.name),
        None => exp.source.name.clone(),
    };
    if seeds > 1 {
        format!("{base} (seed {seed})")
    } else {
        base
    }
}

fn opt_pct(a: Option<f64>) -> String {
    a.map_or_else(|| "-".into(), pct)
}

fn run(r: &Resolved, report: &mut Report) -> Result<String, CliError> {
    let hp = fixed_params(r, "run")?;
    let mut rows = Vec::new();
    for &seed in &r.seeds {
        let exp = load_experiment(&r.config.data, seed)?;
        for &algo in &r.algorithms {
            let rec = fit_one(&exp, algo, &r.kernel, &hp, seed)?;
            rows.push(vec![
                experiment_label(&exp, seed, r.seeds.len()),
                rec.algorithm.clone(),
                rec.bandwidth.map_or_else(|| "-".into(), |b| format!("{b:.4}")),
                opt_pct(rec.target_accuracy),
            ]);
            report.push("result", &rec);
        }
    }
    Ok(format_table(&["experiment", "algorithm", "sigma^2", "accuracy %"], &rows))
}

#[derive(Serialize)]
struct RowRecord<'a> {
    experiment: &'a str,
    seed: Option<u64>,
    algorithm: &'a str,
    accuracy: f64,
    mark: &'a str,
}

fn compare(r: &Resolved, report: &mut Report) -> Result<String, CliError> {
    let hp = fixed_params(r, "compare")?;
    let mut rows = Vec::new();
    let mut sums = vec![0.0; r.algorithms.len()];
    for &seed in &r.seeds {
        let exp = load_experiment(&r.config.data, seed)?;
        if exp.truth.is_none() {
            return Err(CliError::Config(ConfigError(
                "compare needs target labels for scoring (target_has_labels = true)".into(),
            )));
        }
        let label = experiment_label(&exp, seed, r.seeds.len());
        let mut accs = Vec::new();
        for &algo in &r.algorithms {
            let rec = fit_one(&exp, algo, &r.kernel, &hp, seed)?;
            accs.push(rec.target_accuracy.expect("truth present"));
            report.push("result", &rec);
        }
        for (i, (&algo, mark)) in r.algorithms.iter().zip(rank_marks(&accs)).enumerate() {
            sums[i] += accs[i];
            rows.push(vec![label.clone(), algo.name().into(), pct(accs[i]), mark.into()]);
            report.push(
                "row",
                &RowRecord {
                    experiment: &label,
                    seed: Some(seed),
                    algorithm: algo.name(),
                    accuracy: accs[i],
                    mark,
                },
            );
        }
    }
    if r.seeds.len() > 1 {
        let means: Vec<f64> = sums.iter().map(|s| s / r.seeds.len() as f64).collect();
        for ((&algo, mark), &m) in r.algorithms.iter().zip(rank_marks(&means)).zip(&means) {
            rows.push(vec!["mean".into(), algo.name().into(), pct(m), mark.into()]);
            report.push(
                "row",
                &RowRecord {
                    experiment: "mean",
                    seed: None,
                    algorithm: algo.name(),
                    accuracy: m,
                    mark,
                },
            );
        }
    }
    Ok(format_table(&["experiment", "algorithm", "accuracy %", "rank"], &rows))
}

fn grid(r: &Resolved, report: &mut Report) -> Result<String, CliError> {
    let ParamSource::Grid(g) = &r.params else {
        return Err(CliError::Config(ConfigError("`grid` needs a [grid] section".into())));
    };
    let algo = match r.algorithms.as_slice() {
        [Algorithm::Net] => GridAlgo::Net,
        [Algorithm::Jda] => GridAlgo::Jda,
        _ => {
            return Err(CliError::Config(ConfigError(
                "`grid` searches a single algorithm, net or jda".into(),
            )))
        }
    };
    let mut rows = Vec::new();
    let mut selected_rows = Vec::new();
    for &seed in &r.seeds {
        let exp = load_experiment(&r.config.data, seed)?;
        let Some(target) = &exp.target else {
            return Err(CliError::Config(ConfigError("`grid` needs a target domain".into())));
        };
        let ys = exp.source.labels().expect("checked on load");
        let rep = grid_search(&exp.source.x, ys, &target.x, &r.kernel, g, &r.kmm, algo)
            .map_err(at("model-selection"))?;
        let label = experiment_label(&exp, seed, r.seeds.len());
        for (i, cell) in rep.cells.iter().enumerate() {
            let p = &cell.params;
            rows.push(vec![
                label.clone(),
                format!("{}", p.alpha),
                format!("{}", p.beta),
                format!("{}", p.gamma),
                p.k.to_string(),
                opt_pct(cell.validation_accuracy),
                if rep.best == Some(i) { "selected".into() } else { cell.error.clone().unwrap_or_default() },
            ]);
            report.push(
                "grid_cell",
                &serde_json::json!({ "seed": seed, "index": i, "cell": cell }),
            );
        }
        let Some(best) = rep.best_params() else {
            return Err(at("model-selection")(Error::InvalidArgument("every grid cell failed".into())));
        };
        let rec = fit_one(&exp, algo.algorithm(), &r.kernel, &best, seed)?;
        report.push(
            "grid_selected",
            &serde_json::json!({
                "seed": seed,
                "params": best,
                "validation_accuracy": rep.best_accuracy(),
                "validation_indices": rep.validation,
                "kmm_objective": rep.weights.objective,
                "kmm_feasible": rep.weights.feasible,
                "target_accuracy": rec.target_accuracy,
            }),
        );
        selected_rows.push(vec![
            label,
            format!("alpha={} beta={} gamma={} k={}", best.alpha, best.beta, best.gamma, best.k),
            opt_pct(rep.best_accuracy()),
            opt_pct(rec.target_accuracy),
        ]);
    }
    let mut text = format_table(
        &["experiment", "alpha", "beta", "gamma", "k", "validation %", "note"],
        &rows,
    );
    text.push('\n');
    text.push_str(&format_table(
        &["experiment", "selected", "validation %", "target %"],
        &selected_rows,
    ));
    Ok(text)
}

fn gen_toy(a: &GenToyArgs) -> Result<String, CliError> {
    if a.n_per_class == 0 || !(a.noise >= 0.0) {
        return Err(CliError::Config(ConfigError("n_per_class must be >= 1 and noise >= 0".into())));
    }
    let translation = match a.translation.as_deref() {
        Some([x, y]) => [*x, *y],
        _ => [0.0, 0.0],
    };
    let shift = DomainShift {
        rotation_deg: a.rotation,
        translation,
    };
    let (s, t) = two_moon(a.n_per_class, a.noise, &shift, a.seed);
    std::fs::create_dir_all(&a.out).map_err(|e| at("data-io")(e.into()))?;
    let (sp, tp) = toy_paths(&a.out);
    save_csv(&s, &sp).map_err(at("data-io"))?;
    save_csv(&t, &tp).map_err(at("data-io"))?;
    Ok(format!("wrote {}\nwrote {}\n", display(&sp), display(&tp)))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Caps rayon's worker count from `NET_ADAPT_THREADS`.
pub fn init_threads() {
    if let Some(n) = std::env::var("NET_ADAPT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
