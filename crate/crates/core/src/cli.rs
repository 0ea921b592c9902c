//! Command-line front end: `kernel`, `ktst`, `cbt` and `simulate`.
//!
//! Every option can come from a JSON config file (`--config`); flags given on
//! the command line override the file. Reports embed the resolved
//! configuration under `"config"`, and a report can itself be passed as
//! `--config` to reproduce it. Exit codes: 0 success, 1 runtime failure,
//! 2 invalid input or configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::cbt::{cbt, default_c_grid, CbtConfig};
use crate::embedding::{dce_embed, dre_embed, embedded_gram, random_prototypes, Bandwidth};
use crate::error::{Error, Result};
use crate::graph::{load_dataset, Group};
use crate::graph_kernels::{graph_kernel_matrix, GraphKernel, KernelConfig};
use crate::kernel::KernelMatrix;
use crate::ktst::{ktst_labeled, Convention, KtstConfig};
use crate::report;
use crate::simulation::{run_error_experiment, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Dce,
    Dre,
    Wl,
    Sp,
    Precomputed,
}

/// Gaussian bandwidth: `auto` (median heuristic) or a positive number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Sigma {
    Auto,
    Value(f64),
}

impl FromStr for Sigma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Sigma::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Sigma::Value(v)),
            _ => Err(format!("sigma must be `auto` or a positive number, got {s:?}")),
        }
    }
}

impl TryFrom<String> for Sigma {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Sigma> for String {
    fn from(s: Sigma) -> String {
        match s {
            Sigma::Auto => "auto".into(),
            Sigma::Value(v) => v.to_string(),
        }
    }
}

/// All options of all subcommands. `None` means "not given".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(default)]
pub struct RunConfig {
    /// Dataset manifest (JSON), or a kernel CSV with `--rep precomputed`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Graph representation / kernel.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rep: Option<Representation>,
    /// Weisfeiler-Lehman iterations.
    #[arg(long = "h")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    /// Edge threshold for WL/SP: keep edges with |weight| >= threshold.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Gaussian bandwidth for DCE/DRE: `auto` or a number.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Sigma>,
    /// Cosine-normalize WL/SP Gram matrices.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    /// DRE: number of randomly chosen prototypes (default: all graphs).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prototypes: Option<usize>,
    /// Number of permutations M.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    /// CBT null permutations in `simulate` (default: --permutations).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cbt_permutations: Option<usize>,
    /// CBT repetitions R (cbt) or simulated datasets per effect size (simulate).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Cross-validation folds.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    /// Significance thresholds.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    /// p-value tie convention.
    #[arg(long, value_parser = parse_convention)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<Convention>,
    /// Use (b + 1) / (M + 1) instead of b / M.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smooth: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Effect sizes for `simulate`.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    /// Star-graph dimension d for `simulate`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Class sizes for `simulate`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// 1000 repetitions and 10000 permutations.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paper_scale: Option<bool>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Output path.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Also write the null sample (and per-repetition values for cbt) as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub null_csv: Option<PathBuf>,
}

fn parse_convention(s: &str) -> std::result::Result<Convention, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field)),* }
    };
}

impl RunConfig {
    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay!(base, self, input, rep, h, threshold, sigma, normalize, prototypes, permutations,
            cbt_permutations, reps, folds, theta, convention, smooth, seed, delta, dim, m, n,
            paper_scale, workers, out, null_csv)
    }

    /// Reads a config file; a report written by this tool is accepted too
    /// (its `"config"` member is used).
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|source| Error::Manifest { path: path.to_path_buf(), source })?;
        let value = match value.get("config") {
            Some(inner) if inner.is_object() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|source| Error::Manifest { path: path.to_path_buf(), source })
    }
}

#[derive(Debug, Parser)]
#[command(name = "graphtest", version, about = "Two-sample tests for populations of graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a Gram matrix and write it as CSV plus a JSON sidecar.
    Kernel(Invocation),
    /// Kernel two-sample test (MMD² with permutation null).
    Ktst(Invocation),
    /// Classification-based test (SVM, nested CV, permutation null).
    Cbt(Invocation),
    /// Star-graph Type I / Type II error experiment.
    Simulate(Invocation),
}

#[derive(Debug, clap::Args)]
pub struct Invocation {
    /// JSON config file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: RunConfig,
}

impl Invocation {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        Ok(self.flags.clone().over(base))
    }
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_INVALID
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    let (inv, which) = match &command {
        Command::Kernel(i) => (i, "kernel"),
        Command::Ktst(i) => (i, "ktst"),
        Command::Cbt(i) => (i, "cbt"),
        Command::Simulate(i) => (i, "simulate"),
    };
    let cfg = inv.resolve()?;
    if let Some(w) = cfg.workers {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    match which {
        "kernel" => cmd_kernel(&cfg),
        "ktst" => cmd_ktst(&cfg),
        "cbt" => cmd_cbt(&cfg),
        _ => cmd_simulate(&cfg),
    }
}

/// Gram matrix in dataset order, its labels, and the config with kernel defaults filled in.
pub fn build_kernel(cfg: &RunConfig) -> Result<(KernelMatrix, Vec<Group>, RunConfig)> {
    let input = cfg.input.clone().ok_or_else(|| Error::Config("--input is required".into()))?;
    let rep = cfg.rep.ok_or_else(|| Error::Config("--rep is required".into()))?;
    let mut resolved = RunConfig { input: Some(input.clone()), rep: Some(rep), ..Default::default() };

    if rep == Representation::Precomputed {
        let (k, labels) = KernelMatrix::load(&input)?;
        let labels = labels.ok_or_else(|| {
            Error::Config("precomputed kernel needs group labels in its JSON sidecar".into())
        })?;
        if labels.len() != k.size() {
            return Err(Error::DimensionMismatch { expected: k.size(), found: labels.len() });
        }
        k.check()?;
        return Ok((k, labels, resolved));
    }

    let data = load_dataset(&input)?;
    let k = match rep {
        Representation::Dce | Representation::Dre => {
            let sigma = cfg.sigma.unwrap_or(Sigma::Auto);
            resolved.sigma = Some(sigma);
            let bandwidth = match sigma {
                Sigma::Auto => Bandwidth::MedianHeuristic,
                Sigma::Value(v) => Bandwidth::Fixed(v),
            };
            let embedded = if rep == Representation::Dce {
                dce_embed(&data)?
            } else {
                let prototypes = match cfg.prototypes {
                    Some(p) => {
                        let seed = cfg.seed.unwrap_or(0);
                        resolved.prototypes = Some(p);
                        resolved.seed = Some(seed);
                        random_prototypes(data.len(), p, seed)?
                    }
                    None => (0..data.len()).collect(),
                };
                dre_embed(&data, &prototypes)?
            };
            embedded_gram(&embedded, bandwidth)?
        }
        Representation::Wl | Representation::Sp => {
            let kc = KernelConfig {
                wl_iterations: cfg.h.unwrap_or(3),
                edge_threshold: cfg.threshold,
                normalize: cfg.normalize.unwrap_or(false),
            };
            if rep == Representation::Wl {
                resolved.h = Some(kc.wl_iterations);
            }
            resolved.threshold = cfg.threshold;
            resolved.normalize = Some(kc.normalize);
            let kind = if rep == Representation::Wl {
                GraphKernel::WeisfeilerLehman
            } else {
                GraphKernel::ShortestPath
            };
            graph_kernel_matrix(data.graphs(), kind, &kc)?
        }
        Representation::Precomputed => unreachable!(),
    };
    k.check()?;
    Ok((k, data.labels().to_vec(), resolved))
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out.clone().ok_or_else(|| Error::Config("--out is required".into()))?;
    let (k, labels, _) = build_kernel(cfg)?;
    let sidecar = k.save(&out, Some(&labels))?;
    println!("wrote {} and {}", out.display(), sidecar.display());
    Ok(())
}

fn thetas(cfg: &RunConfig) -> Vec<f64> {
    cfg.theta.clone().unwrap_or_else(|| vec![0.05, 0.01])
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_ktst(cfg: &RunConfig) -> Result<()> {
    let (k, labels, mut resolved) = build_kernel(cfg)?;
    let kc = KtstConfig {
        permutations: cfg.permutations.unwrap_or(10_000),
        seed: cfg.seed.unwrap_or(0),
        convention: cfg.convention.unwrap_or_default(),
        smooth: cfg.smooth.unwrap_or(false),
    };
    let th = thetas(cfg);
    resolved.permutations = Some(kc.permutations);
    resolved.seed = Some(kc.seed);
    resolved.convention = Some(kc.convention);
    resolved.smooth = Some(kc.smooth);
    resolved.theta = Some(th.clone());

    let r = ktst_labeled(&k, &labels, &kc)?;
    println!("MMD2u statistic = {}", r.statistic);
    println!("p-value = {}", r.p_value);
    if let Some(out) = &cfg.out {
        write(out, &to_json(&report::ktst_json(&r, &th, &resolved)))?;
    }
    if let Some(path) = &cfg.null_csv {
        write(path, &report::null_csv(&r.null_sample))?;
    }
    Ok(())
}

pub fn cmd_cbt(cfg: &RunConfig) -> Result<()> {
    let (k, labels, mut resolved) = build_kernel(cfg)?;
    let cc = CbtConfig {
        folds: cfg.folds.unwrap_or(5),
        c_grid: default_c_grid(),
        repetitions: cfg.reps.unwrap_or(100),
        permutations: cfg.permutations.unwrap_or(10_000),
        seed: cfg.seed.unwrap_or(0),
        convention: cfg.convention.unwrap_or_default(),
        smooth: cfg.smooth.unwrap_or(false),
    };
    let th = thetas(cfg);
    resolved.folds = Some(cc.folds);
    resolved.reps = Some(cc.repetitions);
    resolved.permutations = Some(cc.permutations);
    resolved.seed = Some(cc.seed);
    resolved.convention = Some(cc.convention);
    resolved.smooth = Some(cc.smooth);
    resolved.theta = Some(th.clone());

    let r = cbt(&k, &labels, &cc)?;
    println!("median acc_CV = {}", r.test.statistic);
    println!("p-value = {}", r.test.p_value);
    if let Some(out) = &cfg.out {
        write(out, &to_json(&report::cbt_json(&r, &th, &resolved)))?;
    }
    if let Some(path) = &cfg.null_csv {
        write(path, &report::null_csv(&r.test.null_sample))?;
        write(&path.with_extension("reps.csv"), &report::repetitions_csv(&r))?;
    }
    Ok(())
}

/// Simulation config from the run config; `--paper-scale` changes the
/// defaults, explicit flags still win.
pub fn sim_config(cfg: &RunConfig) -> SimConfig {
    let base = if cfg.paper_scale.unwrap_or(false) {
        SimConfig::paper_scale()
    } else {
        SimConfig::default()
    };
    SimConfig {
        dimension: cfg.dim.unwrap_or(base.dimension),
        deltas: cfg.delta.clone().unwrap_or(base.deltas),
        m: cfg.m.unwrap_or(base.m),
        n: cfg.n.unwrap_or(base.n),
        repetitions: cfg.reps.unwrap_or(base.repetitions),
        thetas: cfg.theta.clone().unwrap_or(base.thetas),
        permutations: cfg.permutations.unwrap_or(base.permutations),
        cbt_permutations: cfg.cbt_permutations.or(base.cbt_permutations),
        seed: cfg.seed.unwrap_or(base.seed),
        convention: cfg.convention.unwrap_or(base.convention),
        smooth: cfg.smooth.unwrap_or(base.smooth),
        folds: cfg.folds.unwrap_or(base.folds),
        ..base
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let sc = sim_config(cfg);
    let resolved = RunConfig {
        dim: Some(sc.dimension),
        delta: Some(sc.deltas.clone()),
        m: Some(sc.m),
        n: Some(sc.n),
        reps: Some(sc.repetitions),
        theta: Some(sc.thetas.clone()),
        permutations: Some(sc.permutations),
        cbt_permutations: sc.cbt_permutations,
        seed: Some(sc.seed),
        convention: Some(sc.convention),
        smooth: Some(sc.smooth),
        folds: Some(sc.folds),
        ..Default::default()
    };
    let r = run_error_experiment(&sc)?;
    let csv = r.to_csv();
    match &cfg.out {
        Some(out) => {
            let mut doc = serde_json::to_value(&r).expect("report serializes");
            let obj = doc.as_object_mut().expect("report is an object");
            if let Some(sim) = obj.remove("config") {
                obj.insert("simulation_config".into(), sim);
            }
            obj.insert("config".into(), serde_json::to_value(&resolved).expect("config serializes"));
            write(out, &to_json(&doc))?;
            write(&out.with_extension("csv"), &csv)?;
            print!("{csv}");
        }
        None => print!("{csv}"),
    }
    Ok(())
}
