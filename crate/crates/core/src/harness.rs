//! Seeded experiment sweeps: config parsing, per-cell runners for every
//! scenario, quantile aggregation and CSV/JSON output.
//!
//! Every record of a sweep comes from one cell `(grid index, rep)` whose seed
//! is `derive_seed(config.seed, [grid index, rep])`, so [`run_cell`] on its
//! own reproduces any record. Cells run on a rayon pool; output order is
//! canonical regardless of completion order.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_tasks, estimate_task_vectors};
use crate::datagen::{
    correlate_heads, sample_adversarial_scenario, sample_datasets, sample_fairness_truth,
    sample_hierarchical_truth, GroundTruth, TaskBundle,
};
use crate::error::{Error, Result};
use crate::numerics::quartiles;
use crate::risk::{dof_bound, fairness_check, report};
use crate::rng::derive_seed;
use crate::solvers::{
    solve_cluster, solve_individual, solve_multipath, solve_vanilla, MtlMethod, MtlSolution,
    SolverOptions,
};
use crate::supernet::SupernetConfig;
use crate::transfer::transfer_sweep;

pub const CSV_HEADER: &str =
    "scenario,method,sweep_param,sweep_value,rep,metric_name,metric_value,seed_used";
pub const THREADS_ENV: &str = "PATHNET_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig2N,
    Fig2Tbar,
    Fig2K,
    Fig3Clustering,
    Fig6Samples,
    Fig6Tasks,
    Fairness,
    Adversarial,
    Transfer,
    BoundShape,
}

impl Scenario {
    pub const ALL: [Scenario; 10] = [
        Scenario::Fig2N,
        Scenario::Fig2Tbar,
        Scenario::Fig2K,
        Scenario::Fig3Clustering,
        Scenario::Fig6Samples,
        Scenario::Fig6Tasks,
        Scenario::Fairness,
        Scenario::Adversarial,
        Scenario::Transfer,
        Scenario::BoundShape,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Fig2N => "fig2_n",
            Scenario::Fig2Tbar => "fig2_tbar",
            Scenario::Fig2K => "fig2_k",
            Scenario::Fig3Clustering => "fig3_clustering",
            Scenario::Fig6Samples => "fig6_samples",
            Scenario::Fig6Tasks => "fig6_tasks",
            Scenario::Fairness => "fairness",
            Scenario::Adversarial => "adversarial",
            Scenario::Transfer => "transfer",
            Scenario::BoundShape => "bound_shape",
        }
    }

    /// Name of the swept quantity.
    pub fn sweep_param(self) -> &'static str {
        match self {
            Scenario::Fig2N | Scenario::Fig3Clustering | Scenario::BoundShape => "N",
            Scenario::Fig2Tbar => "T_bar",
            Scenario::Fig2K => "K",
            Scenario::Fig6Samples => "N1",
            Scenario::Fig6Tasks => "T_bar1",
            Scenario::Fairness => "T1",
            Scenario::Adversarial | Scenario::Transfer => "M",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        let g: &[f64] = match self {
            Scenario::Fig2N => &[2.0, 5.0, 10.0, 20.0, 40.0],
            Scenario::Fig2Tbar => &[2.0, 5.0, 10.0, 20.0],
            Scenario::Fig2K => &[10.0, 20.0, 40.0, 80.0],
            Scenario::Fig3Clustering => &[10.0, 20.0, 40.0, 60.0, 80.0],
            Scenario::Fig6Samples => &[1.0, 3.0, 9.0, 17.0, 33.0],
            Scenario::Fig6Tasks => &[2.0, 5.0, 10.0, 25.0, 50.0],
            Scenario::Fairness => &[1.0, 2.0, 6.0, 12.0, 30.0],
            Scenario::Adversarial => &[17.0, 100.0, 1000.0],
            Scenario::Transfer => &[3.0, 5.0, 10.0, 20.0, 40.0],
            Scenario::BoundShape => &[10.0, 40.0],
        };
        g.to_vec()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(Error::InvalidArgument(format!("unknown format '{s}', expected csv or json"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub p: usize,
    pub big_r: usize,
    pub r: usize,
    pub k: usize,
    pub t_bar: usize,
    pub n: usize,
    pub sigma: f64,
    pub gamma: f64,
    /// Sample size of resource-rich tasks (`fig6_samples`).
    pub n_rich: usize,
    /// Cluster size of resource-rich clusters (`fig6_tasks`).
    pub t_bar_rich: usize,
    /// Minority subspace dimension (`fairness`).
    pub r1: usize,
    /// Majority task count (`fairness`).
    pub t0: usize,
    /// Source tasks in the adversarial scenario.
    pub tasks: usize,
    /// Targets per grid point (`transfer`, `adversarial`).
    pub targets: usize,
    /// Also solve with the true clusters (`fig3_clustering`).
    pub known_clusters: bool,
    pub grid: Vec<f64>,
    /// The grid was not given in the config.
    pub grid_is_default: bool,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<MtlMethod>,
    pub out_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub threads: Option<usize>,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    /// Paper settings for `scenario`.
    pub fn defaults(scenario: Scenario) -> Self {
        let mut c = ExperimentConfig {
            scenario,
            p: 32,
            big_r: 8,
            r: 2,
            k: 40,
            t_bar: 10,
            n: 10,
            sigma: 0.0,
            gamma: 0.0,
            n_rich: 33,
            t_bar_rich: 50,
            r1: 3,
            t0: 60,
            tasks: 32,
            targets: 200,
            known_clusters: true,
            grid: scenario.default_grid(),
            grid_is_default: true,
            reps: 20,
            seed: 0,
            methods: vec![MtlMethod::Vanilla, MtlMethod::Cluster, MtlMethod::Multipath],
            out_path: None,
            format: OutputFormat::Csv,
            threads: None,
            solver: SolverOptions::default(),
        };
        match scenario {
            Scenario::Fig3Clustering => {
                c.p = 128;
                c.big_r = 32;
                c.k = 50;
                c.gamma = 0.6;
            }
            Scenario::Fig6Samples | Scenario::Fig6Tasks => {
                c.k = 20;
                c.sigma = 0.1;
            }
            Scenario::Fairness => {
                c.p = 12;
                c.r = 3;
            }
            Scenario::Transfer => {
                c.n = 20;
                c.targets = 50;
                c.methods = vec![MtlMethod::Multipath];
            }
            Scenario::BoundShape => {
                c.sigma = 0.1;
                c.methods = vec![MtlMethod::Multipath];
            }
            _ => {}
        }
        c
    }

    /// Parse `key = value` lines; `#` starts a comment, arrays are
    /// comma-separated. `scenario` must appear before any other key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: Option<ExperimentConfig> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            if key == "scenario" {
                if cfg.is_some() {
                    return Err(err("scenario given twice".into()));
                }
                cfg = Some(ExperimentConfig::defaults(value.parse().map_err(|e: Error| err(e.to_string()))?));
                continue;
            }
            let c = cfg.as_mut().ok_or_else(|| err("the first key must be scenario".into()))?;
            c.set(key, value).map_err(err)?;
        }
        let cfg = cfg.ok_or(Error::Config { line: 0, message: "missing scenario".into() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value '{v}' for {key}"))
        }
        match key {
            "p" => self.p = num(key, value)?,
            "R" => self.big_r = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "K" => self.k = num(key, value)?,
            "T_bar" => self.t_bar = num(key, value)?,
            "N" => self.n = num(key, value)?,
            "sigma" => self.sigma = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "N_rich" => self.n_rich = num(key, value)?,
            "T_bar_rich" => self.t_bar_rich = num(key, value)?,
            "r1" => self.r1 = num(key, value)?,
            "T0" => self.t0 = num(key, value)?,
            "tasks" => self.tasks = num(key, value)?,
            "targets" => self.targets = num(key, value)?,
            "known_clusters" => self.known_clusters = num(key, value)?,
            "reps" => self.reps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = Some(num(key, value)?),
            "max_rounds" => self.solver.max_als_rounds = num(key, value)?,
            "ridge" => self.solver.ridge = num(key, value)?,
            "out" => self.out_path = Some(PathBuf::from(value)),
            "format" => self.format = value.parse().map_err(|e: Error| e.to_string())?,
            "grid" => {
                self.grid = value
                    .split(',')
                    .map(|v| num::<f64>(key, v.trim()))
                    .collect::<std::result::Result<_, _>>()?;
                self.grid_is_default = false;
            }
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|v| v.trim().parse::<MtlMethod>().map_err(|e| e.to_string()))
                    .collect::<std::result::Result<_, _>>()?;
            }
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.grid.is_empty() {
            return bad("sweep grid is empty".into());
        }
        if self.reps == 0 {
            return bad("reps must be >= 1".into());
        }
        if self.grid.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("grid values must be finite and >= 0".into());
        }
        if self.grid.iter().any(|v| v.fract() != 0.0) {
            return bad(format!("{} grid values must be integers", self.scenario.sweep_param()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        self.solver.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scenario: String,
    pub method: String,
    pub sweep_param: String,
    pub sweep_value: f64,
    pub rep: usize,
    pub metric_name: String,
    pub metric_value: f64,
    pub seed_used: u64,
}

impl SweepRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.scenario,
            self.method,
            self.sweep_param,
            self.sweep_value,
            self.rep,
            self.metric_name,
            self.metric_value,
            self.seed_used
        )
    }
}

/// Seed of cell `(grid_index, rep)`.
pub fn cell_seed(config: &ExperimentConfig, grid_index: usize, rep: usize) -> u64 {
    match config.scenario {
        // paired across the grid: the ratio statistic compares sizes on one instance
        Scenario::BoundShape => derive_seed(config.seed, &[u64::MAX, rep as u64]),
        _ => derive_seed(config.seed, &[grid_index as u64, rep as u64]),
    }
}

struct Cell<'a> {
    config: &'a ExperimentConfig,
    value: f64,
    rep: usize,
    seed: u64,
    out: Vec<SweepRecord>,
}

impl Cell<'_> {
    fn push(&mut self, method: &str, metric: &str, value: f64) {
        self.out.push(SweepRecord {
            scenario: self.config.scenario.to_string(),
            method: method.to_string(),
            sweep_param: self.config.scenario.sweep_param().to_string(),
            sweep_value: self.value,
            rep: self.rep,
            metric_name: metric.to_string(),
            metric_value: value,
            seed_used: self.seed,
        });
    }

    fn wants(&self, m: MtlMethod) -> bool {
        self.config.methods.contains(&m)
    }

    fn value_usize(&self) -> usize {
        self.value as usize
    }
}

/// Records of one cell.
pub fn run_cell(config: &ExperimentConfig, grid_index: usize, rep: usize) -> Result<Vec<SweepRecord>> {
    let value = *config.grid.get(grid_index).ok_or_else(|| {
        Error::InvalidArgument(format!("grid index {grid_index} out of range"))
    })?;
    let mut cell = Cell {
        config,
        value,
        rep,
        seed: cell_seed(config, grid_index, rep),
        out: Vec::new(),
    };
    match config.scenario {
        Scenario::Fig2N | Scenario::Fig2Tbar | Scenario::Fig2K => fig2_cell(&mut cell)?,
        Scenario::Fig3Clustering => fig3_cell(&mut cell)?,
        Scenario::Fig6Samples | Scenario::Fig6Tasks => fig6_cell(&mut cell)?,
        Scenario::Fairness => fairness_cell(&mut cell)?,
        Scenario::Adversarial => adversarial_cell(&mut cell)?,
        Scenario::Transfer => transfer_cell(&mut cell)?,
        Scenario::BoundShape => bound_shape_cell(&mut cell)?,
    }
    Ok(cell.out)
}

fn solve(method: MtlMethod, bundle: &TaskBundle, c: &ExperimentConfig, ids: &[usize]) -> Result<MtlSolution> {
    match method {
        MtlMethod::Vanilla => solve_vanilla(bundle, c.big_r, &c.solver),
        MtlMethod::Cluster => solve_cluster(bundle, c.r, ids, &c.solver),
        MtlMethod::Multipath => solve_multipath(bundle, c.big_r, c.r, ids, &c.solver),
        MtlMethod::Individual => solve_individual(bundle),
    }
}

fn truth_risks(sol: &MtlSolution, bundle: &TaskBundle) -> Result<Vec<f64>> {
    let truth = bundle.truth.as_ref().expect("generated bundles carry their truth");
    Ok(report(sol, truth)?.per_task)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn fig2_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let (mut k, mut t_bar, mut n) = (c.k, c.t_bar, c.n);
    match c.scenario {
        Scenario::Fig2N => n = cell.value_usize(),
        Scenario::Fig2Tbar => t_bar = cell.value_usize(),
        _ => k = cell.value_usize(),
    }
    let truth = sample_hierarchical_truth(c.p, c.big_r, c.r, k, t_bar, cell.seed)?;
    let ids = truth.cluster_ids();
    let bundle = sample_datasets(&truth, &vec![n; truth.num_tasks()], c.sigma, cell.seed)?;
    for &m in &c.methods {
        let sol = solve(m, &bundle, c, &ids)?;
        cell.push(m.as_str(), "excess_risk", mean(&truth_risks(&sol, &bundle)?));
    }
    Ok(())
}

fn fig3_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let n = cell.value_usize();
    let truth = sample_hierarchical_truth(c.p, c.big_r, c.r, c.k, c.t_bar, cell.seed)?;
    let truth = correlate_heads(&truth, c.gamma, cell.seed)?;
    let ids = truth.cluster_ids();
    let bundle = sample_datasets(&truth, &vec![n; truth.num_tasks()], c.sigma, cell.seed)?;
    let vanilla = solve_vanilla(&bundle, c.big_r, &c.solver)?;
    cell.push("vanilla", "excess_risk", mean(&truth_risks(&vanilla, &bundle)?));
    let mut clusters = cluster_tasks(&estimate_task_vectors(&vanilla)?, c.k, cell.seed)?;
    cell.push("kmeans", "clustering_accuracy", clusters.score(&ids)?);
    let learned = clusters.assignments;
    for m in [MtlMethod::Cluster, MtlMethod::Multipath] {
        if !cell.wants(m) {
            continue;
        }
        if c.known_clusters {
            let sol = solve(m, &bundle, c, &ids)?;
            cell.push(m.as_str(), "excess_risk", mean(&truth_risks(&sol, &bundle)?));
        }
        let sol = solve(m, &bundle, c, &learned)?;
        cell.push(&format!("{m}_learned"), "excess_risk", mean(&truth_risks(&sol, &bundle)?));
    }
    Ok(())
}

/// Clusters `0..K/2` are resource-poor, the rest resource-rich.
fn fig6_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let poor_clusters = c.k / 2;
    let (truth, sizes) = if c.scenario == Scenario::Fig6Samples {
        let truth = sample_hierarchical_truth(c.p, c.big_r, c.r, c.k, c.t_bar, cell.seed)?;
        let sizes: Vec<usize> = truth
            .cluster_ids()
            .iter()
            .map(|&k| if k < poor_clusters { cell.value_usize() } else { c.n_rich })
            .collect();
        (truth, sizes)
    } else {
        let t_poor = cell.value_usize();
        if t_poor == 0 || t_poor > c.t_bar_rich {
            return Err(Error::InvalidArgument(format!(
                "T_bar1 must lie in 1..={}, got {t_poor}",
                c.t_bar_rich
            )));
        }
        let full = sample_hierarchical_truth(c.p, c.big_r, c.r, c.k, c.t_bar_rich, cell.seed)?;
        let keep: Vec<usize> = (0..full.num_tasks())
            .filter(|&t| t / c.t_bar_rich >= poor_clusters || t % c.t_bar_rich < t_poor)
            .collect();
        let truth = GroundTruth::new(
            full.net().clone(),
            keep.iter().map(|&t| full.heads()[t].clone()).collect(),
            keep.iter().map(|&t| full.pathways()[t].clone()).collect(),
        )?;
        let sizes = vec![c.n; truth.num_tasks()];
        (truth, sizes)
    };
    let ids = truth.cluster_ids();
    let bundle = sample_datasets(&truth, &sizes, c.sigma, cell.seed)?;
    for &m in &c.methods {
        let sol = solve(m, &bundle, c, &ids)?;
        let risks = truth_risks(&sol, &bundle)?;
        let split = |poor: bool| -> Vec<f64> {
            risks
                .iter()
                .zip(&ids)
                .filter(|(_, &k)| (k < poor_clusters) == poor)
                .map(|(&r, _)| r)
                .collect()
        };
        cell.push(m.as_str(), "excess_risk_poor", mean(&split(true)));
        cell.push(m.as_str(), "excess_risk_rich", mean(&split(false)));
    }
    Ok(())
}

fn fairness_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let inst = sample_fairness_truth(c.p, c.r, c.r1, c.t0, cell.value_usize(), cell.seed)?;
    let chk = fairness_check(&inst, c.r)?;
    cell.push("population", "majority_risk", chk.r0);
    cell.push("population", "majority_bound", chk.bound0);
    cell.push("population", "minority_risk", chk.r1);
    cell.push("population", "minority_bound", chk.bound1);
    cell.push("population", "majority_slack", chk.bound0 - chk.r0);
    cell.push("population", "minority_slack", chk.r1 - chk.bound1);
    Ok(())
}

fn adversarial_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let m = cell.value_usize();
    let scen = sample_adversarial_scenario(c.p, c.big_r, c.tasks, cell.seed)?;
    let n = c.n.max(c.p);
    let bundle = sample_datasets(&scen.truth, &vec![n; c.tasks], 0.0, cell.seed)?;
    cell.push("swapped", "train_loss", scen.swapped.train_loss(&bundle)?);
    for (name, net) in [("swapped", &scen.swapped.net), ("truthful", scen.truth.net())] {
        let pts = transfer_sweep(net, &scen.truth, &[m], c.targets, c.sigma, cell.seed)?;
        cell.push(name, "excess_risk", pts[0].mean);
        cell.push(name, "bias", pts[0].mean_bias);
    }
    Ok(())
}

fn transfer_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let truth = sample_hierarchical_truth(c.p, c.big_r, c.r, c.k, c.t_bar, cell.seed)?;
    let ids = truth.cluster_ids();
    let bundle = sample_datasets(&truth, &vec![c.n; truth.num_tasks()], c.sigma, cell.seed)?;
    let m = cell.value_usize();
    for &method in &c.methods {
        let sol = solve(method, &bundle, c, &ids)?;
        let pts = transfer_sweep(&sol.net, &truth, &[m], c.targets, c.sigma, cell.seed)?;
        cell.push(method.as_str(), "excess_risk", pts[0].mean);
        cell.push(method.as_str(), "excess_risk_median", pts[0].median);
        cell.push(method.as_str(), "bias", pts[0].mean_bias);
    }
    let pts = transfer_sweep(truth.net(), &truth, &[m], c.targets, c.sigma, cell.seed)?;
    cell.push("truth", "excess_risk", pts[0].mean);
    Ok(())
}

fn bound_shape_cell(cell: &mut Cell<'_>) -> Result<()> {
    let c = cell.config;
    let n = cell.value_usize();
    let truth = sample_hierarchical_truth(c.p, c.big_r, c.r, c.k, c.t_bar, cell.seed)?;
    let ids = truth.cluster_ids();
    let bundle = sample_datasets(&truth, &vec![n; truth.num_tasks()], c.sigma, cell.seed)?;
    let net_cfg = SupernetConfig::hierarchical(c.p, c.big_r, c.r, c.k)?;
    for &m in &c.methods {
        let sol = solve(m, &bundle, c, &ids)?;
        let risk = mean(&truth_risks(&sol, &bundle)?);
        cell.push(m.as_str(), "excess_risk", risk);
        cell.push(m.as_str(), "root_excess_risk", risk.sqrt());
    }
    cell.push("theory", "dof_bound", dof_bound(&net_cfg, truth.num_tasks(), n, 0.0)?);
    Ok(())
}

fn thread_count(config: &ExperimentConfig) -> Result<Option<usize>> {
    if let Some(t) = config.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Every cell of the sweep, in canonical order: grid index, method, rep,
/// then metric.
pub fn run_records(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|g| (0..config.reps).map(move |r| (g, r)))
        .collect();
    let work = || -> Result<Vec<Vec<SweepRecord>>> {
        cells.par_iter().map(|&(g, r)| run_cell(config, g, r)).collect()
    };
    let nested = match thread_count(config)? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut indexed: Vec<(usize, SweepRecord)> = cells
        .iter()
        .zip(nested)
        .flat_map(|(&(g, _), recs)| recs.into_iter().map(move |r| (g, r)))
        .collect();
    indexed.sort_by(|(ga, a), (gb, b)| {
        ga.cmp(gb)
            .then_with(|| a.method.cmp(&b.method))
            .then_with(|| a.rep.cmp(&b.rep))
            .then_with(|| a.metric_name.cmp(&b.metric_name))
    });
    Ok(indexed.into_iter().map(|(_, r)| r).collect())
}

fn expect_scenario(config: &ExperimentConfig, allowed: &[Scenario]) -> Result<()> {
    if allowed.contains(&config.scenario) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "scenario {} is not handled by this runner",
            config.scenario
        )))
    }
}

pub fn run_fig2(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    expect_scenario(config, &[Scenario::Fig2N, Scenario::Fig2Tbar, Scenario::Fig2K])?;
    run_records(config)
}

pub fn run_fig3(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    expect_scenario(config, &[Scenario::Fig3Clustering])?;
    run_records(config)
}

pub fn run_fig6(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    expect_scenario(config, &[Scenario::Fig6Samples, Scenario::Fig6Tasks])?;
    run_records(config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub method: String,
    pub sweep_value: f64,
    pub metric_name: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub count: usize,
}

/// Median and quartiles over reps for every (grid value, method, metric).
pub fn aggregate(records: &[SweepRecord]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(u64, String, String), (f64, Vec<f64>)> = BTreeMap::new();
    let mut order: Vec<(u64, String, String)> = Vec::new();
    for r in records {
        let key = (r.sweep_value.to_bits(), r.method.clone(), r.metric_name.clone());
        let entry = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (r.sweep_value, Vec::new())
        });
        entry.1.push(r.metric_value);
    }
    order
        .into_iter()
        .map(|key| {
            let (value, vals) = &groups[&key];
            let (q1, median, q3) = quartiles(vals);
            Aggregate {
                method: key.1,
                sweep_value: *value,
                metric_name: key.2,
                q1,
                median,
                q3,
                count: vals.len(),
            }
        })
        .collect()
}

/// Median of `metric` for `method` at `value`, if present.
pub fn median_of(aggs: &[Aggregate], method: &str, metric: &str, value: f64) -> Option<f64> {
    aggs.iter()
        .find(|a| a.method == method && a.metric_name == metric && a.sweep_value == value)
        .map(|a| a.median)
}

pub fn write_csv(records: &[SweepRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn write_json(records: &[SweepRecord], mut w: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)?;
    writeln!(w)?;
    Ok(())
}

/// One line per grid point with the median of every (method, metric).
pub fn summary_lines(config: &ExperimentConfig, records: &[SweepRecord]) -> Vec<String> {
    let aggs = aggregate(records);
    config
        .grid
        .iter()
        .map(|&v| {
            let parts: Vec<String> = aggs
                .iter()
                .filter(|a| a.sweep_value == v)
                .map(|a| format!("{}/{}={:.4e}", a.method, a.metric_name, a.median))
                .collect();
            format!("{} {}={} | {}", config.scenario, config.scenario.sweep_param(), v, parts.join(" "))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub scenario: String,
    pub seed: u64,
    pub reps: usize,
    pub grid: Vec<f64>,
    /// `artifact_default` when the grid came from built-in defaults.
    pub grids: String,
    pub records: usize,
    pub version: String,
}

/// Run the configured sweep, write records (and a `.meta.json` sidecar) to
/// `out_path` when set, print a summary line per grid point.
pub fn run_scenario(config: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let records = run_records(config)?;
    if let Some(path) = &config.out_path {
        let mut buf = Vec::new();
        match config.format {
            OutputFormat::Csv => write_csv(&records, &mut buf)?,
            OutputFormat::Json => write_json(&records, &mut buf)?,
        }
        std::fs::write(path, buf)?;
        let meta = RunMetadata {
            scenario: config.scenario.to_string(),
            seed: config.seed,
            reps: config.reps,
            grid: config.grid.clone(),
            grids: if config.grid_is_default { "artifact_default" } else { "config" }.to_string(),
            records: records.len(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let mut meta_path = path.clone().into_os_string();
        meta_path.push(".meta.json");
        std::fs::write(meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    }
    if config.grid_is_default {
        println!("# grids=artifact_default");
    }
    for line in summary_lines(config, &records) {
        println!("{line}");
    }
    Ok(records)
}
