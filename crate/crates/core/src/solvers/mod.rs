//! Multitask training: method-of-moments initialization followed by
//! alternating least squares, for a single shared representation (vanilla),
//! one representation per known cluster (cluster), and the two-layer
//! shared-then-cluster supernet (multipath). Individual per-task least
//! squares is the no-sharing baseline.
//!
//! Every representation update is an unconstrained least-squares solve
//! followed by a QR projection back to orthonormal rows. The triangular
//! factor is absorbed into the heads, so the projection never changes a
//! predictor unless an operator-norm clamp is also active.

mod replsq;

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{TaskBundle, TaskDataset};
use crate::error::{invalid, Error, Result};
use crate::numerics::{clamp_operator_norm, orthonormalize_rows, pinv_solve_unchecked, solve_psd, sorted_eigen};
use crate::rng::{self, domain};
use crate::supernet::{Pathway, Supernet, SupernetConfig};
use crate::{Mat, Vector};

use replsq::{LsSettings, RepTask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MtlMethod {
    Vanilla,
    Cluster,
    Multipath,
    Individual,
}

impl MtlMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MtlMethod::Vanilla => "vanilla",
            MtlMethod::Cluster => "cluster",
            MtlMethod::Multipath => "multipath",
            MtlMethod::Individual => "individual",
        }
    }
}

impl fmt::Display for MtlMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MtlMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(MtlMethod::Vanilla),
            "cluster" => Ok(MtlMethod::Cluster),
            "multipath" => Ok(MtlMethod::Multipath),
            "individual" => Ok(MtlMethod::Individual),
            other => Err(invalid(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_als_rounds: usize,
    /// Stop once a round improves the training loss by less than this fraction.
    pub tol: f64,
    /// Stop once the training loss is at or below this value.
    pub abs_tol: f64,
    pub ridge: f64,
    /// Operator-norm bound enforced on every module after each round.
    pub norm_bound_c: Option<f64>,
    /// Representation problems with at most this many unknowns are solved
    /// densely; larger ones by preconditioned conjugate gradients.
    pub direct_limit: usize,
    pub cg_max_iter: usize,
    pub cg_rel_tol: f64,
    /// Conjugate gradients also stop once the residual falls below this
    /// fraction of its warm-start value.
    pub cg_forcing: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_als_rounds: 100,
            tol: 1e-8,
            abs_tol: 1e-14,
            ridge: 0.0,
            norm_bound_c: None,
            direct_limit: 512,
            cg_max_iter: 200,
            cg_rel_tol: 1e-10,
            cg_forcing: 1e-1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid(format!("solver tol must be > 0, got {}", self.tol)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(invalid(format!("solver abs_tol must be >= 0, got {}", self.abs_tol)));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(invalid(format!("ridge must be a finite value >= 0, got {}", self.ridge)));
        }
        if let Some(c) = self.norm_bound_c {
            if !(c > 0.0) || !c.is_finite() {
                return Err(invalid(format!("norm bound C must be finite and > 0, got {c}")));
            }
        }
        if self.max_als_rounds == 0 {
            return Err(invalid("max_als_rounds must be at least 1"));
        }
        Ok(())
    }

    fn ls(&self) -> LsSettings {
        LsSettings {
            ridge: self.ridge,
            direct_limit: self.direct_limit,
            cg_max_iter: self.cg_max_iter,
            cg_rel_tol: self.cg_rel_tol,
            cg_forcing: self.cg_forcing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceStep {
    Init,
    Heads,
    /// Least-squares update of layer `layer` (0-indexed), before projection.
    Representation { layer: usize },
    Projection { layer: usize },
}

/// Training loss (mean squared residual over all samples) after one ALS step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub round: usize,
    pub step: TraceStep,
    pub loss: f64,
    /// Cluster being updated, or whose independent problem this entry belongs to.
    pub cluster: Option<usize>,
}

/// A fitted multitask model.
#[derive(Debug, Clone, PartialEq)]
pub struct MtlSolution {
    pub net: Supernet,
    pub heads: Vec<Vector>,
    pub pathways: Vec<Pathway>,
    pub method: MtlMethod,
    pub iterations_run: usize,
    pub final_train_loss: f64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Serialize, Deserialize)]
struct SolutionMeta {
    method: MtlMethod,
    iterations_run: usize,
    final_train_loss: f64,
    trace: Vec<TraceEntry>,
}

impl MtlSolution {
    /// Solution assembled from given weights, with no training history.
    pub fn new(net: Supernet, heads: Vec<Vector>, pathways: Vec<Pathway>, method: MtlMethod) -> Result<Self> {
        if heads.len() != pathways.len() {
            return Err(Error::DimensionMismatch {
                context: "MtlSolution",
                expected: format!("{} heads (one per pathway)", pathways.len()),
                found: format!("{}", heads.len()),
            });
        }
        let head_dim = net.config().head_dim();
        for (h, a) in heads.iter().zip(&pathways) {
            a.validate(net.config())?;
            if h.len() != head_dim {
                return Err(Error::DimensionMismatch {
                    context: "MtlSolution head",
                    expected: format!("length {head_dim}"),
                    found: format!("{}", h.len()),
                });
            }
        }
        Ok(Self {
            net,
            heads,
            pathways,
            method,
            iterations_run: 0,
            final_train_loss: 0.0,
            trace: Vec::new(),
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.heads.len()
    }

    /// Task `t`'s linear predictor `B_{alpha_t}^T h_t`.
    pub fn predictor(&self, t: usize) -> Result<Vector> {
        if t >= self.num_tasks() {
            return Err(invalid(format!("task {t} out of range ({} tasks)", self.num_tasks())));
        }
        self.net.predictor(&self.pathways[t], &self.heads[t])
    }

    pub fn predictors(&self) -> Vec<Vector> {
        (0..self.num_tasks())
            .map(|t| self.predictor(t).expect("validated at construction"))
            .collect()
    }

    /// Mean squared residual of this solution on `bundle`.
    pub fn train_loss(&self, bundle: &TaskBundle) -> Result<f64> {
        if bundle.num_tasks() != self.num_tasks() {
            return Err(Error::DimensionMismatch {
                context: "train_loss",
                expected: format!("{} tasks", self.num_tasks()),
                found: format!("{}", bundle.num_tasks()),
            });
        }
        Ok(mean_loss(&bundle.tasks, &self.predictors()))
    }

    /// Write `supernet.json`, `heads.json`, `pathways.json` and `meta.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.net.save(dir.join("supernet.json"))?;
        let heads: Vec<&[f64]> = self.heads.iter().map(|h| h.as_slice()).collect();
        std::fs::write(dir.join("heads.json"), serde_json::to_string(&heads)?)?;
        std::fs::write(dir.join("pathways.json"), serde_json::to_string(&self.pathways)?)?;
        let meta = SolutionMeta {
            method: self.method,
            iterations_run: self.iterations_run,
            final_train_loss: self.final_train_loss,
            trace: self.trace.clone(),
        };
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let net = Supernet::load(dir.join("supernet.json"))?;
        let heads: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(dir.join("heads.json"))?)?;
        let pathways: Vec<Pathway> = serde_json::from_str(&std::fs::read_to_string(dir.join("pathways.json"))?)?;
        let meta: SolutionMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
        let mut sol = Self::new(
            net,
            heads.into_iter().map(Vector::from_vec).collect(),
            pathways,
            meta.method,
        )?;
        sol.iterations_run = meta.iterations_run;
        sol.final_train_loss = meta.final_train_loss;
        sol.trace = meta.trace;
        Ok(sol)
    }
}

fn check_bundle(bundle: &TaskBundle) -> Result<usize> {
    let p = bundle
        .input_dim()
        .ok_or_else(|| invalid("bundle has no tasks"))?;
    for (t, task) in bundle.tasks.iter().enumerate() {
        if task.is_empty() {
            return Err(Error::EmptyTask(t));
        }
        if task.dim() != p {
            return Err(Error::DimensionMismatch {
                context: "task bundle",
                expected: format!("{p} features"),
                found: format!("{} in task {t}", task.dim()),
            });
        }
    }
    if p == 0 {
        return Err(invalid("tasks have zero features"));
    }
    Ok(p)
}

fn check_clusters(cluster_ids: &[usize], tasks: usize) -> Result<Vec<Vec<usize>>> {
    if cluster_ids.len() != tasks {
        return Err(Error::DimensionMismatch {
            context: "cluster ids",
            expected: format!("{tasks} ids"),
            found: format!("{}", cluster_ids.len()),
        });
    }
    let k = cluster_ids.iter().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); k];
    for (t, &c) in cluster_ids.iter().enumerate() {
        members[c].push(t);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyCluster(empty));
    }
    Ok(members)
}

fn mean_loss(tasks: &[TaskDataset], predictors: &[Vector]) -> f64 {
    let (sse, n) = tasks.iter().zip(predictors).fold((0.0, 0usize), |(s, n), (task, th)| {
        (s + (&task.y - &task.x * th).norm_squared(), n + task.len())
    });
    if n == 0 {
        0.0
    } else {
        sse / n as f64
    }
}

/// Moment estimate `M = sum_t theta_t theta_t^T` with `theta_t = X_t^T y_t / N_t`.
fn moment_matrix(tasks: &[TaskDataset], p: usize) -> Mat {
    let mut m = Mat::zeros(p, p);
    for task in tasks {
        let th = task.x.tr_mul(&task.y) / task.len() as f64;
        m.ger(1.0, &th, &th, 1.0);
    }
    m
}

/// Top eigenvectors of the moment matrix. When its rank is below `k`, the
/// missing rows are a random orthonormal completion drawn from `(seed, stream)`.
fn mom_rows(tasks: &[TaskDataset], p: usize, k: usize, seed: u64, stream: u64) -> Mat {
    let m = moment_matrix(tasks, p);
    let (values, vectors) = sorted_eigen(&m);
    let top = values.first().copied().unwrap_or(0.0);
    let rank = values.iter().take(k).filter(|&&v| top > 0.0 && v > 1e-10 * top).count();
    let kept = vectors.columns(0, rank).transpose();
    if rank == k {
        return kept;
    }
    log::debug!("moment matrix has rank {rank} < {k}; completing with random directions");
    let mut g = rng::substream(seed, domain::PADDING, stream);
    let mut stacked = Mat::zeros(k, p);
    stacked.rows_mut(0, rank).copy_from(&kept);
    let mut fill = rng::gaussian_matrix(&mut g, k - rank, p);
    fill -= &fill * kept.transpose() * &kept;
    stacked.rows_mut(rank, k - rank).copy_from(&fill);
    orthonormalize_rows(&stacked).0
}

/// Method-of-moments representation: the top `R` eigenvectors of
/// `sum_t theta_t theta_t^T`, as the orthonormal rows of an `R x p` matrix.
pub fn mom_init_vanilla(bundle: &TaskBundle, big_r: usize) -> Result<Mat> {
    let p = check_bundle(bundle)?;
    if big_r == 0 || big_r > p {
        return Err(invalid(format!("representation rank must satisfy 1 <= R <= p = {p}, got {big_r}")));
    }
    Ok(mom_rows(&bundle.tasks, p, big_r, bundle.seed, 0))
}

/// Shared layer from all tasks, then per-cluster `r x p` moment estimates
/// projected onto it: `B2^k = orth(B~2^k B1^T)`.
pub fn mom_init_multipath(
    bundle: &TaskBundle,
    big_r: usize,
    r: usize,
    cluster_ids: &[usize],
) -> Result<(Mat, Vec<Mat>)> {
    let p = check_bundle(bundle)?;
    if r == 0 || r > big_r || big_r > p {
        return Err(invalid(format!("need 1 <= r <= R <= p, got r={r}, R={big_r}, p={p}")));
    }
    let members = check_clusters(cluster_ids, bundle.num_tasks())?;
    let b1 = mom_rows(&bundle.tasks, p, big_r, bundle.seed, 0);
    let b2 = members
        .iter()
        .enumerate()
        .map(|(k, idx)| {
            if idx.len() < r {
                log::warn!(
                    "cluster {k} has {} tasks, fewer than r = {r}; its initial representation is rank deficient",
                    idx.len()
                );
            }
            let tasks: Vec<TaskDataset> = idx.iter().map(|&t| bundle.tasks[t].clone()).collect();
            let local = mom_rows(&tasks, p, r, bundle.seed, 1 + k as u64);
            orthonormalize_rows(&(local * b1.transpose())).0
        })
        .collect();
    Ok((b1, b2))
}

/// Per-task head least squares. Well-conditioned tall designs go through a
/// Cholesky solve of the normal equations, which agrees with the pseudo-inverse
/// solution there; everything else through the pseudo-inverse.
fn fit_head(z: &Mat, y: &Vector, ridge: f64) -> Vector {
    let (n, d) = z.shape();
    if ridge > 0.0 || n >= d {
        let mut a = z.tr_mul(z);
        for i in 0..d {
            a[(i, i)] += ridge;
        }
        let rhs = z.tr_mul(y);
        if ridge > 0.0 {
            return solve_psd(&a, &rhs);
        }
        let diag_max = a.diagonal().max();
        if let Some(ch) = a.cholesky() {
            let l = ch.l_dirty();
            let min_pivot = (0..d).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot > 1e-8 * diag_max {
                return ch.solve(&rhs);
            }
        }
    }
    pinv_solve_unchecked(z, y)
}

/// `B = r^T q` projected to `q`; heads pick up `r`. Non-finite factors (an
/// all-zero `B`) leave everything unchanged.
fn project(b: &mut Mat, heads: &mut [&mut Vector], norm_bound: Option<f64>) {
    let (q, r) = orthonormalize_rows(b);
    if q.iter().chain(r.iter()).all(|v| v.is_finite()) {
        *b = q;
        for h in heads.iter_mut() {
            **h = &r * &**h;
        }
    }
    if let Some(c) = norm_bound {
        *b = clamp_operator_norm(b, c);
    }
}

fn relative_gain(prev: f64, cur: f64) -> f64 {
    if prev <= 0.0 {
        0.0
    } else {
        (prev - cur) / prev
    }
}

/// Accept a representation update only if it does not raise the loss. With a
/// ridge the update minimizes a different objective and is always accepted.
fn accept(old_loss: f64, new_loss: f64, ridge: f64) -> bool {
    ridge > 0.0 || new_loss <= old_loss * (1.0 + 1e-12) + 1e-300
}

/// Vanilla MTL: one shared `R x p` representation.
pub fn solve_vanilla(bundle: &TaskBundle, big_r: usize, opts: &SolverOptions) -> Result<MtlSolution> {
    solve_vanilla_tagged(bundle, big_r, opts, None, 0)
}

fn solve_vanilla_tagged(
    bundle: &TaskBundle,
    big_r: usize,
    opts: &SolverOptions,
    cluster: Option<usize>,
    stream: u64,
) -> Result<MtlSolution> {
    opts.validate()?;
    let p = check_bundle(bundle)?;
    if big_r == 0 || big_r > p {
        return Err(invalid(format!("representation rank must satisfy 1 <= R <= p = {p}, got {big_r}")));
    }
    let tasks = &bundle.tasks;
    let mut b = mom_rows(tasks, p, big_r, bundle.seed, stream);
    if let Some(c) = opts.norm_bound_c {
        b = clamp_operator_norm(&b, c);
    }
    let mut heads = vec![Vector::zeros(big_r); tasks.len()];
    let ls = opts.ls();
    let designs: Vec<&Mat> = tasks.iter().map(|t| &t.x).collect();
    let grams = (p * big_r <= ls.direct_limit).then(|| replsq::gram_stack(&designs));

    let loss_of = |b: &Mat, heads: &[Vector]| {
        let preds: Vec<Vector> = heads.iter().map(|h| b.tr_mul(h)).collect();
        mean_loss(tasks, &preds)
    };
    let n_samples = tasks.iter().map(TaskDataset::len).sum::<usize>() as f64;
    let mut trace = Vec::new();
    let mut loss = loss_of(&b, &heads);
    trace.push(TraceEntry { round: 0, step: TraceStep::Init, loss, cluster });
    let mut rounds = 0;
    for round in 1..=opts.max_als_rounds {
        rounds = round;
        let round_start = loss;
        let fitted: Vec<(Vector, f64)> = tasks
            .par_iter()
            .map(|task| {
                let z = &task.x * b.transpose();
                let h = fit_head(&z, &task.y, opts.ridge);
                let sse = (&task.y - &z * &h).norm_squared();
                (h, sse)
            })
            .collect();
        loss = fitted.iter().map(|f| f.1).sum::<f64>() / n_samples;
        heads = fitted.into_iter().map(|f| f.0).collect();
        trace.push(TraceEntry { round, step: TraceStep::Heads, loss, cluster });

        let rep: Vec<RepTask> = tasks
            .iter()
            .zip(&heads)
            .map(|(task, h)| RepTask { z: &task.x, y: &task.y, g: h.clone() })
            .collect();
        let w = replsq::solve(&rep, grams.as_ref(), &b.transpose(), &ls);
        let candidate = w.transpose();
        let new_loss = loss_of(&candidate, &heads);
        if accept(loss, new_loss, opts.ridge) {
            b = candidate;
            loss = new_loss;
        }
        trace.push(TraceEntry { round, step: TraceStep::Representation { layer: 0 }, loss, cluster });

        {
            let mut hs: Vec<&mut Vector> = heads.iter_mut().collect();
            project(&mut b, &mut hs, opts.norm_bound_c);
        }
        loss = loss_of(&b, &heads);
        trace.push(TraceEntry { round, step: TraceStep::Projection { layer: 0 }, loss, cluster });

        if loss <= opts.abs_tol || relative_gain(round_start, loss) < opts.tol {
            break;
        }
    }
    let cfg = SupernetConfig::single_layer(p, big_r, 1)?;
    let net = Supernet::new(cfg, vec![vec![b]])?;
    let pathways = vec![Pathway::new(vec![0]); tasks.len()];
    let mut sol = MtlSolution::new(net, heads, pathways, MtlMethod::Vanilla)?;
    sol.iterations_run = rounds;
    sol.final_train_loss = loss;
    sol.trace = trace;
    Ok(sol)
}

/// Cluster MTL: an independent vanilla solve of rank `r` per known cluster.
pub fn solve_cluster(
    bundle: &TaskBundle,
    r: usize,
    cluster_ids: &[usize],
    opts: &SolverOptions,
) -> Result<MtlSolution> {
    opts.validate()?;
    let p = check_bundle(bundle)?;
    let members = check_clusters(cluster_ids, bundle.num_tasks())?;
    if r == 0 || r > p {
        return Err(invalid(format!("representation rank must satisfy 1 <= r <= p = {p}, got {r}")));
    }
    for (k, idx) in members.iter().enumerate() {
        if idx.len() < r {
            log::warn!("cluster {k} has {} tasks, fewer than r = {r}", idx.len());
        }
    }
    let stream_of = |k: usize| if members.len() == 1 { 0 } else { 1 + k as u64 };
    let parts: Vec<MtlSolution> = members
        .par_iter()
        .enumerate()
        .map(|(k, idx)| solve_vanilla_tagged(&bundle.subset(idx), r, opts, Some(k), stream_of(k)))
        .collect::<Result<_>>()?;

    let t = bundle.num_tasks();
    let mut heads = vec![Vector::zeros(r); t];
    let mut modules = Vec::with_capacity(members.len());
    let mut trace = Vec::new();
    let mut rounds = 0;
    for (part, idx) in parts.into_iter().zip(&members) {
        rounds = rounds.max(part.iterations_run);
        trace.extend(part.trace);
        for (h, &task) in part.heads.into_iter().zip(idx) {
            heads[task] = h;
        }
        modules.push(part.net.into_modules().remove(0).remove(0));
    }
    let cfg = SupernetConfig::single_layer(p, r, members.len())?;
    let net = Supernet::new(cfg, vec![modules])?;
    let pathways = cluster_ids.iter().map(|&k| Pathway::new(vec![k])).collect();
    let mut sol = MtlSolution::new(net, heads, pathways, MtlMethod::Cluster)?;
    sol.final_train_loss = sol.train_loss(bundle)?;
    sol.iterations_run = rounds;
    sol.trace = trace;
    Ok(sol)
}

/// Multipath MTL on the two-layer supernet: a shared `R x p` first layer and
/// one `r x R` second-layer module per known cluster.
pub fn solve_multipath(
    bundle: &TaskBundle,
    big_r: usize,
    r: usize,
    cluster_ids: &[usize],
    opts: &SolverOptions,
) -> Result<MtlSolution> {
    opts.validate()?;
    let p = check_bundle(bundle)?;
    let (mut b1, mut b2) = mom_init_multipath(bundle, big_r, r, cluster_ids)?;
    let members = check_clusters(cluster_ids, bundle.num_tasks())?;
    if let Some(c) = opts.norm_bound_c {
        b1 = clamp_operator_norm(&b1, c);
        for m in b2.iter_mut() {
            *m = clamp_operator_norm(m, c);
        }
    }
    let tasks = &bundle.tasks;
    let mut heads = vec![Vector::zeros(r); tasks.len()];
    let ls = opts.ls();
    let designs: Vec<&Mat> = tasks.iter().map(|t| &t.x).collect();
    let grams = (p * big_r <= ls.direct_limit).then(|| replsq::gram_stack(&designs));

    let loss_of = |b1: &Mat, b2: &[Mat], heads: &[Vector]| {
        let preds: Vec<Vector> = heads
            .iter()
            .zip(cluster_ids)
            .map(|(h, &k)| b1.tr_mul(&b2[k].tr_mul(h)))
            .collect();
        mean_loss(tasks, &preds)
    };
    let first_layer_features = |b1: &Mat| -> Vec<Mat> { tasks.par_iter().map(|t| &t.x * b1.transpose()).collect() };

    let n_samples = tasks.iter().map(TaskDataset::len).sum::<usize>() as f64;
    let mut trace = Vec::new();
    let mut loss = loss_of(&b1, &b2, &heads);
    trace.push(TraceEntry { round: 0, step: TraceStep::Init, loss, cluster: None });
    let mut z1 = first_layer_features(&b1);
    let mut rounds = 0;
    for round in 1..=opts.max_als_rounds {
        rounds = round;
        let round_start = loss;
        heads = z1
            .par_iter()
            .zip(tasks.par_iter())
            .zip(cluster_ids.par_iter())
            .map(|((z, task), &k)| fit_head(&(z * b2[k].transpose()), &task.y, opts.ridge))
            .collect();
        // Per-cluster squared error against the current first layer; a
        // second-layer update only touches its own cluster's term.
        let cluster_sse = |k: usize, b2k: &Mat, heads: &[Vector]| -> f64 {
            members[k]
                .iter()
                .map(|&t| (&tasks[t].y - &z1[t] * b2k.tr_mul(&heads[t])).norm_squared())
                .sum()
        };
        let mut sse: Vec<f64> = (0..members.len()).map(|k| cluster_sse(k, &b2[k], &heads)).collect();
        let total = |sse: &[f64]| sse.iter().sum::<f64>() / n_samples;
        loss = total(&sse);
        trace.push(TraceEntry { round, step: TraceStep::Heads, loss, cluster: None });

        for (k, idx) in members.iter().enumerate() {
            let rep: Vec<RepTask> = idx
                .iter()
                .map(|&t| RepTask { z: &z1[t], y: &tasks[t].y, g: heads[t].clone() })
                .collect();
            let candidate = replsq::solve(&rep, None, &b2[k].transpose(), &ls).transpose();
            let new_sse = cluster_sse(k, &candidate, &heads);
            let old_sse = std::mem::replace(&mut sse[k], new_sse);
            if accept(old_sse, new_sse, opts.ridge) {
                b2[k] = candidate;
            } else {
                sse[k] = old_sse;
            }
            loss = total(&sse);
            trace.push(TraceEntry { round, step: TraceStep::Representation { layer: 1 }, loss, cluster: Some(k) });
            {
                let mut hs: Vec<&mut Vector> = heads
                    .iter_mut()
                    .zip(cluster_ids)
                    .filter(|(_, &c)| c == k)
                    .map(|(h, _)| h)
                    .collect();
                project(&mut b2[k], &mut hs, opts.norm_bound_c);
            }
            if opts.norm_bound_c.is_some() {
                sse[k] = cluster_sse(k, &b2[k], &heads);
            }
            loss = total(&sse);
            trace.push(TraceEntry { round, step: TraceStep::Projection { layer: 1 }, loss, cluster: Some(k) });
        }
        loss = loss_of(&b1, &b2, &heads);

        let rep: Vec<RepTask> = tasks
            .iter()
            .zip(&heads)
            .zip(cluster_ids)
            .map(|((task, h), &k)| RepTask { z: &task.x, y: &task.y, g: b2[k].tr_mul(h) })
            .collect();
        let w = replsq::solve(&rep, grams.as_ref(), &b1.transpose(), &ls);
        let candidate = w.transpose();
        let new_loss = loss_of(&candidate, &b2, &heads);
        if accept(loss, new_loss, opts.ridge) {
            b1 = candidate;
            loss = new_loss;
        }
        trace.push(TraceEntry { round, step: TraceStep::Representation { layer: 0 }, loss, cluster: None });

        // B2^k B1 = (B2^k R1^T) Q1, so the first-layer factor moves into layer two
        // and the second-layer factor into the heads.
        let (q1, r1) = orthonormalize_rows(&b1);
        if q1.iter().chain(r1.iter()).all(|v| v.is_finite()) {
            b1 = q1;
            for (k, m) in b2.iter_mut().enumerate() {
                *m = &*m * r1.transpose();
                let mut hs: Vec<&mut Vector> = heads
                    .iter_mut()
                    .zip(cluster_ids)
                    .filter(|(_, &c)| c == k)
                    .map(|(h, _)| h)
                    .collect();
                project(m, &mut hs, opts.norm_bound_c);
            }
        }
        if let Some(c) = opts.norm_bound_c {
            b1 = clamp_operator_norm(&b1, c);
        }
        z1 = first_layer_features(&b1);
        loss = loss_of(&b1, &b2, &heads);
        trace.push(TraceEntry { round, step: TraceStep::Projection { layer: 0 }, loss, cluster: None });

        if loss <= opts.abs_tol || relative_gain(round_start, loss) < opts.tol {
            break;
        }
    }
    let cfg = SupernetConfig::hierarchical(p, big_r, r, members.len())?;
    let net = Supernet::new(cfg, vec![vec![b1], b2])?;
    let pathways = cluster_ids.iter().map(|&k| Pathway::new(vec![0, k])).collect();
    let mut sol = MtlSolution::new(net, heads, pathways, MtlMethod::Multipath)?;
    sol.iterations_run = rounds;
    sol.final_train_loss = loss;
    sol.trace = trace;
    Ok(sol)
}

/// Per-task minimum-norm least squares, encoded as one `1 x p` module per
/// task holding the estimate and a unit scalar head.
pub fn solve_individual(bundle: &TaskBundle) -> Result<MtlSolution> {
    let p = check_bundle(bundle)?;
    let thetas: Vec<Vector> = bundle
        .tasks
        .par_iter()
        .map(|task| pinv_solve_unchecked(&task.x, &task.y))
        .collect();
    let t = thetas.len();
    let modules = thetas.iter().map(|th| Mat::from_row_slice(1, p, th.as_slice())).collect();
    let cfg = SupernetConfig::single_layer(p, 1, t)?;
    let net = Supernet::new(cfg, vec![modules])?;
    let heads = vec![Vector::from_element(1, 1.0); t];
    let pathways = (0..t).map(|i| Pathway::new(vec![i])).collect();
    let mut sol = MtlSolution::new(net, heads, pathways, MtlMethod::Individual)?;
    sol.final_train_loss = mean_loss(&bundle.tasks, &thetas);
    Ok(sol)
}
