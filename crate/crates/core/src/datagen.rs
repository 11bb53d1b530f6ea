//! Synthetic ground truth and datasets.
//!
//! * the two-layer hierarchical model (shared `R x p` layer, `K` cluster
//!   modules of size `r x R`, unit heads),
//! * within-cluster head correlation,
//! * the two-orthogonal-subspace majority/minority model,
//! * the four-subspace construction whose pathway-swapped MTL solution is
//!   perfect on the sources but poor for transfer.
//!
//! All randomness flows through [`crate::rng::substream`], keyed by
//! `(seed, domain, index)`. Features and noise of task `t` use their own
//! streams, so growing `N` extends a task's sample rather than redrawing it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{self, domain};
use crate::solvers::{MtlMethod, MtlSolution};
use crate::supernet::{Pathway, Supernet, SupernetConfig};
use crate::{Mat, Vector};

/// Planted supernet, unit heads and pathways; `theta[t] = B_{alpha_t}^T h_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TruthWire")]
pub struct GroundTruth {
    net: Supernet,
    #[serde(with = "crate::wire::vectors")]
    heads: Vec<Vector>,
    pathways: Vec<Pathway>,
    #[serde(with = "crate::wire::vectors")]
    theta: Vec<Vector>,
}

#[derive(Deserialize)]
struct TruthWire {
    net: Supernet,
    #[serde(with = "crate::wire::vectors")]
    heads: Vec<Vector>,
    pathways: Vec<Pathway>,
}

impl TryFrom<TruthWire> for GroundTruth {
    type Error = Error;
    fn try_from(w: TruthWire) -> Result<Self> {
        GroundTruth::new(w.net, w.heads, w.pathways)
    }
}

impl GroundTruth {
    pub fn new(net: Supernet, heads: Vec<Vector>, pathways: Vec<Pathway>) -> Result<Self> {
        if heads.len() != pathways.len() {
            return Err(Error::DimensionMismatch {
                context: "ground truth",
                expected: format!("{} pathways", heads.len()),
                found: format!("{}", pathways.len()),
            });
        }
        let theta = heads
            .iter()
            .zip(&pathways)
            .map(|(h, a)| net.predictor(a, h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            net,
            heads,
            pathways,
            theta,
        })
    }

    pub fn net(&self) -> &Supernet {
        &self.net
    }

    pub fn heads(&self) -> &[Vector] {
        &self.heads
    }

    pub fn pathways(&self) -> &[Pathway] {
        &self.pathways
    }

    pub fn theta(&self) -> &[Vector] {
        &self.theta
    }

    pub fn num_tasks(&self) -> usize {
        self.heads.len()
    }

    /// Last-layer module index of each task, i.e. its cluster in the
    /// hierarchical model.
    pub fn cluster_ids(&self) -> Vec<usize> {
        self.pathways
            .iter()
            .map(|a| *a.choices().last().expect("pathways are nonempty"))
            .collect()
    }

    /// `T x p` matrix whose rows are the task vectors.
    pub fn theta_matrix(&self) -> Mat {
        let p = self.net.config().input_dim();
        Mat::from_fn(self.theta.len(), p, |t, j| self.theta[t][j])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Samples of one task: rows of `x` are inputs, `y` the responses.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    pub x: Mat,
    pub y: Vector,
    pub noise_sigma: f64,
}

impl TaskDataset {
    pub fn new(x: Mat, y: Vector, noise_sigma: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "task dataset",
                expected: format!("{} responses", x.nrows()),
                found: format!("{}", y.len()),
            });
        }
        Ok(Self { x, y, noise_sigma })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// First `n` samples.
    pub fn prefix(&self, n: usize) -> TaskDataset {
        let n = n.min(self.len());
        TaskDataset {
            x: self.x.rows(0, n).into_owned(),
            y: self.y.rows(0, n).into_owned(),
            noise_sigma: self.noise_sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskBundle {
    pub tasks: Vec<TaskDataset>,
    pub truth: Option<GroundTruth>,
    pub seed: u64,
}

impl TaskBundle {
    pub fn new(tasks: Vec<TaskDataset>, truth: Option<GroundTruth>, seed: u64) -> Result<Self> {
        if let Some(t) = &truth {
            if t.num_tasks() != tasks.len() {
                return Err(Error::DimensionMismatch {
                    context: "task bundle",
                    expected: format!("{} tasks (truth)", t.num_tasks()),
                    found: format!("{}", tasks.len()),
                });
            }
        }
        Ok(Self { tasks, truth, seed })
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.tasks.first().map(TaskDataset::dim)
    }

    /// Tasks at `indices`, in that order, with the truth restricted accordingly.
    pub fn subset(&self, indices: &[usize]) -> TaskBundle {
        let tasks = indices.iter().map(|&i| self.tasks[i].clone()).collect();
        let truth = self.truth.as_ref().map(|t| {
            GroundTruth::new(
                t.net.clone(),
                indices.iter().map(|&i| t.heads[i].clone()).collect(),
                indices.iter().map(|&i| t.pathways[i].clone()).collect(),
            )
            .expect("subset of a valid truth is valid")
        });
        TaskBundle {
            tasks,
            truth,
            seed: self.seed,
        }
    }

    /// Write `task_<t>.csv` (header `x_1,..,x_p,y`) per task, plus `truth.json` when present.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (t, task) in self.tasks.iter().enumerate() {
            let mut w = BufWriter::new(File::create(dir.join(format!("task_{t}.csv")))?);
            let header: Vec<String> = (1..=task.dim())
                .map(|j| format!("x_{j}"))
                .chain(["y".to_string()])
                .collect();
            writeln!(w, "{}", header.join(","))?;
            for i in 0..task.len() {
                let row: Vec<String> = task
                    .x
                    .row(i)
                    .iter()
                    .chain([task.y[i]].iter())
                    .map(|v| v.to_string())
                    .collect();
                writeln!(w, "{}", row.join(","))?;
            }
            w.flush()?;
        }
        if let Some(truth) = &self.truth {
            std::fs::write(dir.join("truth.json"), truth.to_json()?)?;
        }
        Ok(())
    }
}

/// Hierarchical model with `K` equal clusters of `tasks_per_cluster` tasks;
/// task `t` sits in cluster `t / tasks_per_cluster` with pathway `[0, k]`.
pub fn sample_hierarchical_truth(
    p: usize,
    big_r: usize,
    r: usize,
    k: usize,
    tasks_per_cluster: usize,
    seed: u64,
) -> Result<GroundTruth> {
    if !(1 <= r && r <= big_r && big_r <= p) {
        return Err(invalid(format!(
            "hierarchical model needs 1 <= r <= R <= p, got r={r}, R={big_r}, p={p}"
        )));
    }
    if k == 0 || tasks_per_cluster == 0 {
        return Err(invalid(
            "hierarchical model needs K >= 1 and at least one task per cluster",
        ));
    }
    let cfg = SupernetConfig::hierarchical(p, big_r, r, k)?;
    let b1 = rng::haar_orthonormal_rows(&mut rng::substream(seed, domain::SUPERNET, 0), big_r, p);
    let b2: Vec<Mat> = (0..k)
        .map(|c| {
            rng::haar_orthonormal_rows(
                &mut rng::substream(seed, domain::SUPERNET, 1 + c as u64),
                r,
                big_r,
            )
        })
        .collect();
    let net = Supernet::new(cfg, vec![vec![b1], b2])?;
    let total = k * tasks_per_cluster;
    let heads = (0..total)
        .map(|t| rng::unit_vector(&mut rng::substream(seed, domain::HEADS, t as u64), r))
        .collect();
    let pathways = (0..total)
        .map(|t| Pathway::new(vec![0, t / tasks_per_cluster]))
        .collect();
    GroundTruth::new(net, heads, pathways)
}

/// Mix each head with a fresh per-cluster anchor:
/// `h <- normalize(gamma a_k + (1 - gamma) h)`.
pub fn correlate_heads(truth: &GroundTruth, gamma: f64, seed: u64) -> Result<GroundTruth> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if truth.net.config().num_layers() != 2 {
        return Err(invalid(
            "head correlation needs the two-layer hierarchical model",
        ));
    }
    let k = truth.net.config().widths()[1];
    let r = truth.net.config().head_dim();
    let anchors: Vec<Vector> = (0..k)
        .map(|c| rng::unit_vector(&mut rng::substream(seed, domain::ANCHORS, c as u64), r))
        .collect();
    let heads = truth
        .heads
        .iter()
        .zip(truth.cluster_ids())
        .map(|(h, c)| {
            let mixed = &anchors[c] * gamma + h * (1.0 - gamma);
            let n = mixed.norm();
            if n > 0.0 {
                mixed / n
            } else {
                h.clone()
            }
        })
        .collect();
    GroundTruth::new(truth.net.clone(), heads, truth.pathways.clone())
}

/// Noisy linear samples `y = X theta + sigma z` for one task vector, drawn
/// from the feature/noise streams at `index`.
pub fn sample_task(theta: &Vector, n: usize, sigma: f64, seed: u64, index: u64) -> TaskDataset {
    let p = theta.len();
    let x = rng::gaussian_matrix(&mut rng::substream(seed, domain::FEATURES, index), n, p);
    let mut y = &x * theta;
    if sigma > 0.0 {
        let z = rng::gaussian_vector(&mut rng::substream(seed, domain::NOISE, index), n);
        y += z * sigma;
    }
    TaskDataset {
        x,
        y,
        noise_sigma: sigma,
    }
}

/// Gaussian-input datasets for every task of `truth`, `n_per_task[t]` samples each.
pub fn sample_datasets(
    truth: &GroundTruth,
    n_per_task: &[usize],
    sigma: f64,
    seed: u64,
) -> Result<TaskBundle> {
    if n_per_task.len() != truth.num_tasks() {
        return Err(Error::DimensionMismatch {
            context: "sample sizes",
            expected: format!("{} entries", truth.num_tasks()),
            found: format!("{}", n_per_task.len()),
        });
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!(
            "noise level must be finite and nonnegative, got {sigma}"
        )));
    }
    let tasks = truth
        .theta
        .iter()
        .zip(n_per_task)
        .enumerate()
        .map(|(t, (th, &n))| sample_task(th, n, sigma, seed, t as u64))
        .collect();
    TaskBundle::new(tasks, Some(truth.clone()), seed)
}

/// Majority/minority model: tasks on two orthogonal subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessInstance {
    /// `r x p`, majority subspace.
    pub b0: Mat,
    /// `r1 x p`, minority subspace.
    pub b1: Mat,
    /// Heads in the coordinates of the task's own subspace.
    pub heads: Vec<Vector>,
    pub theta: Vec<Vector>,
    /// 0 for majority tasks, 1 for minority tasks.
    pub groups: Vec<usize>,
}

impl FairnessInstance {
    pub fn t0(&self) -> usize {
        self.groups.iter().filter(|&&g| g == 0).count()
    }

    pub fn t1(&self) -> usize {
        self.groups.len() - self.t0()
    }

    fn covariance(&self, group: usize, dim: usize) -> Mat {
        let mut h = Mat::zeros(dim, dim);
        let mut count = 0;
        for (head, &g) in self.heads.iter().zip(&self.groups) {
            if g == group {
                h += head * head.transpose();
                count += 1;
            }
        }
        if count > 0 {
            h /= count as f64;
        }
        h
    }

    /// Majority head covariance `H0 = (1/T0) sum h h^T`.
    pub fn h0(&self) -> Mat {
        self.covariance(0, self.b0.nrows())
    }

    /// Minority head covariance; zero when there are no minority tasks.
    pub fn h1(&self) -> Mat {
        self.covariance(1, self.b1.nrows())
    }
}

/// First `t0` tasks on an `r`-dimensional subspace, last `t1` on an
/// orthogonal `r1`-dimensional one, unit heads.
pub fn sample_fairness_truth(
    p: usize,
    r: usize,
    r1: usize,
    t0: usize,
    t1: usize,
    seed: u64,
) -> Result<FairnessInstance> {
    if r == 0 || r1 == 0 || r + r1 > p {
        return Err(invalid(format!(
            "fairness model needs r, r1 >= 1 and r + r1 <= p, got r={r}, r1={r1}, p={p}"
        )));
    }
    if t1 == 0 || t0 < t1 {
        return Err(invalid(format!(
            "fairness model needs T0 >= T1 >= 1, got T0={t0}, T1={t1}"
        )));
    }
    let basis =
        rng::haar_orthonormal_rows(&mut rng::substream(seed, domain::SUPERNET, 0), r + r1, p);
    let b0 = basis.rows(0, r).into_owned();
    let b1 = basis.rows(r, r1).into_owned();
    let mut heads = Vec::with_capacity(t0 + t1);
    let mut theta = Vec::with_capacity(t0 + t1);
    let mut groups = Vec::with_capacity(t0 + t1);
    for t in 0..t0 + t1 {
        let (dim, b, g) = if t < t0 { (r, &b0, 0) } else { (r1, &b1, 1) };
        let h = rng::unit_vector(&mut rng::substream(seed, domain::HEADS, t as u64), dim);
        theta.push(b.tr_mul(&h));
        heads.push(h);
        groups.push(g);
    }
    Ok(FairnessInstance {
        b0,
        b1,
        heads,
        theta,
        groups,
    })
}

/// Four orthogonal `R`-dimensional source groups, the truthful two-module
/// supernet (groups 1,2 on module 1; groups 3,4 on module 2) and the swapped
/// zero-training-risk solution (groups 1,3 on module 1; groups 2,4 on module 2).
#[derive(Debug, Clone)]
pub struct AdversarialScenario {
    pub truth: GroundTruth,
    pub swapped: MtlSolution,
    /// `R x p` orthonormal basis of each group's subspace.
    pub subspaces: [Mat; 4],
    /// Group (0..4) of every task.
    pub groups: Vec<usize>,
}

pub fn sample_adversarial_scenario(
    p: usize,
    big_r: usize,
    tasks: usize,
    seed: u64,
) -> Result<AdversarialScenario> {
    if big_r == 0 || 4 * big_r > p {
        return Err(invalid(format!(
            "adversarial scenario needs 1 <= R and 4R <= p, got R={big_r}, p={p}"
        )));
    }
    if tasks % 4 != 0 || tasks / 4 < big_r {
        return Err(invalid(format!(
            "adversarial scenario needs T divisible by 4 and T/4 >= R, got T={tasks}"
        )));
    }
    let basis =
        rng::haar_orthonormal_rows(&mut rng::substream(seed, domain::SUPERNET, 0), 4 * big_r, p);
    let s: [Mat; 4] = std::array::from_fn(|i| basis.rows(i * big_r, big_r).into_owned());
    let stack = |a: &Mat, b: &Mat| {
        let mut m = Mat::zeros(2 * big_r, p);
        m.rows_mut(0, big_r).copy_from(a);
        m.rows_mut(big_r, big_r).copy_from(b);
        m
    };
    let cfg = SupernetConfig::single_layer(p, 2 * big_r, 2)?;
    let truth_net = Supernet::new(cfg.clone(), vec![vec![stack(&s[0], &s[1]), stack(&s[2], &s[3])]])?;
    let swapped_net = Supernet::new(cfg, vec![vec![stack(&s[0], &s[2]), stack(&s[1], &s[3])]])?;

    let per = tasks / 4;
    let groups: Vec<usize> = (0..tasks).map(|t| t / per).collect();
    let mut heads = Vec::with_capacity(tasks);
    let mut paths = Vec::with_capacity(tasks);
    let mut swapped_heads = Vec::with_capacity(tasks);
    let mut swapped_paths = Vec::with_capacity(tasks);
    for (t, &g) in groups.iter().enumerate() {
        let local = rng::unit_vector(&mut rng::substream(seed, domain::HEADS, t as u64), big_r);
        let theta = s[g].tr_mul(&local);
        let module = g / 2;
        heads.push(truth_net.module(0, module) * &theta);
        paths.push(Pathway::new(vec![module]));
        let swapped_module = g % 2;
        swapped_heads.push(swapped_net.module(0, swapped_module) * &theta);
        swapped_paths.push(Pathway::new(vec![swapped_module]));
    }
    let truth = GroundTruth::new(truth_net, heads, paths)?;
    let swapped = MtlSolution::new(swapped_net, swapped_heads, swapped_paths, MtlMethod::Cluster)?;
    Ok(AdversarialScenario {
        truth,
        swapped,
        subspaces: s,
        groups,
    })
}
