//! Population risks under isotropic Gaussian inputs, where excess risk is the
//! squared parameter error, and numeric checks of the generalization and
//! fairness results.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{FairnessInstance, GroundTruth};
use crate::error::{invalid, Error, Result};
use crate::numerics::{spectrum, top_eigvecs};
use crate::rng::{self, domain};
use crate::solvers::{MtlMethod, MtlSolution};
use crate::supernet::{dof, SupernetConfig};
use crate::{Mat, Vector};

/// Slack allowed on either side of the fairness inequalities.
pub const FAIRNESS_SLACK: f64 = 1e-8;
/// Default excess-risk margin for the no-harm comparison.
pub const NO_HARM_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub per_task: Vec<f64>,
    pub task_avg: f64,
    /// Mean excess risk of group 0 and group 1 tasks.
    pub group_risks: Option<(f64, f64)>,
    pub dof_bound: Option<f64>,
    pub notes: String,
}

/// `||theta_hat - theta_star||^2`: the excess population risk of a linear
/// predictor when inputs have identity covariance.
///
/// # Panics
/// If the lengths differ.
pub fn excess_risk(theta_hat: &Vector, theta_star: &Vector) -> f64 {
    assert_eq!(theta_hat.len(), theta_star.len(), "excess_risk needs equal dimensions");
    (theta_hat - theta_star).norm_squared()
}

/// Per-task excess risks of `sol` against the planted vectors.
pub fn report(sol: &MtlSolution, truth: &GroundTruth) -> Result<RiskReport> {
    if sol.num_tasks() != truth.num_tasks() {
        return Err(Error::DimensionMismatch {
            context: "risk report",
            expected: format!("{} tasks", truth.num_tasks()),
            found: format!("{}", sol.num_tasks()),
        });
    }
    let p = truth.net().config().input_dim();
    if sol.net.config().input_dim() != p {
        return Err(Error::DimensionMismatch {
            context: "risk report",
            expected: format!("input dimension {p}"),
            found: format!("{}", sol.net.config().input_dim()),
        });
    }
    let per_task: Vec<f64> = sol
        .predictors()
        .iter()
        .zip(truth.theta())
        .map(|(a, b)| excess_risk(a, b))
        .collect();
    Ok(RiskReport {
        task_avg: mean(&per_task),
        per_task,
        group_risks: None,
        dof_bound: None,
        notes: format!("method={}", sol.method),
    })
}

impl RiskReport {
    /// Split the average by a 0/1 group label per task.
    pub fn with_groups(mut self, groups: &[usize]) -> Result<Self> {
        if groups.len() != self.per_task.len() {
            return Err(Error::DimensionMismatch {
                context: "group labels",
                expected: format!("{} labels", self.per_task.len()),
                found: format!("{}", groups.len()),
            });
        }
        let pick = |g: usize| -> Vec<f64> {
            self.per_task.iter().zip(groups).filter(|(_, &l)| l == g).map(|(&r, _)| r).collect()
        };
        self.group_risks = Some((mean(&pick(0)), mean(&pick(1))));
        Ok(self)
    }

    pub fn with_dof_bound(mut self, bound: f64) -> Self {
        self.dof_bound = Some(bound);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Sum of the eigenvalues `lambda_i`, `i = ceil((d - q + 1)_+) ..= d`, with
/// eigenvalues in nonincreasing order (1-indexed).
pub fn tail(m: &Mat, q: f64) -> Result<f64> {
    let values = spectrum(m)?;
    let d = values.len();
    let start = (d as f64 - q + 1.0).max(0.0).ceil().max(1.0);
    if start > d as f64 {
        return Ok(0.0);
    }
    Ok(values.iter().skip(start as usize - 1).sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessCheck {
    /// Majority excess risk, weighted by `T0 / T`.
    pub r0: f64,
    /// Minority excess risk.
    pub r1: f64,
    pub bound0: f64,
    pub bound1: f64,
    pub xi: f64,
    pub big_xi: f64,
    /// Task-averaged excess risk of the population minimizer.
    pub objective: f64,
    /// Same objective for the representation equal to the majority subspace.
    pub majority_only_objective: f64,
    pub majority_ok: bool,
    pub minority_ok: bool,
}

/// Population minimizer of rank-`r` vanilla MTL on the majority/minority
/// model and both fairness inequalities evaluated on it.
pub fn fairness_check(inst: &FairnessInstance, r: usize) -> Result<FairnessCheck> {
    let p = inst.b0.ncols();
    let (t0, t1) = (inst.t0(), inst.t1());
    let t = (t0 + t1) as f64;
    if t0 == 0 {
        return Err(invalid("fairness check needs majority tasks"));
    }
    if r == 0 || r > p {
        return Err(invalid(format!("representation rank must lie in 1..={p}, got {r}")));
    }
    let h0 = inst.h0();
    let h1 = inst.h1();
    let s0 = spectrum(&h0)?;
    let xi = r as f64 * s0.min();
    let big_xi = r as f64 * s0.max();
    if xi <= 1e-12 * big_xi.max(f64::MIN_POSITIVE) {
        return Err(Error::AssumptionUnmet(format!(
            "majority task covariance is not positive definite (r * lambda_min = {xi:e})"
        )));
    }
    let w0 = t0 as f64 / t;
    let w1 = t1 as f64 / t;
    let target = inst.b0.tr_mul(&h0) * &inst.b0 * w0 + inst.b1.tr_mul(&h1) * &inst.b1 * w1;
    let target = (&target + target.transpose()) * 0.5;
    let b = top_eigvecs(&target, r)?;
    let proj = b.tr_mul(&b);
    let residual = |bk: &Mat, hk: &Mat| -> f64 {
        let pk = bk * &proj * bk.transpose();
        (hk * (Mat::identity(bk.nrows(), bk.nrows()) - pk)).trace()
    };
    let r0 = w0 * residual(&inst.b0, &h0);
    let r1 = if t1 > 0 { residual(&inst.b1, &h1) } else { 0.0 };
    let objective = r0 + w1 * r1;
    let bound0 = big_xi * t1 as f64 / (xi * t);
    let r1_dim = inst.b1.nrows() as f64;
    let bound1 = tail(&h1, r1_dim - r as f64 * t1 as f64 / (xi * t0 as f64))?;
    Ok(FairnessCheck {
        r0,
        r1,
        bound0,
        bound1,
        xi,
        big_xi,
        objective,
        majority_only_objective: w1 * h1.trace(),
        majority_ok: r0 <= bound0 + FAIRNESS_SLACK,
        minority_ok: r1 >= bound1 - FAIRNESS_SLACK,
    })
}

/// `sqrt(L DoF / (N T)) + sqrt(log|A| / N)` with all constants set to one.
pub fn dof_bound(config: &SupernetConfig, tasks: usize, n: usize, log_a: f64) -> Result<f64> {
    if tasks == 0 || n == 0 {
        return Err(invalid("dof bound needs T >= 1 and N >= 1"));
    }
    if log_a < 0.0 {
        return Err(invalid(format!("log |A| must be >= 0, got {log_a}")));
    }
    let l = config.num_layers() as f64;
    let nt = (n * tasks) as f64;
    Ok((l * dof(config, tasks) as f64 / nt).sqrt() + (log_a / n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
}

/// Monte Carlo Gaussian complexity of `{x -> B x : ||B||_op <= c}` with
/// `B` of size `d x p`, on `n` inputs of norm `radius`. The supremum over the
/// class is `c ||G^T X||_*`, so each trial is one nuclear norm. Inputs are
/// uniform directions drawn once per seed and held fixed across trials.
pub fn gaussian_complexity_linear(
    n: usize,
    d: usize,
    p: usize,
    c: f64,
    radius: f64,
    trials: usize,
    seed: u64,
) -> Result<ComplexityEstimate> {
    if n == 0 || d == 0 || p == 0 || trials == 0 {
        return Err(invalid("gaussian complexity needs n, d, p, trials >= 1"));
    }
    if c < 0.0 || radius < 0.0 {
        return Err(invalid("norm bounds must be nonnegative"));
    }
    let mut g = rng::substream(seed, domain::COMPLEXITY, u64::MAX);
    let mut x = Mat::zeros(n, p);
    for i in 0..n {
        x.set_row(i, &(rng::unit_vector(&mut g, p) * radius).transpose());
    }
    let draws: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let gm = rng::gaussian_matrix(&mut rng::substream(seed, domain::COMPLEXITY, k as u64), n, d);
            let m = gm.tr_mul(&x);
            c * m.singular_values().sum() / n as f64
        })
        .collect();
    let estimate = mean(&draws);
    let var = if trials > 1 {
        draws.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    Ok(ComplexityEstimate {
        estimate,
        std_error: (var / trials as f64).sqrt(),
        bound: c * radius * ((d * p) as f64 / n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoHarmReport {
    /// Whether the multipath solution interpolates its training data.
    pub precondition_met: bool,
    /// `(multipath, individual)` excess risk per task.
    pub pairs: Vec<(f64, f64)>,
    pub margin: f64,
    /// Fraction of tasks where multipath is worse by more than `margin`;
    /// absent when the precondition fails.
    pub violation_fraction: Option<f64>,
    pub note: String,
}

/// Compare per-task risks of an interpolating multipath solution with
/// individually trained tasks.
pub fn no_harm_check(
    multipath: &MtlSolution,
    individual: &MtlSolution,
    truth: &GroundTruth,
    interpolation_tol: f64,
    margin: f64,
) -> Result<NoHarmReport> {
    if individual.method != MtlMethod::Individual {
        return Err(Error::WrongMethod {
            expected: MtlMethod::Individual.to_string(),
            found: individual.method.to_string(),
        });
    }
    let a = report(multipath, truth)?;
    let b = report(individual, truth)?;
    let pairs: Vec<(f64, f64)> = a.per_task.into_iter().zip(b.per_task).collect();
    if multipath.final_train_loss > interpolation_tol {
        return Ok(NoHarmReport {
            precondition_met: false,
            pairs,
            margin,
            violation_fraction: None,
            note: format!(
                "lemma precondition unmet: train loss {:e} > {:e}",
                multipath.final_train_loss, interpolation_tol
            ),
        });
    }
    let violations = pairs.iter().filter(|(m, i)| *m > *i + margin).count();
    Ok(NoHarmReport {
        precondition_met: true,
        violation_fraction: Some(violations as f64 / pairs.len().max(1) as f64),
        pairs,
        margin,
        note: String::new(),
    })
}
