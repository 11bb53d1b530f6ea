//! Transfer with an optimal pathway: freeze a trained supernet, then pick the
//! pathway and fit the head for a new target task.

use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::{sample_task, GroundTruth, TaskDataset};
use crate::error::{invalid, Error, Result};
use crate::numerics::{pinv_least_squares, quartiles, row_space_projector};
use crate::rng::{self, domain};
use crate::supernet::{enumerate_pathways, Pathway, Supernet, DEFAULT_PATHWAY_CAP};
use crate::{Mat, Vector};
use rand::Rng;

/// Empirical risks within this relative margin of the best are ties.
const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub pathway: Pathway,
    pub head: Vector,
    /// Mean squared residual on the target sample.
    pub empirical_risk: f64,
    /// `||B^T h - theta_T||^2`, set by [`TransferResult::with_truth`].
    pub excess_risk: Option<f64>,
    pub bias_estimate: Option<f64>,
    /// Empirical risk of every pathway, in lexicographic pathway order.
    pub candidates: Vec<(Pathway, f64)>,
}

impl TransferResult {
    /// Fill in the excess risk and supernet bias against a known target vector.
    pub fn with_truth(mut self, net: &Supernet, theta_target: &Vector) -> Result<Self> {
        let theta_hat = net.predictor(&self.pathway, &self.head)?;
        if theta_hat.len() != theta_target.len() {
            return Err(Error::DimensionMismatch {
                context: "target vector",
                expected: format!("length {}", theta_hat.len()),
                found: format!("length {}", theta_target.len()),
            });
        }
        self.excess_risk = Some((theta_hat - theta_target).norm_squared());
        self.bias_estimate = Some(supernet_bias(net, theta_target, 0.0)?);
        Ok(self)
    }
}

/// Every pathway with its composed representation, lexicographic order.
pub fn composed_pathways(net: &Supernet) -> Result<Vec<(Pathway, Mat)>> {
    enumerate_pathways(net.config(), DEFAULT_PATHWAY_CAP)?
        .into_iter()
        .map(|a| {
            let b = net.compose(&a)?;
            Ok((a, b))
        })
        .collect()
}

/// Exhaustive search over pathways of the frozen `net`; the head for each
/// pathway is the minimum-norm least-squares fit on features `X B_alpha^T`.
pub fn tlop_fit(net: &Supernet, target: &TaskDataset) -> Result<TransferResult> {
    tlop_fit_composed(&composed_pathways(net)?, target)
}

/// [`tlop_fit`] with the pathway products computed once up front.
pub fn tlop_fit_composed(composed: &[(Pathway, Mat)], target: &TaskDataset) -> Result<TransferResult> {
    if target.is_empty() {
        return Err(invalid("transfer target has no samples"));
    }
    let p = composed.first().map_or(0, |(_, b)| b.ncols());
    if target.dim() != p {
        return Err(Error::DimensionMismatch {
            context: "transfer target",
            expected: format!("{p} features"),
            found: format!("{}", target.dim()),
        });
    }
    let m = target.len() as f64;
    let fits = composed
        .iter()
        .map(|(a, b)| {
            let feats = &target.x * b.transpose();
            let head = pinv_least_squares(&feats, &target.y)?;
            let risk = (&target.y - feats * &head).norm_squared() / m;
            Ok((a.clone(), head, risk))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = fits.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
    let scale = target.y.norm_squared() / m;
    let margin = TIE_RTOL * scale.max(best);
    let (pathway, head, empirical_risk) = fits
        .iter()
        .find(|f| f.2 <= best + margin)
        .cloned()
        .ok_or_else(|| invalid("supernet has no pathways"))?;
    Ok(TransferResult {
        pathway,
        head,
        empirical_risk,
        excess_risk: None,
        bias_estimate: None,
        candidates: fits.into_iter().map(|(a, _, r)| (a, r)).collect(),
    })
}

/// Smallest squared distance from `theta_target` to a pathway's row space,
/// less `optimal_risk` (the excess of the best achievable predictor, 0 for a
/// realizable target).
pub fn supernet_bias(net: &Supernet, theta_target: &Vector, optimal_risk: f64) -> Result<f64> {
    let composed = composed_pathways(net)?;
    Ok(bias_composed(&composed, theta_target) - optimal_risk)
}

fn bias_composed(composed: &[(Pathway, Mat)], theta: &Vector) -> f64 {
    composed
        .iter()
        .map(|(_, b)| (theta - row_space_projector(b) * theta).norm_squared())
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub m: usize,
    pub mean: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Mean supernet bias of the drawn targets.
    pub mean_bias: f64,
    /// Per-target excess risks, in draw order.
    pub excess: Vec<f64>,
}

/// Excess transfer risk of `net` against fresh targets drawn from `truth`:
/// a uniformly chosen source pathway and a uniform unit head. Target `j` uses
/// the same vector and feature stream at every `M`, so larger `M` extends the
/// sample.
pub fn transfer_sweep(
    net: &Supernet,
    truth: &GroundTruth,
    m_grid: &[usize],
    targets_per_point: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if net.config().input_dim() != truth.net().config().input_dim() {
        return Err(Error::DimensionMismatch {
            context: "transfer sweep",
            expected: format!("input dimension {}", truth.net().config().input_dim()),
            found: format!("{}", net.config().input_dim()),
        });
    }
    if m_grid.contains(&0) {
        return Err(invalid("transfer sample sizes must be positive"));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(invalid(format!("noise level must be finite and >= 0, got {sigma}")));
    }
    let mut sources: Vec<Pathway> = truth.pathways().to_vec();
    sources.sort();
    sources.dedup();
    let composed = composed_pathways(net)?;
    let targets: Vec<Vector> = (0..targets_per_point)
        .map(|j| {
            let mut g = rng::substream(seed, domain::TARGETS, j as u64);
            let path = &sources[g.gen_range(0..sources.len())];
            let b = truth.net().compose(path)?;
            Ok(b.tr_mul(&rng::unit_vector(&mut g, b.nrows())))
        })
        .collect::<Result<_>>()?;
    let bias: Vec<f64> = targets.par_iter().map(|th| bias_composed(&composed, th)).collect();
    let mean_bias = bias.iter().sum::<f64>() / bias.len().max(1) as f64;
    m_grid
        .iter()
        .map(|&m| {
            let excess = targets
                .par_iter()
                .enumerate()
                .map(|(j, th)| {
                    let data = sample_task(th, m, sigma, seed, j as u64);
                    let fit = tlop_fit_composed(&composed, &data)?;
                    let (_, b) = composed
                        .iter()
                        .find(|(a, _)| *a == fit.pathway)
                        .expect("chosen pathway comes from the table");
                    Ok((b.tr_mul(&fit.head) - th).norm_squared())
                })
                .collect::<Result<Vec<f64>>>()?;
            let (q1, median, q3) = quartiles(&excess);
            Ok(SweepPoint {
                m,
                mean: excess.iter().sum::<f64>() / excess.len().max(1) as f64,
                q1,
                median,
                q3,
                mean_bias,
                excess,
            })
        })
        .collect()
}
