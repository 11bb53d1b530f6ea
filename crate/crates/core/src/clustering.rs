//! Recovering cluster assignments when pathways are unknown: per-task vector
//! estimates from a vanilla fit, K-means on those vectors, and accuracy up to
//! relabeling.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{invalid, Error, Result};
use crate::numerics::{kmeans, KMEANS_RESTARTS};
use crate::solvers::{MtlMethod, MtlSolution};
use crate::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignments: Vec<usize>,
    /// Accuracy against the true assignment, once scored.
    pub accuracy: Option<f64>,
    /// Pairwise Euclidean distances between task vectors.
    pub distance_matrix: Mat,
}

impl ClusteringResult {
    /// Score against `truth` and store the accuracy.
    pub fn score(&mut self, truth: &[usize]) -> Result<f64> {
        let acc = clustering_accuracy(&self.assignments, truth)?;
        self.accuracy = Some(acc);
        Ok(acc)
    }
}

/// Rows `theta_t = B^T h_t` of a vanilla solution, as a `T x p` matrix.
pub fn estimate_task_vectors(sol: &MtlSolution) -> Result<Mat> {
    if sol.method != MtlMethod::Vanilla {
        return Err(Error::WrongMethod {
            expected: MtlMethod::Vanilla.to_string(),
            found: sol.method.to_string(),
        });
    }
    let p = sol.net.config().input_dim();
    let mut out = Mat::zeros(sol.num_tasks(), p);
    for (t, theta) in sol.predictors().iter().enumerate() {
        out.set_row(t, &theta.transpose());
    }
    Ok(out)
}

pub fn distance_matrix(points: &Mat) -> Mat {
    let t = points.nrows();
    let mut d = Mat::zeros(t, t);
    for i in 0..t {
        for j in (i + 1)..t {
            let v = (points.row(i) - points.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// K-means on the rows of `theta_hat`.
pub fn cluster_tasks(theta_hat: &Mat, k: usize, seed: u64) -> Result<ClusteringResult> {
    let fit = kmeans(theta_hat, k, seed, KMEANS_RESTARTS)?;
    Ok(ClusteringResult {
        assignments: fit.assignments,
        accuracy: None,
        distance_matrix: distance_matrix(theta_hat),
    })
}

/// Fraction of tasks labeled correctly under the best one-to-one matching of
/// predicted to true labels.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "clustering_accuracy",
            expected: format!("{} labels", truth.len()),
            found: format!("{}", pred.len()),
        });
    }
    if pred.is_empty() {
        return Err(invalid("clustering accuracy of zero tasks"));
    }
    let k = pred.iter().chain(truth).max().map_or(0, |m| m + 1);
    let mut counts = vec![0i64; k * k];
    for (&a, &b) in pred.iter().zip(truth) {
        counts[a * k + b] += 1;
    }
    let weights = Matrix::from_vec(k, k, counts).expect("k x k contingency table");
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}
