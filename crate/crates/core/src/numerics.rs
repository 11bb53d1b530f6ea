//! Dense linear-algebra and clustering kernels shared by every other module.
//!
//! Problem sizes in this crate are at most a few hundred dimensions, so
//! everything is dense and direct.

use nalgebra::SymmetricEigen;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, StreamRng};
use crate::{Mat, Vector};
use rand::Rng;

/// Relative singular-value cutoff for pseudo-inverses.
pub const PINV_RCOND: f64 = 1e-10;
/// Absolute-relative tolerance for the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Smallest eigenvalue allowed for a "PSD within tolerance" matrix, relative to the largest.
pub const PSD_TOL: f64 = 1e-9;

pub(crate) fn ensure_finite_mat(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_finite_vec(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Minimum-norm least-squares solution `X^+ y`.
///
/// Rank-deficient and underdetermined designs are fine; singular values below
/// `PINV_RCOND * sigma_max` are treated as zero.
pub fn pinv_least_squares(x: &Mat, y: &Vector) -> Result<Vector> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(invalid(format!("least squares needs a nonempty design, got {n}x{p}")));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "pinv_least_squares",
            expected: format!("y of length {n}"),
            found: format!("length {}", y.len()),
        });
    }
    ensure_finite_mat(x, "design matrix")?;
    ensure_finite_vec(y, "response vector")?;
    Ok(pinv_solve_unchecked(x, y))
}

pub(crate) fn pinv_solve_unchecked(x: &Mat, y: &Vector) -> Vector {
    let p = x.ncols();
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return Vector::zeros(p);
    }
    let cutoff = PINV_RCOND * smax;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = Vector::zeros(p);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = u.column(i).dot(y) / s;
            out += vt.row(i).transpose() * coef;
        }
    }
    out
}

fn check_symmetric(m: &Mat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "symmetric matrix",
            expected: "square".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    ensure_finite_mat(m, "symmetric matrix")?;
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Eigenpairs sorted by nonincreasing eigenvalue; eigenvectors are columns
/// with the largest-magnitude component made positive.
pub(crate) fn sorted_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Mat::zeros(d, d);
    for (j, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        fix_sign(&mut col);
        vectors.set_column(j, &col);
    }
    (values, vectors)
}

fn fix_sign(v: &mut Vector) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Top-`k` eigenvectors of a symmetric matrix, returned as the rows of a
/// `k x d` matrix in order of nonincreasing eigenvalue.
pub fn top_eigvecs(m: &Mat, k: usize) -> Result<Mat> {
    check_symmetric(m)?;
    let d = m.nrows();
    if k == 0 || k > d {
        return Err(invalid(format!("top_eigvecs needs 1 <= k <= {d}, got k = {k}")));
    }
    let (_, vectors) = sorted_eigen(m);
    Ok(vectors.columns(0, k).transpose())
}

/// Eigenvalues of a symmetric PSD matrix in nonincreasing order.
pub fn spectrum(m: &Mat) -> Result<Vector> {
    check_symmetric(m)?;
    let (values, _) = sorted_eigen(m);
    let top = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(&min) = values.last() {
        if min < -PSD_TOL * top {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    Ok(Vector::from_vec(values))
}

/// Orthonormalize the rows of `b` (`m x d`, `m <= d`).
///
/// Returns `(q, r)` with `q` having orthonormal rows and `b = r^T q`, so a
/// head `h` acting on `b` is carried over exactly as `r h` on `q`.
pub fn orthonormalize_rows(b: &Mat) -> (Mat, Mat) {
    let (m, d) = b.shape();
    debug_assert!(m <= d);
    let qr = b.transpose().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..m {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q.transpose(), r)
}

/// Largest singular value.
pub fn operator_norm(b: &Mat) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    b.clone().svd(false, false).singular_values.max()
}

/// Clamp singular values to at most `c`; a no-op when already feasible.
pub fn clamp_operator_norm(b: &Mat, c: f64) -> Mat {
    if operator_norm(b) <= c {
        return b.clone();
    }
    let mut svd = b.clone().svd(true, true);
    for s in svd.singular_values.iter_mut() {
        *s = s.min(c);
    }
    svd.recompose().expect("u and v_t were computed")
}

/// Orthogonal projector `B^T (B B^T)^+ B` onto the row space of `b`.
pub fn row_space_projector(b: &Mat) -> Mat {
    let d = b.ncols();
    if b.nrows() == 0 {
        return Mat::zeros(d, d);
    }
    let svd = b.clone().svd(false, true);
    let smax = svd.singular_values.max();
    let vt = svd.v_t.expect("v_t requested");
    let mut p = Mat::zeros(d, d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax > 0.0 && s > PINV_RCOND * smax {
            let v = vt.row(i).transpose();
            p += &v * v.transpose();
        }
    }
    p
}

/// Solve `A w = b` for symmetric PSD `A`.
///
/// Cholesky when `A` is comfortably positive definite, otherwise the
/// minimum-norm solution through the eigen-decomposition.
pub fn solve_psd(a: &Mat, b: &Vector) -> Vector {
    let diag_max = a.diagonal().max();
    if diag_max <= 0.0 {
        return Vector::zeros(b.len());
    }
    if let Some(ch) = a.clone().cholesky() {
        let l = ch.l_dirty();
        let min_pivot = (0..a.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot > 1e-10 * diag_max {
            return ch.solve(b);
        }
    }
    let eig = SymmetricEigen::new((a + a.transpose()) * 0.5);
    let lmax = eig.eigenvalues.max();
    let cutoff = PINV_RCOND * lmax;
    let mut out = Vector::zeros(b.len());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > cutoff {
            let v = eig.eigenvectors.column(i);
            out += v * (v.dot(b) / l);
        }
    }
    out
}

/// Linearly interpolated quantile (`q` in `[0, 1]`) of unsorted values;
/// NaN for an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// `(q1, median, q3)`.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    (quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75))
}

/// Result of a K-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignments: Vec<usize>,
    /// `K x d`, row `k` is the centroid of cluster `k`.
    pub centroids: Mat,
    /// Within-cluster sum of squares.
    pub inertia: f64,
    pub iterations: usize,
}

pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_RESTARTS: usize = 10;

/// K-means with k-means++ seeding, best of `restarts` by within-cluster sum
/// of squares. Rows of `points` are the observations.
pub fn kmeans(points: &Mat, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let (t, d) = points.shape();
    if k == 0 {
        return Err(invalid("kmeans needs K >= 1"));
    }
    if k > t {
        return Err(invalid(format!("kmeans needs K <= number of points, got K = {k} > {t}")));
    }
    ensure_finite_mat(points, "kmeans points")?;
    let rows: Vec<Vec<f64>> = (0..t).map(|i| points.row(i).iter().copied().collect()).collect();
    let mut best: Option<KMeansFit> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = rng::substream(seed, rng::domain::KMEANS, restart as u64);
        let fit = lloyd(&rows, d, k, &mut rng);
        if best.as_ref().map_or(true, |b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    Ok(relocate(&rows, d, k, best.expect("at least one restart")))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Greedy k-means++: each new center is the best of `2 + ln K` candidates
/// drawn proportionally to squared distance, judged by the resulting potential.
fn plus_plus_seeds(rows: &[Vec<f64>], k: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let t = rows.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut centers = vec![rows[rng.gen_range(0..t)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut best_idx = 0;
        for _ in 0..trials {
            let idx = if total > 0.0 {
                let mut u = rng.gen::<f64>() * total;
                let mut pick = t - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if u < w {
                        pick = i;
                        break;
                    }
                    u -= w;
                }
                pick
            } else {
                rng.gen_range(0..t)
            };
            let next: Vec<f64> = d2.iter().zip(rows).map(|(&di, r)| di.min(sq_dist(r, &rows[idx]))).collect();
            let potential: f64 = next.iter().sum();
            if best.as_ref().map_or(true, |(p, _)| potential < *p) {
                best = Some((potential, next));
                best_idx = idx;
            }
        }
        d2 = best.expect("at least one trial").1;
        centers.push(rows[best_idx].clone());
    }
    centers
}

fn nearest(rows: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    rows.iter()
        .map(|r| {
            let mut best = (0, f64::INFINITY);
            for (j, c) in centers.iter().enumerate() {
                let dist = sq_dist(r, c);
                if dist < best.1 {
                    best = (j, dist);
                }
            }
            best
        })
        .unzip()
}

fn means(rows: &[Vec<f64>], assign: &[usize], k: usize, d: usize, old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (r, &a) in rows.iter().zip(assign) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(r) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(j, (s, c))| {
            if c == 0 {
                old[j].clone()
            } else {
                s.into_iter().map(|v| v / c as f64).collect()
            }
        })
        .collect()
}

/// Move the farthest points of multi-member clusters into empty clusters.
fn fill_empty(assign: &mut [usize], dist: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    for &a in assign.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let candidate = (0..assign.len())
            .filter(|&i| counts[assign[i]] > 1 && dist[i] > 0.0)
            .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
        if let Some(i) = candidate {
            counts[assign[i]] -= 1;
            counts[empty] += 1;
            assign[i] = empty;
            dist[i] = 0.0;
        }
    }
}

fn inertia(rows: &[Vec<f64>], assign: &[usize], centers: &[Vec<f64>]) -> f64 {
    rows.iter().zip(assign).map(|(r, &a)| sq_dist(r, &centers[a])).sum()
}

fn lloyd(rows: &[Vec<f64>], d: usize, k: usize, rng: &mut StreamRng) -> KMeansFit {
    let centers = plus_plus_seeds(rows, k, rng);
    lloyd_from(rows, d, k, centers)
}

fn lloyd_from(rows: &[Vec<f64>], d: usize, k: usize, mut centers: Vec<Vec<f64>>) -> KMeansFit {
    let (mut assign, mut dist) = nearest(rows, &centers);
    let mut last_obj = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..KMEANS_MAX_ITER {
        iterations = it + 1;
        fill_empty(&mut assign, &mut dist, k);
        centers = means(rows, &assign, k, d, &centers);
        let obj = inertia(rows, &assign, &centers);
        debug_assert!(obj <= last_obj * (1.0 + 1e-12) + 1e-12, "k-means objective increased after update step");
        let (next, next_dist) = nearest(rows, &centers);
        let next_obj: f64 = next_dist.iter().sum();
        debug_assert!(next_obj <= obj * (1.0 + 1e-12) + 1e-12, "k-means objective increased after assignment step");
        last_obj = next_obj;
        if next == assign {
            break;
        }
        assign = next;
        dist = next_dist;
    }
    let centers = means(rows, &assign, k, d, &centers);
    let inertia = inertia(rows, &assign, &centers);
    let centroids = Mat::from_fn(k, d, |i, j| centers[i][j]);
    KMeansFit {
        assignments: assign,
        centroids,
        inertia,
        iterations,
    }
}

/// Number of high-error clusters tried as split targets per relocation pass.
const RELOCATION_CANDIDATES: usize = 50;
const RELOCATION_DROPS: usize = 3;
const RELOCATION_MAX_MOVES: usize = 200;

/// Escape merge/split local minima of Lloyd's algorithm: drop the centroid
/// whose removal costs least, re-seed it at the worst-fit point of a
/// high-error cluster, rerun Lloyd, and keep the result only if the objective
/// drops. Stops when no candidate improves.
fn relocate(rows: &[Vec<f64>], d: usize, k: usize, mut fit: KMeansFit) -> KMeansFit {
    if k < 2 {
        return fit;
    }
    for _ in 0..RELOCATION_MAX_MOVES {
        let centers: Vec<Vec<f64>> = (0..k).map(|j| fit.centroids.row(j).iter().copied().collect()).collect();
        let mut sse = vec![0.0; k];
        let mut removal = vec![0.0; k];
        let mut counts = vec![0usize; k];
        let mut worst: Vec<Option<(usize, f64)>> = vec![None; k];
        for (i, r) in rows.iter().enumerate() {
            let own = fit.assignments[i];
            let d_own = sq_dist(r, &centers[own]);
            let d_other = (0..k)
                .filter(|&j| j != own)
                .map(|j| sq_dist(r, &centers[j]))
                .fold(f64::INFINITY, f64::min);
            sse[own] += d_own;
            removal[own] += d_other - d_own;
            counts[own] += 1;
            if worst[own].map_or(true, |(_, w)| d_own > w) {
                worst[own] = Some((i, d_own));
            }
        }
        let mut split: Vec<usize> = (0..k).filter(|&j| counts[j] >= 2).collect();
        split.sort_by(|&a, &b| sse[b].total_cmp(&sse[a]).then(a.cmp(&b)));
        let mut drops: Vec<usize> = (0..k).collect();
        drops.sort_by(|&a, &b| removal[a].total_cmp(&removal[b]).then(a.cmp(&b)));
        let mut accepted = None;
        'search: for &s in split.iter().take(RELOCATION_CANDIDATES) {
            for &drop in drops.iter().filter(|&&j| j != s).take(RELOCATION_DROPS) {
                let (far, _) = worst[s].expect("cluster has members");
                let mut trial = centers.clone();
                trial[drop] = rows[far].clone();
                let cand = lloyd_from(rows, d, k, trial);
                if cand.inertia < fit.inertia * (1.0 - 1e-12) {
                    accepted = Some(cand);
                    break 'search;
                }
            }
        }
        match accepted {
            Some(better) => fit = better,
            None => break,
        }
    }
    fit
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quartiles(&v), (1.75, 2.5, 3.25));
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn pinv_identity_design() {
        let th = pinv_least_squares(&Mat::identity(2, 2), &Vector::from_vec(vec![3.0, 4.0])).unwrap();
        assert_relative_eq!(th, Vector::from_vec(vec![3.0, 4.0]), epsilon = 1e-14);
    }

    #[test]
    fn pinv_overdetermined_mean() {
        let x = Mat::from_row_slice(2, 1, &[1.0, 1.0]);
        let th = pinv_least_squares(&x, &Vector::from_vec(vec![1.0, 3.0])).unwrap();
        assert_relative_eq!(th[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn pinv_underdetermined_min_norm() {
        let x = Mat::from_row_slice(1, 2, &[1.0, 1.0]);
        let th = pinv_least_squares(&x, &Vector::from_vec(vec![2.0])).unwrap();
        assert_relative_eq!(th, Vector::from_vec(vec![1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn pinv_rejects_mismatch_and_accepts_rank_deficiency() {
        let x = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            pinv_least_squares(&x, &Vector::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let th = pinv_least_squares(&x, &Vector::from_vec(vec![1.0, 2.0])).unwrap();
        // min-norm solution of x1 + 2 x2 = 1
        assert_relative_eq!(th, Vector::from_vec(vec![0.2, 0.4]), epsilon = 1e-12);
    }

    #[test]
    fn top_eigvecs_diagonal_and_2x2() {
        let m = Mat::from_diagonal(&Vector::from_vec(vec![3.0, 2.0, 1.0]));
        let u = top_eigvecs(&m, 2).unwrap();
        let p = u.transpose() * &u;
        let expect = Mat::from_diagonal(&Vector::from_vec(vec![1.0, 1.0, 0.0]));
        assert_relative_eq!(p, expect, epsilon = 1e-12);

        let m = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let u = top_eigvecs(&m, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_relative_eq!(u, Mat::from_row_slice(1, 2, &[s, s]), epsilon = 1e-12);
    }

    #[test]
    fn top_eigvecs_errors() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(top_eigvecs(&m, 1), Err(Error::NotSymmetric { .. })));
        assert!(top_eigvecs(&Mat::identity(2, 2), 3).is_err());
        assert!(top_eigvecs(&Mat::identity(2, 2), 0).is_err());
    }

    #[test]
    fn spectrum_examples() {
        let m = Mat::from_diagonal(&Vector::from_vec(vec![1.0, 5.0, 3.0]));
        assert_relative_eq!(spectrum(&m).unwrap(), Vector::from_vec(vec![5.0, 3.0, 1.0]), epsilon = 1e-12);
        assert_relative_eq!(spectrum(&Mat::identity(4, 4)).unwrap(), Vector::repeat(4, 1.0), epsilon = 1e-12);
        let neg = Mat::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        assert!(matches!(spectrum(&neg), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn orthonormalize_rows_preserves_predictions() {
        let mut rng = rng::substream(5, 0, 0);
        let b = rng::gaussian_matrix(&mut rng, 3, 7);
        let h = rng::gaussian_vector(&mut rng, 3);
        let (q, r) = orthonormalize_rows(&b);
        assert_relative_eq!(&q * q.transpose(), Mat::identity(3, 3), epsilon = 1e-12);
        assert_relative_eq!(b.transpose() * &h, q.transpose() * (r * &h), epsilon = 1e-12);
    }

    #[test]
    fn clamp_operator_norm_caps_spectrum() {
        let b = Mat::from_diagonal(&Vector::from_vec(vec![3.0, 0.5]));
        let c = clamp_operator_norm(&b, 1.0);
        assert_relative_eq!(c, Mat::from_diagonal(&Vector::from_vec(vec![1.0, 0.5])), epsilon = 1e-12);
        assert_eq!(clamp_operator_norm(&c, 2.0), c);
    }

    #[test]
    fn solve_psd_matches_pinv_on_singular_system() {
        let a = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let w = solve_psd(&a, &Vector::from_vec(vec![2.0, 2.0]));
        assert_relative_eq!(w, Vector::from_vec(vec![1.0, 1.0]), epsilon = 1e-10);
        let a = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let w = solve_psd(&a, &Vector::from_vec(vec![2.0, 2.0]));
        assert_relative_eq!(w, Vector::from_vec(vec![1.0, 0.5]), epsilon = 1e-14);
    }

    #[test]
    fn kmeans_well_separated_1d() {
        let pts = Mat::from_row_slice(4, 1, &[0.0, 0.1, 10.0, 10.1]);
        let fit = kmeans(&pts, 2, 3, KMEANS_RESTARTS).unwrap();
        assert_eq!(fit.assignments[0], fit.assignments[1]);
        assert_eq!(fit.assignments[2], fit.assignments[3]);
        assert_ne!(fit.assignments[0], fit.assignments[2]);
    }

    #[test]
    fn kmeans_single_cluster_is_mean() {
        let pts = Mat::from_row_slice(3, 2, &[0.0, 0.0, 2.0, 0.0, 1.0, 3.0]);
        let fit = kmeans(&pts, 1, 0, 2).unwrap();
        assert_eq!(fit.assignments, vec![0, 0, 0]);
        assert_relative_eq!(fit.centroids, Mat::from_row_slice(1, 2, &[1.0, 1.0]), epsilon = 1e-14);
    }

    #[test]
    fn kmeans_rejects_too_many_clusters() {
        assert!(kmeans(&Mat::zeros(2, 1), 3, 0, 1).is_err());
        assert!(kmeans(&Mat::zeros(2, 1), 0, 0, 1).is_err());
    }

    #[test]
    fn kmeans_identical_points_does_not_panic() {
        let fit = kmeans(&Mat::from_element(5, 2, 1.5), 3, 1, 3).unwrap();
        assert_eq!(fit.inertia, 0.0);
    }
}
