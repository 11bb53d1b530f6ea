//! Least squares over a representation matrix with the heads held fixed:
//!
//! ```text
//! min_W  sum_t || y_t - Z_t W g_t ||^2 + ridge ||W||_F^2,     W in R^{d x m}
//! ```
//!
//! `W` is the transpose of a module weight, `Z_t` the task's features entering
//! that module and `g_t` the head pulled back to the module output. The
//! normal equations are `sum_t (g_t g_t^T kron Z_t^T Z_t) vec(W) = sum_t g_t kron Z_t^T y_t`.
//! Small systems are assembled and solved directly; large ones use
//! preconditioned conjugate gradients warm-started at the current weights.

use crate::numerics::solve_psd;
use crate::{Mat, Vector};

/// One task's contribution.
pub(crate) struct RepTask<'a> {
    pub z: &'a Mat,
    pub y: &'a Vector,
    pub g: Vector,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LsSettings {
    pub ridge: f64,
    /// Largest `d * m` solved by dense assembly.
    pub direct_limit: usize,
    pub cg_max_iter: usize,
    pub cg_rel_tol: f64,
    pub cg_forcing: f64,
}

/// `vec(Z_t^T Z_t)` for every task, stacked as the columns of a `d^2 x T`
/// matrix. Reusable while the designs do not change.
pub(crate) fn gram_stack(designs: &[&Mat]) -> Mat {
    let d = designs.first().map_or(0, |z| z.ncols());
    let mut stack = Mat::zeros(d * d, designs.len());
    for (t, z) in designs.iter().enumerate() {
        let s = z.tr_mul(z);
        stack.column_mut(t).copy_from_slice(s.as_slice());
    }
    stack
}

pub(crate) fn solve(tasks: &[RepTask<'_>], grams: Option<&Mat>, warm: &Mat, settings: &LsSettings) -> Mat {
    let (d, m) = warm.shape();
    if d * m <= settings.direct_limit {
        match grams {
            Some(g) => solve_direct(tasks, g, d, m, settings.ridge),
            None => {
                let designs: Vec<&Mat> = tasks.iter().map(|t| t.z).collect();
                solve_direct(tasks, &gram_stack(&designs), d, m, settings.ridge)
            }
        }
    } else {
        solve_pcg(tasks, warm, settings)
    }
}

fn solve_direct(tasks: &[RepTask<'_>], grams: &Mat, d: usize, m: usize, ridge: f64) -> Mat {
    let n = d * m;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
    let coef = Mat::from_fn(tasks.len(), pairs.len(), |t, j| {
        let (a, b) = pairs[j];
        tasks[t].g[a] * tasks[t].g[b]
    });
    let blocks = grams * coef;
    let mut lhs = Mat::zeros(n, n);
    for (j, &(a, b)) in pairs.iter().enumerate() {
        let col = blocks.column(j);
        for jj in 0..d {
            for ii in 0..d {
                let v = col[jj * d + ii];
                lhs[(a * d + ii, b * d + jj)] = v;
                lhs[(b * d + jj, a * d + ii)] = v;
            }
        }
    }
    for i in 0..n {
        lhs[(i, i)] += ridge;
    }
    let mut rhs = Vector::zeros(n);
    for t in tasks {
        let zty = t.z.tr_mul(t.y);
        for a in 0..m {
            let ga = t.g[a];
            if ga != 0.0 {
                rhs.rows_mut(a * d, d).axpy(ga, &zty, 1.0);
            }
        }
    }
    let w = solve_psd(&lhs, &rhs);
    Mat::from_column_slice(d, m, w.as_slice())
}

fn apply(tasks: &[RepTask<'_>], w: &Mat, ridge: f64) -> Mat {
    let mut out = w * ridge;
    for t in tasks {
        let v = w * &t.g;
        let u = t.z.tr_mul(&(t.z * v));
        out.ger(1.0, &u, &t.g, 1.0);
    }
    out
}

fn solve_pcg(tasks: &[RepTask<'_>], warm: &Mat, settings: &LsSettings) -> Mat {
    let (d, m) = warm.shape();
    let mut rhs = Mat::zeros(d, m);
    let mut precond = Mat::zeros(m, m);
    for t in tasks {
        let zty = t.z.tr_mul(t.y);
        rhs.ger(1.0, &zty, &t.g, 1.0);
        precond.ger(t.z.nrows() as f64, &t.g, &t.g, 1.0);
    }
    // E[Z^T Z] = N I for isotropic inputs, so G kron I approximates the
    // operator. Directions outside the span of the heads are in its null space
    // and are dropped by the pseudo-inverse rather than amplified.
    for i in 0..m {
        precond[(i, i)] += settings.ridge;
    }
    let top = precond.diagonal().max().max(0.0);
    let precond_inv = precond.pseudo_inverse(1e-10 * top.max(f64::MIN_POSITIVE)).expect("eps is nonnegative");
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Mat::zeros(d, m);
    }
    let mut w = warm.clone();
    let mut r = &rhs - apply(tasks, &w, settings.ridge);
    let mut z = &r * &precond_inv;
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let r0 = r.norm();
    let target = (settings.cg_rel_tol * rhs_norm).max(settings.cg_forcing * r0);
    for _ in 0..settings.cg_max_iter {
        if r.norm() <= target {
            break;
        }
        let ap = apply(tasks, &p, settings.ridge);
        let pap = p.dot(&ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        w += &p * alpha;
        r -= &ap * alpha;
        z = &r * &precond_inv;
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        p = &z + p * beta;
        rz = rz_next;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn problem(d: usize, m: usize, tasks: usize, n: usize) -> (Vec<Mat>, Vec<Vector>, Vec<Vector>) {
        let mut g = rng::substream(2, 0, 0);
        let w_true = rng::gaussian_matrix(&mut g, d, m);
        let zs: Vec<Mat> = (0..tasks).map(|_| rng::gaussian_matrix(&mut g, n, d)).collect();
        let gs: Vec<Vector> = (0..tasks).map(|_| rng::gaussian_vector(&mut g, m)).collect();
        let ys = zs.iter().zip(&gs).map(|(z, h)| z * (&w_true * h)).collect();
        (zs, ys, gs)
    }

    fn settings(direct_limit: usize) -> LsSettings {
        LsSettings {
            ridge: 0.0,
            direct_limit,
            cg_max_iter: 500,
            cg_rel_tol: 1e-13,
            cg_forcing: 0.0,
        }
    }

    #[test]
    fn direct_and_cg_agree_on_determined_problem() {
        let (zs, ys, gs) = problem(6, 3, 12, 8);
        let tasks: Vec<RepTask> = zs
            .iter()
            .zip(&ys)
            .zip(&gs)
            .map(|((z, y), g)| RepTask { z, y, g: g.clone() })
            .collect();
        let warm = Mat::zeros(6, 3);
        let direct = solve(&tasks, None, &warm, &settings(1000));
        let cg = solve(&tasks, None, &warm, &settings(0));
        assert_relative_eq!(direct, cg, epsilon = 1e-8);
        let resid: f64 = tasks.iter().map(|t| (t.y - t.z * (&direct * &t.g)).norm_squared()).sum();
        assert!(resid < 1e-16);
    }

    #[test]
    fn cached_grams_match_fresh_assembly() {
        let (zs, ys, gs) = problem(4, 2, 5, 3);
        let tasks: Vec<RepTask> = zs
            .iter()
            .zip(&ys)
            .zip(&gs)
            .map(|((z, y), g)| RepTask { z, y, g: g.clone() })
            .collect();
        let designs: Vec<&Mat> = zs.iter().collect();
        let stack = gram_stack(&designs);
        let warm = Mat::zeros(4, 2);
        assert_eq!(
            solve(&tasks, Some(&stack), &warm, &settings(100)),
            solve(&tasks, None, &warm, &settings(100))
        );
    }
}
