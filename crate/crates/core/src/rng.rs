//! Seeded, splittable random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! user seed and addressed by a `(domain, index)` pair. ChaCha is counter
//! based, so two streams with different addresses never overlap and a task's
//! samples do not depend on how many other tasks were generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Mat, Vector};

pub type StreamRng = ChaCha8Rng;

/// Stream domains. Values are arbitrary but frozen: changing one changes
/// every generated dataset.
pub mod domain {
    pub const SUPERNET: u64 = 0x5355_5045;
    pub const HEADS: u64 = 0x4845_4144;
    pub const ANCHORS: u64 = 0x414e_4348;
    pub const FEATURES: u64 = 0x4645_4154;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const KMEANS: u64 = 0x4b4d_4541;
    pub const TARGETS: u64 = 0x5441_5247;
    pub const COMPLEXITY: u64 = 0x4743_4f4d;
    pub const CELL: u64 = 0x4345_4c4c;
    pub const PADDING: u64 = 0x5041_4444;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(splitmix64(domain ^ splitmix64(index)));
    rng
}

/// Derive a child seed from a parent seed and a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &i| splitmix64(acc ^ splitmix64(i.wrapping_add(1))))
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vector(rng: &mut impl Rng, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| gaussian(rng))
}

/// Row-major fill, so the first `rows` rows of a taller draw are identical.
pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    let data: Vec<f64> = (0..rows * cols).map(|_| gaussian(rng)).collect();
    Mat::from_row_slice(rows, cols, &data)
}

/// Uniform point on the unit sphere in `R^dim`.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vector {
    loop {
        let v = gaussian_vector(rng, dim);
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// `rows x cols` matrix with Haar-distributed orthonormal rows (`rows <= cols`).
///
/// QR of a `cols x rows` Gaussian matrix with the sign of each diagonal entry
/// of R fixed positive; the transposed Q factor is Haar on the Stiefel manifold.
pub fn haar_orthonormal_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
    assert!(rows <= cols, "haar_orthonormal_rows needs rows <= cols");
    let g = gaussian_matrix(rng, cols, rows);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..rows {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q.transpose()
}
