//! Supernet data model: layered module banks, pathways through them, and
//! parameter accounting.
//!
//! Pathways are stored 0-indexed. `Display` prints them 1-indexed
//! (`(1,3)` is the first module of layer one followed by the third module of
//! layer two), and the JSON formats store the raw 0-indexed values.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{ensure_finite_mat, operator_norm};
use crate::{Mat, Vector};

pub const DEFAULT_PATHWAY_CAP: usize = 1_000_000;

/// Architecture of a supernet: `widths[l]` modules in layer `l + 1`, and
/// layer dimensions `dims[0] = p` (input) through `dims[L] = p_L` (head input).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupernetConfig {
    #[serde(rename = "L")]
    layers: usize,
    #[serde(rename = "K")]
    widths: Vec<usize>,
    #[serde(rename = "p")]
    dims: Vec<usize>,
}

impl SupernetConfig {
    pub fn new(widths: Vec<usize>, dims: Vec<usize>) -> Result<Self> {
        let cfg = Self {
            layers: widths.len(),
            widths,
            dims,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.widths.len() != self.layers {
            return Err(invalid("supernet needs L >= 1 and one width per layer"));
        }
        if self.dims.len() != self.layers + 1 {
            return Err(invalid(format!(
                "supernet with {} layers needs {} dimensions, got {}",
                self.layers,
                self.layers + 1,
                self.dims.len()
            )));
        }
        if self.widths.iter().any(|&k| k == 0) || self.dims.iter().any(|&p| p == 0) {
            return Err(invalid("supernet widths and dimensions must be positive"));
        }
        Ok(())
    }

    /// Two-layer tree: one shared `R x p` module feeding `K` cluster modules of size `r x R`.
    pub fn hierarchical(p: usize, big_r: usize, r: usize, k: usize) -> Result<Self> {
        Self::new(vec![1, k], vec![p, big_r, r])
    }

    /// One layer of `k` modules, each `width x p`.
    pub fn single_layer(p: usize, width: usize, k: usize) -> Result<Self> {
        Self::new(vec![k], vec![p, width])
    }

    pub fn num_layers(&self) -> usize {
        self.layers
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn head_dim(&self) -> usize {
        self.dims[self.layers]
    }

    /// Shape `(rows, cols)` of every module in 0-indexed layer `l`.
    pub fn module_shape(&self, l: usize) -> (usize, usize) {
        (self.dims[l + 1], self.dims[l])
    }

    /// `|A| = prod K_l`, saturating.
    pub fn pathway_count(&self) -> u128 {
        self.widths.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128))
    }
}

/// One module index per layer, 0-indexed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pathway(Vec<usize>);

impl Pathway {
    pub fn new(choice: Vec<usize>) -> Self {
        Self(choice)
    }

    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, cfg: &SupernetConfig) -> Result<()> {
        if self.0.len() != cfg.num_layers() {
            return Err(Error::DimensionMismatch {
                context: "pathway",
                expected: format!("{} layers", cfg.num_layers()),
                found: format!("{} entries", self.0.len()),
            });
        }
        for (layer, (&idx, &width)) in self.0.iter().zip(cfg.widths()).enumerate() {
            if idx >= width {
                return Err(Error::PathwayOutOfRange {
                    layer: layer + 1,
                    index: idx + 1,
                    width,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Pathway {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c + 1)?;
        }
        write!(f, ")")
    }
}

/// Architecture plus the weight of every module; `modules[l][k]` is `p_{l+1} x p_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SupernetWire", try_from = "SupernetWire")]
pub struct Supernet {
    config: SupernetConfig,
    modules: Vec<Vec<Mat>>,
}

impl Supernet {
    pub fn new(config: SupernetConfig, modules: Vec<Vec<Mat>>) -> Result<Self> {
        if modules.len() != config.num_layers() {
            return Err(Error::DimensionMismatch {
                context: "supernet modules",
                expected: format!("{} layers", config.num_layers()),
                found: format!("{}", modules.len()),
            });
        }
        for (l, layer) in modules.iter().enumerate() {
            if layer.len() != config.widths()[l] {
                return Err(Error::DimensionMismatch {
                    context: "supernet layer width",
                    expected: format!("{} modules in layer {}", config.widths()[l], l + 1),
                    found: format!("{}", layer.len()),
                });
            }
            let shape = config.module_shape(l);
            for m in layer {
                if m.shape() != shape {
                    return Err(Error::DimensionMismatch {
                        context: "supernet module shape",
                        expected: format!("{}x{}", shape.0, shape.1),
                        found: format!("{}x{}", m.nrows(), m.ncols()),
                    });
                }
                ensure_finite_mat(m, "supernet module")?;
            }
        }
        Ok(Self { config, modules })
    }

    pub fn zeros(config: SupernetConfig) -> Self {
        let modules = (0..config.num_layers())
            .map(|l| {
                let (r, c) = config.module_shape(l);
                vec![Mat::zeros(r, c); config.widths()[l]]
            })
            .collect();
        Self { config, modules }
    }

    pub fn config(&self) -> &SupernetConfig {
        &self.config
    }

    /// Weight of module `k` in 0-indexed layer `l`.
    pub fn module(&self, l: usize, k: usize) -> &Mat {
        &self.modules[l][k]
    }

    pub fn layer(&self, l: usize) -> &[Mat] {
        &self.modules[l]
    }

    pub fn into_modules(self) -> Vec<Vec<Mat>> {
        self.modules
    }

    /// `B_alpha = B_L^{alpha[L]} ... B_1^{alpha[1]}`, a `p_L x p` matrix.
    pub fn compose(&self, path: &Pathway) -> Result<Mat> {
        path.validate(&self.config)?;
        Ok(self.compose_range(path, 0, self.config.num_layers()))
    }

    /// Product of 0-indexed layers `start..end` along `path` (identity when empty).
    /// Panics on an invalid pathway; use [`Supernet::compose`] for checked access.
    pub fn compose_range(&self, path: &Pathway, start: usize, end: usize) -> Mat {
        let mut acc = Mat::identity(self.config.dims()[start], self.config.dims()[start]);
        for l in start..end {
            acc = &self.modules[l][path.choices()[l]] * acc;
        }
        acc
    }

    /// Linear predictor `B_alpha^T h` in input space.
    pub fn predictor(&self, path: &Pathway, head: &Vector) -> Result<Vector> {
        let b = self.compose(path)?;
        if head.len() != b.nrows() {
            return Err(Error::DimensionMismatch {
                context: "prediction head",
                expected: format!("length {}", b.nrows()),
                found: format!("length {}", head.len()),
            });
        }
        Ok(b.tr_mul(head))
    }

    /// Whether every module has orthonormal rows within `tol` (Frobenius).
    pub fn is_orthonormal(&self, tol: f64) -> bool {
        self.modules.iter().flatten().all(|m| {
            let g = m * m.transpose();
            (g - Mat::identity(m.nrows(), m.nrows())).norm() <= tol
        })
    }

    /// Largest operator norm over all modules.
    pub fn max_operator_norm(&self) -> f64 {
        self.modules.iter().flatten().map(operator_norm).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form: `{"config":{"L":..,"K":[..],"p":[..]},"modules":[[[row-major..]..]..]}`.
#[derive(Serialize, Deserialize)]
struct SupernetWire {
    config: SupernetConfig,
    modules: Vec<Vec<Vec<f64>>>,
}

pub(crate) fn row_major(m: &Mat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
    out
}

impl From<Supernet> for SupernetWire {
    fn from(net: Supernet) -> Self {
        Self {
            config: net.config,
            modules: net
                .modules
                .iter()
                .map(|layer| layer.iter().map(row_major).collect())
                .collect(),
        }
    }
}

impl TryFrom<SupernetWire> for Supernet {
    type Error = Error;

    fn try_from(wire: SupernetWire) -> Result<Self> {
        wire.config.validate()?;
        let cfg = wire.config;
        let mut modules = Vec::with_capacity(wire.modules.len());
        for (l, layer) in wire.modules.into_iter().enumerate() {
            if l >= cfg.num_layers() {
                return Err(invalid("more module layers than the config declares"));
            }
            let (r, c) = cfg.module_shape(l);
            let mut mats = Vec::with_capacity(layer.len());
            for data in layer {
                if data.len() != r * c {
                    return Err(Error::DimensionMismatch {
                        context: "serialized module",
                        expected: format!("{} entries", r * c),
                        found: format!("{}", data.len()),
                    });
                }
                mats.push(Mat::from_row_slice(r, c, &data));
            }
            modules.push(mats);
        }
        Supernet::new(cfg, modules)
    }
}

/// All pathways of the full product set in lexicographic order.
pub fn enumerate_pathways(config: &SupernetConfig, cap: usize) -> Result<Vec<Pathway>> {
    let count = config.pathway_count();
    if count > cap as u128 {
        return Err(Error::PathwayCapExceeded { count, cap });
    }
    let widths = config.widths();
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0usize; widths.len()];
    loop {
        out.push(Pathway(current.clone()));
        let mut l = widths.len();
        loop {
            if l == 0 {
                return Ok(out);
            }
            l -= 1;
            current[l] += 1;
            if current[l] < widths[l] {
                break;
            }
            current[l] = 0;
        }
    }
}

/// Trainable parameter count `T p_L + sum_l K_l p_l p_{l-1}`.
pub fn dof(config: &SupernetConfig, tasks: usize) -> u64 {
    let dims = config.dims();
    let modules: u64 = config
        .widths()
        .iter()
        .enumerate()
        .map(|(l, &k)| (k * dims[l + 1] * dims[l]) as u64)
        .sum();
    tasks as u64 * config.head_dim() as u64 + modules
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_single_module_is_identity_map() {
        let cfg = SupernetConfig::single_layer(3, 2, 1).unwrap();
        let b = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let net = Supernet::new(cfg, vec![vec![b.clone()]]).unwrap();
        assert_eq!(net.compose(&Pathway::new(vec![0])).unwrap(), b);
    }

    #[test]
    fn compose_two_layers_by_hand() {
        // B1 selects the first two coordinates of R^3; B2 swaps them.
        let cfg = SupernetConfig::new(vec![1, 1], vec![3, 2, 2]).unwrap();
        let b1 = Mat::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b2 = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let net = Supernet::new(cfg, vec![vec![b1], vec![b2]]).unwrap();
        let expect = Mat::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(net.compose(&Pathway::new(vec![0, 0])).unwrap(), expect);
    }

    #[test]
    fn compose_identity_modules() {
        let cfg = SupernetConfig::new(vec![2, 3], vec![4, 4, 4]).unwrap();
        let eye = Mat::identity(4, 4);
        let net = Supernet::new(cfg, vec![vec![eye.clone(); 2], vec![eye.clone(); 3]]).unwrap();
        assert_eq!(net.compose(&Pathway::new(vec![1, 2])).unwrap(), eye);
    }

    #[test]
    fn compose_rejects_bad_pathway() {
        let net = Supernet::zeros(SupernetConfig::new(vec![2, 3], vec![4, 3, 2]).unwrap());
        assert!(matches!(
            net.compose(&Pathway::new(vec![0, 3])),
            Err(Error::PathwayOutOfRange { layer: 2, .. })
        ));
        assert!(net.compose(&Pathway::new(vec![0])).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let one = enumerate_pathways(&SupernetConfig::new(vec![1, 1], vec![2, 2, 2]).unwrap(), 10).unwrap();
        assert_eq!(one, vec![Pathway::new(vec![0, 0])]);
        let six = enumerate_pathways(&SupernetConfig::new(vec![2, 3], vec![2, 2, 2]).unwrap(), 10).unwrap();
        assert_eq!(six.len(), 6);
        assert!(six.windows(2).all(|w| w[0] < w[1]));
        let fig2 = SupernetConfig::hierarchical(32, 8, 2, 40).unwrap();
        assert_eq!(enumerate_pathways(&fig2, DEFAULT_PATHWAY_CAP).unwrap().len(), 40);
        let err = enumerate_pathways(&fig2, 39).unwrap_err();
        assert!(err.to_string().contains("39"));
    }

    #[test]
    fn dof_formula() {
        let fig2 = SupernetConfig::hierarchical(32, 8, 2, 40).unwrap();
        assert_eq!(dof(&fig2, 400), 1696);
        let (p, big_r, r, k, t) = (32, 8, 2, 40, 400);
        let vanilla = SupernetConfig::single_layer(p, big_r, 1).unwrap();
        assert_eq!(dof(&vanilla, t), (big_r * p + t * big_r) as u64);
        let cluster = SupernetConfig::single_layer(p, r, k).unwrap();
        assert_eq!(dof(&cluster, t), (k * r * p + t * r) as u64);
    }

    #[test]
    fn pathway_display_is_one_indexed() {
        assert_eq!(Pathway::new(vec![0, 39]).to_string(), "(1,40)");
    }

    #[test]
    fn json_layout() {
        let cfg = SupernetConfig::single_layer(2, 1, 1).unwrap();
        let net = Supernet::new(cfg, vec![vec![Mat::from_row_slice(1, 2, &[0.5, -1.0])]]).unwrap();
        assert_eq!(net.to_json().unwrap(), r#"{"config":{"L":1,"K":[1],"p":[2,1]},"modules":[[[0.5,-1.0]]]}"#);
        assert_relative_eq!(Supernet::from_json(&net.to_json().unwrap()).unwrap().module(0, 0), net.module(0, 0));
    }
}
