//! Multipath multitask linear representation learning.
//!
//! A supernet is a stack of layers, each holding a bank of linear modules.
//! Every task picks one module per layer (its pathway) and a linear head on
//! top, so its predictor is `x -> h^T B_L ... B_1 x`. The crate provides:
//!
//! * [`supernet`]: the data model, pathway enumeration and parameter counts,
//! * [`datagen`]: planted hierarchical, fairness and adversarial models,
//! * [`solvers`]: vanilla, cluster and multipath MTL by alternating least squares,
//! * [`clustering`]: task clustering from per-task estimates,
//! * [`transfer`]: fitting a new task by searching over pathways,
//! * [`risk`]: excess risk and the numeric checks on the bounds,
//! * [`harness`]: config-driven experiment sweeps with CSV/JSON output.

pub mod clustering;
mod error;
pub mod datagen;
pub mod harness;
pub mod numerics;
pub mod risk;
pub mod rng;
pub mod solvers;
pub mod supernet;
pub mod transfer;
mod wire;

pub use error::{Error, Result};

pub type Mat = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
