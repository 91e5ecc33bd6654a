//! Training and analysis of ReLU multilayer perceptrons whose weight rows are
//! kept inside an L2 ball of radius `c`.
//!
//! * [`linalg`]: dense matrices and the row-norm (L2,∞) primitives
//! * [`net`]: the MLP, its losses and backpropagation
//! * [`train`]: projected minibatch gradient descent
//! * [`geometry`]: linear regions, adjacency and dihedral angles of the graph
//! * [`robustness`]: Lipschitz constants, certified radii and radius/volume bounds
//! * [`complexity`]: Rademacher complexity bound and a Monte-Carlo estimate
//! * [`data`]: MNIST/CIFAR-10 readers and Gaussian noise injection

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod complexity;
pub mod container;
pub mod data;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod net;
pub mod report;
pub mod rng;
pub mod robustness;
pub mod train;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use net::{Head, LabeledSample, LossKind, MlpModel};
pub use train::{Regularization, StepSchedule, TrainConfig, TrainReport};
