//! Moth-flame optimization with pluggable spiral kernels, a particle-swarm
//! baseline, and the tooling to train small tanh classifiers with them.
//!
//! The optimizers work on any [`Objective`]; [`NetworkObjective`] flattens a
//! dense network into a weight vector and scores it by half root-mean-square
//! error. The [`experiment`] module runs seeded multi-run comparisons and
//! writes CSV artifacts.

pub mod dataset;
pub mod experiment;
pub mod mfo;
pub mod network;
pub mod objective;
pub mod pso;
pub mod spiral;
pub mod stats;

pub use dataset::{Dataset, DatasetError, SplitSpec};
pub use mfo::{flame_count, spiral_update, Mfo, MfoConfig};
pub use network::{NetworkError, NetworkObjective, NetworkSpec, ParamVector};
pub use objective::{Bounds, FnObjective, Objective, OptimizeError, Optimizer, RunRecord};
pub use pso::{Pso, PsoConfig};
pub use spiral::{SpiralError, SpiralKernel, SpiralKind};
pub use stats::{ranksum_p, ComparisonReport, StatsError};
