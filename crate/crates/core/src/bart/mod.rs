//! Bayesian additive regression trees with a cluster random intercept.

pub mod design;
pub mod model;
pub mod tree;

pub use design::{CutpointGrid, Design};
pub use model::{
    BartSettings, InverseGammaPrior, MoveCounters, ResidualVariance, ResponseScale, SumOfTreesModel,
    TreePrior,
};
pub use tree::{NodeKind, RegressionTree};
