//! Gibbs sampler over principal strata, latent membership variables, the five
//! mean functions and the nested missing-data structure.

mod chain;
mod config;
mod init;
mod store;

pub use chain::{run_chain, run_sampler, IndividualSweep, SamplerData, SamplerState};
pub use config::{SamplerConfig, WFitSubset};
pub use init::initialize;
pub use store::{ChainDraws, ChainEvents, PosteriorStore, VarianceDraw};
