use crate::bart::BartSettings;
use crate::error::{Error, Result};

/// Which individuals the `m_W` regression is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WFitSubset {
    /// Every individual; never-survivors carry an unconstrained `W`.
    All,
    /// Only individuals with `Q > 0`.
    SurvivorCapable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub seed: u64,
    pub bart: BartSettings,
    /// Cutpoints per covariate.
    pub max_cuts: usize,
    pub w_fit: WFitSubset,
    /// Record `Y(1)`/`Y(0)` with residual noise instead of model means.
    pub noisy_counterfactuals: bool,
    /// Warm-up sweeps for each model during initialization.
    pub init_sweeps: usize,
    /// Smallest outcome subset on which tree structures may change.
    pub min_subset_for_structure: usize,
    /// Verify every state invariant after each iteration.
    pub check_invariants: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_iter: 20_000,
            burn_in: 10_000,
            thin: 1,
            n_chains: 2,
            seed: 1,
            bart: BartSettings::default(),
            max_cuts: 100,
            w_fit: WFitSubset::All,
            noisy_counterfactuals: false,
            init_sweeps: 10,
            min_subset_for_structure: 5,
            check_invariants: cfg!(debug_assertions),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_iter {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::Config("n_chains must be at least 1".into()));
        }
        if self.bart.n_trees == 0 {
            return Err(Error::Config("k_trees must be at least 1".into()));
        }
        if !(self.bart.k > 0.0) {
            return Err(Error::Config("leaf prior k must be positive".into()));
        }
        if self.max_cuts == 0 || self.max_cuts > u16::MAX as usize {
            return Err(Error::Config(format!("max_cuts out of range: {}", self.max_cuts)));
        }
        self.bart.tree_prior.validate()
    }

    /// Retained draws per chain.
    pub fn n_retained(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }

    /// Whether iteration `t` (1-based) is recorded.
    pub fn is_retained(&self, t: usize) -> bool {
        t > self.burn_in && (t - self.burn_in) % self.thin == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_count_identity() {
        for (n, b, th) in [(20_000, 10_000, 1), (100, 10, 7), (11, 10, 3), (50, 0, 5)] {
            let c = SamplerConfig {
                n_iter: n,
                burn_in: b,
                thin: th,
                ..SamplerConfig::default()
            };
            c.validate().unwrap();
            let counted = (1..=n).filter(|&t| c.is_retained(t)).count();
            assert_eq!(counted, c.n_retained());
        }
    }

    #[test]
    fn rejects_bad_schedules() {
        let c = SamplerConfig {
            n_iter: 10,
            burn_in: 10,
            ..SamplerConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SamplerConfig {
            thin: 0,
            ..SamplerConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
