use std::sync::Arc;

use log::{debug, info, warn};
use rayon::prelude::*;

use super::config::{SamplerConfig, WFitSubset};
use super::init::initialize;
use super::store::{ChainDraws, ChainEvents, PosteriorStore, VarianceDraw};
use crate::bart::{CutpointGrid, Design, SumOfTreesModel};
use crate::data::{ClusterIdx, TrialDataset};
use crate::error::{Error, Result};
use crate::kernels::{log_gaussian_density, RngStream};
use crate::outcome::{CellSubset, OutcomeCell, OutcomeModelSet};
use crate::strata::{
    label_posterior, membership_probs, observed_loglik_term, sample_latents, LabelUnderflow,
    OutcomeLogDensities, PrincipalStratum, StrataState,
};

// Stream purposes; every draw comes from a stream keyed by
// (chain, iteration, purpose, index).
pub(crate) const P_OUTCOME: u64 = 10;
pub(crate) const P_Q: u64 = 20;
pub(crate) const P_W: u64 = 21;
pub(crate) const P_INDIVIDUAL: u64 = 30;
pub(crate) const P_RECORD: u64 = 31;

/// Immutable view of a dataset prepared for sampling.
#[derive(Debug, Clone)]
pub struct SamplerData {
    /// Baseline covariates.
    pub design: Design,
    /// Arm indicator followed by the covariates, for the survival classifier
    /// used at initialization.
    pub arm_design: Design,
    pub z: Vec<u8>,
    pub clusters: Vec<ClusterIdx>,
    pub s_obs: Vec<Option<bool>>,
    pub y_obs: Vec<Option<f64>>,
    pub n_clusters: usize,
    pub covariate_names: Vec<String>,
}

impl SamplerData {
    pub fn from_dataset(ds: &TrialDataset, max_cuts: usize) -> Result<Self> {
        if ds.has_covariate_gaps() {
            return Err(Error::CovariateGaps);
        }
        let p = ds.n_covariates();
        if p == 0 {
            return Err(Error::Schema("at least one baseline covariate is required".into()));
        }
        let n = ds.n_individuals();
        let mut values = Vec::with_capacity(n * p);
        let mut arm_values = Vec::with_capacity(n * (p + 1));
        for (i, ind) in ds.individuals.iter().enumerate() {
            values.extend_from_slice(&ind.covariates);
            arm_values.push(f64::from(ds.z_of(i)));
            arm_values.extend_from_slice(&ind.covariates);
        }
        let grid = Arc::new(CutpointGrid::from_rows(&values, p, max_cuts));
        let arm_grid = Arc::new(CutpointGrid::from_rows(&arm_values, p + 1, max_cuts));
        Ok(Self {
            design: Design::new(values, p, grid)?,
            arm_design: Design::new(arm_values, p + 1, arm_grid)?,
            z: (0..n).map(|i| ds.z_of(i)).collect(),
            clusters: ds.individuals.iter().map(|ind| ind.cluster).collect(),
            s_obs: ds.individuals.iter().map(|ind| ind.s_obs).collect(),
            y_obs: ds.individuals.iter().map(|ind| ind.y_obs).collect(),
            n_clusters: ds.n_clusters(),
            covariate_names: ds.covariate_names(),
        })
    }

    pub fn n_individuals(&self) -> usize {
        self.z.len()
    }
}

/// Full sampler state of one chain.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub chain: usize,
    pub strata: Vec<StrataState>,
    pub q_model: SumOfTreesModel,
    pub w_model: SumOfTreesModel,
    pub outcomes: OutcomeModelSet,
    /// Current `m_Q(x) + b` and `m_W(x) + b` per individual.
    pub mq: Vec<f64>,
    pub mw: Vec<f64>,
}

/// Outcome of one pass over individuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndividualSweep {
    pub loglik: f64,
    pub fallbacks: u64,
}

impl SamplerState {
    /// Assembles a state from parts and evaluates the membership means.
    pub fn from_parts(
        chain: usize,
        data: &SamplerData,
        strata: Vec<StrataState>,
        q_model: SumOfTreesModel,
        w_model: SumOfTreesModel,
        outcomes: OutcomeModelSet,
    ) -> Self {
        let mut s = Self {
            chain,
            strata,
            q_model,
            w_model,
            outcomes,
            mq: Vec::new(),
            mw: Vec::new(),
        };
        s.refresh_membership_means(data);
        s
    }

    pub fn refresh_membership_means(&mut self, data: &SamplerData) {
        let (q, w) = (&self.q_model, &self.w_model);
        let (mq, mw): (Vec<f64>, Vec<f64>) = (0..data.n_individuals())
            .into_par_iter()
            .map(|i| {
                let c = Some(data.clusters[i]);
                (q.predict_row(&data.design, i, c), w.predict_row(&data.design, i, c))
            })
            .unzip();
        self.mq = mq;
        self.mw = mw;
    }

    pub fn labels(&self) -> Vec<PrincipalStratum> {
        self.strata.iter().map(|s| s.g).collect()
    }

    /// Current outcome subsets, one per defined cell.
    pub fn outcome_subsets(&self, data: &SamplerData) -> [CellSubset; 3] {
        let mut subsets: [CellSubset; 3] = Default::default();
        for (i, st) in self.strata.iter().enumerate() {
            if let (Some(cell), Some(y)) = (OutcomeCell::of(st.g, data.z[i]), st.y_current) {
                subsets[cell.index()].push(i, y, data.clusters[i]);
            }
        }
        subsets
    }

    fn treated_densities(&self, data: &SamplerData, i: usize, y: f64) -> OutcomeLogDensities {
        let c = data.clusters[i];
        let m11 = self.outcomes.mean_row(OutcomeCell::AlwaysTreated, &data.design, i, c);
        let m10 = self.outcomes.mean_row(OutcomeCell::ProtectedTreated, &data.design, i, c);
        OutcomeLogDensities {
            f11: log_gaussian_density(y, m11, self.outcomes.variance(OutcomeCell::AlwaysTreated)),
            f10: log_gaussian_density(y, m10, self.outcomes.variance(OutcomeCell::ProtectedTreated)),
        }
    }

    fn control_density(&self, data: &SamplerData, i: usize, y: f64) -> OutcomeLogDensities {
        let m = self
            .outcomes
            .mean_row(OutcomeCell::AlwaysControl, &data.design, i, data.clusters[i]);
        OutcomeLogDensities {
            f11: log_gaussian_density(y, m, self.outcomes.variance(OutcomeCell::AlwaysControl)),
            f10: f64::NEG_INFINITY,
        }
    }

    /// Labels, latents and imputations for every individual given the current
    /// models. Each label is drawn from its posterior with the latents
    /// integrated out, then the latents are drawn inside the label's region,
    /// so that the pair is an exact joint draw.
    pub fn update_individuals(&mut self, data: &SamplerData, seed: u64, iteration: usize) -> Result<IndividualSweep> {
        let this = &*self;
        let results: Vec<std::result::Result<(StrataState, f64, bool), LabelUnderflow>> = (0..data
            .n_individuals())
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::keyed(
                    seed,
                    &[this.chain as u64, iteration as u64, P_INDIVIDUAL, i as u64],
                );
                let z = data.z[i];
                let s = data.s_obs[i];
                let probs = membership_probs(this.mq[i], this.mw[i]);
                let dens = match (z, s, data.y_obs[i]) {
                    (1, Some(true), Some(y)) => Some(this.treated_densities(data, i, y)),
                    (0, Some(true), Some(y)) => Some(this.control_density(data, i, y)),
                    _ => None,
                };
                let ll = s.map_or(0.0, |s| observed_loglik_term(z, s, &probs, dens));
                let label_dens = if z == 1 { dens } else { None };
                let post = label_posterior(z, s, &probs, label_dens)?;
                let g = crate::strata::draw_label(&post.probs, &mut rng);
                let (q, w) = sample_latents(g, this.mq[i], this.mw[i], &mut rng);
                let s_current = g.survives(z);
                let y_current = match data.y_obs[i] {
                    Some(y) => Some(y),
                    None if s_current => {
                        this.outcomes
                            .impute_row(g, z, &data.design, i, data.clusters[i], &mut rng)
                    }
                    None => None,
                };
                Ok((
                    StrataState {
                        q,
                        w,
                        g,
                        s_current,
                        y_current,
                    },
                    ll,
                    post.fallback,
                ))
            })
            .collect();
        let mut sweep = IndividualSweep {
            loglik: 0.0,
            fallbacks: 0,
        };
        let mut strata = Vec::with_capacity(results.len());
        for (i, r) in results.into_iter().enumerate() {
            let (st, ll, fb) = r.map_err(|_| Error::Underflow {
                iteration,
                individual: i,
                message: "label weights vanished in a mixture cell".into(),
            })?;
            sweep.loglik += ll;
            if fb {
                sweep.fallbacks += 1;
                debug!("iteration {iteration}: membership-only label weights for individual {i}");
            }
            strata.push(st);
        }
        self.strata = strata;
        Ok(sweep)
    }

    /// Checks every state invariant and the identified-cell rules.
    pub fn check_invariants(&self, data: &SamplerData) -> Result<()> {
        for (i, st) in self.strata.iter().enumerate() {
            let z = data.z[i];
            st.check(z)
                .map_err(|m| Error::Contract(format!("individual {i}: {m}")))?;
            match (z, data.s_obs[i]) {
                (0, Some(true)) if st.g != PrincipalStratum::AlwaysSurvivor => {
                    return Err(Error::Contract(format!("control survivor {i} relabeled {}", st.g)));
                }
                (1, Some(false)) if st.g != PrincipalStratum::NeverSurvivor => {
                    return Err(Error::Contract(format!("treated non-survivor {i} relabeled {}", st.g)));
                }
                _ => {}
            }
            if let Some(s) = data.s_obs[i] {
                if s != st.s_current {
                    return Err(Error::Contract(format!("observed survival of {i} overwritten")));
                }
            }
            if let Some(y) = data.y_obs[i] {
                if st.y_current != Some(y) {
                    return Err(Error::Contract(format!("observed outcome of {i} overwritten")));
                }
            }
        }
        Ok(())
    }

    /// One full iteration of the update schedule; returns the observed-data
    /// log likelihood.
    pub fn iterate(
        &mut self,
        data: &SamplerData,
        config: &SamplerConfig,
        iteration: usize,
        events: &mut ChainEvents,
    ) -> Result<f64> {
        let seed = config.seed;
        let chain = self.chain as u64;
        let t = iteration as u64;

        // (i) outcome mean functions, (ii) their variances
        let subsets = self.outcome_subsets(data);
        let mut rngs = [0u64, 1, 2].map(|k| RngStream::keyed(seed, &[chain, t, P_OUTCOME, k]));
        let report = self.outcomes.update_means(&data.design, &subsets, &mut rngs)?;
        self.outcomes.update_variances(&mut rngs);
        for k in 0..3 {
            events.empty_subset_skips[k] += u64::from(report.skipped[k]);
            events.frozen_structure[k] += u64::from(report.frozen[k]);
        }

        // (iii) membership regressions on the current latents
        let all: Vec<usize> = (0..data.n_individuals()).collect();
        let q: Vec<f64> = self.strata.iter().map(|s| s.q).collect();
        let mut rng = RngStream::keyed(seed, &[chain, t, P_Q, 0]);
        self.q_model
            .fit_probit_latent(&data.design, &all, &q, &data.clusters, &mut rng)?;
        let w_rows: Vec<usize> = match config.w_fit {
            WFitSubset::All => all,
            WFitSubset::SurvivorCapable => (0..data.n_individuals())
                .filter(|&i| self.strata[i].g != PrincipalStratum::NeverSurvivor)
                .collect(),
        };
        let w: Vec<f64> = w_rows.iter().map(|&i| self.strata[i].w).collect();
        let w_clusters: Vec<ClusterIdx> = w_rows.iter().map(|&i| data.clusters[i]).collect();
        let mut rng = RngStream::keyed(seed, &[chain, t, P_W, 0]);
        self.w_model
            .fit_probit_latent(&data.design, &w_rows, &w, &w_clusters, &mut rng)?;
        self.refresh_membership_means(data);

        // (iv)-(vi) latents, labels and imputations
        let sweep = self.update_individuals(data, seed, iteration)?;
        if sweep.fallbacks > 0 {
            warn!(
                "chain {}, iteration {iteration}: {} label draws fell back to membership-only weights",
                self.chain, sweep.fallbacks
            );
        }
        events.label_fallbacks += sweep.fallbacks;
        if config.check_invariants {
            self.check_invariants(data)?;
        }
        Ok(sweep.loglik)
    }

    /// Paired counterfactual predictions for individuals labeled 11.
    pub fn counterfactuals(&self, data: &SamplerData, config: &SamplerConfig, iteration: usize) -> (Vec<f64>, Vec<f64>) {
        let n = data.n_individuals();
        let v1 = self.outcomes.variance(OutcomeCell::AlwaysTreated).sqrt();
        let v0 = self.outcomes.variance(OutcomeCell::AlwaysControl).sqrt();
        (0..n)
            .into_par_iter()
            .map(|i| {
                if self.strata[i].g != PrincipalStratum::AlwaysSurvivor {
                    return (f64::NAN, f64::NAN);
                }
                let c = data.clusters[i];
                let mut y1 = self.outcomes.mean_row(OutcomeCell::AlwaysTreated, &data.design, i, c);
                let mut y0 = self.outcomes.mean_row(OutcomeCell::AlwaysControl, &data.design, i, c);
                if config.noisy_counterfactuals {
                    let mut rng = RngStream::keyed(
                        config.seed,
                        &[self.chain as u64, iteration as u64, P_RECORD, i as u64],
                    );
                    y1 += v1 * rng.standard_normal();
                    y0 += v0 * rng.standard_normal();
                }
                (y1, y0)
            })
            .unzip()
    }

    pub fn variance_draw(&self) -> VarianceDraw {
        let mut v = VarianceDraw {
            q_intercept: self.q_model.intercept_var(),
            w_intercept: self.w_model.intercept_var(),
            ..VarianceDraw::default()
        };
        for cell in OutcomeCell::ALL {
            v.outcome_resid[cell.index()] = self.outcomes.variance(cell);
            v.outcome_intercept[cell.index()] = self.outcomes.model(cell).intercept_var();
        }
        v
    }
}

/// Initializes and runs one chain, keeping the retained draws.
pub fn run_chain(data: &SamplerData, config: &SamplerConfig, chain: usize) -> Result<ChainDraws> {
    config.validate()?;
    let mut state = initialize(data, config, chain)?;
    let mut draws = ChainDraws::new(chain, data.n_individuals());
    let mut events = ChainEvents::default();
    let report_every = (config.n_iter / 10).max(1);
    for t in 1..=config.n_iter {
        let ll = state.iterate(data, config, t, &mut events)?;
        draws.loglik_trace.push(ll);
        if config.is_retained(t) {
            let (y1, y0) = state.counterfactuals(data, config, t);
            draws.push_draw(&state.labels(), &y1, &y0, ll, state.variance_draw());
        }
        if t % report_every == 0 {
            info!("chain {chain}: iteration {t}/{} (log-lik {ll:.3})", config.n_iter);
        }
    }
    draws.events = events;
    Ok(draws)
}

/// Runs every chain of `config` on `dataset`. Chains are independent and run
/// in parallel on the current rayon pool; results do not depend on the number
/// of threads.
pub fn run_sampler(dataset: &TrialDataset, config: &SamplerConfig) -> Result<PosteriorStore> {
    config.validate()?;
    let data = SamplerData::from_dataset(dataset, config.max_cuts)?;
    let chains: Vec<Result<ChainDraws>> = (0..config.n_chains)
        .into_par_iter()
        .map(|k| run_chain(&data, config, k))
        .collect();
    let chains = chains.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(PosteriorStore::new(data.n_individuals(), chains))
}
