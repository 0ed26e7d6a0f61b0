use crate::strata::PrincipalStratum;

/// Diagnostic event counts for one chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainEvents {
    /// Label draws where outcome densities vanished and membership-only
    /// weights were used.
    pub label_fallbacks: u64,
    /// Outcome-model updates skipped for an empty subset, per cell.
    pub empty_subset_skips: [u64; 3],
    /// Outcome-model updates with frozen tree shapes, per cell.
    pub frozen_structure: [u64; 3],
}

impl ChainEvents {
    pub fn merge(&mut self, other: &ChainEvents) {
        self.label_fallbacks += other.label_fallbacks;
        for k in 0..3 {
            self.empty_subset_skips[k] += other.empty_subset_skips[k];
            self.frozen_structure[k] += other.frozen_structure[k];
        }
    }
}

/// Variance components at one retained draw, on the response scale for the
/// outcome models and the latent scale for the membership models.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VarianceDraw {
    /// `σ²` for cells `(11,1)`, `(11,0)`, `(10,1)`.
    pub outcome_resid: [f64; 3],
    pub outcome_intercept: [f64; 3],
    pub q_intercept: f64,
    pub w_intercept: f64,
}

/// Retained draws of one chain, stored draw-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    pub chain: usize,
    n_individuals: usize,
    labels: Vec<PrincipalStratum>,
    /// `Ŷ(1)` for individuals labeled 11 in the draw, `NaN` otherwise.
    y1: Vec<f64>,
    y0: Vec<f64>,
    pub counts: Vec<[usize; 3]>,
    pub loglik: Vec<f64>,
    /// Observed-data log likelihood at every iteration, burn-in included.
    pub loglik_trace: Vec<f64>,
    pub variances: Vec<VarianceDraw>,
    pub events: ChainEvents,
}

impl ChainDraws {
    pub fn new(chain: usize, n_individuals: usize) -> Self {
        Self {
            chain,
            n_individuals,
            labels: Vec::new(),
            y1: Vec::new(),
            y0: Vec::new(),
            counts: Vec::new(),
            loglik: Vec::new(),
            loglik_trace: Vec::new(),
            variances: Vec::new(),
            events: ChainEvents::default(),
        }
    }

    /// Appends one retained draw. Paired predictions are kept only for
    /// individuals labeled 11.
    pub fn push_draw(
        &mut self,
        labels: &[PrincipalStratum],
        y1: &[f64],
        y0: &[f64],
        loglik: f64,
        variances: VarianceDraw,
    ) {
        assert_eq!(labels.len(), self.n_individuals);
        assert_eq!(y1.len(), self.n_individuals);
        assert_eq!(y0.len(), self.n_individuals);
        let mut counts = [0usize; 3];
        for (i, &g) in labels.iter().enumerate() {
            counts[g.index()] += 1;
            if g == PrincipalStratum::AlwaysSurvivor {
                self.y1.push(y1[i]);
                self.y0.push(y0[i]);
            } else {
                self.y1.push(f64::NAN);
                self.y0.push(f64::NAN);
            }
        }
        self.labels.extend_from_slice(labels);
        self.counts.push(counts);
        self.loglik.push(loglik);
        self.variances.push(variances);
    }

    pub fn n_draws(&self) -> usize {
        self.counts.len()
    }

    pub fn n_individuals(&self) -> usize {
        self.n_individuals
    }

    pub fn labels(&self, draw: usize) -> &[PrincipalStratum] {
        &self.labels[draw * self.n_individuals..(draw + 1) * self.n_individuals]
    }

    /// `(Ŷ(1), Ŷ(0))` if individual `i` is labeled 11 in `draw`.
    pub fn pair(&self, draw: usize, i: usize) -> Option<(f64, f64)> {
        let k = draw * self.n_individuals + i;
        (self.labels[k] == PrincipalStratum::AlwaysSurvivor).then(|| (self.y1[k], self.y0[k]))
    }
}

/// Retained draws of all chains over one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorStore {
    pub n_individuals: usize,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorStore {
    pub fn new(n_individuals: usize, chains: Vec<ChainDraws>) -> Self {
        debug_assert!(chains.iter().all(|c| c.n_individuals == n_individuals));
        Self {
            n_individuals,
            chains,
        }
    }

    /// Pooled number of retained draws.
    pub fn n_draws(&self) -> usize {
        self.chains.iter().map(ChainDraws::n_draws).sum()
    }

    /// Pooled draws in chain order.
    pub fn draws(&self) -> impl Iterator<Item = (&ChainDraws, usize)> {
        self.chains
            .iter()
            .flat_map(|c| (0..c.n_draws()).map(move |d| (c, d)))
    }

    pub fn events(&self) -> ChainEvents {
        let mut e = ChainEvents::default();
        for c in &self.chains {
            e.merge(&c.events);
        }
        e
    }

    /// Store restricted to one chain, for per-chain summaries.
    pub fn single_chain(&self, k: usize) -> PosteriorStore {
        PosteriorStore::new(self.n_individuals, vec![self.chains[k].clone()])
    }
}
