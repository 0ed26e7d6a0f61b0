use std::fmt::Write as _;

use crate::bart::design::Design;
use crate::bart::tree::RegressionTree;
use crate::data::ClusterIdx;
use crate::error::{Error, Result};
use crate::kernels::{sample_conjugate_normal_mean, sample_inverse_gamma, RngStream};

/// Branching-process prior on tree shapes plus the proposal mix used by the
/// Metropolis–Hastings tree moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePrior {
    pub alpha: f64,
    pub beta: f64,
    pub grow_prob: f64,
    pub prune_prob: f64,
    pub change_prob: f64,
}

impl Default for TreePrior {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            beta: 2.0,
            grow_prob: 0.28,
            prune_prob: 0.28,
            change_prob: 0.44,
        }
    }
}

impl TreePrior {
    /// Prior probability that a node at `depth` is internal.
    pub fn split_prob(&self, depth: usize) -> f64 {
        self.alpha * (1.0 + depth as f64).powf(-self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.grow_prob + self.prune_prob + self.change_prob;
        if !(self.alpha > 0.0 && self.alpha < 1.0) || self.beta < 0.0 {
            return Err(Error::Config(format!(
                "tree prior needs 0 < alpha < 1 and beta >= 0, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        if (total - 1.0).abs() > 1e-9
            || [self.grow_prob, self.prune_prob, self.change_prob]
                .iter()
                .any(|&p| p < 0.0)
        {
            return Err(Error::Config(
                "grow/prune/change probabilities must be nonnegative and sum to 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualVariance {
    /// Redrawn from its inverse-gamma full conditional every sweep.
    Estimated(InverseGammaPrior),
    /// Pinned, as for probit latent regressions.
    Fixed(f64),
}

/// Settings shared by all ensembles of one sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct BartSettings {
    pub n_trees: usize,
    pub tree_prior: TreePrior,
    /// Leaf-prior tightness `k`.
    pub k: f64,
    /// Smallest number of rows a proposed leaf may hold.
    pub min_leaf_size: usize,
    pub resid_prior: InverseGammaPrior,
    /// Prior on the random-intercept variance, on the unit-variance scale. A
    /// scalar inverse-Wishart with 3 degrees of freedom reduces to an
    /// inverse-gamma with shape 3/2.
    pub intercept_prior: InverseGammaPrior,
}

impl Default for BartSettings {
    fn default() -> Self {
        Self {
            n_trees: 50,
            tree_prior: TreePrior::default(),
            k: 2.0,
            min_leaf_size: 5,
            resid_prior: InverseGammaPrior {
                shape: 0.001,
                rate: 0.001,
            },
            intercept_prior: InverseGammaPrior {
                shape: 1.5,
                rate: 1.5,
            },
        }
    }
}

/// Affine map between the response scale and the internal unit-variance scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseScale {
    pub shift: f64,
    pub scale: f64,
    /// `(max - min) / scale` of the calibration sample.
    pub range: f64,
}

impl ResponseScale {
    pub fn identity() -> Self {
        Self {
            shift: 0.0,
            scale: 1.0,
            range: 6.0,
        }
    }

    pub fn from_values(y: &[f64]) -> Self {
        if y.len() < 2 {
            let shift = y.first().copied().unwrap_or(0.0);
            return Self {
                shift,
                scale: 1.0,
                range: 1.0,
            };
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        let (lo, hi) = y
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if var <= 0.0 {
            return Self {
                shift: mean,
                scale: 1.0,
                range: 1.0,
            };
        }
        let sd = var.sqrt();
        Self {
            shift: mean,
            scale: sd,
            range: (hi - lo) / sd,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MoveCounters {
    pub grow_proposed: u64,
    pub grow_accepted: u64,
    pub prune_proposed: u64,
    pub prune_accepted: u64,
    pub change_proposed: u64,
    pub change_accepted: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SweepSummary {
    n: usize,
    resid_ss: f64,
}

/// Sum of regression trees plus a per-cluster random intercept:
/// `m(x) + b_i`, with `m(x) = Σ_k g_k(x)` on the internal scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SumOfTreesModel {
    trees: Vec<RegressionTree>,
    random_intercepts: Vec<f64>,
    intercept_seen: Vec<bool>,
    intercept_var: f64,
    resid_var: f64,
    leaf_prior_sd: f64,
    response: ResponseScale,
    n_covariates: usize,
    tree_prior: TreePrior,
    min_leaf_size: usize,
    resid_mode: ResidualVariance,
    intercept_prior: InverseGammaPrior,
    counters: MoveCounters,
    last_sweep: Option<SweepSummary>,
}

impl SumOfTreesModel {
    /// Gaussian-response ensemble. The leaf prior puts the sum of trees inside
    /// the calibration range with probability ≈ 95% for `k = 2`, i.e. a leaf
    /// sd of `0.5 / (k √K)` once the response is rescaled to unit range.
    pub fn gaussian(
        settings: &BartSettings,
        n_covariates: usize,
        n_clusters: usize,
        response: ResponseScale,
    ) -> Self {
        let leaf_prior_sd = 0.5 * response.range / (settings.k * (settings.n_trees as f64).sqrt());
        Self::build(
            settings,
            n_covariates,
            n_clusters,
            response,
            leaf_prior_sd,
            ResidualVariance::Estimated(settings.resid_prior),
        )
    }

    /// Probit latent regression: residual variance pinned to 1 and no response
    /// rescaling; the leaf prior covers a latent range of `[-3, 3]`.
    pub fn probit(settings: &BartSettings, n_covariates: usize, n_clusters: usize) -> Self {
        let leaf_prior_sd = 3.0 / (settings.k * (settings.n_trees as f64).sqrt());
        Self::build(
            settings,
            n_covariates,
            n_clusters,
            ResponseScale::identity(),
            leaf_prior_sd,
            ResidualVariance::Fixed(1.0),
        )
    }

    fn build(
        settings: &BartSettings,
        n_covariates: usize,
        n_clusters: usize,
        response: ResponseScale,
        leaf_prior_sd: f64,
        resid_mode: ResidualVariance,
    ) -> Self {
        assert!(settings.n_trees >= 1, "need at least one tree");
        let resid_var = match resid_mode {
            ResidualVariance::Fixed(v) => v,
            ResidualVariance::Estimated(_) => 1.0,
        };
        Self {
            trees: vec![RegressionTree::stump(0.0); settings.n_trees],
            random_intercepts: vec![0.0; n_clusters],
            intercept_seen: vec![false; n_clusters],
            intercept_var: 0.1,
            resid_var,
            leaf_prior_sd,
            response,
            n_covariates,
            tree_prior: settings.tree_prior,
            min_leaf_size: settings.min_leaf_size.max(1),
            resid_mode,
            intercept_prior: settings.intercept_prior,
            counters: MoveCounters::default(),
            last_sweep: None,
        }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Direct access for hand-built ensembles.
    pub fn trees_mut(&mut self) -> &mut [RegressionTree] {
        &mut self.trees
    }

    pub fn response_scale(&self) -> ResponseScale {
        self.response
    }

    pub fn leaf_prior_sd(&self) -> f64 {
        self.leaf_prior_sd
    }

    pub fn counters(&self) -> MoveCounters {
        self.counters
    }

    pub fn is_probit(&self) -> bool {
        matches!(self.resid_mode, ResidualVariance::Fixed(_))
    }

    /// Residual variance on the response scale.
    pub fn resid_var(&self) -> f64 {
        self.resid_var * self.response.scale * self.response.scale
    }

    /// Overrides the residual variance (response scale).
    pub fn set_resid_var(&mut self, v: f64) {
        self.resid_var = v / (self.response.scale * self.response.scale);
    }

    /// Random-intercept variance on the response scale.
    pub fn intercept_var(&self) -> f64 {
        self.intercept_var * self.response.scale * self.response.scale
    }

    /// Random intercept on the response scale; clusters absent from the last
    /// fit contribute zero.
    pub fn intercept(&self, cluster: ClusterIdx) -> f64 {
        match self.intercept_seen.get(cluster.0) {
            Some(true) => self.random_intercepts[cluster.0] * self.response.scale,
            _ => 0.0,
        }
    }

    pub fn set_intercept(&mut self, cluster: ClusterIdx, value: f64) {
        self.random_intercepts[cluster.0] = value / self.response.scale;
        self.intercept_seen[cluster.0] = true;
    }

    pub fn mean_tree_depth(&self) -> f64 {
        self.trees.iter().map(|t| t.max_depth() as f64).sum::<f64>() / self.trees.len() as f64
    }

    fn to_response(&self, internal: f64) -> f64 {
        self.response.shift + self.response.scale * internal
    }

    /// Population-level prediction plus the cluster intercept, if known.
    pub fn predict(&self, x: &[f64], cluster: Option<ClusterIdx>) -> Result<f64> {
        if x.len() != self.n_covariates {
            return Err(Error::Dimension {
                expected: self.n_covariates,
                got: x.len(),
            });
        }
        let fixed: f64 = self.trees.iter().map(|t| t.eval(x)).sum();
        Ok(self.to_response(fixed) + cluster.map_or(0.0, |c| self.intercept(c)))
    }

    /// Same as [`predict`](Self::predict) but on a pre-binned design row.
    pub fn predict_row(&self, design: &Design, row: usize, cluster: Option<ClusterIdx>) -> f64 {
        let bins = design.bins(row);
        let fixed: f64 = self
            .trees
            .iter()
            .map(|t| t.leaf_value(t.leaf_for_bins(bins)))
            .sum();
        self.to_response(fixed) + cluster.map_or(0.0, |c| self.intercept(c))
    }

    /// One full Gibbs sweep: tree moves and leaf draws, intercepts, then the
    /// variance components.
    pub fn backfit_iteration(
        &mut self,
        design: &Design,
        rows: &[usize],
        y: &[f64],
        clusters: &[ClusterIdx],
        rng: &mut RngStream,
    ) -> Result<()> {
        self.sweep_mean(design, rows, y, clusters, true, rng)?;
        self.update_variances(rng);
        Ok(())
    }

    /// Backfit of a probit mean function on the current latent normals.
    pub fn fit_probit_latent(
        &mut self,
        design: &Design,
        rows: &[usize],
        latent: &[f64],
        clusters: &[ClusterIdx],
        rng: &mut RngStream,
    ) -> Result<()> {
        if !self.is_probit() {
            return Err(Error::Contract(
                "fit_probit_latent called on a model with free residual variance".into(),
            ));
        }
        self.backfit_iteration(design, rows, latent, clusters, rng)
    }

    /// Trees, leaves and random intercepts. With `structure_moves = false`
    /// tree shapes are frozen and only leaf values are redrawn.
    pub fn sweep_mean(
        &mut self,
        design: &Design,
        rows: &[usize],
        y: &[f64],
        clusters: &[ClusterIdx],
        structure_moves: bool,
        rng: &mut RngStream,
    ) -> Result<()> {
        let n = rows.len();
        if y.len() != n || clusters.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: y.len().min(clusters.len()),
            });
        }
        if design.n_cols() != self.n_covariates {
            return Err(Error::Dimension {
                expected: self.n_covariates,
                got: design.n_cols(),
            });
        }
        if n == 0 {
            self.last_sweep = None;
            return Ok(());
        }
        let ys: Vec<f64> = y
            .iter()
            .map(|v| (v - self.response.shift) / self.response.scale)
            .collect();
        let k = self.trees.len();
        let mut leaf_of = vec![0u32; k * n];
        let mut total = vec![0.0; n];
        for (t, tree) in self.trees.iter().enumerate() {
            let lo = &mut leaf_of[t * n..(t + 1) * n];
            for j in 0..n {
                let leaf = tree.leaf_for_bins(design.bins(rows[j]));
                lo[j] = leaf as u32;
                total[j] += tree.leaf_value(leaf);
            }
        }
        let b: Vec<f64> = clusters
            .iter()
            .map(|c| {
                if self.intercept_seen[c.0] {
                    self.random_intercepts[c.0]
                } else {
                    0.0
                }
            })
            .collect();

        let mut resid = vec![0.0; n];
        let mut old_fit = vec![0.0; n];
        let tau2 = self.leaf_prior_sd * self.leaf_prior_sd;
        for t in 0..k {
            let lo = &mut leaf_of[t * n..(t + 1) * n];
            {
                let tree = &self.trees[t];
                for j in 0..n {
                    old_fit[j] = tree.leaf_value(lo[j] as usize);
                    resid[j] = ys[j] - (total[j] - old_fit[j]) - b[j];
                }
            }
            if structure_moves {
                self.propose_move(t, design, rows, &resid, lo, rng);
            }
            let tree = &mut self.trees[t];
            let mut stats = vec![(0usize, 0.0f64); tree.arena_len()];
            for j in 0..n {
                let s = &mut stats[lo[j] as usize];
                s.0 += 1;
                s.1 += resid[j];
            }
            for leaf in tree.leaves() {
                let (cnt, sum) = stats[leaf];
                let v = sample_conjugate_normal_mean(0.0, tau2, sum, cnt, self.resid_var, rng);
                tree.set_leaf_value(leaf, v);
            }
            for j in 0..n {
                total[j] += tree.leaf_value(lo[j] as usize) - old_fit[j];
            }
        }

        // Random intercepts from the residuals of the tree fit.
        let nc = self.random_intercepts.len();
        let mut csum = vec![0.0; nc];
        let mut ccount = vec![0usize; nc];
        for j in 0..n {
            csum[clusters[j].0] += ys[j] - total[j];
            ccount[clusters[j].0] += 1;
        }
        for c in 0..nc {
            if ccount[c] == 0 {
                self.random_intercepts[c] = 0.0;
                self.intercept_seen[c] = false;
            } else {
                self.random_intercepts[c] = sample_conjugate_normal_mean(
                    0.0,
                    self.intercept_var,
                    csum[c],
                    ccount[c],
                    self.resid_var,
                    rng,
                );
                self.intercept_seen[c] = true;
            }
        }
        let resid_ss = (0..n)
            .map(|j| {
                let r = ys[j] - total[j] - self.random_intercepts[clusters[j].0];
                r * r
            })
            .sum();
        self.last_sweep = Some(SweepSummary { n, resid_ss });
        Ok(())
    }

    /// Redraws `σ²` (unless pinned) and `σ_b²` from their inverse-gamma full
    /// conditionals given the last sweep. No-op if the last sweep saw no rows.
    pub fn update_variances(&mut self, rng: &mut RngStream) {
        let Some(summary) = self.last_sweep else {
            return;
        };
        if let ResidualVariance::Estimated(prior) = self.resid_mode {
            self.resid_var = sample_inverse_gamma(
                prior.shape + 0.5 * summary.n as f64,
                prior.rate + 0.5 * summary.resid_ss,
                rng,
            );
        }
        let (m, ss) = self
            .random_intercepts
            .iter()
            .zip(&self.intercept_seen)
            .filter(|(_, &s)| s)
            .fold((0usize, 0.0), |(m, ss), (b, _)| (m + 1, ss + b * b));
        if m > 0 {
            self.intercept_var = sample_inverse_gamma(
                self.intercept_prior.shape + 0.5 * m as f64,
                self.intercept_prior.rate + 0.5 * ss,
                rng,
            );
        }
    }

    /// Integrated log likelihood of a leaf holding `n` residuals summing to
    /// `s` (terms common to all leaves dropped).
    fn leaf_loglik(&self, n: usize, s: f64) -> f64 {
        let tau2 = self.leaf_prior_sd * self.leaf_prior_sd;
        let sig2 = self.resid_var;
        let nt = n as f64 * tau2;
        -0.5 * (1.0 + nt / sig2).ln() + tau2 * s * s / (2.0 * sig2 * (sig2 + nt))
    }

    fn propose_move(
        &mut self,
        t: usize,
        design: &Design,
        rows: &[usize],
        resid: &[f64],
        leaf_of: &mut [u32],
        rng: &mut RngStream,
    ) {
        let prior = self.tree_prior;
        let u = rng.uniform();
        if self.trees[t].is_stump() || u < prior.grow_prob {
            self.counters.grow_proposed += 1;
            if self.try_grow(t, design, rows, resid, leaf_of, rng) {
                self.counters.grow_accepted += 1;
            }
        } else if u < prior.grow_prob + prior.prune_prob {
            self.counters.prune_proposed += 1;
            if self.try_prune(t, resid, leaf_of, rng) {
                self.counters.prune_accepted += 1;
            }
        } else {
            self.counters.change_proposed += 1;
            if self.try_change(t, design, rows, resid, leaf_of, rng) {
                self.counters.change_accepted += 1;
            }
        }
    }

    /// Picks a variable among those with admissible cuts at `node`, then a cut
    /// uniformly within its range.
    fn draw_rule(&self, t: usize, node: usize, design: &Design, rng: &mut RngStream) -> Option<(usize, u16)> {
        let grid = design.grid();
        let tree = &self.trees[t];
        let avail: Vec<(usize, (u16, u16))> = (0..self.n_covariates)
            .filter_map(|v| tree.cut_range(node, v, grid.n_cuts(v)).map(|r| (v, r)))
            .collect();
        if avail.is_empty() {
            return None;
        }
        let (var, (lo, hi)) = avail[rng.index(avail.len())];
        let cut = lo + rng.index((hi - lo) as usize + 1) as u16;
        Some((var, cut))
    }

    fn try_grow(
        &mut self,
        t: usize,
        design: &Design,
        rows: &[usize],
        resid: &[f64],
        leaf_of: &mut [u32],
        rng: &mut RngStream,
    ) -> bool {
        let prior = self.tree_prior;
        let tree = &self.trees[t];
        let was_stump = tree.is_stump();
        let leaves = tree.leaves();
        let leaf = leaves[rng.index(leaves.len())];
        let Some((var, cut)) = self.draw_rule(t, leaf, design, rng) else {
            return false;
        };
        let (mut nl, mut sl, mut nr, mut sr) = (0usize, 0.0, 0usize, 0.0);
        for j in 0..rows.len() {
            if leaf_of[j] as usize == leaf {
                if design.bins(rows[j])[var] <= cut {
                    nl += 1;
                    sl += resid[j];
                } else {
                    nr += 1;
                    sr += resid[j];
                }
            }
        }
        if nl < self.min_leaf_size || nr < self.min_leaf_size {
            return false;
        }
        let tree = &self.trees[t];
        let mut nog_after = tree.nog_nodes().len() + 1;
        if let Some(p) = tree.parent(leaf) {
            if tree.nog_nodes().contains(&p) {
                nog_after -= 1;
            }
        }
        let d = tree.depth(leaf);
        let ps = prior.split_prob(d);
        let ps1 = prior.split_prob(d + 1);
        let log_prior = ps.ln() + 2.0 * (1.0 - ps1).ln() - (1.0 - ps).ln();
        let p_grow = if was_stump { 1.0 } else { prior.grow_prob };
        let log_trans = prior.prune_prob.ln() - p_grow.ln() + (leaves.len() as f64).ln()
            - (nog_after as f64).ln();
        let log_lik = self.leaf_loglik(nl, sl) + self.leaf_loglik(nr, sr) - self.leaf_loglik(nl + nr, sl + sr);
        if rng.uniform().ln() >= log_lik + log_prior + log_trans {
            return false;
        }
        let threshold = design.grid().value(var, cut);
        let (l, r) = self.trees[t].split_leaf(leaf, var, cut, threshold, 0.0, 0.0);
        for j in 0..rows.len() {
            if leaf_of[j] as usize == leaf {
                leaf_of[j] = if design.bins(rows[j])[var] <= cut { l } else { r } as u32;
            }
        }
        true
    }

    fn try_prune(&mut self, t: usize, resid: &[f64], leaf_of: &mut [u32], rng: &mut RngStream) -> bool {
        let prior = self.tree_prior;
        let tree = &self.trees[t];
        let nogs = tree.nog_nodes();
        let node = nogs[rng.index(nogs.len())];
        let (l, r) = match *tree.kind(node) {
            crate::bart::tree::NodeKind::Split { left, right, .. } => (left, right),
            crate::bart::tree::NodeKind::Leaf { .. } => unreachable!("nog node is a split"),
        };
        let (mut nl, mut sl, mut nr, mut sr) = (0usize, 0.0, 0usize, 0.0);
        for j in 0..resid.len() {
            let lf = leaf_of[j] as usize;
            if lf == l {
                nl += 1;
                sl += resid[j];
            } else if lf == r {
                nr += 1;
                sr += resid[j];
            }
        }
        let leaves_after = tree.n_leaves() - 1;
        let d = tree.depth(node);
        let ps = prior.split_prob(d);
        let ps1 = prior.split_prob(d + 1);
        let log_prior = -(ps.ln() + 2.0 * (1.0 - ps1).ln() - (1.0 - ps).ln());
        let p_grow_back = if node == RegressionTree::ROOT { 1.0 } else { prior.grow_prob };
        let log_trans = p_grow_back.ln() - prior.prune_prob.ln() + (nogs.len() as f64).ln()
            - (leaves_after as f64).ln();
        let log_lik = self.leaf_loglik(nl + nr, sl + sr) - self.leaf_loglik(nl, sl) - self.leaf_loglik(nr, sr);
        if rng.uniform().ln() >= log_lik + log_prior + log_trans {
            return false;
        }
        self.trees[t].prune(node, 0.0);
        for lf in leaf_of.iter_mut() {
            if *lf as usize == l || *lf as usize == r {
                *lf = node as u32;
            }
        }
        true
    }

    fn try_change(
        &mut self,
        t: usize,
        design: &Design,
        rows: &[usize],
        resid: &[f64],
        leaf_of: &mut [u32],
        rng: &mut RngStream,
    ) -> bool {
        let tree = &self.trees[t];
        let nogs = tree.nog_nodes();
        let node = nogs[rng.index(nogs.len())];
        let (l, r) = match *tree.kind(node) {
            crate::bart::tree::NodeKind::Split { left, right, .. } => (left, right),
            crate::bart::tree::NodeKind::Leaf { .. } => unreachable!("nog node is a split"),
        };
        let Some((var, cut)) = self.draw_rule(t, node, design, rng) else {
            return false;
        };
        let (mut ol, mut osl, mut or, mut osr) = (0usize, 0.0, 0usize, 0.0);
        let (mut nl, mut nsl, mut nr, mut nsr) = (0usize, 0.0, 0usize, 0.0);
        for j in 0..rows.len() {
            let lf = leaf_of[j] as usize;
            if lf != l && lf != r {
                continue;
            }
            if lf == l {
                ol += 1;
                osl += resid[j];
            } else {
                or += 1;
                osr += resid[j];
            }
            if design.bins(rows[j])[var] <= cut {
                nl += 1;
                nsl += resid[j];
            } else {
                nr += 1;
                nsr += resid[j];
            }
        }
        if nl < self.min_leaf_size || nr < self.min_leaf_size {
            return false;
        }
        let log_lik = self.leaf_loglik(nl, nsl) + self.leaf_loglik(nr, nsr)
            - self.leaf_loglik(ol, osl)
            - self.leaf_loglik(or, osr);
        if rng.uniform().ln() >= log_lik {
            return false;
        }
        let threshold = design.grid().value(var, cut);
        self.trees[t].set_rule(node, var, cut, threshold);
        for j in 0..rows.len() {
            let lf = leaf_of[j] as usize;
            if lf == l || lf == r {
                leaf_of[j] = if design.bins(rows[j])[var] <= cut { l } else { r } as u32;
            }
        }
        true
    }

    /// Indented text dump of every tree, leaf values on the response scale.
    pub fn dump(&self, names: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# shift={} scale={} resid_var={} intercept_var={}",
            self.response.shift,
            self.response.scale,
            self.resid_var(),
            self.intercept_var()
        );
        for (k, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {k}");
            tree.render(names, self.response.scale, &mut out);
        }
        out
    }
}
