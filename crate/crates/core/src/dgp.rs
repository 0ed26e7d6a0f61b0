//! Synthetic cluster-randomized trials with known strata and potential
//! outcomes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::data::{
    ClusterIdx, ClusterRecord, ColumnEncoding, EncodedColumn, IndividualRecord, TrialDataset,
};
use crate::error::{Error, Result};
use crate::kernels::{normal_cdf, RngStream};
use crate::strata::{membership_probs, PrincipalStratum};

const S_LAYOUT: u64 = 0xD6_0001;
const S_COVARIATES: u64 = 0xD6_0002;
const S_OUTCOMES: u64 = 0xD6_0003;

/// Marginal distribution of one baseline covariate.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateDist {
    /// Normal, clipped to `[min, max]`.
    Normal { mean: f64, sd: f64, min: f64, max: f64 },
    Bernoulli { p: f64 },
    /// Ordered categories coded `0..k`.
    Ordinal { probs: Vec<f64> },
    /// Overdispersed count (gamma–Poisson) with the given mean and sd.
    Count { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSpec {
    pub name: String,
    pub dist: CovariateDist,
}

fn spec(name: &str, dist: CovariateDist) -> CovariateSpec {
    CovariateSpec {
        name: name.into(),
        dist,
    }
}

/// Baseline covariates with marginals matching the telecare trial cohort.
pub fn wsd_covariates() -> Vec<CovariateSpec> {
    use CovariateDist::*;
    vec![
        spec("age", Normal { mean: 74.13, sd: 13.94, min: 18.0, max: 105.0 }),
        spec("female", Bernoulli { p: 0.3566 }),
        spec("nonwhite", Bernoulli { p: 0.1144 }),
        spec("education", Ordinal { probs: vec![0.6552, 0.1884, 0.0606, 0.0345, 0.0614] }),
        spec("living_alone", Bernoulli { p: 0.529 }),
        spec("comorbidities", Count { mean: 1.09, sd: 1.45 }),
        spec("deprivation", Normal { mean: 28.13, sd: 15.04, min: 1.89, max: 66.49 }),
        spec("physical", Normal { mean: 28.09, sd: 8.62, min: 0.0, max: 100.0 }),
        spec("mental", Normal { mean: 33.05, sd: 7.87, min: 0.0, max: 100.0 }),
        spec("vas_baseline", Normal { mean: 53.04, sd: 22.02, min: 0.0, max: 100.0 }),
    ]
}

/// Treatment effect among survivors under treatment, `Y(1) − Y(0)`.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectSpec {
    None,
    Constant(f64),
    /// `size · 1[x[covariate] > cut]`.
    Step { covariate: String, cut: f64, size: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub n_clusters: usize,
    /// Exact total sample size; `None` keeps the drawn cluster sizes.
    pub n_individuals: Option<usize>,
    pub cluster_size_range: (usize, usize),
    /// Fraction of clusters assigned to treatment.
    pub treatment_fraction: f64,
    pub covariates: Vec<CovariateSpec>,
    /// Target stratum proportions `(00, 10, 11)`.
    pub strata_props: [f64; 3],
    /// SD of the cluster effect on both membership latents.
    pub strata_cluster_sd: f64,
    pub outcome_sd: f64,
    /// Multiplier on the covariate-driven part of the outcome mean.
    pub prognostic_scale: f64,
    /// SD of the cluster random intercept in the outcome.
    pub intercept_sd: f64,
    pub effect: EffectSpec,
    /// Outcome shift of the protected stratum relative to always-survivors.
    pub protected_shift: f64,
    /// Overall probability that survival status is unrecorded.
    pub status_missing_rate: f64,
    /// Probability that a recorded survivor's outcome is missing.
    pub outcome_missing_rate: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n_clusters: 200,
            n_individuals: Some(1200),
            cluster_size_range: (1, 26),
            treatment_fraction: 0.5,
            covariates: wsd_covariates(),
            strata_props: [0.12, 0.04, 0.84],
            strata_cluster_sd: 0.3,
            outcome_sd: 10.0,
            prognostic_scale: 1.0,
            intercept_sd: 3.0,
            effect: EffectSpec::Step {
                covariate: "deprivation".into(),
                cut: 15.0,
                size: 4.0,
            },
            protected_shift: -8.0,
            status_missing_rate: 0.199,
            outcome_missing_rate: 0.0755,
            seed: 1,
        }
    }
}

impl DgpConfig {
    /// Trial-sized preset: 1189 individuals in 204 clusters of size 1–26,
    /// stratum composition and missingness close to the telecare cohort.
    pub fn wsd() -> Self {
        Self {
            n_clusters: 204,
            n_individuals: Some(1189),
            strata_props: [0.124, 0.032, 0.844],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let (lo, hi) = self.cluster_size_range;
        if self.n_clusters < 2 {
            return bad("n_clusters must be at least 2".into());
        }
        if lo == 0 || lo > hi {
            return bad(format!("invalid cluster_size_range ({lo}, {hi})"));
        }
        if let Some(n) = self.n_individuals {
            if n < self.n_clusters * lo || n > self.n_clusters * hi {
                return bad(format!(
                    "n_individuals {n} cannot be split into {} clusters of size {lo}-{hi}",
                    self.n_clusters
                ));
            }
        }
        for (name, r) in [
            ("treatment_fraction", self.treatment_fraction),
            ("status_missing_rate", self.status_missing_rate),
            ("outcome_missing_rate", self.outcome_missing_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} must lie in [0, 1], got {r}"));
            }
        }
        let treated = (self.n_clusters as f64 * self.treatment_fraction).round() as usize;
        if treated == 0 || treated == self.n_clusters {
            return bad("treatment_fraction leaves an arm without clusters".into());
        }
        let total: f64 = self.strata_props.iter().sum();
        if self.strata_props.iter().any(|&p| !(p > 0.0 && p < 1.0)) || (total - 1.0).abs() > 1e-9 {
            return bad("strata_props must be in (0, 1) and sum to 1".into());
        }
        for (name, v) in [
            ("outcome_sd", self.outcome_sd),
            ("intercept_sd", self.intercept_sd),
            ("strata_cluster_sd", self.strata_cluster_sd),
            ("prognostic_scale", self.prognostic_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number"));
            }
        }
        if self.covariates.is_empty() {
            return bad("at least one covariate is required".into());
        }
        for c in &self.covariates {
            let ok = match &c.dist {
                CovariateDist::Normal { sd, min, max, .. } => *sd >= 0.0 && min <= max,
                CovariateDist::Bernoulli { p } => (0.0..=1.0).contains(p),
                CovariateDist::Ordinal { probs } => {
                    !probs.is_empty() && probs.iter().all(|&p| p >= 0.0) && probs.iter().sum::<f64>() > 0.0
                }
                CovariateDist::Count { mean, sd } => *mean > 0.0 && sd * sd > *mean,
            };
            if !ok {
                return bad(format!("invalid distribution for covariate '{}'", c.name));
            }
        }
        if let EffectSpec::Step { covariate, .. } = &self.effect {
            if !self.covariates.iter().any(|c| &c.name == covariate) {
                return bad(format!("effect covariate '{covariate}' is not generated"));
            }
        }
        Ok(())
    }

    /// `key = value` echo of the configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_clusters = {}", self.n_clusters);
        let _ = writeln!(
            out,
            "n_individuals = {}",
            self.n_individuals.map_or_else(|| "auto".into(), |n| n.to_string())
        );
        let _ = writeln!(out, "cluster_size_min = {}", self.cluster_size_range.0);
        let _ = writeln!(out, "cluster_size_max = {}", self.cluster_size_range.1);
        let _ = writeln!(out, "treatment_fraction = {}", self.treatment_fraction);
        let _ = writeln!(out, "prop_never_survivor = {}", self.strata_props[0]);
        let _ = writeln!(out, "prop_protected = {}", self.strata_props[1]);
        let _ = writeln!(out, "prop_always_survivor = {}", self.strata_props[2]);
        let _ = writeln!(out, "strata_cluster_sd = {}", self.strata_cluster_sd);
        let _ = writeln!(out, "outcome_sd = {}", self.outcome_sd);
        let _ = writeln!(out, "prognostic_scale = {}", self.prognostic_scale);
        let _ = writeln!(out, "intercept_sd = {}", self.intercept_sd);
        match &self.effect {
            EffectSpec::None => {
                let _ = writeln!(out, "effect = none");
            }
            EffectSpec::Constant(t) => {
                let _ = writeln!(out, "effect = constant");
                let _ = writeln!(out, "effect_size = {t}");
            }
            EffectSpec::Step { covariate, cut, size } => {
                let _ = writeln!(out, "effect = step");
                let _ = writeln!(out, "effect_covariate = {covariate}");
                let _ = writeln!(out, "effect_cut = {cut}");
                let _ = writeln!(out, "effect_size = {size}");
            }
        }
        let _ = writeln!(out, "protected_shift = {}", self.protected_shift);
        let _ = writeln!(out, "status_missing_rate = {}", self.status_missing_rate);
        let _ = writeln!(out, "outcome_missing_rate = {}", self.outcome_missing_rate);
        let _ = writeln!(out, "seed = {}", self.seed);
        out
    }
}

/// Everything the estimator never sees.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub labels: Vec<PrincipalStratum>,
    /// Defined for strata that survive under treatment.
    pub y1: Vec<Option<f64>>,
    /// Defined for always-survivors only.
    pub y0: Vec<Option<f64>>,
    pub effect: Vec<f64>,
    /// Outcome random intercept of each individual's cluster.
    pub cluster_intercept: Vec<f64>,
    /// Expected membership probabilities given covariates and cluster effects.
    pub membership: Vec<[f64; 3]>,
}

impl GroundTruth {
    /// Mean of `Y(1) − Y(0)` over true always-survivors.
    pub fn true_sace(&self) -> f64 {
        let d: Vec<f64> = self
            .y1
            .iter()
            .zip(&self.y0)
            .filter_map(|(a, b)| Some((*a)? - (*b)?))
            .collect();
        d.iter().sum::<f64>() / d.len().max(1) as f64
    }

    /// Realized stratum proportions `(00, 10, 11)`.
    pub fn proportions(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for g in &self.labels {
            c[g.index()] += 1.0;
        }
        let n = self.labels.len() as f64;
        c.map(|v| v / n)
    }

    pub fn write_csv(&self, ds: &TrialDataset, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["individual", "cluster_id", "g", "y1", "y0", "effect", "b"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for i in 0..self.labels.len() {
            w.write_record([
                i.to_string(),
                ds.clusters[ds.individuals[i].cluster.0].id.clone(),
                self.labels[i].code().to_string(),
                opt(self.y1[i]),
                opt(self.y0[i]),
                format!("{}", self.effect[i]),
                format!("{}", self.cluster_intercept[i]),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn draw_covariate(dist: &CovariateDist, rng: &mut RngStream) -> f64 {
    match dist {
        CovariateDist::Normal { mean, sd, min, max } => rng.normal(*mean, *sd).clamp(*min, *max),
        CovariateDist::Bernoulli { p } => f64::from(u8::from(rng.bernoulli(*p))),
        CovariateDist::Ordinal { probs } => {
            let total: f64 = probs.iter().sum();
            let u = rng.uniform() * total;
            let mut acc = 0.0;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return k as f64;
                }
            }
            (probs.len() - 1) as f64
        }
        CovariateDist::Count { mean, sd } => {
            let shape = mean * mean / (sd * sd - mean);
            let rate: f64 = Gamma::new(shape, mean / shape).expect("valid gamma").sample(rng);
            if rate <= 0.0 {
                0.0
            } else {
                Poisson::new(rate).expect("valid poisson").sample(rng)
            }
        }
    }
}

/// Standardized covariate lookup by name with a fallback of zero, so the
/// truth functions work for any covariate list.
struct Features {
    idx: Vec<Option<usize>>,
    centre: Vec<f64>,
    scale: Vec<f64>,
}

const F_AGE: usize = 0;
const F_DEP: usize = 1;
const F_PHYS: usize = 2;
const F_MENT: usize = 3;
const F_VAS: usize = 4;
const F_COMORB: usize = 5;
const F_ALONE: usize = 6;
const F_EDU: usize = 7;

impl Features {
    fn new(specs: &[CovariateSpec]) -> Self {
        let names = [
            "age",
            "deprivation",
            "physical",
            "mental",
            "vas_baseline",
            "comorbidities",
            "living_alone",
            "education",
        ];
        let mut idx = Vec::new();
        let mut centre = Vec::new();
        let mut scale = Vec::new();
        for n in names {
            let k = specs.iter().position(|s| s.name == n);
            let (c, s) = match k.map(|k| &specs[k].dist) {
                Some(CovariateDist::Normal { mean, sd, .. }) => (*mean, sd.max(1e-12)),
                Some(CovariateDist::Count { mean, sd }) => (*mean, *sd),
                _ => (0.0, 1.0),
            };
            idx.push(k);
            centre.push(c);
            scale.push(s);
        }
        Self { idx, centre, scale }
    }

    fn get(&self, x: &[f64], f: usize) -> f64 {
        self.idx[f].map_or(0.0, |k| (x[k] - self.centre[f]) / self.scale[f])
    }

    fn q_score(&self, x: &[f64]) -> f64 {
        let a = self.get(x, F_AGE);
        0.5 * self.get(x, F_PHYS) - 0.4 * a - 0.25 * a * a.abs().min(2.0)
            - 0.2 * self.get(x, F_COMORB)
            + 0.3 * (1.5 * self.get(x, F_DEP)).sin()
    }

    fn w_score(&self, x: &[f64]) -> f64 {
        0.5 * self.get(x, F_VAS) + 0.4 * self.get(x, F_MENT) - 0.3 * self.get(x, F_ALONE)
            + 0.3 * (self.get(x, F_PHYS) > 0.5) as u8 as f64
    }

    /// Covariate-driven part of the outcome mean, around zero.
    fn outcome_shape(&self, x: &[f64]) -> f64 {
        let a = self.get(x, F_AGE);
        8.0 * self.get(x, F_VAS) + 4.0 * self.get(x, F_PHYS) + 3.0 * self.get(x, F_MENT)
            - 2.0 * a * a
            + 1.5 * self.get(x, F_EDU)
            + 3.0 * (self.get(x, F_DEP) > 1.0) as u8 as f64
    }
}

/// Root of `f(α) = target` for an increasing `f` by bisection.
fn calibrate(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (-20.0, 20.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn cluster_sizes(cfg: &DgpConfig, rng: &mut RngStream) -> Vec<usize> {
    let (lo, hi) = cfg.cluster_size_range;
    let target_mean = cfg
        .n_individuals
        .map_or((lo + hi) as f64 / 4.0, |n| n as f64 / cfg.n_clusters as f64);
    // Right-skewed sizes: lo + gamma–Poisson excess.
    let excess = (target_mean - lo as f64).max(0.0);
    let mut sizes: Vec<usize> = (0..cfg.n_clusters)
        .map(|_| {
            let extra = if excess > 0.0 {
                let lam: f64 = Gamma::new(1.5, excess / 1.5).expect("valid gamma").sample(rng);
                if lam > 0.0 {
                    Poisson::new(lam).expect("valid poisson").sample(rng) as usize
                } else {
                    0
                }
            } else {
                0
            };
            (lo + extra).min(hi)
        })
        .collect();
    if let Some(n) = cfg.n_individuals {
        let mut total: usize = sizes.iter().sum();
        while total != n {
            let k = rng.index(cfg.n_clusters);
            if total < n && sizes[k] < hi {
                sizes[k] += 1;
                total += 1;
            } else if total > n && sizes[k] > lo {
                sizes[k] -= 1;
                total -= 1;
            }
        }
    }
    sizes
}

/// Draws one synthetic trial and its ground truth.
pub fn generate(cfg: &DgpConfig) -> Result<(TrialDataset, GroundTruth)> {
    cfg.validate()?;
    let mut layout = RngStream::keyed(cfg.seed, &[S_LAYOUT]);
    let sizes = cluster_sizes(cfg, &mut layout);
    let n_treated = (cfg.n_clusters as f64 * cfg.treatment_fraction).round() as usize;
    let mut arms: Vec<u8> = (0..cfg.n_clusters).map(|k| u8::from(k < n_treated)).collect();
    arms.shuffle(&mut layout);

    let feats = Features::new(&cfg.covariates);
    let p = cfg.covariates.len();

    // Covariates and cluster effects, one stream per cluster.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut member: Vec<usize> = Vec::new();
    let mut uq = Vec::with_capacity(cfg.n_clusters);
    let mut uw = Vec::with_capacity(cfg.n_clusters);
    let mut ub = Vec::with_capacity(cfg.n_clusters);
    for (k, &size) in sizes.iter().enumerate() {
        let mut rng = RngStream::keyed(cfg.seed, &[S_COVARIATES, k as u64]);
        uq.push(cfg.strata_cluster_sd * rng.standard_normal());
        uw.push(cfg.strata_cluster_sd * rng.standard_normal());
        ub.push(cfg.intercept_sd * rng.standard_normal());
        for _ in 0..size {
            rows.push(cfg.covariates.iter().map(|c| draw_covariate(&c.dist, &mut rng)).collect());
            member.push(k);
        }
    }
    let n = rows.len();
    let zs: Vec<u8> = member.iter().map(|&k| arms[k]).collect();

    // Intercepts that reproduce the target composition and missingness on
    // this covariate sample.
    let sq: Vec<f64> = (0..n).map(|i| feats.q_score(&rows[i]) + uq[member[i]]).collect();
    let sw: Vec<f64> = (0..n).map(|i| feats.w_score(&rows[i]) + uw[member[i]]).collect();
    let capable = 1.0 - cfg.strata_props[0];
    let aq = calibrate(capable, |a| sq.iter().map(|s| normal_cdf(a + s)).sum::<f64>() / n as f64);
    let pq: Vec<f64> = sq.iter().map(|s| normal_cdf(aq + s)).collect();
    let cap_mass: f64 = pq.iter().sum();
    let aw = calibrate(cfg.strata_props[2] / capable, |a| {
        pq.iter().zip(&sw).map(|(q, s)| q * normal_cdf(a + s)).sum::<f64>() / cap_mass
    });
    let ms: Vec<f64> = (0..n)
        .map(|i| 0.3 * f64::from(zs[i]) - 0.3 * feats.get(&rows[i], F_AGE) + 0.2 * feats.get(&rows[i], F_DEP))
        .collect();
    let my: Vec<f64> = (0..n)
        .map(|i| 0.2 * f64::from(zs[i]) + 0.3 * feats.get(&rows[i], F_AGE))
        .collect();
    let rate_intercept = |rate: f64, scores: &[f64]| -> Option<f64> {
        if rate <= 0.0 || rate >= 1.0 {
            return None;
        }
        Some(calibrate(rate, |a| scores.iter().map(|s| logistic(a + s)).sum::<f64>() / n as f64))
    };
    let as_ = rate_intercept(cfg.status_missing_rate, &ms);
    let ay = rate_intercept(cfg.outcome_missing_rate, &my);
    let miss_prob = |a: Option<f64>, rate: f64, s: f64| a.map_or(rate, |a| logistic(a + s));

    let effect_of = |x: &[f64]| -> f64 {
        match &cfg.effect {
            EffectSpec::None => 0.0,
            EffectSpec::Constant(t) => *t,
            EffectSpec::Step { covariate, cut, size } => {
                let k = cfg.covariates.iter().position(|c| &c.name == covariate).expect("validated");
                if x[k] > *cut {
                    *size
                } else {
                    0.0
                }
            }
        }
    };

    let mut truth = GroundTruth {
        labels: Vec::with_capacity(n),
        y1: Vec::with_capacity(n),
        y0: Vec::with_capacity(n),
        effect: Vec::with_capacity(n),
        cluster_intercept: Vec::with_capacity(n),
        membership: Vec::with_capacity(n),
    };
    let mut individuals = Vec::with_capacity(n);
    let mut start = 0;
    for (k, &size) in sizes.iter().enumerate() {
        let mut rng = RngStream::keyed(cfg.seed, &[S_OUTCOMES, k as u64]);
        for i in start..start + size {
            let x = &rows[i];
            let z = zs[i];
            let probs = membership_probs(aq + sq[i], aw + sw[i]);
            let q = aq + sq[i] + rng.standard_normal();
            let w = aw + sw[i] + rng.standard_normal();
            let g = match (q > 0.0, w > 0.0) {
                (false, _) => PrincipalStratum::NeverSurvivor,
                (true, false) => PrincipalStratum::Protected,
                (true, true) => PrincipalStratum::AlwaysSurvivor,
            };
            let tau = effect_of(x);
            let base = 50.0 + cfg.prognostic_scale * feats.outcome_shape(x) + ub[k];
            let eps = cfg.outcome_sd * rng.standard_normal();
            let (y1, y0) = match g {
                PrincipalStratum::AlwaysSurvivor => (Some(base + tau + eps), Some(base + eps)),
                PrincipalStratum::Protected => (Some(base + cfg.protected_shift + tau + eps), None),
                PrincipalStratum::NeverSurvivor => (None, None),
            };
            let s = g.survives(z);
            let y = if z == 1 { y1 } else { y0 };
            let r_s = !rng.bernoulli(miss_prob(as_, cfg.status_missing_rate, ms[i]));
            let y_missing = rng.bernoulli(miss_prob(ay, cfg.outcome_missing_rate, my[i]));
            let r_y = r_s && s && !y_missing;
            individuals.push(IndividualRecord {
                cluster: ClusterIdx(k),
                covariates: x.clone(),
                r_s,
                s_obs: r_s.then_some(s),
                r_y,
                y_obs: if r_y { y } else { None },
            });
            truth.labels.push(g);
            truth.y1.push(y1);
            truth.y0.push(y0);
            truth.effect.push(tau);
            truth.cluster_intercept.push(ub[k]);
            truth.membership.push(probs.as_array());
        }
        start += size;
    }

    let width = cfg.n_clusters.to_string().len().max(3);
    let clusters = (0..cfg.n_clusters)
        .map(|k| ClusterRecord {
            id: format!("c{:0width$}", k + 1),
            z: arms[k],
            size: sizes[k],
        })
        .collect();
    let columns = cfg
        .covariates
        .iter()
        .map(|c| EncodedColumn {
            name: c.name.clone(),
            source: c.name.clone(),
            encoding: match c.dist {
                CovariateDist::Ordinal { .. } => ColumnEncoding::OrdinalRank,
                _ => ColumnEncoding::Continuous,
            },
        })
        .collect::<Vec<_>>();
    debug_assert_eq!(p, columns.len());
    let ds = TrialDataset::new(clusters, individuals, columns)?;
    Ok((ds, truth))
}

/// Writes `data.csv`, `truth.csv` and `dgp_config.txt` into `dir`.
pub fn write_outputs(cfg: &DgpConfig, ds: &TrialDataset, truth: &GroundTruth, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    ds.write_csv(&dir.join("data.csv"))?;
    truth.write_csv(ds, &dir.join("truth.csv"))?;
    let echo = dir.join("dgp_config.txt");
    fs::write(&echo, cfg.echo()).map_err(|e| Error::io(&echo, e))
}
