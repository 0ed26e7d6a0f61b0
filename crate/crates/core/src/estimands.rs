//! Posterior summaries: SACE, per-individual CSACE, stratum proportions and
//! likely always-survivors.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gibbs::PosteriorStore;
use crate::strata::PrincipalStratum;

/// Posterior mean with an equal-tailed 95% credible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// `mean [lo, hi]` with `digits` decimals.
    pub fn display(&self, digits: usize) -> String {
        format!("{:.*} [{:.*}, {:.*}]", digits, self.mean, digits, self.lo, digits, self.hi)
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (`h = (n − 1)p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and 2.5%/97.5% quantiles. The interval is widened to include the
/// mean when rounding would otherwise put it outside.
pub fn summarize(values: &[f64]) -> Interval {
    assert!(!values.is_empty(), "summary of an empty sample");
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Interval {
        mean,
        lo: quantile_sorted(&sorted, 0.025).min(mean),
        hi: quantile_sorted(&sorted, 0.975).max(mean),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaceResult {
    pub summary: Interval,
    /// Per-draw SACE, pooled in chain order over draws that had at least one
    /// always-survivor.
    pub draws: Vec<f64>,
    /// Draws without any individual labeled 11.
    pub skipped_draws: usize,
}

/// SACE per draw as the average `Ŷ(1) − Ŷ(0)` over individuals labeled 11,
/// then summarized over draws.
pub fn compute_sace(store: &PosteriorStore) -> Result<SaceResult> {
    if store.n_draws() == 0 {
        return Err(Error::Contract("posterior store has no draws".into()));
    }
    let mut draws = Vec::with_capacity(store.n_draws());
    let mut skipped = 0;
    for (chain, d) in store.draws() {
        let (mut sum, mut cnt) = (0.0, 0usize);
        for i in 0..store.n_individuals {
            if let Some((y1, y0)) = chain.pair(d, i) {
                sum += y1 - y0;
                cnt += 1;
            }
        }
        if cnt == 0 {
            skipped += 1;
        } else {
            draws.push(sum / cnt as f64);
        }
    }
    if draws.is_empty() {
        return Err(Error::Contract("no draw contains an always-survivor".into()));
    }
    Ok(SaceResult {
        summary: summarize(&draws),
        draws,
        skipped_draws: skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsaceEntry {
    pub individual: usize,
    /// Draws in which the individual was labeled 11.
    pub n_draws: usize,
    pub summary: Interval,
}

/// Per-individual CSACE over the draws in which the individual is labeled 11;
/// individuals never labeled 11 are omitted.
pub fn compute_csace(store: &PosteriorStore) -> Vec<CsaceEntry> {
    let n = store.n_individuals;
    let mut per: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (chain, d) in store.draws() {
        for (i, v) in per.iter_mut().enumerate() {
            if let Some((y1, y0)) = chain.pair(d, i) {
                v.push(y1 - y0);
            }
        }
    }
    per.into_iter()
        .enumerate()
        .filter(|(_, v)| !v.is_empty())
        .map(|(i, v)| CsaceEntry {
            individual: i,
            n_draws: v.len(),
            summary: summarize(&v),
        })
        .collect()
}

/// SACE rebuilt from individual contrasts weighted by `1 / (n_d · D)`, where
/// `n_d` is the number of always-survivors in draw `d` and `D` the number of
/// draws with `n_d > 0`. Equals the SACE posterior mean up to rounding.
pub fn sace_from_weighted_contrasts(store: &PosteriorStore) -> f64 {
    let used = store
        .draws()
        .filter(|(c, d)| c.counts[*d][PrincipalStratum::AlwaysSurvivor.index()] > 0)
        .count() as f64;
    let mut total = 0.0;
    for i in 0..store.n_individuals {
        for (chain, d) in store.draws() {
            if let Some((y1, y0)) = chain.pair(d, i) {
                let nd = chain.counts[d][PrincipalStratum::AlwaysSurvivor.index()] as f64;
                total += (y1 - y0) / (nd * used);
            }
        }
    }
    total
}

/// Proportion of individuals in each stratum per draw, in `(00, 10, 11)`
/// order.
pub fn stratum_proportions(store: &PosteriorStore) -> Result<[Interval; 3]> {
    if store.n_draws() == 0 {
        return Err(Error::Contract("posterior store has no draws".into()));
    }
    let n = store.n_individuals as f64;
    let mut series: [Vec<f64>; 3] = Default::default();
    for (chain, d) in store.draws() {
        for (k, s) in series.iter_mut().enumerate() {
            s.push(chain.counts[d][k] as f64 / n);
        }
    }
    Ok([summarize(&series[0]), summarize(&series[1]), summarize(&series[2])])
}

/// Fraction of retained draws in which each individual is labeled 11.
pub fn always_survivor_prob(store: &PosteriorStore) -> Vec<f64> {
    let mut hits = vec![0usize; store.n_individuals];
    for (chain, d) in store.draws() {
        for (i, &g) in chain.labels(d).iter().enumerate() {
            if g == PrincipalStratum::AlwaysSurvivor {
                hits[i] += 1;
            }
        }
    }
    let total = store.n_draws().max(1) as f64;
    hits.into_iter().map(|h| h as f64 / total).collect()
}

/// Control-arm observed survivors, plus anyone whose always-survivor
/// probability reaches `threshold`.
pub fn likely_always_survivors(prob: &[f64], z: &[u8], s_obs: &[Option<bool>], threshold: f64) -> Vec<bool> {
    prob.iter()
        .zip(z)
        .zip(s_obs)
        .map(|((&p, &z), &s)| (z == 0 && s == Some(true)) || p >= threshold)
        .collect()
}

/// Individual-by-draw CSACE values for a subset of individuals, `NaN` where
/// the individual is not labeled 11 in the draw.
#[derive(Debug, Clone, PartialEq)]
pub struct CsaceDraws {
    pub n_draws: usize,
    /// Individual indices, one per column.
    pub individuals: Vec<usize>,
    /// Draw-major values.
    pub values: Vec<f64>,
}

impl CsaceDraws {
    pub fn from_store(store: &PosteriorStore, individuals: &[usize]) -> Self {
        let mut values = Vec::with_capacity(store.n_draws() * individuals.len());
        for (chain, d) in store.draws() {
            for &i in individuals {
                values.push(chain.pair(d, i).map_or(f64::NAN, |(y1, y0)| y1 - y0));
            }
        }
        Self {
            n_draws: store.n_draws(),
            individuals: individuals.to_vec(),
            values,
        }
    }

    pub fn get(&self, draw: usize, col: usize) -> f64 {
        self.values[draw * self.individuals.len() + col]
    }
}

/// Everything reported for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimandSummary {
    pub n_draws: usize,
    pub sace: SaceResult,
    /// `(00, 10, 11)` order.
    pub stratum_props: [Interval; 3],
    /// Indexed by individual; `None` if never labeled 11.
    pub csace: Vec<Option<CsaceEntry>>,
    pub always_survivor_prob: Vec<f64>,
    pub likely_always_survivor: Vec<bool>,
    pub threshold: f64,
}

impl EstimandSummary {
    pub fn from_store(store: &PosteriorStore, z: &[u8], s_obs: &[Option<bool>], threshold: f64) -> Result<Self> {
        if z.len() != store.n_individuals || s_obs.len() != store.n_individuals {
            return Err(Error::Dimension {
                expected: store.n_individuals,
                got: z.len().min(s_obs.len()),
            });
        }
        let sace = compute_sace(store)?;
        let stratum_props = stratum_proportions(store)?;
        let mut csace = vec![None; store.n_individuals];
        for e in compute_csace(store) {
            let i = e.individual;
            csace[i] = Some(e);
        }
        let prob = always_survivor_prob(store);
        let flags = likely_always_survivors(&prob, z, s_obs, threshold);
        Ok(Self {
            n_draws: store.n_draws(),
            sace,
            stratum_props,
            csace,
            always_survivor_prob: prob,
            likely_always_survivor: flags,
            threshold,
        })
    }

    /// Three proportion rows and the SACE row.
    pub fn table(&self) -> String {
        let rows = [
            ("Proportion of always-survivors", self.stratum_props[2]),
            ("Proportion of protected", self.stratum_props[1]),
            ("Proportion of never-survivors", self.stratum_props[0]),
            ("SACE", self.sace.summary),
        ];
        let mut out = String::new();
        let _ = writeln!(out, "{:<32}{:>10}  95% CrI", "Quantity", "Estimate");
        for (name, iv) in rows {
            let _ = writeln!(out, "{:<32}{:>10.3}  [{:.3}, {:.3}]", name, iv.mean, iv.lo, iv.hi);
        }
        out
    }

    /// Key–value text form.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let names = ["never_survivor", "protected", "always_survivor"];
        let _ = writeln!(out, "n_draws = {}", self.n_draws);
        let _ = writeln!(out, "sace_mean = {:.6}", self.sace.summary.mean);
        let _ = writeln!(out, "sace_cri_lo = {:.6}", self.sace.summary.lo);
        let _ = writeln!(out, "sace_cri_hi = {:.6}", self.sace.summary.hi);
        let _ = writeln!(out, "sace_skipped_draws = {}", self.sace.skipped_draws);
        for (k, name) in names.iter().enumerate() {
            let iv = self.stratum_props[k];
            let _ = writeln!(out, "prop_{name}_mean = {:.6}", iv.mean);
            let _ = writeln!(out, "prop_{name}_cri_lo = {:.6}", iv.lo);
            let _ = writeln!(out, "prop_{name}_cri_hi = {:.6}", iv.hi);
        }
        let _ = writeln!(out, "likely_always_survivor_threshold = {}", self.threshold);
        let _ = writeln!(
            out,
            "likely_always_survivors = {}",
            self.likely_always_survivor.iter().filter(|&&f| f).count()
        );
        out
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_key_value()).map_err(|e| Error::io(path, e))
    }

    /// One row per individual labeled 11 in at least one draw.
    pub fn write_csace_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["individual", "always_survivor_prob", "csace_mean", "cri_lo", "cri_hi", "flagged"])?;
        for (i, e) in self.csace.iter().enumerate() {
            let Some(e) = e else { continue };
            w.write_record([
                i.to_string(),
                format!("{:.6}", self.always_survivor_prob[i]),
                format!("{:.6}", e.summary.mean),
                format!("{:.6}", e.summary.lo),
                format!("{:.6}", e.summary.hi),
                u8::from(self.likely_always_survivor[i]).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
