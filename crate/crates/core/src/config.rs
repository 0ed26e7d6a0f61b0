//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is optional;
//! unknown keys are rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::cart::CartParams;
use crate::data::{CovariateKind, Schema};
use crate::dgp::{DgpConfig, EffectSpec};
use crate::error::{Error, Result};
use crate::gibbs::{SamplerConfig, WFitSubset};

/// Everything a run can be configured with.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub dgp: DgpConfig,
    pub schema: Schema,
    pub cart: CartParams,
    /// Posterior probability above which a treated individual is treated as a
    /// likely always-survivor.
    pub likely_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerConfig::default(),
            dgp: DgpConfig::default(),
            schema: Schema::default(),
            cart: CartParams::default(),
            likely_threshold: 0.8,
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "seed",
    "n_iter",
    "burn_in",
    "thin",
    "n_chains",
    "k_trees",
    "alpha",
    "beta",
    "k",
    "grow_prob",
    "prune_prob",
    "change_prob",
    "min_leaf_size",
    "max_cuts",
    "w_fit",
    "noisy_counterfactuals",
    "init_sweeps",
    "min_subset_for_structure",
    "check_invariants",
    "likely_threshold",
    "cart_max_depth",
    "cart_min_node_size",
    "cart_min_rel_gain",
    "column_cluster_id",
    "column_z",
    "column_r_s",
    "column_s_obs",
    "column_r_y",
    "column_y_obs",
    "covariates",
    "ordinal",
    "nominal",
    "n_clusters",
    "n_individuals",
    "cluster_size_min",
    "cluster_size_max",
    "treatment_fraction",
    "prop_never_survivor",
    "prop_protected",
    "prop_always_survivor",
    "strata_cluster_sd",
    "outcome_sd",
    "prognostic_scale",
    "intercept_sd",
    "effect",
    "effect_size",
    "effect_covariate",
    "effect_cut",
    "protected_shift",
    "status_missing_rate",
    "outcome_missing_rate",
];

/// Parsed key–value pairs with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {line_no}: expected 'key = value'")));
            };
            let key = key.trim().to_string();
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {line_no}: unknown key '{key}'")));
            }
            if entries.insert(key.clone(), (line_no, value.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {line_no}: duplicate key '{key}'")));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: invalid value '{v}' for '{key}'"))),
        }
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn bool(&self, key: &str, slot: &mut bool) -> Result<()> {
        if let Some((line, v)) = self.entries.get(key) {
            *slot = match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                _ => return Err(Error::Config(format!("line {line}: '{key}' expects true or false"))),
            };
        }
        Ok(())
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// `name:level|level|...` entries separated by commas; levels are optional.
fn kinds(v: &str, ordinal: bool) -> Result<Vec<(String, CovariateKind)>> {
    list(v)
        .into_iter()
        .map(|item| {
            let (name, levels) = match item.split_once(':') {
                Some((n, l)) => (n.trim().to_string(), l.split('|').map(|s| s.trim().to_string()).collect()),
                None => (item, Vec::new()),
            };
            if ordinal && levels.is_empty() {
                return Err(Error::Config(format!("ordinal covariate '{name}' needs its levels")));
            }
            let kind = if ordinal {
                CovariateKind::Ordinal { levels }
            } else {
                CovariateKind::Nominal { levels }
            };
            Ok((name, kind))
        })
        .collect()
}

impl RunConfig {
    pub fn from_kv(kv: &KvFile) -> Result<Self> {
        let mut c = Self::default();
        let s = &mut c.sampler;
        kv.set("seed", &mut s.seed)?;
        kv.set("n_iter", &mut s.n_iter)?;
        kv.set("burn_in", &mut s.burn_in)?;
        kv.set("thin", &mut s.thin)?;
        kv.set("n_chains", &mut s.n_chains)?;
        kv.set("k_trees", &mut s.bart.n_trees)?;
        kv.set("alpha", &mut s.bart.tree_prior.alpha)?;
        kv.set("beta", &mut s.bart.tree_prior.beta)?;
        kv.set("k", &mut s.bart.k)?;
        kv.set("grow_prob", &mut s.bart.tree_prior.grow_prob)?;
        kv.set("prune_prob", &mut s.bart.tree_prior.prune_prob)?;
        kv.set("change_prob", &mut s.bart.tree_prior.change_prob)?;
        kv.set("min_leaf_size", &mut s.bart.min_leaf_size)?;
        kv.set("max_cuts", &mut s.max_cuts)?;
        if let Some(v) = kv.raw("w_fit") {
            s.w_fit = match v {
                "all" => WFitSubset::All,
                "survivor_capable" => WFitSubset::SurvivorCapable,
                _ => return Err(Error::Config(format!("w_fit must be 'all' or 'survivor_capable', got '{v}'"))),
            };
        }
        kv.bool("noisy_counterfactuals", &mut s.noisy_counterfactuals)?;
        kv.set("init_sweeps", &mut s.init_sweeps)?;
        kv.set("min_subset_for_structure", &mut s.min_subset_for_structure)?;
        kv.bool("check_invariants", &mut s.check_invariants)?;

        kv.set("likely_threshold", &mut c.likely_threshold)?;
        kv.set("cart_max_depth", &mut c.cart.max_depth)?;
        kv.set("cart_min_node_size", &mut c.cart.min_node_size)?;
        kv.set("cart_min_rel_gain", &mut c.cart.min_rel_gain)?;

        let sc = &mut c.schema;
        kv.set("column_cluster_id", &mut sc.cluster_id)?;
        kv.set("column_z", &mut sc.z)?;
        kv.set("column_r_s", &mut sc.r_s)?;
        kv.set("column_s_obs", &mut sc.s_obs)?;
        kv.set("column_r_y", &mut sc.r_y)?;
        kv.set("column_y_obs", &mut sc.y_obs)?;
        if let Some(v) = kv.raw("covariates") {
            sc.covariates = Some(list(v));
        }
        for (key, ordinal) in [("ordinal", true), ("nominal", false)] {
            if let Some(v) = kv.raw(key) {
                for (name, kind) in kinds(v, ordinal)? {
                    sc.kinds.insert(name, kind);
                }
            }
        }

        apply_dgp(kv, &mut c.dgp)?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KvFile::parse(text)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_kv(&KvFile::read(path)?)
    }

    /// Canonical `key = value` text of the fit-side settings.
    pub fn echo_fit(&self) -> String {
        let s = &self.sampler;
        let b = &s.bart;
        let kinds = |ordinal: bool| -> String {
            self.schema
                .kinds
                .iter()
                .filter_map(|(name, kind)| match (kind, ordinal) {
                    (CovariateKind::Ordinal { levels }, true) => Some(format!("{name}:{}", levels.join("|"))),
                    (CovariateKind::Nominal { levels }, false) if levels.is_empty() => Some(name.clone()),
                    (CovariateKind::Nominal { levels }, false) => Some(format!("{name}:{}", levels.join("|"))),
                    _ => None,
                })
                .collect::<Vec<_>>()
                .join(",")
        };
        let pairs: Vec<(&str, String)> = vec![
            ("seed", s.seed.to_string()),
            ("n_iter", s.n_iter.to_string()),
            ("burn_in", s.burn_in.to_string()),
            ("thin", s.thin.to_string()),
            ("n_chains", s.n_chains.to_string()),
            ("k_trees", b.n_trees.to_string()),
            ("alpha", b.tree_prior.alpha.to_string()),
            ("beta", b.tree_prior.beta.to_string()),
            ("k", b.k.to_string()),
            ("grow_prob", b.tree_prior.grow_prob.to_string()),
            ("prune_prob", b.tree_prior.prune_prob.to_string()),
            ("change_prob", b.tree_prior.change_prob.to_string()),
            ("min_leaf_size", b.min_leaf_size.to_string()),
            ("max_cuts", s.max_cuts.to_string()),
            (
                "w_fit",
                match s.w_fit {
                    WFitSubset::All => "all".into(),
                    WFitSubset::SurvivorCapable => "survivor_capable".into(),
                },
            ),
            ("noisy_counterfactuals", s.noisy_counterfactuals.to_string()),
            ("init_sweeps", s.init_sweeps.to_string()),
            ("min_subset_for_structure", s.min_subset_for_structure.to_string()),
            ("check_invariants", s.check_invariants.to_string()),
            ("likely_threshold", self.likely_threshold.to_string()),
            ("cart_max_depth", self.cart.max_depth.to_string()),
            ("cart_min_node_size", self.cart.min_node_size.to_string()),
            ("cart_min_rel_gain", self.cart.min_rel_gain.to_string()),
            ("column_cluster_id", self.schema.cluster_id.clone()),
            ("column_z", self.schema.z.clone()),
            ("column_r_s", self.schema.r_s.clone()),
            ("column_s_obs", self.schema.s_obs.clone()),
            ("column_r_y", self.schema.r_y.clone()),
            ("column_y_obs", self.schema.y_obs.clone()),
            ("covariates", self.schema.covariates.as_ref().map(|c| c.join(",")).unwrap_or_default()),
            ("ordinal", kinds(true)),
            ("nominal", kinds(false)),
        ];
        pairs
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Checks the sampler-side settings.
    pub fn validate_fit(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(0.0..=1.0).contains(&self.likely_threshold) {
            return Err(Error::Config(format!(
                "likely_threshold must lie in [0, 1], got {}",
                self.likely_threshold
            )));
        }
        if self.cart.max_depth == 0 || self.cart.min_node_size == 0 || self.cart.min_rel_gain < 0.0 {
            return Err(Error::Config("invalid tree parameters".into()));
        }
        Ok(())
    }
}

/// Overrides the fields of `d` that appear in `kv`.
pub fn apply_dgp(kv: &KvFile, d: &mut DgpConfig) -> Result<()> {
    kv.set("seed", &mut d.seed)?;
    kv.set("n_clusters", &mut d.n_clusters)?;
    if let Some(v) = kv.raw("n_individuals") {
        d.n_individuals = if v == "auto" {
            None
        } else {
            Some(kv.get("n_individuals")?.expect("present"))
        };
    }
    kv.set("cluster_size_min", &mut d.cluster_size_range.0)?;
    kv.set("cluster_size_max", &mut d.cluster_size_range.1)?;
    kv.set("treatment_fraction", &mut d.treatment_fraction)?;
    kv.set("prop_never_survivor", &mut d.strata_props[0])?;
    kv.set("prop_protected", &mut d.strata_props[1])?;
    kv.set("prop_always_survivor", &mut d.strata_props[2])?;
    kv.set("strata_cluster_sd", &mut d.strata_cluster_sd)?;
    kv.set("outcome_sd", &mut d.outcome_sd)?;
    kv.set("prognostic_scale", &mut d.prognostic_scale)?;
    kv.set("intercept_sd", &mut d.intercept_sd)?;
    kv.set("protected_shift", &mut d.protected_shift)?;
    kv.set("status_missing_rate", &mut d.status_missing_rate)?;
    kv.set("outcome_missing_rate", &mut d.outcome_missing_rate)?;
    let size: Option<f64> = kv.get("effect_size")?;
    let covariate: Option<String> = kv.get("effect_covariate")?;
    let cut: Option<f64> = kv.get("effect_cut")?;
    let previous = std::mem::replace(&mut d.effect, EffectSpec::None);
    d.effect = match (kv.raw("effect"), previous) {
        (Some("none"), _) => EffectSpec::None,
        (Some("constant"), prev) | (None, prev @ EffectSpec::Constant(_)) => {
            let base = if let EffectSpec::Constant(t) = prev { t } else { 0.0 };
            EffectSpec::Constant(size.unwrap_or(base))
        }
        (Some("step"), prev) | (None, prev @ EffectSpec::Step { .. }) => {
            let (cv0, ct0, sz0) = match prev {
                EffectSpec::Step { covariate, cut, size } => (covariate, cut, size),
                _ => ("deprivation".to_string(), 15.0, 4.0),
            };
            EffectSpec::Step {
                covariate: covariate.unwrap_or(cv0),
                cut: cut.unwrap_or(ct0),
                size: size.unwrap_or(sz0),
            }
        }
        (None, EffectSpec::None) => EffectSpec::None,
        (Some(other), _) => {
            return Err(Error::Config(format!(
                "effect must be 'none', 'constant' or 'step', got '{other}'"
            )))
        }
    };
    Ok(())
}
