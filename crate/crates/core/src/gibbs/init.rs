use log::debug;
use nalgebra::{DMatrix, DVector};

use super::chain::{SamplerData, SamplerState};
use super::config::{SamplerConfig, WFitSubset};
use crate::bart::{ResponseScale, SumOfTreesModel};
use crate::data::ClusterIdx;
use crate::error::{Error, Result};
use crate::kernels::{normal_cdf, sample_truncated_normal, RngStream, TruncationRegion};
use crate::outcome::{OutcomeCell, OutcomeModelSet};
use crate::strata::{sample_latents, PrincipalStratum, StrataState};

const P_INIT_SURVIVAL: u64 = 1;
const P_INIT_LABEL: u64 = 2;
const P_INIT_OUTCOME: u64 = 3;
const P_INIT_IMPUTE: u64 = 4;
const P_INIT_LATENT: u64 = 5;
const P_INIT_PROBIT: u64 = 6;

/// Logistic-to-probit coefficient scaling.
const LOGIT_TO_PROBIT: f64 = 1.0 / 1.6;

fn init_stream(config: &SamplerConfig, chain: usize, purpose: u64, index: u64) -> RngStream {
    RngStream::keyed(config.seed, &[chain as u64, 0, purpose, index])
}

/// Builds the starting state of a chain.
///
/// Identified cells get their forced labels, mixture cells a uniformly drawn
/// admissible label. Individuals with unknown survival first get a survival
/// status from a probit BART classifier on arm and covariates. Outcome models
/// are warmed up on the labeled subsets and the membership models on latents
/// drawn around probit-scaled logistic fits of the initial labels.
pub fn initialize(data: &SamplerData, config: &SamplerConfig, chain: usize) -> Result<SamplerState> {
    let n = data.n_individuals();
    let observed_y: Vec<f64> = data.y_obs.iter().flatten().copied().collect();
    if observed_y.is_empty() {
        return Err(Error::Initialization(
            "no observed survivor outcomes in either arm".into(),
        ));
    }
    if !data.s_obs.iter().any(|s| s.is_some()) {
        return Err(Error::Initialization("survival is missing for every individual".into()));
    }

    let s_init = initial_survival(data, config, chain)?;

    let mut rng = init_stream(config, chain, P_INIT_LABEL, 0);
    let labels: Vec<PrincipalStratum> = (0..n)
        .map(|i| match (data.z[i], s_init[i]) {
            (0, true) => PrincipalStratum::AlwaysSurvivor,
            (1, false) => PrincipalStratum::NeverSurvivor,
            (1, true) => {
                if rng.bernoulli(0.5) {
                    PrincipalStratum::AlwaysSurvivor
                } else {
                    PrincipalStratum::Protected
                }
            }
            _ => {
                if rng.bernoulli(0.5) {
                    PrincipalStratum::Protected
                } else {
                    PrincipalStratum::NeverSurvivor
                }
            }
        })
        .collect();

    // Outcome models on the labeled subsets with observed outcomes.
    let p = data.design.n_cols();
    let mut outcomes = OutcomeModelSet::new(
        &config.bart,
        p,
        data.n_clusters,
        ResponseScale::from_values(&observed_y),
        config.min_subset_for_structure,
    );
    let mut subsets: [crate::outcome::CellSubset; 3] = Default::default();
    for i in 0..n {
        if let (Some(cell), Some(y)) = (OutcomeCell::of(labels[i], data.z[i]), data.y_obs[i]) {
            subsets[cell.index()].push(i, y, data.clusters[i]);
        }
    }
    for sweep in 0..config.init_sweeps {
        let mut rngs = [0u64, 1, 2].map(|k| init_stream(config, chain, P_INIT_OUTCOME, (sweep * 3) as u64 + k));
        outcomes.update_means(&data.design, &subsets, &mut rngs)?;
        outcomes.update_variances(&mut rngs);
    }

    // Membership models from logistic fits of the initial labels.
    let capable: Vec<bool> = labels.iter().map(|&g| g != PrincipalStratum::NeverSurvivor).collect();
    let all: Vec<usize> = (0..n).collect();
    let eta_q = probit_scale_logistic(data, &all, &capable);
    let capable_rows: Vec<usize> = (0..n).filter(|&i| capable[i]).collect();
    let always: Vec<bool> = labels.iter().map(|&g| g == PrincipalStratum::AlwaysSurvivor).collect();
    let eta_w = if capable_rows.is_empty() {
        vec![0.0; n]
    } else {
        probit_scale_logistic(data, &capable_rows, &always)
    };

    let mut strata = Vec::with_capacity(n);
    for i in 0..n {
        let g = labels[i];
        let mut rng = init_stream(config, chain, P_INIT_LATENT, i as u64);
        let (q, w) = sample_latents(g, eta_q[i], eta_w[i], &mut rng);
        let s_current = g.survives(data.z[i]);
        let y_current = match data.y_obs[i] {
            Some(y) => Some(y),
            None if s_current => {
                let mut rng = init_stream(config, chain, P_INIT_IMPUTE, i as u64);
                outcomes.impute_row(g, data.z[i], &data.design, i, data.clusters[i], &mut rng)
            }
            None => None,
        };
        strata.push(StrataState {
            q,
            w,
            g,
            s_current,
            y_current,
        });
    }

    let mut q_model = SumOfTreesModel::probit(&config.bart, p, data.n_clusters);
    let mut w_model = q_model.clone();
    let q: Vec<f64> = strata.iter().map(|s| s.q).collect();
    let w_rows: Vec<usize> = match config.w_fit {
        WFitSubset::All => all.clone(),
        WFitSubset::SurvivorCapable => capable_rows,
    };
    let w: Vec<f64> = w_rows.iter().map(|&i| strata[i].w).collect();
    let w_clusters: Vec<ClusterIdx> = w_rows.iter().map(|&i| data.clusters[i]).collect();
    for sweep in 0..config.init_sweeps {
        let mut rng = init_stream(config, chain, P_INIT_PROBIT, 2 * sweep as u64);
        q_model.fit_probit_latent(&data.design, &all, &q, &data.clusters, &mut rng)?;
        let mut rng = init_stream(config, chain, P_INIT_PROBIT, 2 * sweep as u64 + 1);
        w_model.fit_probit_latent(&data.design, &w_rows, &w, &w_clusters, &mut rng)?;
    }

    let state = SamplerState::from_parts(chain, data, strata, q_model, w_model, outcomes);
    if config.check_invariants {
        state.check_invariants(data)?;
    }
    Ok(state)
}

/// Observed survival where recorded; otherwise a Bernoulli draw from a probit
/// BART classifier of survival on arm and covariates.
fn initial_survival(data: &SamplerData, config: &SamplerConfig, chain: usize) -> Result<Vec<bool>> {
    let n = data.n_individuals();
    let missing: Vec<usize> = (0..n).filter(|&i| data.s_obs[i].is_none()).collect();
    let mut s: Vec<bool> = data.s_obs.iter().map(|v| v.unwrap_or(false)).collect();
    if missing.is_empty() {
        return Ok(s);
    }
    let rows: Vec<usize> = (0..n).filter(|&i| data.s_obs[i].is_some()).collect();
    let clusters: Vec<ClusterIdx> = rows.iter().map(|&i| data.clusters[i]).collect();
    let mut model = SumOfTreesModel::probit(&config.bart, data.arm_design.n_cols(), data.n_clusters);
    let mut latent = vec![0.0; rows.len()];
    let sweeps = config.init_sweeps.max(1) * 2;
    for sweep in 0..sweeps {
        let mut rng = init_stream(config, chain, P_INIT_SURVIVAL, sweep as u64);
        for (k, &i) in rows.iter().enumerate() {
            let m = model.predict_row(&data.arm_design, i, Some(data.clusters[i]));
            let region = if data.s_obs[i] == Some(true) {
                TruncationRegion::above(0.0)
            } else {
                TruncationRegion::below(0.0)
            };
            latent[k] = sample_truncated_normal(m, 1.0, region, &mut rng);
        }
        model.fit_probit_latent(&data.arm_design, &rows, &latent, &clusters, &mut rng)?;
    }
    let mut rng = init_stream(config, chain, P_INIT_SURVIVAL, u64::MAX);
    for &i in &missing {
        let m = model.predict_row(&data.arm_design, i, Some(data.clusters[i]));
        s[i] = rng.bernoulli(normal_cdf(m));
    }
    debug!(
        "chain {chain}: imputed initial survival for {} individuals ({} survivors)",
        missing.len(),
        missing.iter().filter(|&&i| s[i]).count()
    );
    Ok(s)
}

/// Linear predictor of a ridge-stabilized logistic regression of `target`
/// on the covariates of `rows`, rescaled to the probit scale and evaluated for
/// every individual.
fn probit_scale_logistic(data: &SamplerData, rows: &[usize], target: &[bool]) -> Vec<f64> {
    let n = data.n_individuals();
    let p = data.design.n_cols();
    // Standardize columns on the fitting rows.
    let mut centre = vec![0.0; p];
    let mut spread = vec![1.0; p];
    for j in 0..p {
        let vals: Vec<f64> = rows.iter().map(|&i| data.design.row(i)[j]).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let v = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / vals.len() as f64;
        centre[j] = m;
        spread[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
    }
    let feature = |i: usize, j: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            (data.design.row(i)[j - 1] - centre[j - 1]) / spread[j - 1]
        }
    };
    let d = p + 1;
    let x = DMatrix::from_fn(rows.len(), d, |r, j| feature(rows[r], j));
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| f64::from(u8::from(target[i]))));
    let beta = irls(&x, &y, 1e-2, 25);
    (0..n)
        .map(|i| {
            let eta: f64 = (0..d).map(|j| feature(i, j) * beta[j]).sum();
            (eta * LOGIT_TO_PROBIT).clamp(-3.0, 3.0)
        })
        .collect()
}

/// Iteratively reweighted least squares for a logistic model with an L2
/// penalty `ridge` on the non-intercept coefficients.
pub(crate) fn irls(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64, max_iter: usize) -> DVector<f64> {
    let d = x.ncols();
    let mut beta = DVector::zeros(d);
    for _ in 0..max_iter {
        let eta = x * &beta;
        let mu = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let w = mu.map(|m| (m * (1.0 - m)).max(1e-10));
        let mut xtwx = DMatrix::zeros(d, d);
        let mut grad = DVector::zeros(d);
        for r in 0..x.nrows() {
            let row = x.row(r);
            for a in 0..d {
                grad[a] += row[a] * (y[r] - mu[r]);
                for b in 0..d {
                    xtwx[(a, b)] += w[r] * row[a] * row[b];
                }
            }
        }
        for a in 1..d {
            xtwx[(a, a)] += ridge;
            grad[a] -= ridge * beta[a];
        }
        let Some(chol) = xtwx.cholesky() else {
            break;
        };
        let step = chol.solve(&grad);
        beta += &step;
        if step.amax() < 1e-8 {
            break;
        }
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irls_recovers_logistic_coefficients() {
        // Deterministic design with known coefficients (0.5, -1.2).
        let mut rng = RngStream::new(9, 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let x = DMatrix::from_fn(n, 2, |r, j| if j == 0 { 1.0 } else { xs[r] });
        let y = DVector::from_iterator(
            n,
            xs.iter()
                .map(|&v| f64::from(u8::from(rng.uniform() < 1.0 / (1.0 + (-(0.5 - 1.2 * v)).exp())))),
        );
        let b = irls(&x, &y, 0.0, 50);
        assert!((b[0] - 0.5).abs() < 0.08, "{b}");
        assert!((b[1] + 1.2).abs() < 0.08, "{b}");
    }
}
