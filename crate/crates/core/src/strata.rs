//! Nested-probit principal strata: membership probabilities, latent
//! augmentation and label posteriors.

use std::fmt;

use crate::kernels::{normal_cdf, sample_truncated_normal, RngStream, TruncationRegion};

/// Joint potential survival `(S(1), S(0))`. Harmed (`01`) is ruled out by
/// monotonicity and has no representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrincipalStratum {
    NeverSurvivor,
    Protected,
    AlwaysSurvivor,
}

impl PrincipalStratum {
    pub const ALL: [PrincipalStratum; 3] = [
        PrincipalStratum::NeverSurvivor,
        PrincipalStratum::Protected,
        PrincipalStratum::AlwaysSurvivor,
    ];

    pub fn code(self) -> &'static str {
        match self {
            PrincipalStratum::NeverSurvivor => "00",
            PrincipalStratum::Protected => "10",
            PrincipalStratum::AlwaysSurvivor => "11",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "00" => Some(PrincipalStratum::NeverSurvivor),
            "10" => Some(PrincipalStratum::Protected),
            "11" => Some(PrincipalStratum::AlwaysSurvivor),
            _ => None,
        }
    }

    /// Position in `(00, 10, 11)` order.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Survival under assignment `z`.
    pub fn survives(self, z: u8) -> bool {
        match self {
            PrincipalStratum::AlwaysSurvivor => true,
            PrincipalStratum::Protected => z == 1,
            PrincipalStratum::NeverSurvivor => false,
        }
    }
}

impl fmt::Display for PrincipalStratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipProbs {
    pub p00: f64,
    pub p10: f64,
    pub p11: f64,
}

impl MembershipProbs {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p00, self.p10, self.p11]
    }

    pub fn of(&self, g: PrincipalStratum) -> f64 {
        self.as_array()[g.index()]
    }
}

/// `p00 = 1 − Φ(mq)`, `p10 = Φ(mq)(1 − Φ(mw))`, `p11 = Φ(mq)Φ(mw)`.
pub fn membership_probs(mq: f64, mw: f64) -> MembershipProbs {
    let capable = normal_cdf(mq);
    MembershipProbs {
        p00: normal_cdf(-mq),
        p10: capable * normal_cdf(-mw),
        p11: capable * normal_cdf(mw),
    }
}

/// Log outcome densities at the observed outcome under the two strata that
/// survive the individual's arm (`f10` is ignored under control).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeLogDensities {
    pub f11: f64,
    pub f10: f64,
}

/// Mixture cell with no usable mass even after the membership-only fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelUnderflow;

/// Posterior label probabilities for one individual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelPosterior {
    /// In `(00, 10, 11)` order.
    pub probs: [f64; 3],
    /// Outcome densities were dropped because the weighted mass vanished.
    pub fallback: bool,
}

impl LabelPosterior {
    fn point(g: PrincipalStratum) -> Self {
        let mut probs = [0.0; 3];
        probs[g.index()] = 1.0;
        Self {
            probs,
            fallback: false,
        }
    }

    fn pair(
        a: PrincipalStratum,
        log_a: f64,
        b: PrincipalStratum,
        log_b: f64,
    ) -> Option<[f64; 3]> {
        let m = log_a.max(log_b);
        if !m.is_finite() {
            return None;
        }
        let wa = (log_a - m).exp();
        let wb = (log_b - m).exp();
        let tot = wa + wb;
        if !(tot > 0.0) || !tot.is_finite() {
            return None;
        }
        let mut probs = [0.0; 3];
        probs[a.index()] = wa / tot;
        probs[b.index()] = wb / tot;
        Some(probs)
    }
}

/// Label posterior given the observed survival status (`None` if missing), the
/// membership probabilities and, for treated survivors with an observed
/// outcome, the outcome log densities.
pub fn label_posterior(
    z: u8,
    s: Option<bool>,
    probs: &MembershipProbs,
    log_dens: Option<OutcomeLogDensities>,
) -> Result<LabelPosterior, LabelUnderflow> {
    use PrincipalStratum::*;
    match (z, s) {
        (_, None) => {
            let tot = probs.p00 + probs.p10 + probs.p11;
            if !(tot > 0.0) {
                return Err(LabelUnderflow);
            }
            Ok(LabelPosterior {
                probs: [probs.p00 / tot, probs.p10 / tot, probs.p11 / tot],
                fallback: false,
            })
        }
        (0, Some(true)) => Ok(LabelPosterior::point(AlwaysSurvivor)),
        (1, Some(false)) => Ok(LabelPosterior::point(NeverSurvivor)),
        (0, Some(false)) => LabelPosterior::pair(Protected, probs.p10.ln(), NeverSurvivor, probs.p00.ln())
            .map(|p| LabelPosterior {
                probs: p,
                fallback: false,
            })
            .ok_or(LabelUnderflow),
        (_, Some(true)) => {
            let (l11, l10) = (probs.p11.ln(), probs.p10.ln());
            if let Some(d) = log_dens {
                if let Some(p) = LabelPosterior::pair(AlwaysSurvivor, l11 + d.f11, Protected, l10 + d.f10) {
                    return Ok(LabelPosterior {
                        probs: p,
                        fallback: false,
                    });
                }
                return LabelPosterior::pair(AlwaysSurvivor, l11, Protected, l10)
                    .map(|p| LabelPosterior {
                        probs: p,
                        fallback: true,
                    })
                    .ok_or(LabelUnderflow);
            }
            LabelPosterior::pair(AlwaysSurvivor, l11, Protected, l10)
                .map(|p| LabelPosterior {
                    probs: p,
                    fallback: false,
                })
                .ok_or(LabelUnderflow)
        }
        (_, Some(false)) => Ok(LabelPosterior::point(NeverSurvivor)),
    }
}

/// Draws a label from a categorical over `(00, 10, 11)`.
pub fn draw_label(probs: &[f64; 3], rng: &mut RngStream) -> PrincipalStratum {
    let u = rng.uniform();
    if u < probs[0] {
        PrincipalStratum::NeverSurvivor
    } else if u < probs[0] + probs[1] {
        PrincipalStratum::Protected
    } else if probs[2] > 0.0 {
        PrincipalStratum::AlwaysSurvivor
    } else if probs[1] > 0.0 {
        PrincipalStratum::Protected
    } else {
        PrincipalStratum::NeverSurvivor
    }
}

/// Samples a label; the flag reports whether the membership-only fallback
/// was used.
pub fn sample_label(
    z: u8,
    s: Option<bool>,
    probs: &MembershipProbs,
    log_dens: Option<OutcomeLogDensities>,
    rng: &mut RngStream,
) -> Result<(PrincipalStratum, bool), LabelUnderflow> {
    let post = label_posterior(z, s, probs, log_dens)?;
    Ok((draw_label(&post.probs, rng), post.fallback))
}

/// Draws `(q, w)` from their truncated full conditionals given the label.
/// Never-survivors get an unconstrained `w`.
pub fn sample_latents(g: PrincipalStratum, mq: f64, mw: f64, rng: &mut RngStream) -> (f64, f64) {
    let (qr, wr) = match g {
        PrincipalStratum::NeverSurvivor => (TruncationRegion::below(0.0), TruncationRegion::whole_line()),
        PrincipalStratum::Protected => (TruncationRegion::above(0.0), TruncationRegion::below(0.0)),
        PrincipalStratum::AlwaysSurvivor => (TruncationRegion::above(0.0), TruncationRegion::above(0.0)),
    };
    let q = sample_truncated_normal(mq, 1.0, qr, rng);
    let w = sample_truncated_normal(mw, 1.0, wr, rng);
    debug_assert!(latents_consistent(g, q, w), "latents ({q}, {w}) inconsistent with {g}");
    (q, w)
}

pub fn latents_consistent(g: PrincipalStratum, q: f64, w: f64) -> bool {
    match g {
        PrincipalStratum::NeverSurvivor => q <= 0.0,
        PrincipalStratum::Protected => q > 0.0 && w <= 0.0,
        PrincipalStratum::AlwaysSurvivor => q > 0.0 && w > 0.0,
    }
}

/// Log contribution of one individual with observed survival to the observed
/// data likelihood. A missing outcome integrates its density out.
pub fn observed_loglik_term(
    z: u8,
    s: bool,
    probs: &MembershipProbs,
    log_dens: Option<OutcomeLogDensities>,
) -> f64 {
    match (z, s) {
        (1, true) => {
            let (a, b) = match log_dens {
                Some(d) => (probs.p11.ln() + d.f11, probs.p10.ln() + d.f10),
                None => (probs.p11.ln(), probs.p10.ln()),
            };
            log_sum_exp(a, b)
        }
        (1, false) => probs.p00.ln(),
        (_, true) => probs.p11.ln() + log_dens.map_or(0.0, |d| d.f11),
        (_, false) => (probs.p10 + probs.p00).ln(),
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Current augmentation state of one individual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrataState {
    pub q: f64,
    pub w: f64,
    pub g: PrincipalStratum,
    pub s_current: bool,
    /// `None` for non-survivors: the outcome is undefined, not missing.
    pub y_current: Option<f64>,
}

impl StrataState {
    pub fn check(&self, z: u8) -> Result<(), String> {
        if !latents_consistent(self.g, self.q, self.w) {
            return Err(format!("latents ({}, {}) inconsistent with label {}", self.q, self.w, self.g));
        }
        if self.s_current != self.g.survives(z) {
            return Err(format!("survival {} inconsistent with label {} under z={z}", self.s_current, self.g));
        }
        if !self.s_current && self.y_current.is_some() {
            return Err("non-survivor carries a numeric outcome".into());
        }
        if self.s_current && self.y_current.is_none() {
            return Err("survivor without a current outcome".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let p = membership_probs(0.0, 0.0);
        assert_eq!((p.p00, p.p10, p.p11), (0.5, 0.25, 0.25));
        assert!(membership_probs(8.0, 8.0).p11 > 0.9999);
        let p = membership_probs(1.0, -0.5);
        assert!((p.p00 - 0.158655).abs() < 1e-5);
        assert!((p.p10 - 0.581758).abs() < 1e-5);
        assert!((p.p11 - 0.259587).abs() < 1e-5);
    }

    #[test]
    fn identified_cells_are_deterministic() {
        let p = membership_probs(0.3, -0.2);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_label(0, Some(true), &p, None, &mut rng).unwrap().0, PrincipalStratum::AlwaysSurvivor);
            assert_eq!(sample_label(1, Some(false), &p, None, &mut rng).unwrap().0, PrincipalStratum::NeverSurvivor);
        }
    }

    #[test]
    fn mixture_posteriors_match_hand_values() {
        let p = MembershipProbs {
            p00: 0.2,
            p10: 0.4,
            p11: 0.4,
        };
        let d = OutcomeLogDensities {
            f11: 0.5f64.ln(),
            f10: 0.5f64.ln(),
        };
        let post = label_posterior(1, Some(true), &p, Some(d)).unwrap();
        assert!((post.probs[2] - 0.5).abs() < 1e-15);
        let p = MembershipProbs {
            p00: 0.3,
            p10: 0.1,
            p11: 0.6,
        };
        let post = label_posterior(0, Some(false), &p, None).unwrap();
        assert!((post.probs[1] - 0.25).abs() < 1e-15);
        assert_eq!(post.probs[2], 0.0);
        let post = label_posterior(1, None, &p, None).unwrap();
        assert_eq!(post.probs, [0.3, 0.1, 0.6]);
    }

    #[test]
    fn vanishing_densities_fall_back_to_membership() {
        let p = MembershipProbs {
            p00: 0.2,
            p10: 0.2,
            p11: 0.6,
        };
        let d = OutcomeLogDensities {
            f11: f64::NEG_INFINITY,
            f10: f64::NEG_INFINITY,
        };
        let post = label_posterior(1, Some(true), &p, Some(d)).unwrap();
        assert!(post.fallback);
        assert!((post.probs[2] - 0.75).abs() < 1e-12);
        // extreme but finite log densities stay in log space
        let d = OutcomeLogDensities { f11: -2000.0, f10: -2001.0 };
        let post = label_posterior(1, Some(true), &p, Some(d)).unwrap();
        assert!(!post.fallback);
        let e = (1.0f64).exp();
        assert!((post.probs[2] - 0.6 * e / (0.6 * e + 0.2)).abs() < 1e-12);
        let dead = MembershipProbs {
            p00: 1.0,
            p10: 0.0,
            p11: 0.0,
        };
        assert_eq!(label_posterior(1, Some(true), &dead, None), Err(LabelUnderflow));
    }

    #[test]
    fn latents_respect_regions() {
        let mut rng = RngStream::new(3, 1);
        for &g in &PrincipalStratum::ALL {
            for _ in 0..2000 {
                let (q, w) = sample_latents(g, 1.5, -2.0, &mut rng);
                assert!(latents_consistent(g, q, w));
            }
        }
    }

    #[test]
    fn observed_likelihood_terms() {
        let p = MembershipProbs {
            p00: 0.5,
            p10: 0.0,
            p11: 0.5,
        };
        let t = observed_loglik_term(0, true, &p, Some(OutcomeLogDensities { f11: 0.2f64.ln(), f10: 0.0 }));
        assert!((t - 0.1f64.ln()).abs() < 1e-14);
        let p = MembershipProbs {
            p00: 0.3,
            p10: 0.1,
            p11: 0.4,
        };
        assert!((observed_loglik_term(1, false, &p, None) - 0.3f64.ln()).abs() < 1e-14);
        let d = OutcomeLogDensities {
            f11: 0.5f64.ln(),
            f10: 0.2f64.ln(),
        };
        assert!((observed_loglik_term(1, true, &p, Some(d)) - 0.22f64.ln()).abs() < 1e-14);
    }
}
