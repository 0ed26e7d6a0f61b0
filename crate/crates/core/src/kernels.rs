//! Probability primitives shared by every sampler in the crate.
//!
//! Everything here is either a pure function or takes an explicit
//! [`RngStream`]. Streams are keyed by `(seed, stream_id)` on top of a
//! ChaCha8 generator, so a draw sequence depends only on its key and never on
//! thread scheduling.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Standardized distance into a tail beyond which the truncated-normal sampler
/// switches from inverse-CDF to exponential-proposal rejection.
const TAIL_SWITCH: f64 = 4.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln Φ(x)`, accurate far into the lower tail where `Φ` underflows.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return normal_cdf(x).ln();
    }
    // Asymptotic Mills-ratio expansion.
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    -0.5 * x2 - (-x).ln() - LN_SQRT_2PI + series.ln()
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    if !x.is_finite() {
        return x;
    }
    // One Halley step against the accurate CDF.
    let pdf = normal_pdf(x);
    if pdf <= 0.0 {
        return x;
    }
    let e = (normal_cdf(x) - p) / pdf;
    x - e / (1.0 + 0.5 * x * e)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Log density of `N(mean, var)` at `y`.
pub fn log_gaussian_density(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -0.5 * (2.0 * PI * var).ln() - d * d / (2.0 * var)
}

/// Open or closed interval on the extended real line used to truncate a
/// normal draw. At least one bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRegion {
    lower: f64,
    upper: f64,
}

impl TruncationRegion {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::Contract(format!(
                "truncation region requires lower < upper, got ({lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `(bound, +inf)`
    pub fn above(bound: f64) -> Self {
        Self {
            lower: bound,
            upper: f64::INFINITY,
        }
    }

    /// `(-inf, bound]`
    pub fn below(bound: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: bound,
        }
    }

    pub fn whole_line() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Mixes a list of integers into a single 64-bit stream identifier
/// (splitmix64 finalizer chained over the parts).
pub fn stream_key(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = splitmix(h);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream. Identical `(seed, stream_id)` pairs yield
/// identical draw sequences; a single stream must not be shared between
/// threads.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    /// Stream whose id is derived from a structured key, e.g.
    /// `[chain, iteration, purpose, index]`.
    pub fn keyed(seed: u64, parts: &[u64]) -> Self {
        Self::new(seed, stream_key(parts))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        Open01.sample(&mut self.rng)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform index in `0..n`. Panics when `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draw from `N(mean, sd²)` restricted to `region`.
///
/// Inverse-CDF in the body of the distribution (computed on whichever side
/// avoids cancellation) and Robert's exponential-proposal rejection when the
/// region starts more than four standard deviations into a tail. The result is
/// clamped strictly inside the region.
pub fn sample_truncated_normal(
    mean: f64,
    sd: f64,
    region: TruncationRegion,
    rng: &mut RngStream,
) -> f64 {
    assert!(sd > 0.0, "truncated normal requires sd > 0");
    let a = (region.lower - mean) / sd;
    let b = (region.upper - mean) / sd;
    let z = if a >= TAIL_SWITCH {
        tail_rejection(a, b, rng)
    } else if b <= -TAIL_SWITCH {
        -tail_rejection(-b, -a, rng)
    } else {
        body_inverse_cdf(a, b, rng)
    };
    let mut x = mean + sd * z;
    if x <= region.lower {
        x = region.lower.next_up();
    }
    if x >= region.upper {
        x = region.upper.next_down();
    }
    x
}

fn body_inverse_cdf(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    let u = rng.uniform();
    let z = if a > 0.0 {
        let lo = normal_cdf(-b);
        let hi = normal_cdf(-a);
        -normal_quantile(lo + (hi - lo) * u)
    } else {
        let lo = normal_cdf(a);
        let hi = normal_cdf(b);
        normal_quantile(lo + (hi - lo) * u)
    };
    z.clamp(a, b)
}

/// Standard normal restricted to `[a, b]` with `a` deep in the upper tail.
fn tail_rejection(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let width = b - a;
    let mass = if width.is_finite() {
        1.0 - (-rate * width).exp()
    } else {
        1.0
    };
    loop {
        let z = a - (1.0 - rng.uniform() * mass).ln() / rate;
        let d = z - rate;
        if rng.uniform().ln() <= -0.5 * d * d && z <= b {
            return z;
        }
    }
}

/// Draw from an inverse-gamma distribution with the given shape and rate.
///
/// The gamma variate is generated in log space so that tiny shapes (such as
/// the weak `0.001` prior) still produce a finite positive draw.
pub fn sample_inverse_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> f64 {
    assert!(shape > 0.0 && rate > 0.0, "inverse gamma requires shape, rate > 0");
    let ln_gamma = if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0)
            .expect("valid gamma shape")
            .sample(rng);
        g.ln()
    } else {
        let g: f64 = Gamma::new(shape + 1.0, 1.0)
            .expect("valid gamma shape")
            .sample(rng);
        g.ln() + rng.uniform().ln() / shape
    };
    (rate.ln() - ln_gamma).exp().clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Mean and variance of the normal posterior for a normal mean with a normal
/// prior and `obs_count` observations of known variance summing to `obs_sum`.
pub fn conjugate_normal_posterior(
    prior_mean: f64,
    prior_var: f64,
    obs_sum: f64,
    obs_count: usize,
    obs_var: f64,
) -> (f64, f64) {
    let prior_precision = if prior_var.is_infinite() {
        0.0
    } else {
        1.0 / prior_var
    };
    let post_var = 1.0 / (prior_precision + obs_count as f64 / obs_var);
    let post_mean = post_var * (prior_mean * prior_precision + obs_sum / obs_var);
    (post_mean, post_var)
}

pub fn sample_conjugate_normal_mean(
    prior_mean: f64,
    prior_var: f64,
    obs_sum: f64,
    obs_count: usize,
    obs_var: f64,
    rng: &mut RngStream,
) -> f64 {
    if obs_count == 0 {
        return rng.normal(prior_mean, prior_var.sqrt());
    }
    let (m, v) = conjugate_normal_posterior(prior_mean, prior_var, obs_sum, obs_count, obs_var);
    rng.normal(m, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson_cdf(x: f64) -> f64 {
        // Independent reference: composite Simpson on [0, |x|].
        let n = 20_000;
        let h = x.abs() / n as f64;
        let mut s = normal_pdf(0.0) + normal_pdf(x.abs());
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * normal_pdf(i as f64 * h);
        }
        let half = s * h / 3.0;
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_543).abs() < 1e-12);
        assert!((normal_cdf(1.0) - simpson_cdf(1.0)).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - (1.0 - normal_cdf(1.0))).abs() < 1e-12);
        for i in -40..=40 {
            let x = i as f64 * 0.2;
            assert!((normal_cdf(x) - simpson_cdf(x)).abs() < 1e-12, "x={x}");
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn log_cdf_matches_in_overlap_and_is_finite_in_deep_tail() {
        for x in [-29.0, -20.0, -5.0, 0.0, 3.0] {
            assert!((log_normal_cdf(x) - normal_cdf(x).ln()).abs() < 1e-9);
        }
        let deep = log_normal_cdf(-60.0);
        assert!(deep.is_finite() && deep < -1700.0);
        // continuity across the switch
        assert!((log_normal_cdf(-30.0 + 1e-9) - log_normal_cdf(-30.0 - 1e-9)).abs() < 1e-6);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for p in [1e-12, 1e-5, 0.025, 0.3, 0.5, 0.9, 0.975] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() / p < 1e-9);
        }
    }

    #[test]
    fn region_rejects_empty_interval() {
        assert!(TruncationRegion::new(1.0, 1.0).is_err());
        assert!(TruncationRegion::new(2.0, 1.0).is_err());
        assert!(TruncationRegion::new(f64::NEG_INFINITY, 0.0).is_ok());
    }

    #[test]
    fn same_key_same_draws() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        let mut c = RngStream::new(7, 4);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        let xc: Vec<u64> = (0..8).map(|_| c.next_u64()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
        assert_ne!(stream_key(&[1, 2]), stream_key(&[2, 1]));
    }

    #[test]
    fn truncated_normal_half_line_means() {
        let n = 1_000_000;
        let expected = (2.0 / PI).sqrt();
        let sd_half = (1.0 - 2.0 / PI).sqrt();
        let se = sd_half / (n as f64).sqrt();
        let mut rng = RngStream::new(11, 0);
        let m: f64 = (0..n)
            .map(|_| sample_truncated_normal(0.0, 1.0, TruncationRegion::above(0.0), &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((m - expected).abs() < 3.0 * se, "mean {m}");
        let m: f64 = (0..n)
            .map(|_| sample_truncated_normal(0.0, 1.0, TruncationRegion::below(0.0), &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((m + expected).abs() < 3.0 * se, "mean {m}");
    }

    #[test]
    fn truncated_normal_deep_tails_stay_inside() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..10_000 {
            let x = sample_truncated_normal(0.0, 1.0, TruncationRegion::above(10.0), &mut rng);
            assert!(x >= 10.0 && x.is_finite());
            let y = sample_truncated_normal(40.0, 1.0, TruncationRegion::below(0.0), &mut rng);
            assert!(y <= 0.0 && y.is_finite());
            let r = TruncationRegion::new(12.0, 12.0 + 1e-9).unwrap();
            let z = sample_truncated_normal(0.0, 1.0, r, &mut rng);
            assert!(r.contains(z));
        }
    }

    #[test]
    fn truncated_normal_narrow_body_interval() {
        let mut rng = RngStream::new(5, 1);
        let r = TruncationRegion::new(0.3, 0.3 + 1e-14).unwrap();
        for _ in 0..1000 {
            let z = sample_truncated_normal(0.0, 1.0, r, &mut rng);
            assert!(r.contains(z));
        }
    }

    #[test]
    fn inverse_gamma_mean_and_support() {
        let n = 1_000_000;
        let mut rng = RngStream::new(3, 9);
        let draws: Vec<f64> = (0..n).map(|_| sample_inverse_gamma(3.0, 4.0, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        // IG(3,4): mean 2, variance 4
        let se = 2.0 / (n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}");
        assert!(draws.iter().all(|&d| d > 0.0));
        for _ in 0..10_000 {
            let d = sample_inverse_gamma(0.001, 0.001, &mut rng);
            assert!(d > 0.0 && d.is_finite());
        }
    }

    #[test]
    fn conjugate_normal_cases() {
        let (m, v) = conjugate_normal_posterior(0.0, 1.0, 4.0, 1, 1.0);
        assert!((m - 2.0).abs() < 1e-15 && (v - 0.5).abs() < 1e-15);
        let (m, _) = conjugate_normal_posterior(0.0, f64::INFINITY, 50.0, 10, 1.0);
        assert!((m - 5.0).abs() < 1e-12);
        let (m, _) = conjugate_normal_posterior(0.0, 1e12, 50.0, 10, 1.0);
        assert!((m - 5.0).abs() < 1e-9);

        // zero observations draws from the prior itself
        let mut a = RngStream::new(1, 1);
        let mut b = RngStream::new(1, 1);
        let x = sample_conjugate_normal_mean(3.0, 4.0, 0.0, 0, 1.0, &mut a);
        assert_eq!(x, b.normal(3.0, 2.0));
    }
}
