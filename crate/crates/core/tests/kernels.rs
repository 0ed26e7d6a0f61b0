use psbart::kernels::*;

/// Upper-tail probability of the standard normal from a power series for
/// small arguments and a Mills-ratio continued fraction in the tail.
fn upper_tail(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - upper_tail(-x);
    }
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x < 3.0 {
        // Φ(x) − 1/2 = φ(x) Σ x^(2n+1) / (1·3·5···(2n+1))
        let (mut term, mut sum) = (x, x);
        for n in 1..200 {
            term *= x * x / (2 * n + 1) as f64;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        0.5 - phi * sum
    } else {
        let mut frac = 0.0;
        for k in (1..400).rev() {
            frac = k as f64 / (x + frac);
        }
        phi / (x + frac)
    }
}

#[test]
fn normal_cdf_reference_values() {
    assert_eq!(normal_cdf(0.0), 0.5);
    assert!((normal_cdf(1.0) - 0.841345).abs() < 5e-7);
    assert!((normal_cdf(-1.0) - (1.0 - normal_cdf(1.0))).abs() < 1e-15);
    for k in -80..=80 {
        let x = k as f64 / 10.0;
        assert!(
            (normal_cdf(x) - (1.0 - upper_tail(x))).abs() < 1e-12,
            "x = {x}: {} vs {}",
            normal_cdf(x),
            1.0 - upper_tail(x)
        );
        assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn normal_cdf_is_monotone() {
    let mut prev = 0.0;
    for k in -4000..=4000 {
        let v = normal_cdf(k as f64 / 400.0);
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn quantile_inverts_cdf() {
    for &p in &[1e-10, 1e-4, 0.025, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-6] {
        let x = normal_quantile(p);
        assert!((normal_cdf(x) - p).abs() < 1e-12 * p.max(1e-3) * 1e3, "p = {p}");
    }
}

fn moments(draws: &[f64]) -> (f64, f64) {
    let n = draws.len() as f64;
    let m = draws.iter().sum::<f64>() / n;
    let v = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

#[test]
fn half_normal_means() {
    let target = (2.0 / std::f64::consts::PI).sqrt();
    let sd = (1.0 - 2.0 / std::f64::consts::PI).sqrt();
    let n = 1_000_000;
    let mut rng = RngStream::new(1, 0);
    let up: Vec<f64> = (0..n)
        .map(|_| sample_truncated_normal(0.0, 1.0, TruncationRegion::above(0.0), &mut rng))
        .collect();
    let down: Vec<f64> = (0..n)
        .map(|_| sample_truncated_normal(0.0, 1.0, TruncationRegion::below(0.0), &mut rng))
        .collect();
    let se = sd / (n as f64).sqrt();
    assert!((moments(&up).0 - target).abs() < 3.0 * se);
    assert!((moments(&down).0 + target).abs() < 3.0 * se);
    assert!(up.iter().all(|&x| x > 0.0));
    assert!(down.iter().all(|&x| x <= 0.0));
}

#[test]
fn deep_tail_draws_stay_in_support() {
    let mut rng = RngStream::new(2, 0);
    for _ in 0..100_000 {
        let x = sample_truncated_normal(0.0, 1.0, TruncationRegion::above(10.0), &mut rng);
        assert!(x >= 10.0 && x.is_finite());
        let y = sample_truncated_normal(3.0, 0.5, TruncationRegion::below(-40.0), &mut rng);
        assert!(y <= -40.0 && y.is_finite());
    }
}

#[test]
fn inverse_gamma_draws() {
    let mut rng = RngStream::new(3, 0);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_inverse_gamma(3.0, 4.0, &mut rng)).collect();
    // IG(3, 4): mean 2, variance 4.
    let (m, _) = moments(&draws);
    assert!((m - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt(), "mean {m}");
    for _ in 0..10_000 {
        let v = sample_inverse_gamma(0.001, 0.001, &mut rng);
        assert!(v > 0.0 && v.is_finite());
    }
}

#[test]
fn inverse_gamma_matches_residual_full_conditional() {
    // σ² | r ~ IG(a0 + n/2, b0 + Σr²/2): compare moments with the closed form.
    let mut rng = RngStream::new(4, 0);
    let r: Vec<f64> = (0..50).map(|_| rng.normal(0.0, 2.0)).collect();
    let shape = 0.001 + 25.0;
    let rate = 0.001 + r.iter().map(|x| x * x).sum::<f64>() / 2.0;
    let draws: Vec<f64> = (0..400_000).map(|_| sample_inverse_gamma(shape, rate, &mut rng)).collect();
    let (m, v) = moments(&draws);
    let mean = rate / (shape - 1.0);
    let var = mean * mean / (shape - 2.0);
    assert!((m - mean).abs() < 4.0 * (var / 400_000.0).sqrt());
    assert!((v / var - 1.0).abs() < 0.03);
}

#[test]
fn conjugate_normal_examples() {
    let (m, v) = conjugate_normal_posterior(0.0, 1.0, 4.0, 1, 1.0);
    assert!((m - 2.0).abs() < 1e-15 && (v - 0.5).abs() < 1e-15);
    let (m, _) = conjugate_normal_posterior(0.0, f64::INFINITY, 50.0, 10, 1.0);
    assert!((m - 5.0).abs() < 1e-12);
    let (m, _) = conjugate_normal_posterior(0.0, 1e12, 50.0, 10, 1.0);
    assert!((m - 5.0).abs() < 1e-9);

    // No data: exactly the prior draw.
    let mut a = RngStream::new(5, 0);
    let mut b = RngStream::new(5, 0);
    let x = sample_conjugate_normal_mean(1.5, 4.0, 0.0, 0, 1.0, &mut a);
    assert_eq!(x, b.normal(1.5, 2.0));

    let mut rng = RngStream::new(6, 0);
    let draws: Vec<f64> = (0..200_000)
        .map(|_| sample_conjugate_normal_mean(0.0, 1.0, 4.0, 1, 1.0, &mut rng))
        .collect();
    let (m, v) = moments(&draws);
    assert!((m - 2.0).abs() < 4.0 * (0.5f64 / 200_000.0).sqrt());
    assert!((v - 0.5).abs() < 0.01);
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a: Vec<f64> = {
        let mut r = RngStream::new(42, 7);
        (0..100).map(|_| r.uniform()).collect()
    };
    let b: Vec<f64> = {
        let mut r = RngStream::new(42, 7);
        (0..100).map(|_| r.uniform()).collect()
    };
    let c: Vec<f64> = {
        let mut r = RngStream::new(42, 8);
        (0..100).map(|_| r.uniform()).collect()
    };
    assert_eq!(a, b);
    assert_ne!(a, c);
    let mut k1 = RngStream::keyed(1, &[0, 5, 30, 2]);
    let mut k2 = RngStream::keyed(1, &[0, 5, 30, 3]);
    assert_ne!(k1.uniform(), k2.uniform());
}
