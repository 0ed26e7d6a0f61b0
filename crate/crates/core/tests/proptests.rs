use proptest::prelude::*;
use psbart::estimands::{likely_always_survivors, quantile_sorted};
use psbart::kernels::*;
use psbart::strata::*;

proptest! {
    #[test]
    fn membership_is_a_distribution(mq in -12.0f64..12.0, mw in -12.0f64..12.0) {
        let p = membership_probs(mq, mw);
        prop_assert!((p.p00 + p.p10 + p.p11 - 1.0).abs() < 1e-12);
        prop_assert!(p.as_array().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn truncated_draws_stay_inside(mean in -20.0f64..20.0, sd in 0.05f64..5.0, a in -10.0f64..10.0, width in 0.01f64..5.0, seed in 0u64..1000) {
        let mut rng = RngStream::new(seed, 0);
        let region = TruncationRegion::new(a, a + width).unwrap();
        for _ in 0..20 {
            let x = sample_truncated_normal(mean, sd, region, &mut rng);
            prop_assert!(region.contains(x), "{x} outside [{a}, {}]", a + width);
        }
        let up = sample_truncated_normal(mean, sd, TruncationRegion::above(a), &mut rng);
        prop_assert!(up > a);
    }

    #[test]
    fn sampled_labels_are_admissible(mq in -5.0f64..5.0, mw in -5.0f64..5.0, z in 0u8..2, s in prop::option::of(any::<bool>()), seed in 0u64..1000) {
        let probs = membership_probs(mq, mw);
        let mut rng = RngStream::new(seed, 1);
        if let Ok((g, _)) = sample_label(z, s, &probs, None, &mut rng) {
            if let Some(s) = s {
                prop_assert_eq!(g.survives(z), s);
            }
            let (q, w) = sample_latents(g, mq, mw, &mut rng);
            prop_assert!(latents_consistent(g, q, w));
        }
    }

    #[test]
    fn quantiles_are_monotone(mut v in prop::collection::vec(-100.0f64..100.0, 1..50), p in 0.0f64..1.0, q in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(quantile_sorted(&v, lo) <= quantile_sorted(&v, hi));
        prop_assert!(quantile_sorted(&v, lo) >= v[0] && quantile_sorted(&v, hi) <= v[v.len() - 1]);
    }

    #[test]
    fn flags_shrink_with_threshold(prob in prop::collection::vec(0.0f64..1.0, 1..40), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let z: Vec<u8> = (0..prob.len()).map(|i| (i % 2) as u8).collect();
        let s: Vec<Option<bool>> = (0..prob.len()).map(|i| if i % 3 == 0 { None } else { Some(true) }).collect();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let a = likely_always_survivors(&prob, &z, &s, lo);
        let b = likely_always_survivors(&prob, &z, &s, hi);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x || !*y);
        }
    }
}
