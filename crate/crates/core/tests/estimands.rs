use psbart::estimands::*;

#[test]
fn flag_examples() {
    // Control observed survivor with a low probability.
    assert_eq!(likely_always_survivors(&[0.3], &[0], &[Some(true)], 0.8), vec![true]);
    assert_eq!(likely_always_survivors(&[0.81], &[1], &[Some(true)], 0.8), vec![true]);
    assert_eq!(likely_always_survivors(&[0.79], &[1], &[Some(true)], 0.8), vec![false]);
    assert_eq!(likely_always_survivors(&[0.0], &[0], &[None], 0.8), vec![false]);
    assert_eq!(likely_always_survivors(&[0.8], &[0], &[Some(false)], 0.8), vec![true]);
}

#[test]
fn raising_the_threshold_never_adds_treated_flags() {
    let prob: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
    let z = vec![1u8; prob.len()];
    let s = vec![Some(true); prob.len()];
    let mut prev = likely_always_survivors(&prob, &z, &s, 0.0);
    for t in 1..=20 {
        let cur = likely_always_survivors(&prob, &z, &s, t as f64 / 20.0);
        for (a, b) in prev.iter().zip(&cur) {
            assert!(*a || !*b);
        }
        prev = cur;
    }
}

#[test]
fn interval_summaries() {
    let v: Vec<f64> = (0..=100).map(f64::from).collect();
    let iv = summarize(&v);
    assert!((iv.mean - 50.0).abs() < 1e-12);
    assert!((iv.lo - 2.5).abs() < 1e-12);
    assert!((iv.hi - 97.5).abs() < 1e-12);
    let sorted = [1.0, 2.0, 4.0];
    assert_eq!(quantile_sorted(&sorted, 0.0), 1.0);
    assert_eq!(quantile_sorted(&sorted, 1.0), 4.0);
    assert!((quantile_sorted(&sorted, 0.75) - 3.0).abs() < 1e-12);
}
