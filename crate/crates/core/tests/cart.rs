use psbart::cart::*;
use psbart::estimands::CsaceDraws;
use psbart::kernels::RngStream;

/// Draws scattered around each response, so node intervals are non-trivial.
fn draws_for(y: &[f64], n_draws: usize, rng: &mut RngStream) -> CsaceDraws {
    let mut values = Vec::new();
    for _ in 0..n_draws {
        values.extend(y.iter().map(|v| v + rng.standard_normal()));
    }
    CsaceDraws {
        n_draws,
        individuals: (0..y.len()).collect(),
        values,
    }
}

fn names() -> Vec<String> {
    vec!["x1".into(), "x2".into(), "x3".into()]
}

fn step_data(n: usize, seed: u64) -> (Vec<f64>, Vec<Vec<f64>>, CsaceDraws) {
    let mut rng = RngStream::new(seed, 0);
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform(), rng.uniform(), rng.uniform()]).collect();
    let y: Vec<f64> = x.iter().map(|r| if r[1] > 0.5 { 3.0 } else { 0.0 }).collect();
    let d = draws_for(&y, 50, &mut rng);
    (y, x, d)
}

#[test]
fn constant_responses_give_a_root_only_tree() {
    let mut rng = RngStream::new(1, 0);
    let x: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.uniform(), rng.uniform(), rng.uniform()]).collect();
    let y = vec![1.5; 100];
    let d = draws_for(&y, 10, &mut rng);
    let tree = fit_cart(&y, &x, &d, &names(), CartParams::default()).unwrap();
    assert_eq!(tree.nodes.len(), 1);
    assert_eq!(tree.primary_split(), None);
}

#[test]
fn step_gives_one_split_with_both_means() {
    let (y, x, d) = step_data(200, 2);
    let tree = fit_cart(&y, &x, &d, &names(), CartParams::default()).unwrap();
    let (var, cut) = tree.primary_split().unwrap();
    assert_eq!(var, 1);
    assert!((0.4..0.6).contains(&cut), "{cut}");
    assert_eq!(tree.nodes.len(), 3);
    let mut means: Vec<f64> = tree.leaves().map(|s| s.mean).collect();
    means.sort_by(f64::total_cmp);
    assert!(means[0].abs() < 1e-12 && (means[1] - 3.0).abs() < 1e-12);
}

#[test]
fn row_order_does_not_matter() {
    let (y, x, d) = step_data(150, 3);
    let a = fit_cart(&y, &x, &d, &names(), CartParams::default()).unwrap();
    let perm: Vec<usize> = (0..y.len()).rev().map(|i| (i * 7) % y.len()).collect();
    let mut sorted = perm.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), y.len());
    let y2: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
    let x2: Vec<Vec<f64>> = perm.iter().map(|&i| x[i].clone()).collect();
    let mut values = Vec::new();
    for k in 0..d.n_draws {
        values.extend(perm.iter().map(|&i| d.get(k, i)));
    }
    let d2 = CsaceDraws {
        n_draws: d.n_draws,
        individuals: perm.clone(),
        values,
    };
    let b = fit_cart(&y2, &x2, &d2, &names(), CartParams::default()).unwrap();
    assert_eq!(a.render_text(), b.render_text());
    assert_eq!(a.nodes, b.nodes);
}

#[test]
fn leaves_partition_the_members() {
    let mut rng = RngStream::new(4, 0);
    let n = 300;
    let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform(), rng.uniform(), rng.uniform()]).collect();
    let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + if r[2] > 0.3 { 1.0 } else { -1.0 } + 0.3 * rng.standard_normal()).collect();
    let d = draws_for(&y, 20, &mut rng);
    let tree = fit_cart(&y, &x, &d, &names(), CartParams::default()).unwrap();
    assert_eq!(tree.leaves().map(|s| s.n_members).sum::<usize>(), n);

    // Recompute each leaf's mean by routing every individual.
    let mut sums = vec![(0.0, 0usize); tree.nodes.len()];
    for (row, &v) in x.iter().zip(&y) {
        let mut k = 0;
        while let CartNode::Split { var, cut, left, right, .. } = tree.nodes[k] {
            k = if row[var] <= cut { left } else { right };
        }
        sums[k].0 += v;
        sums[k].1 += 1;
    }
    for (k, node) in tree.nodes.iter().enumerate() {
        if let CartNode::Leaf { summary } = node {
            assert_eq!(summary.n_members, sums[k].1);
            assert!((summary.mean - sums[k].0 / sums[k].1 as f64).abs() < 1e-9);
            assert!(summary.cri.0 <= summary.cri.1);
        }
    }
}

#[test]
fn text_rendering_format() {
    let (y, x, d) = step_data(200, 5);
    let tree = fit_cart(&y, &x, &d, &names(), CartParams::default()).unwrap();
    let text = tree.render_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in &lines {
        let (_, rest) = line.split_once(": ").unwrap();
        assert!(rest.contains(" [") && rest.contains(", ") && rest.contains("] (n="), "{line}");
        assert!(rest.ends_with(')'));
    }
    assert!(lines[1].trim_start().starts_with("x2 <= "));
    assert!(tree.render_dot().starts_with("digraph"));
}

#[test]
fn too_few_individuals_stay_at_the_root() {
    let (y, x, d) = step_data(39, 6);
    let tree = fit_cart(&y, &x, &d, &names(), CartParams::default()).unwrap();
    assert_eq!(tree.nodes.len(), 1);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let (y, x, d) = step_data(50, 7);
    assert!(fit_cart(&y[..49], &x, &d, &names(), CartParams::default()).is_err());
    let mut bad = y.clone();
    bad[0] = f64::NAN;
    assert!(fit_cart(&bad, &x, &d, &names(), CartParams::default()).is_err());
}
