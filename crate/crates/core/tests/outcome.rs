use psbart::bart::{BartSettings, Design, ResponseScale};
use psbart::data::ClusterIdx;
use psbart::kernels::RngStream;
use psbart::outcome::*;
use psbart::strata::PrincipalStratum;

fn rngs(seed: u64) -> [RngStream; 3] {
    [RngStream::new(seed, 0), RngStream::new(seed, 1), RngStream::new(seed, 2)]
}

fn subset(rows: &[usize], y: &[f64], clusters: &[ClusterIdx]) -> CellSubset {
    let mut s = CellSubset::default();
    for &r in rows {
        s.push(r, y[r], clusters[r]);
    }
    s
}

#[test]
fn empty_protected_subset_is_skipped() {
    let mut rng = RngStream::new(1, 9);
    let n = 60;
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform()]).collect();
    let y: Vec<f64> = (0..n).map(|_| 20.0 + rng.standard_normal()).collect();
    let clusters: Vec<ClusterIdx> = (0..n).map(|i| ClusterIdx(i % 4)).collect();
    let design = Design::from_rows(&rows, 50).unwrap();
    let mut set = OutcomeModelSet::new(&BartSettings::default(), 1, 4, ResponseScale::from_values(&y), 10);
    // Every treated survivor is labeled always-survivor.
    let treated: Vec<usize> = (0..30).collect();
    let control: Vec<usize> = (30..n).collect();
    let subsets = [
        subset(&treated, &y, &clusters),
        subset(&control, &y, &clusters),
        CellSubset::default(),
    ];
    let mut r = rngs(2);
    for _ in 0..20 {
        let report = set.update_means(&design, &subsets, &mut r).unwrap();
        assert_eq!(report.skipped, [false, false, true]);
        set.update_variances(&mut r);
    }
    let v = set.variance(OutcomeCell::ProtectedTreated);
    assert!(v.is_finite() && v > 0.0);
    let d = set
        .density(20.0, PrincipalStratum::Protected, 1, &[0.5], ClusterIdx(0))
        .unwrap();
    assert!(d.is_finite());
}

#[test]
fn small_subsets_freeze_structure() {
    let design = Design::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], 10).unwrap();
    let mut set = OutcomeModelSet::new(&BartSettings::default(), 1, 1, ResponseScale::identity(), 10);
    let y = [1.0, 2.0, 3.0];
    let c = [ClusterIdx(0); 3];
    let s = subset(&[0, 1, 2], &y, &c);
    let report = set
        .update_means(&design, &[s.clone(), s, CellSubset::default()], &mut rngs(3))
        .unwrap();
    assert_eq!(report.frozen, [true, true, false]);
    assert_eq!(set.model(OutcomeCell::AlwaysTreated).mean_tree_depth(), 0.0);
}

#[test]
fn undefined_cells_are_errors() {
    let set = OutcomeModelSet::new(&BartSettings::default(), 1, 1, ResponseScale::identity(), 10);
    assert!(set.density(1.0, PrincipalStratum::NeverSurvivor, 1, &[0.0], ClusterIdx(0)).is_err());
    assert!(set.density(1.0, PrincipalStratum::Protected, 0, &[0.0], ClusterIdx(0)).is_err());
    let mut rng = RngStream::new(1, 0);
    assert!(set
        .impute_survivor(PrincipalStratum::Protected, 0, &[0.0], ClusterIdx(0), &mut rng)
        .is_err());
    assert_eq!(OutcomeCell::of(PrincipalStratum::NeverSurvivor, 0), None);
}

fn fit_and_predict(
    rows: &[Vec<f64>],
    y: &[f64],
    clusters: &[ClusterIdx],
    n_clusters: usize,
    test: &[(Vec<f64>, ClusterIdx)],
    iters: usize,
) -> Vec<f64> {
    let design = Design::from_rows(rows, 100).unwrap();
    let mut set = OutcomeModelSet::new(&BartSettings::default(), rows[0].len(), n_clusters, ResponseScale::from_values(y), 10);
    let all: Vec<usize> = (0..y.len()).collect();
    let s = subset(&all, y, clusters);
    let subsets = [s.clone(), s.clone(), s];
    let mut r = rngs(5);
    let mut sums = vec![0.0; test.len()];
    let burn = iters / 2;
    for t in 0..iters {
        set.update_means(&design, &subsets, &mut r).unwrap();
        set.update_variances(&mut r);
        if t >= burn {
            for (s, (x, c)) in sums.iter_mut().zip(test) {
                *s += set.model(OutcomeCell::AlwaysTreated).predict(x, Some(*c)).unwrap();
            }
        }
    }
    sums.iter().map(|s| s / (iters - burn) as f64).collect()
}

#[test]
fn constant_outcomes_predict_the_constant() {
    let mut rng = RngStream::new(7, 0);
    let n = 100;
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.uniform(), rng.standard_normal()]).collect();
    let y = vec![-12.5; n];
    let clusters: Vec<ClusterIdx> = (0..n).map(|i| ClusterIdx(i % 4)).collect();
    let test: Vec<(Vec<f64>, ClusterIdx)> = (0..10).map(|i| (vec![i as f64 / 10.0, 0.0], ClusterIdx(i % 4))).collect();
    for p in fit_and_predict(&rows, &y, &clusters, 4, &test, 300) {
        assert!((p + 12.5).abs() < 0.05, "{p}");
    }
}

#[test]
fn linear_signal_with_cluster_effects() {
    let mut rng = RngStream::new(8, 0);
    let (nc, size) = (40, 12);
    let b: Vec<f64> = (0..nc).map(|_| rng.standard_normal()).collect();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut clusters = Vec::new();
    let mut test = Vec::new();
    let mut truth = Vec::new();
    for c in 0..nc {
        for j in 0..size {
            let x = vec![rng.uniform() * 4.0 - 2.0, rng.uniform()];
            let mean = 3.0 + 2.0 * x[0] + b[c];
            if j < 2 {
                // Held out.
                truth.push(mean + rng.standard_normal());
                test.push((x, ClusterIdx(c)));
            } else {
                y.push(mean + rng.standard_normal());
                rows.push(x);
                clusters.push(ClusterIdx(c));
            }
        }
    }
    let pred = fit_and_predict(&rows, &y, &clusters, nc, &test, 1000);
    let rmse = (pred.iter().zip(&truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / truth.len() as f64).sqrt();
    assert!(rmse <= 1.5, "held-out rmse {rmse}");
}
