use netshift::baseline::*;
use netshift::graph::{Snapshot, TemporalNetwork};
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

/// Two-tailed Student t tail by Simpson integration of the density.
fn simpson_two_tailed(t: f64, dof: usize) -> f64 {
    let nu = dof as f64;
    let c = (ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln()).exp();
    let f = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let a = t.abs();
    let n = 20_000;
    let h = a / n as f64;
    let mut s = f(0.0) + f(a);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn p_value_matches_integrated_density() {
    for &dof in &[1usize, 2, 3, 7, 15, 40] {
        for &t in &[0.0, 0.3, 1.0, 2.1, 3.5, 6.0] {
            let got = two_tailed_p(t, dof);
            let want = simpson_two_tailed(t, dof);
            assert!((got - want).abs() < 1e-8, "t={t} dof={dof}: {got} vs {want}");
        }
    }
}

#[test]
fn worked_prediction_test() {
    // mean 2, s = 1, w = 3: t = 3 / sqrt(4/3).
    let r = t_test_detect(&[1.0, 2.0, 3.0], 5.0, 0.05, TestForm::Prediction).unwrap();
    assert!((r.t - 3.0 / (4.0f64 / 3.0).sqrt()).abs() < 1e-12);
    assert_eq!(r.dof, 2);
    let one = t_test_detect(&[1.0, 2.0, 3.0], 5.0, 0.05, TestForm::OneSample).unwrap();
    assert!((one.t - 3.0 * 3.0f64.sqrt()).abs() < 1e-12);
    assert!(one.p < r.p);
}

#[test]
fn constant_window() {
    let same = t_test_detect(&[2.0; 4], 2.0, 0.05, TestForm::Prediction).unwrap();
    assert_eq!((same.p, same.accepted, same.degenerate), (1.0, false, false));
    let diff = t_test_detect(&[2.0; 4], 2.5, 0.05, TestForm::Prediction).unwrap();
    assert_eq!((diff.p, diff.accepted, diff.degenerate), (0.0, true, true));
    assert!(t_test_detect(&[1.0], 1.0, 0.05, TestForm::Prediction).is_err());
}

fn ring(n: usize, extra: &[(usize, usize)]) -> Snapshot {
    let mut edges: Vec<(usize, usize, u32)> = (0..n).map(|u| (u, (u + 1) % n, 1)).collect();
    edges.extend(extra.iter().map(|&(u, v)| (u, v, 1)));
    Snapshot::from_edges(n, false, edges).unwrap()
}

#[test]
fn degree_jump_after_quiet_window_is_flagged() {
    let mut snaps: Vec<Snapshot> = (0..5)
        .map(|i| ring(10, if i % 2 == 0 { &[(0, 5)] } else { &[(1, 6)] }))
        .collect();
    let chords: Vec<(usize, usize)> = (0..5).map(|u| (u, u + 5)).chain([(0, 3), (1, 4), (2, 7)]).collect();
    snaps.push(ring(10, &chords));
    let net = TemporalNetwork::new(snaps).unwrap();
    let cfg = BaselineConfig { window: 5, ..BaselineConfig::default() };
    let report = detect_baseline(&net, &cfg).unwrap();
    assert_eq!(report.windows.len(), 1);
    // Every window snapshot has the same degree, so the test is degenerate.
    assert_eq!(report.detected_instants(), vec![5]);

    let geo = detect_baseline(&net, &BaselineConfig { statistic: Statistic::MeanGeodesic, ..cfg }).unwrap();
    assert_eq!(geo.windows[0].t_star, 5);
    assert!(geo.windows[0].accepted);
}

#[test]
fn empty_snapshots_have_no_geodesic() {
    let snaps = vec![Snapshot::empty(4, false), ring(4, &[])];
    let net = TemporalNetwork::new(snaps).unwrap();
    let v = scalar_series(&net, Statistic::MeanGeodesic).unwrap();
    assert_eq!(v[0], None);
    assert!(v[1].is_some());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn affine_invariance(
        xs in proptest::collection::vec(-50.0f64..50.0, 2..20),
        probe in -80.0f64..80.0,
        a in 0.1f64..10.0,
        b in -20.0f64..20.0,
        flip in any::<bool>(),
    ) {
        let a = if flip { -a } else { a };
        let base = t_test_detect(&xs, probe, 0.05, TestForm::Prediction).unwrap();
        prop_assume!(!base.degenerate && base.t.is_finite());
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let moved = t_test_detect(&ys, a * probe + b, 0.05, TestForm::Prediction).unwrap();
        prop_assert!((moved.t - a.signum() * base.t).abs() <= 1e-6 * base.t.abs().max(1.0));
        prop_assert!((moved.p - base.p).abs() <= 1e-6);
    }

    #[test]
    fn symmetric_and_monotone_in_t(t in 0.0f64..20.0, dt in 0.0f64..5.0, dof in 1usize..60) {
        let p = two_tailed_p(t, dof);
        prop_assert!((p - two_tailed_p(-t, dof)).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(two_tailed_p(t + dt, dof) <= p + 1e-14);
    }
}
