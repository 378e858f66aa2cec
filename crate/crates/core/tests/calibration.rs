//! Null calibration of the goodness-of-fit machinery and Monte Carlo
//! agreement with the analytic evaluators.

use rayon::prelude::*;

use collapse_box::behaviors::Distribution;
use collapse_box::collapse::{make_family, marginal_at, FamilySpec};
use collapse_box::mc::{gof_test, homogeneity_test, simulate_single, simulate_twobox, SimConfig};
use collapse_box::scenarios::{bob_marginal, Input, Schedule, TwoBoxScenario};

fn dist(w: &[f64]) -> Distribution {
    Distribution::new(w.to_vec()).unwrap()
}

#[test]
fn gof_rejection_rate_under_the_null() {
    let p0 = dist(&[0.2, 0.3, 0.5]);
    let family = make_family(&FamilySpec::linear(p0.clone(), vec![1.0, 0.5, 2.0])).unwrap();
    let s = 0.3;
    let target = marginal_at(&family, &p0, s).unwrap();
    let rejected = (0..1000u64)
        .into_par_iter()
        .filter(|&seed| {
            let cfg = SimConfig::new(5000, seed).unwrap().with_workers(1);
            let e = simulate_single(&family, &p0, s, &cfg).unwrap();
            gof_test(&e, &target, 0.01).unwrap().reject
        })
        .count();
    let rate = rejected as f64 / 1000.0;
    assert!((0.005..=0.02).contains(&rate), "rejection rate {rate}");
}

#[test]
fn small_sample_tests_stay_conservative() {
    // Expected counts below 5 route to the exact test.
    let p = dist(&[0.05, 0.15, 0.8]);
    let family = make_family(&FamilySpec::instantaneous(p.clone())).unwrap();
    let rejected = (0..1000u64)
        .into_par_iter()
        .filter(|&seed| {
            let e = simulate_single(&family, &p, 0.0, &SimConfig::new(30, seed).unwrap().with_workers(1)).unwrap();
            gof_test(&e, &p, 0.01).unwrap().reject
        })
        .count();
    assert!(rejected <= 20, "{rejected} rejections");
}

#[test]
fn homogeneity_rate_under_the_null() {
    let p0 = dist(&[0.4, 0.6]);
    let s = TwoBoxScenario::new(make_family(&FamilySpec::linear(p0.clone(), vec![1.0, 1.0])).unwrap());
    // Equal durations preserve the marginal, so both branches agree.
    assert!(bob_marginal(&s, Input::Triggering, 0.5).unwrap().tv_distance(&p0).unwrap() < 1e-15);
    let rejected = (0..1000u64)
        .into_par_iter()
        .filter(|&seed| {
            let cfg = SimConfig::new(4000, seed).unwrap().with_workers(1);
            let e0 = simulate_twobox(&s, &Schedule { t_a: 0.0, t_b: 0.5, x: 0 }, &cfg).unwrap();
            let e1 =
                simulate_twobox(&s, &Schedule { t_a: 0.0, t_b: 0.5, x: 1 }, &cfg.with_seed(seed + 10_000)).unwrap();
            homogeneity_test(&e0, &e1, 0.01).unwrap().reject
        })
        .count();
    let rate = rejected as f64 / 1000.0;
    assert!((0.003..=0.022).contains(&rate), "rejection rate {rate}");
}

#[test]
fn simulated_marginals_match_analytic() {
    let p0 = dist(&[0.1, 0.2, 0.3, 0.4]);
    let specs = [
        FamilySpec::instantaneous(p0.clone()),
        FamilySpec::linear(p0.clone(), vec![0.2, 0.4, 0.8, 1.6]),
        FamilySpec::step(p0.clone(), vec![0.0, 0.5, 1.0, 1.5]),
        FamilySpec::exponential(p0.clone(), vec![1.0, 2.0, 4.0, 8.0]),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let f = make_family(spec).unwrap();
        for (j, s) in [0.0, 0.3, 0.7, 1.2].into_iter().enumerate() {
            let cfg = SimConfig::new(400_000, (10 * i + j) as u64).unwrap();
            let e = simulate_single(&f, &p0, s, &cfg).unwrap();
            let z = e.max_z_score(&marginal_at(&f, &p0, s).unwrap()).unwrap();
            assert!(z < 4.5, "{:?} at s={s}: {z:.2} SE", spec.kind);
        }
    }
}
