// Seeded simulation: worker-count invariance, intervals, and
// goodness-of-fit against the analytic marginal.

use collapse_box::behaviors::Distribution;
use collapse_box::collapse::{make_family, marginal_at, FamilySpec};
use collapse_box::mc::{gof_test, simulate_single, SimConfig};

pub fn run_example() {
    let p0 = Distribution::new(vec![0.1, 0.6, 0.3]).unwrap();
    let family = make_family(&FamilySpec::linear(p0.clone(), vec![1.0, 2.0, 0.5])).unwrap();
    let s = 0.4;
    let predicted = marginal_at(&family, &p0, s).unwrap();

    let base = SimConfig::new(250_000, 2024).unwrap();
    let runs: Vec<_> =
        [1, 2, 8].iter().map(|&w| simulate_single(&family, &p0, s, &base.with_workers(w)).unwrap()).collect();
    println!("counts identical across 1, 2, 8 workers: {}", runs.windows(2).all(|r| r[0] == r[1]));

    let e = &runs[0];
    for o in 0..e.outcomes() {
        let (lo, hi) = e.interval(o);
        println!(
            "outcome {o}: predicted {:.5}  observed {:.5}  95% [{lo:.5}, {hi:.5}]",
            predicted.prob(o),
            e.frequency(o)
        );
    }
    let g = gof_test(e, &predicted, 0.01).unwrap();
    println!("vs analytic: chi2 {:.3} (df {}), p {:.3}", g.statistic, g.df, g.p_value);
    let g = gof_test(e, &p0, 0.01).unwrap();
    println!("vs prior:    chi2 {:.1} (df {}), p {:.2e}", g.statistic, g.df, g.p_value);
}

#[allow(dead_code)]
fn main() {
    run_example();
}
