// Two perfectly correlated boxes: the witness curve over elapsed time for a
// family whose outcome-dependent collapse times shift Bob's statistics.

use collapse_box::behaviors::{is_nonsignaling, Distribution, ANALYTIC_TOL};
use collapse_box::collapse::{make_family, FamilySpec};
use collapse_box::mc::SimConfig;
use collapse_box::scenarios::TwoBoxScenario;
use collapse_box::signaling::{channel_capacity, witness, witness_sweep, InducedChannel, WitnessOptions};

pub fn run_example() {
    let p0 = Distribution::new(vec![0.3, 0.7]).unwrap();
    let s = TwoBoxScenario::new(make_family(&FamilySpec::step(p0.clone(), vec![0.0, 1.0])).unwrap());
    let first = s.first_measurement_behavior();
    println!("first-measurement statistics non-signaling: {}", is_nonsignaling(&first, ANALYTIC_TOL).pass);

    let grid: Vec<f64> = (0..=6).map(|k| 0.25 * k as f64).collect();
    println!("\n  s      TV    verdict");
    for r in witness_sweep(&s, &grid, &WitnessOptions::analytic()).unwrap() {
        println!("{:>4.2}  {:.4}  {}", r.elapsed().unwrap(), r.tv_analytic, r.verdict.label());
    }

    let opts = WitnessOptions::with_mc(SimConfig::new(200_000, 11).unwrap());
    let r = witness(&s, 0.5, &opts).unwrap();
    let e = r.empirical.unwrap();
    println!(
        "\nat s=0.5: analytic {:.4}, empirical {:.4} [{:.4}, {:.4}], p = {:.2e}",
        r.tv_analytic, e.tv, e.ci.0, e.ci.1, e.p_value
    );
    let c = InducedChannel::from_scenario(&s, 0.5).unwrap();
    println!("capacity of the induced channel: {:.5} bits/use", channel_capacity(&c, 1e-9).unwrap());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
