// Randomized input times: the window probabilities, the window-marginal
// formula, and its Monte Carlo ground truth.

use collapse_box::behaviors::Distribution;
use collapse_box::collapse::{make_family, FamilySpec};
use collapse_box::mc::{simulate_window, SimConfig};
use collapse_box::scenarios::{omega, theta, window_marginal, window_terms, TwoBoxScenario, Window, WindowSpec};

pub fn run_example() {
    let w = Window::new(WindowSpec::uniform(1.0)).unwrap();
    println!("dt_min   theta    omega   2r - r^2");
    for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("{r:<6} {:>7.4} {:>8.4} {:>8.4}", theta(&w, r).unwrap(), omega(&w, r).unwrap(), 2.0 * r - r * r);
    }

    let p0 = Distribution::new(vec![0.3, 0.7]).unwrap();
    let cfg = SimConfig::new(400_000, 5).unwrap();
    for spec in [FamilySpec::instantaneous(p0.clone()), FamilySpec::linear(p0.clone(), vec![0.25, 1.0])] {
        let s = TwoBoxScenario::new(make_family(&spec).unwrap());
        let terms = window_terms(&s, &w).unwrap();
        let emp = simulate_window(&s, &w, &cfg).unwrap();
        println!("\n{:?} family", spec.kind);
        match window_marginal(&s, &w) {
            Ok(m) => println!("  formula   {m}"),
            Err(e) => println!("  formula   {:?} ({e})", terms.raw),
        }
        println!("  simulated {:?}  (tv to prior {:.4})", emp.frequencies(), emp.tv_to(&p0).unwrap());
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
