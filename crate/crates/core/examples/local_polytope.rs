// Bell locality checks in the CHSH scenario: deterministic vertices,
// the PR box, uniform noise, and the noisy-PR family.

use collapse_box::behaviors::{
    chsh_value, is_local, is_nonsignaling, Alphabets, BoxBehavior, LocalStrategy, Locality, ANALYTIC_TOL,
};

pub fn run_example() {
    let al = Alphabets::CHSH;
    let certified = (0..16)
        .filter(|&k| {
            let v = LocalStrategy::from_index(al, k).behavior(al);
            matches!(is_local(&v, ANALYTIC_TOL), Ok(Locality::Local(_)))
        })
        .count();
    println!("deterministic strategies certified local: {certified}/16");

    let pr = BoxBehavior::pr_box();
    println!(
        "PR box: CHSH = {}, non-signaling = {}",
        chsh_value(&pr).unwrap(),
        is_nonsignaling(&pr, ANALYTIC_TOL).pass
    );
    if let Locality::Nonlocal { inequality, violation } = is_local(&pr, ANALYTIC_TOL).unwrap() {
        println!(
            "  separating inequality: value {:.3} > bound {:.3} (violation {violation:.3})",
            inequality.evaluate(&pr),
            inequality.bound
        );
    }

    println!("\n   v   CHSH   local");
    let noise = BoxBehavior::uniform_noise(al).unwrap();
    for k in 0..=8 {
        let v = k as f64 / 8.0;
        let bx = BoxBehavior::from_fn(al, |x, y, a, b| v * pr.p(x, y, a, b) + (1.0 - v) * noise.p(x, y, a, b)).unwrap();
        let local = is_local(&bx, ANALYTIC_TOL).unwrap().is_member();
        println!("{v:>5.3}  {:>5.3}  {local}", chsh_value(&bx).unwrap());
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
