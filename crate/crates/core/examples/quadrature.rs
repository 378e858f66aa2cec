// Adaptive quadrature with error estimates, breakpoints, and planar regions.

use collapse_box::quadrature::{integrate, integrate2, integrate_with_breakpoints, Region};

pub fn run_example() {
    let r = integrate(|t: f64| (-t * t).exp(), 0.0, 2.0, 1e-12).unwrap();
    println!("int_0^2 exp(-t^2) = {:.15} (+/- {:.1e}, {} evaluations)", r.value, r.error, r.evaluations);

    let jump = |t: f64| if t < 0.3 { t } else { 1.0 - t };
    match integrate(jump, 0.0, 1.0, 1e-10) {
        Ok(r) => println!("jump without breakpoint: {} ({} evaluations)", r.value, r.evaluations),
        Err(e) => println!("jump without breakpoint: {e}"),
    }
    let split = integrate_with_breakpoints(jump, 0.0, 1.0, &[0.3], 1e-10).unwrap();
    println!("jump with breakpoint at 0.3: {:.12} ({} evaluations)", split.value, split.evaluations);

    for width in [0.25, 0.5, 0.75] {
        let band = integrate2(|_, _| 1.0, Region::Band { lower: 0.0, upper: 1.0, width }, &[], 1e-10).unwrap();
        let fwd = integrate2(|_, _| 1.0, Region::ForwardBand { lower: 0.0, upper: 1.0, width }, &[], 1e-10).unwrap();
        println!("width {width}: |u - v| < w has area {:.10}, 0 <= v - u <= w has area {:.10}", band.value, fwd.value);
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
