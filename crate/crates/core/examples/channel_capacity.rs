// Capacity of the binary-input channel from Alice's choice to Bob's output.

use collapse_box::behaviors::Distribution;
use collapse_box::signaling::{capacity, InducedChannel};

pub fn run_example() {
    let row = |p: f64| Distribution::new(vec![p, 1.0 - p]).unwrap();
    for (a, b) in [(0.3, 0.3), (0.3, 0.51), (0.1, 0.9), (0.0, 1.0)] {
        let c = InducedChannel::new(vec![row(a), row(b)]).unwrap();
        let r = capacity(&c, 1e-10).unwrap();
        let tv = c.rows()[0].tv_distance(&c.rows()[1]).unwrap();
        println!(
            "rows [{a:.2}, {:.2}] / [{b:.2}, {:.2}]: tv {tv:.3}, capacity {:.6} bits, prior [{:.4}, {:.4}], {} iterations",
            1.0 - a,
            1.0 - b,
            r.bits,
            r.prior[0],
            r.prior[1],
            r.iterations
        );
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
