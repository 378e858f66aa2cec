// Built-in collapse families, their boundary-condition reports, and the
// evolved marginal of a box probed during collapse.

use collapse_box::behaviors::Distribution;
use collapse_box::collapse::{
    default_grid, make_family, marginal_at, single_box_witness, validate_family, CollapseFamily, FamilySpec, TableGrid,
};

pub fn run_example() {
    let p0 = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
    let specs = [
        ("instantaneous", FamilySpec::instantaneous(p0.clone())),
        ("linear", FamilySpec::linear(p0.clone(), vec![0.5, 1.0, 2.0])),
        ("step", FamilySpec::step(p0.clone(), vec![0.0, 1.0, 1.0])),
        ("exponential", FamilySpec::exponential(p0.clone(), vec![4.0, 8.0, 16.0])),
    ];
    for (name, spec) in &specs {
        let family = make_family(spec).unwrap();
        println!("{name}: dt in [{:.3}, {:.3}]", family.dt_min(), family.dt_max());
        for s in [0.0, 0.25, 1.0, 3.0] {
            let m = marginal_at(&family, &p0, s).unwrap();
            let w = single_box_witness(&family, &p0, s).unwrap();
            println!("  s={s:<5} marginal {m}  tv to prior {w:.4}");
        }
    }

    // A table that never finishes collapsing fails the final-value clause.
    let flat = vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]; 3];
    let bad = FamilySpec::table(
        Distribution::uniform(2).unwrap(),
        vec![1.0, 1.0],
        TableGrid { times: vec![0.0, 1.0, 2.0], values: flat },
    );
    println!("\nmake_family on a flat table fails: {}", make_family(&bad).is_err());
    let family = CollapseFamily::build_unchecked(&bad).unwrap();
    println!("{}", validate_family(&family, &default_grid(&family, 1001)).unwrap());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
