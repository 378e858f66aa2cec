// Drives the command-line surface in-process on a scenario file.

use collapse_box::cli::{data_section, run_from};

pub fn run_example() {
    let dir = std::env::temp_dir().join(format!("collapse-box-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scenario = dir.join("asymmetric.json");
    std::fs::write(
        &scenario,
        r#"{"p0": [0.3, 0.7], "family": {"kind": "step", "dt": [0, 1]}, "grid": [0, 0.5, 1, 1.5]}"#,
    )
    .unwrap();
    let out = dir.join("out");
    let code = run_from([
        "collapse-box",
        "witness",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n",
        "50000",
        "--seed",
        "1",
    ]);
    println!("exit status: {code:?}");
    let csv = std::fs::read_to_string(out.join("witness.csv")).unwrap();
    print!("{}", data_section(&csv));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[allow(dead_code)]
fn main() {
    run_example();
}
