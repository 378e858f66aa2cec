//! Acceptance suite. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use collapse_box::behaviors::{chsh_value, is_local, Alphabets, BoxBehavior, Distribution, LocalStrategy, Locality};
use collapse_box::cli::data_section;
use collapse_box::collapse::{
    default_grid, make_family, marginal_at, validate_family, Clause, CollapseFamily, FamilySpec, TableGrid,
};
use collapse_box::mc::{gof_test, run_replicas, simulate_single, simulate_window, SimConfig};
use collapse_box::scenarios::{theta, window_marginal, window_terms, TwoBoxScenario, Window, WindowSpec};
use collapse_box::signaling::{
    channel_capacity, single_box_report, window_report, witness, InducedChannel, Verdict, WitnessOptions,
};

const ALPHA: f64 = 0.01;

fn dist(w: &[f64]) -> Distribution {
    Distribution::new(w.to_vec()).unwrap()
}

fn random_prior(rng: &mut ChaCha8Rng) -> Distribution {
    let k = rng.random_range(2..=5);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    dist(&w)
}

fn asymmetric() -> TwoBoxScenario {
    TwoBoxScenario::new(make_family(&FamilySpec::step(dist(&[0.3, 0.7]), vec![0.0, 1.0])).unwrap())
}

/// Largest per-outcome deviation of `counts / n` from `p`, in binomial standard errors.
fn z_max(e: &collapse_box::mc::EmpiricalDist, p: &Distribution) -> f64 {
    e.max_z_score(p).unwrap()
}

fn criterion_1() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let priors: Vec<Distribution> = (0..50).map(|_| random_prior(&mut rng)).collect();
    let window = Window::new(WindowSpec::uniform(1.0)).unwrap();
    let cases: Vec<(TwoBoxScenario, f64)> = priors
        .iter()
        .map(|p| {
            let s = TwoBoxScenario::new(make_family(&FamilySpec::instantaneous(p.clone())).unwrap());
            let elapsed = rng.random_range(0.0..2.0);
            (s, elapsed)
        })
        .collect();

    let mut worst_tv: f64 = 0.0;
    for (s, elapsed) in &cases {
        let a = WitnessOptions::analytic();
        worst_tv = worst_tv
            .max(single_box_report(s, *elapsed, &a).unwrap().tv_analytic)
            .max(witness(s, *elapsed, &a).unwrap().tv_analytic)
            .max(window_report(s, &window, &a).unwrap().tv_analytic);
    }
    assert!(worst_tv <= 1e-12, "analytic TV {worst_tv}");

    let seeds = 1000u64;
    let outcomes: Vec<[(bool, bool); 3]> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let (s, elapsed) = &cases[(seed % 50) as usize];
            let cfg = SimConfig::new(2000, seed).unwrap().with_workers(1);
            let opts = WitnessOptions::with_mc(cfg).alpha(ALPHA);
            let reports = [
                single_box_report(s, *elapsed, &opts).unwrap(),
                witness(s, *elapsed, &opts).unwrap(),
                window_report(s, &window, &opts).unwrap(),
            ];
            reports.map(|r| (r.verdict == Verdict::Signaling, r.empirical.unwrap().p_value < ALPHA))
        })
        .collect();

    let mut parts = vec![];
    for (i, name) in ["single", "twobox", "window"].iter().enumerate() {
        let verdicts = outcomes.iter().filter(|o| o[i].0).count() as f64 / seeds as f64;
        let raw = outcomes.iter().filter(|o| o[i].1).count() as f64 / seeds as f64;
        assert!(verdicts <= ALPHA, "{name}: verdict rate {verdicts}");
        // Binomial(1000, 0.01) exceeds 25 with probability below 1e-4.
        assert!(raw <= 0.025, "{name}: raw rejection rate {raw}");
        parts.push(format!("{name} verdicts {verdicts:.3} raw {raw:.3}"));
    }
    format!("max analytic TV {worst_tv:.1e}; {}", parts.join(", "))
}

fn criterion_2() -> String {
    let s = asymmetric();
    // Brute force over the latent outcome at s = 0.5: latent 0 has
    // collapsed, latent 1 still answers from the prior.
    let p0: [f64; 2] = [0.3, 0.7];
    let oracle = [p0[0] + p0[1] * p0[0], p0[1] * p0[1]];
    let tv_oracle = 0.5 * ((oracle[0] - p0[0]).abs() + (oracle[1] - p0[1]).abs());
    let r = witness(&s, 0.5, &WitnessOptions::analytic()).unwrap();
    assert!((r.tv_analytic - tv_oracle).abs() <= 1e-12 && (tv_oracle - 0.21).abs() < 1e-12);

    let n = 1_000_000u64;
    let mc = witness(&s, 0.5, &WitnessOptions::with_mc(SimConfig::new(n, 2).unwrap())).unwrap();
    let e = mc.empirical.unwrap();
    let se = (p0[0] * p0[1] / n as f64 + oracle[0] * oracle[1] / n as f64).sqrt();
    let z = (e.tv - 0.21).abs() / se;
    assert!(z <= 4.0, "MC TV {} is {z:.2} SE from 0.21", e.tv);
    assert_eq!(mc.verdict, Verdict::Signaling);

    let c = InducedChannel::from_scenario(&s, 0.5).unwrap();
    let cap = channel_capacity(&c, 1e-10).unwrap();
    let grid = (0..=10_000)
        .map(|k| {
            let q = k as f64 / 10_000.0;
            c.mutual_information(&[1.0 - q, q])
        })
        .fold(0.0, f64::max);
    assert!(cap > 0.0 && (cap - grid).abs() <= 1e-4);
    format!("TV {:.6}, MC {:.6} ({z:.2} SE), capacity {cap:.6} bits (grid {grid:.6})", r.tv_analytic, e.tv)
}

fn valid_table(p0: &Distribution) -> FamilySpec {
    let n = p0.len();
    let at = |w: f64| -> Vec<Vec<f64>> {
        (0..n).map(|a| (0..n).map(|o| (1.0 - w) * p0.prob(o) + w * f64::from(a == o)).collect()).collect()
    };
    FamilySpec::table(
        p0.clone(),
        vec![1.0; n],
        TableGrid { times: vec![0.0, 0.25, 0.5, 1.0], values: vec![at(0.0), at(0.4), at(0.7), at(1.0)] },
    )
}

fn criterion_3() -> String {
    let p0 = dist(&[0.2, 0.5, 0.3]);
    let builtins = [
        FamilySpec::instantaneous(p0.clone()),
        FamilySpec::linear(p0.clone(), vec![0.5, 1.0, 2.0]),
        FamilySpec::step(p0.clone(), vec![0.0, 1.0, 0.5]),
        FamilySpec::exponential(p0.clone(), vec![3.0, 5.0, 9.0]),
        valid_table(&p0),
    ];
    for spec in &builtins {
        let f = CollapseFamily::build_unchecked(spec).unwrap();
        let report = validate_family(&f, &default_grid(&f, 1000)).unwrap();
        assert!(report.pass, "{:?} rejected:\n{report}", spec.kind);
    }

    let half = dist(&[0.5, 0.5]);
    let table = |values: Vec<Vec<Vec<f64>>>| {
        FamilySpec::table(half.clone(), vec![1.0, 1.0], TableGrid { times: vec![0.0, 0.5, 1.0], values })
    };
    let delta = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let prior = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
    let bad = [
        (Clause::Initial, table(vec![delta.clone(), delta.clone(), delta.clone()])),
        (Clause::Final, table(vec![prior.clone(), prior.clone(), prior.clone()])),
        (Clause::Normalization, table(vec![prior.clone(), vec![vec![0.6, 0.6], vec![0.3, 0.3]], delta.clone()])),
    ];
    for (clause, spec) in &bad {
        let f = CollapseFamily::build_unchecked(spec).unwrap();
        let report = validate_family(&f, &default_grid(&f, 1000)).unwrap();
        let failed: Vec<Clause> = report.failed().map(|c| c.clause).collect();
        assert!(!report.pass && failed.contains(clause), "{clause:?} not flagged:\n{report}");
        assert!(report.to_string().contains(clause.label()));
        assert!(make_family(spec).is_err());
    }
    format!("{} built-ins accepted, 3 violating tables rejected with clause named", builtins.len())
}

fn criterion_4() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let make = |kind: usize, p0: &Distribution, rng: &mut ChaCha8Rng| -> FamilySpec {
        let n = p0.len();
        match kind {
            0 => FamilySpec::instantaneous(p0.clone()),
            1 => FamilySpec::linear(p0.clone(), (0..n).map(|_| rng.random_range(0.1..2.0)).collect()),
            2 => FamilySpec::step(p0.clone(), (0..n).map(|_| rng.random_range(0.0..2.0)).collect()),
            3 => FamilySpec::exponential(p0.clone(), (0..n).map(|_| rng.random_range(1.0..10.0)).collect()),
            _ => valid_table(p0),
        }
    };

    let mut worst_exact: f64 = 0.0;
    for kind in 0..5 {
        for _ in 0..10 {
            let p0 = random_prior(&mut rng);
            let f = make_family(&make(kind, &p0, &mut rng)).unwrap();
            for k in 0..=40 {
                let s = f.dt_max().max(1.0) * 1.25 * k as f64 / 40.0;
                let m = marginal_at(&f, &p0, s).unwrap();
                for o in 0..p0.len() {
                    let brute: f64 = (0..p0.len()).map(|a| p0.prob(a) * f.value(a, o, s)).sum();
                    worst_exact = worst_exact.max((brute - m.prob(o)).abs());
                }
            }
        }
    }
    assert!(worst_exact <= 1e-14, "brute force differs by {worst_exact}");

    let triples: Vec<(CollapseFamily, Distribution, f64)> = (0..20)
        .map(|i| {
            let p0 = random_prior(&mut rng);
            let f = make_family(&make(i % 5, &p0, &mut rng)).unwrap();
            let s = rng.random_range(0.0..f.dt_max().max(0.5));
            (f, p0, s)
        })
        .collect();
    let worst_z = triples
        .iter()
        .enumerate()
        .map(|(i, (f, p0, s))| {
            let e = simulate_single(f, p0, *s, &SimConfig::new(1_000_000, 400 + i as u64).unwrap()).unwrap();
            z_max(&e, &marginal_at(f, p0, *s).unwrap())
        })
        .fold(0.0, f64::max);
    assert!(worst_z <= 4.0, "MC deviates by {worst_z:.2} SE");
    format!("brute force max diff {worst_exact:.1e}; 20 MC triples within {worst_z:.2} SE")
}

fn criterion_5() -> String {
    let w = Window::new(WindowSpec::uniform(1.0)).unwrap();
    let n = 1_000_000u64;
    let mut parts = vec![];
    for (i, (r, expected)) in [(0.25, 0.4375), (0.5, 0.75), (0.75, 0.9375)].into_iter().enumerate() {
        let th = theta(&w, r).unwrap();
        assert!((th - expected).abs() <= 1e-6, "theta({r}) = {th}");
        let cfg = SimConfig::new(n, 500 + i as u64).unwrap();
        let e = run_replicas(&cfg, 2, |rng| {
            let ta = w.quantile(rng.random());
            let tb = w.quantile(rng.random());
            usize::from((tb - ta).abs() < r)
        });
        let z = (e.frequency(1) - expected).abs() / (expected * (1.0 - expected) / n as f64).sqrt();
        assert!(z <= 4.0, "MC theta({r}) = {} is {z:.2} SE off", e.frequency(1));
        parts.push(format!("{r}: {th:.7} (MC {z:.2} SE)"));
    }
    parts.join(", ")
}

fn criterion_6() -> String {
    let w = Window::new(WindowSpec::uniform(1.0)).unwrap();
    let p0 = dist(&[0.3, 0.7]);
    let n = 1_000_000u64;

    let inst = TwoBoxScenario::new(make_family(&FamilySpec::instantaneous(p0.clone())).unwrap());
    let m = window_marginal(&inst, &w).unwrap();
    assert!(m.max_abs_diff(&p0).unwrap() <= 1e-9);
    let e = simulate_window(&inst, &w, &SimConfig::new(n, 60).unwrap()).unwrap();
    let z_inst = z_max(&e, &p0);
    assert!(z_inst <= 4.0 && !gof_test(&e, &p0, ALPHA).unwrap().reject);

    let mut parts = vec![format!("instantaneous matches prior (MC {z_inst:.2} SE)")];
    for (name, spec) in [
        ("linear", FamilySpec::linear(p0.clone(), vec![0.25, 1.0])),
        ("step", FamilySpec::step(p0.clone(), vec![0.25, 1.0])),
    ] {
        let s = TwoBoxScenario::new(make_family(&spec).unwrap());
        let terms = window_terms(&s, &w).unwrap();
        let e = simulate_window(&s, &w, &SimConfig::new(n, 61).unwrap()).unwrap();
        let normalized: Vec<f64> = terms.raw.iter().map(|r| r / terms.mass).collect();
        let discrepancy = (normalized[0] - e.frequency(0)).abs();
        let z = z_max(&e, &p0);
        println!(
            "    {name}: formula raw {:?} (mass {:.4}), MC {:?}, discrepancy after rescaling {discrepancy:.4}",
            terms.raw,
            terms.mass,
            e.frequencies()
        );
        assert!(z >= 5.0, "{name}: MC deviation from prior only {z:.2} SE");
        parts.push(format!("{name} MC off prior by {z:.1} SE"));
    }
    parts.join(", ")
}

fn criterion_7() -> String {
    let al = Alphabets::CHSH;
    let check_local = |bx: &BoxBehavior| match is_local(bx, 1e-9).unwrap() {
        Locality::Local(mix) => {
            let r = mix.max_residual(bx);
            assert!(r <= 1e-9, "certificate residual {r}");
            r
        }
        Locality::Nonlocal { .. } => panic!("local box rejected"),
    };
    let mut worst: f64 = 0.0;
    for k in 0..16 {
        worst = worst.max(check_local(&LocalStrategy::from_index(al, k).behavior(al)));
    }
    worst = worst.max(check_local(&BoxBehavior::uniform_noise(al).unwrap()));

    let pr = BoxBehavior::pr_box();
    assert_eq!(chsh_value(&pr).unwrap(), 4.0);
    match is_local(&pr, 1e-9).unwrap() {
        Locality::Nonlocal { violation, .. } => assert!(violation > 0.0),
        Locality::Local(_) => panic!("PR box accepted"),
    }
    format!("16 vertices and noise certified (residual {worst:.1e}), PR box rejected with CHSH 4")
}

fn cli(args: &[&str], threads: &str) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_collapse-box"))
        .args(args)
        .env("COLLAPSE_BOX_THREADS", threads)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn criterion_8() -> String {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let tmp = tempfile::tempdir().unwrap();
    type Run<'a> = (&'a str, &'a str, &'a [&'a str], &'a str);
    let runs: [Run; 4] = [
        ("witness", "asymmetric.json", &["--n", "20000"], "witness.csv"),
        ("simulate", "window_linear.json", &["--n", "50000"], "simulate.csv"),
        (
            "sweep",
            "window_linear.json",
            &["--n", "20000", "--grid", "dt_window=0.5,1,2", "--grid", "n=5000,20000"],
            "sweep.csv",
        ),
        ("sweep", "single.json", &["--n", "10000", "--grid", "elapsed=0:1:5"], "sweep.csv"),
    ];
    let mut compared = 0;
    for (i, (cmd, file, extra, output)) in runs.iter().enumerate() {
        let scenario = scenarios.join(file);
        let mut texts = vec![];
        for (j, (workers, threads)) in [("1", "1"), ("1", "1"), ("8", "8"), ("0", "8")].iter().enumerate() {
            let out = tmp.path().join(format!("{i}-{j}"));
            let mut args = vec![
                *cmd,
                "--scenario",
                scenario.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "17",
                "--workers",
                workers,
            ];
            args.extend_from_slice(extra);
            let code = cli(&args, threads);
            assert!(code == 0 || code == 2, "{cmd} {file} exited {code}");
            texts.push(std::fs::read_to_string(out.join(output)).unwrap());
        }
        for t in &texts[1..] {
            assert_eq!(data_section(t), data_section(&texts[0]), "{cmd} {file} data differs");
            assert_eq!(t, &texts[0]);
        }
        compared += 1;
    }
    format!("{compared} manifests byte-identical over repeat runs and 1/8 workers")
}

type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 8] = [
        ("instantaneous collapse is non-signaling", criterion_1),
        ("asymmetric finite collapse signals", criterion_2),
        ("boundary conditions enforced", criterion_3),
        ("marginal matches brute force and MC", criterion_4),
        ("theta by quadrature and MC", criterion_5),
        ("window formula vs MC ground truth", criterion_6),
        ("local polytope membership", criterion_7),
        ("CLI reproducibility", criterion_8),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} PASS ({secs:.1}s) {name}: {detail}", i + 1),
            Err(e) => {
                failures += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("criterion {} FAIL ({secs:.1}s) {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
