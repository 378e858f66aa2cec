//! Signaling quantification: how far Bob's statistics move with Alice's
//! choice, and how many bits per use that difference could carry.

use rayon::prelude::*;

use crate::behaviors::Distribution;
use crate::collapse::marginal_at;
use crate::error::{Error, Result};
use crate::mc::{
    derive_seed, gof_test, homogeneity_test, simulate_single, simulate_twobox, simulate_window, EmpiricalDist,
    SimConfig, Z95,
};
use crate::scenarios::{bob_marginal, window_terms, Input, Schedule, TwoBoxScenario, Window};

/// Analytic TV at or below which a scenario is treated as non-signaling.
pub const ANALYTIC_TV_TOL: f64 = 1e-9;
pub const DEFAULT_ALPHA: f64 = 0.01;

const BA_MAX_ITERATIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Signaling,
    NonSignaling,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Signaling => "signaling",
            Verdict::NonSignaling => "non-signaling",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessOptions {
    /// Monte Carlo corroboration; `None` gives an analytic-only verdict.
    pub mc: Option<SimConfig>,
    pub alpha: f64,
    pub tol: f64,
}

impl WitnessOptions {
    pub fn analytic() -> Self {
        Self { mc: None, alpha: DEFAULT_ALPHA, tol: ANALYTIC_TV_TOL }
    }

    pub fn with_mc(cfg: SimConfig) -> Self {
        Self { mc: Some(cfg), ..Self::analytic() }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Where the witness was evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Probe {
    /// Fixed delay between the triggering input and the probe.
    Elapsed(f64),
    /// Randomized input times over a window.
    Window { dt_window: f64, theta: f64, omega: f64, mass: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalWitness {
    pub tv: f64,
    pub ci: (f64, f64),
    pub p_value: f64,
    pub n: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WitnessReport {
    pub probe: Probe,
    pub tv_analytic: f64,
    pub empirical: Option<EmpiricalWitness>,
    pub verdict: Verdict,
}

impl WitnessReport {
    pub fn elapsed(&self) -> Option<f64> {
        match self.probe {
            Probe::Elapsed(s) => Some(s),
            Probe::Window { .. } => None,
        }
    }
}

/// Signaling requires the analytic TV to exceed `tol` and, when Monte
/// Carlo is run, the empirical test to reject at `alpha`.
fn decide(tv_analytic: f64, empirical: Option<&EmpiricalWitness>, opts: &WitnessOptions) -> Verdict {
    let analytic = tv_analytic > opts.tol;
    let empirical = empirical.is_none_or(|e| e.p_value < opts.alpha);
    if analytic && empirical {
        Verdict::Signaling
    } else {
        Verdict::NonSignaling
    }
}

/// Conservative 95% band for the TV between two empirical distributions:
/// half the sum of per-outcome normal half-widths of the difference.
fn tv_band(tv: f64, e0: &EmpiricalDist, e1: &EmpiricalDist) -> (f64, f64) {
    let half: f64 = 0.5
        * (0..e0.outcomes())
            .map(|i| {
                let (p0, p1) = (e0.frequency(i), e1.frequency(i));
                Z95 * (p0 * (1.0 - p0) / e0.n() as f64 + p1 * (1.0 - p1) / e1.n() as f64).sqrt()
            })
            .sum::<f64>();
    ((tv - half).max(0.0), (tv + half).min(1.0))
}

fn band_to_prior(tv: f64, e: &EmpiricalDist) -> (f64, f64) {
    let half: f64 = 0.5
        * (0..e.outcomes())
            .map(|i| {
                let f = e.frequency(i);
                Z95 * (f * (1.0 - f) / e.n() as f64).sqrt()
            })
            .sum::<f64>();
    ((tv - half).max(0.0), (tv + half).min(1.0))
}

/// Compares Bob's statistics under Alice's two choices, `elapsed` seconds
/// after her input.
pub fn witness(s: &TwoBoxScenario, elapsed: f64, opts: &WitnessOptions) -> Result<WitnessReport> {
    let nct = bob_marginal(s, Input::NonTriggering, elapsed)?;
    let ct = bob_marginal(s, Input::Triggering, elapsed)?;
    let tv_analytic = nct.tv_distance(&ct)?;
    let empirical = match opts.mc {
        None => None,
        Some(cfg) => {
            let sched = |x| Schedule { t_a: 0.0, t_b: elapsed, x };
            let e0 = simulate_twobox(s, &sched(0), &cfg.with_seed(derive_seed(cfg.seed(), 0)))?;
            let e1 = simulate_twobox(s, &sched(1), &cfg.with_seed(derive_seed(cfg.seed(), 1)))?;
            let tv = e0.tv_between(&e1)?;
            let test = homogeneity_test(&e0, &e1, opts.alpha)?;
            Some(EmpiricalWitness { tv, ci: tv_band(tv, &e0, &e1), p_value: test.p_value, n: cfg.n() })
        }
    };
    Ok(WitnessReport {
        probe: Probe::Elapsed(elapsed),
        tv_analytic,
        verdict: decide(tv_analytic, empirical.as_ref(), opts),
        empirical,
    })
}

/// Single box: deviation of the probed marginal from the prior.
pub fn single_box_report(s: &TwoBoxScenario, elapsed: f64, opts: &WitnessOptions) -> Result<WitnessReport> {
    let m = marginal_at(s.family(), s.prior(), elapsed)?;
    let tv_analytic = m.tv_distance(s.prior())?;
    let empirical = match opts.mc {
        None => None,
        Some(cfg) => {
            let e = simulate_single(s.family(), s.prior(), elapsed, &cfg)?;
            let tv = e.tv_to(s.prior())?;
            let test = gof_test(&e, s.prior(), opts.alpha)?;
            Some(EmpiricalWitness { tv, ci: band_to_prior(tv, &e), p_value: test.p_value, n: cfg.n() })
        }
    };
    Ok(WitnessReport {
        probe: Probe::Elapsed(elapsed),
        tv_analytic,
        verdict: decide(tv_analytic, empirical.as_ref(), opts),
        empirical,
    })
}

/// Window experiment: deviation of Bob's marginal (Alice triggering) from
/// the prior. The analytic TV is taken on the window formula rescaled to
/// unit mass; the raw mass is reported in the probe.
pub fn window_report(s: &TwoBoxScenario, w: &Window, opts: &WitnessOptions) -> Result<WitnessReport> {
    let terms = window_terms(s, w)?;
    let tv_analytic =
        0.5 * terms.raw.iter().zip(s.prior().iter()).map(|(r, p)| (r / terms.mass - p).abs()).sum::<f64>();
    let empirical = match opts.mc {
        None => None,
        Some(cfg) => {
            let e = simulate_window(s, w, &cfg)?;
            let tv = e.tv_to(s.prior())?;
            let test = gof_test(&e, s.prior(), opts.alpha)?;
            Some(EmpiricalWitness { tv, ci: band_to_prior(tv, &e), p_value: test.p_value, n: cfg.n() })
        }
    };
    Ok(WitnessReport {
        probe: Probe::Window { dt_window: w.length(), theta: terms.theta, omega: terms.omega, mass: terms.mass },
        tv_analytic,
        verdict: decide(tv_analytic, empirical.as_ref(), opts),
        empirical,
    })
}

/// One [`witness`] per grid point, in grid order. Each point's Monte Carlo
/// runs under a seed derived from the master seed and the point's index.
pub fn witness_sweep(s: &TwoBoxScenario, grid: &[f64], opts: &WitnessOptions) -> Result<Vec<WitnessReport>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    grid.par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut point = *opts;
            point.mc = opts.mc.map(|c| c.with_seed(derive_seed(c.seed(), 1000 + i as u64)));
            witness(s, t, &point)
        })
        .collect()
}

/// Classical channel from Alice's choice (row index) to Bob's output.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedChannel {
    rows: Vec<Distribution>,
}

impl InducedChannel {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyAlphabet)?;
        for r in &rows[1..] {
            first.ensure_same_alphabet(r)?;
        }
        Ok(Self { rows })
    }

    /// Rows are Bob's marginals for `x = 0` and `x = 1`.
    pub fn from_scenario(s: &TwoBoxScenario, elapsed: f64) -> Result<Self> {
        Self::new(vec![bob_marginal(s, Input::NonTriggering, elapsed)?, bob_marginal(s, Input::Triggering, elapsed)?])
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    /// Mutual information in bits for input prior `p`.
    pub fn mutual_information(&self, p: &[f64]) -> f64 {
        let outputs = self.rows[0].len();
        let q: Vec<f64> = (0..outputs).map(|j| self.rows.iter().zip(p).map(|(r, pi)| pi * r.prob(j)).sum()).collect();
        let mut info = 0.0;
        for (r, &pi) in self.rows.iter().zip(p) {
            if pi == 0.0 {
                continue;
            }
            for (j, w) in r.iter().enumerate() {
                if w > 0.0 {
                    info += pi * w * (w / q[j]).log2();
                }
            }
        }
        info
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Capacity {
    pub bits: f64,
    pub prior: Vec<f64>,
    pub iterations: usize,
}

/// Blahut-Arimoto iteration, stopped once the standard upper and lower
/// capacity bounds are within `tol` bits. Returns the lower bound.
pub fn capacity(c: &InducedChannel, tol: f64) -> Result<Capacity> {
    let m = c.rows.len();
    let outputs = c.rows[0].len();
    let mut p = vec![1.0 / m as f64; m];
    let mut gap = f64::INFINITY;
    for it in 1..=BA_MAX_ITERATIONS {
        let q: Vec<f64> = (0..outputs).map(|j| c.rows.iter().zip(&p).map(|(r, pi)| pi * r.prob(j)).sum()).collect();
        // Relative entropy D(W_i || q) in nats.
        let d: Vec<f64> = c
            .rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, w)| *w > 0.0).map(|(j, w)| w * (w / q[j]).ln()).sum())
            .collect();
        let weighted: Vec<f64> = p.iter().zip(&d).map(|(pi, di)| pi * di.exp()).collect();
        let total: f64 = weighted.iter().sum();
        let lower = total.ln();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        gap = (upper - lower) / std::f64::consts::LN_2;
        if gap <= tol {
            return Ok(Capacity { bits: (lower / std::f64::consts::LN_2).max(0.0), prior: p, iterations: it });
        }
        p = weighted.iter().map(|w| w / total).collect();
    }
    Err(Error::NonConvergence { iterations: BA_MAX_ITERATIONS, gap })
}

/// Channel capacity in bits, to additive tolerance `tol`.
pub fn channel_capacity(c: &InducedChannel, tol: f64) -> Result<f64> {
    capacity(c, tol).map(|r| r.bits)
}
