//! Seeded Monte Carlo realization of the collapse model.
//!
//! Every replica first draws the latent collapsed outcome from the prior and
//! then draws the observed output from the corresponding row of the collapse
//! family. Replicas are grouped into fixed blocks of [`BLOCK_SIZE`]; block
//! `k` consumes ChaCha stream `k` of the master seed, so the counts are a
//! pure function of `(scenario, N, seed)` however blocks are spread across
//! workers.

mod stats;

pub use stats::{gof_test, homogeneity_test, wilson_interval, GofMethod, GofReport, EXACT_LIMIT, MIN_EXPECTED, Z95};

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::behaviors::Distribution;
use crate::collapse::CollapseFamily;
use crate::error::{Error, Result};
use crate::scenarios::{Input, Schedule, TwoBoxScenario, Window};

pub const BLOCK_SIZE: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    n: u64,
    seed: u64,
    workers: usize,
}

impl SimConfig {
    pub fn new(n: u64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("replica count must be at least 1".into()));
        }
        Ok(Self { n, seed, workers: 0 })
    }

    /// Worker count hint; `0` uses the global pool.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

/// Outcome counts from `N` replicas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalDist {
    counts: Vec<u64>,
    n: u64,
}

impl EmpiricalDist {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn outcomes(&self) -> usize {
        self.counts.len()
    }

    pub fn frequency(&self, outcome: usize) -> f64 {
        self.counts[outcome] as f64 / self.n as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.outcomes()).map(|i| self.frequency(i)).collect()
    }

    /// 95% Wilson interval for outcome `i`.
    pub fn interval(&self, outcome: usize) -> (f64, f64) {
        wilson_interval(self.counts[outcome], self.n, Z95)
    }

    /// Total variation between the empirical frequencies and `p`.
    pub fn tv_to(&self, p: &Distribution) -> Result<f64> {
        if p.len() != self.outcomes() {
            return Err(Error::AlphabetMismatch { left: self.outcomes(), right: p.len() });
        }
        Ok(0.5 * p.iter().enumerate().map(|(i, q)| (self.frequency(i) - q).abs()).sum::<f64>())
    }

    pub fn tv_between(&self, other: &Self) -> Result<f64> {
        if other.outcomes() != self.outcomes() {
            return Err(Error::AlphabetMismatch { left: self.outcomes(), right: other.outcomes() });
        }
        Ok(0.5 * (0..self.outcomes()).map(|i| (self.frequency(i) - other.frequency(i)).abs()).sum::<f64>())
    }

    /// Largest per-outcome deviation from `p` in units of the binomial
    /// standard error `sqrt(q (1 - q) / N)`.
    pub fn max_z_score(&self, p: &Distribution) -> Result<f64> {
        if p.len() != self.outcomes() {
            return Err(Error::AlphabetMismatch { left: self.outcomes(), right: p.len() });
        }
        let n = self.n as f64;
        Ok(p.iter()
            .enumerate()
            .map(|(i, q)| {
                let dev = (self.frequency(i) - q).abs();
                let se = (q * (1.0 - q) / n).sqrt();
                if se > 0.0 {
                    dev / se
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max))
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self.n += other.n;
        self
    }
}

/// Independent child seed for sub-experiment `tag` (SplitMix64 finalizer).
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn pool(workers: usize) -> Arc<rayon::ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS.get_or_init(Default::default).lock().expect("pool cache poisoned");
    pools
        .entry(workers)
        .or_insert_with(|| Arc::new(rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")))
        .clone()
}

/// Runs `cfg.n()` replicas of `draw` and tallies outcomes in `0..outcomes`.
pub fn run_replicas<F>(cfg: &SimConfig, outcomes: usize, draw: F) -> EmpiricalDist
where
    F: Fn(&mut ChaCha8Rng) -> usize + Sync,
{
    let blocks = cfg.n.div_ceil(BLOCK_SIZE);
    let run_block = |k: u64| -> EmpiricalDist {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k);
        let len = BLOCK_SIZE.min(cfg.n - k * BLOCK_SIZE);
        let mut counts = vec![0u64; outcomes];
        for _ in 0..len {
            counts[draw(&mut rng)] += 1;
        }
        EmpiricalDist { counts, n: len }
    };
    let empty = || EmpiricalDist { counts: vec![0; outcomes], n: 0 };
    match cfg.workers {
        1 => (0..blocks).map(run_block).fold(empty(), EmpiricalDist::merge),
        0 => (0..blocks).into_par_iter().map(run_block).reduce(empty, EmpiricalDist::merge),
        w => pool(w).install(|| (0..blocks).into_par_iter().map(run_block).reduce(empty, EmpiricalDist::merge)),
    }
}

fn sample_row(family: &CollapseFamily, latent: usize, elapsed: f64, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = latent;
    for o in 0..family.outcomes() {
        let v = family.value(latent, o, elapsed);
        if v > 0.0 {
            last = o;
            acc += v;
            if u < acc {
                return o;
            }
        }
    }
    last
}

/// Single box probed `elapsed` seconds after its triggering input.
pub fn simulate_single(
    family: &CollapseFamily,
    p0: &Distribution,
    elapsed: f64,
    cfg: &SimConfig,
) -> Result<EmpiricalDist> {
    family.check_prior(p0)?;
    if !(elapsed >= 0.0) {
        return Err(Error::TimeBeforeTrigger(elapsed));
    }
    let rows: Vec<Distribution> =
        (0..family.outcomes()).map(|a| Distribution::new(family.row(a, elapsed))).collect::<Result<_>>()?;
    Ok(run_replicas(cfg, family.outcomes(), |rng| {
        let latent = p0.sample_index(rng.random());
        rows[latent].sample_index(rng.random())
    }))
}

/// Bob's outputs for a fixed schedule.
pub fn simulate_twobox(s: &TwoBoxScenario, sched: &Schedule, cfg: &SimConfig) -> Result<EmpiricalDist> {
    let x = sched.validate()?;
    match x {
        // Bob's own input triggers the collapse and reveals the latent.
        Input::NonTriggering => Ok(run_replicas(cfg, s.outcomes(), |rng| s.prior().sample_index(rng.random()))),
        Input::Triggering => simulate_single(s.family(), s.prior(), sched.elapsed(), cfg),
    }
}

/// Window experiment with Alice choosing the triggering input.
pub fn simulate_window(s: &TwoBoxScenario, w: &Window, cfg: &SimConfig) -> Result<EmpiricalDist> {
    simulate_window_with_input(s, w, Input::Triggering, cfg)
}

/// Window experiment: both input times are drawn independently from the
/// window density. Whoever acts first triggers the collapse. If Alice acts
/// first with the triggering input, Bob's output is drawn from the latent's
/// row at the elapsed difference; otherwise Bob reads the latent directly.
pub fn simulate_window_with_input(s: &TwoBoxScenario, w: &Window, x: Input, cfg: &SimConfig) -> Result<EmpiricalDist> {
    let family = s.family();
    let prior = s.prior();
    Ok(run_replicas(cfg, s.outcomes(), |rng| {
        let t_a = w.quantile(rng.random());
        let t_b = w.quantile(rng.random());
        let latent = prior.sample_index(rng.random());
        let u: f64 = rng.random();
        if x == Input::NonTriggering || t_b < t_a {
            latent
        } else {
            sample_row(family, latent, t_b - t_a, u)
        }
    }))
}
