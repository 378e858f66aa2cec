//! Goodness-of-fit and homogeneity tests for empirical distributions.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use super::EmpiricalDist;
use crate::behaviors::Distribution;
use crate::error::{Error, Result};

/// Expected count below which the Pearson approximation is not trusted.
pub const MIN_EXPECTED: f64 = 5.0;
/// Largest number of outcome vectors the exact multinomial test enumerates.
pub const EXACT_LIMIT: u128 = 2_000_000;

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GofMethod {
    /// Pearson chi-square with the asymptotic reference distribution.
    ChiSquare,
    /// Exact multinomial test (probability ordering), used for small expected counts.
    ExactMultinomial,
    /// Small expected counts, but enumeration exceeds [`EXACT_LIMIT`]; asymptotic p-value.
    ChiSquareSmallCounts,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GofReport {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub method: GofMethod,
    pub df: usize,
}

/// Tests the counts in `e` against `p` at significance `alpha`.
pub fn gof_test(e: &EmpiricalDist, p: &Distribution, alpha: f64) -> Result<GofReport> {
    if e.outcomes() != p.len() {
        return Err(Error::AlphabetMismatch { left: e.outcomes(), right: p.len() });
    }
    let n = e.n() as f64;
    // Counts on zero-probability cells are impossible under the null.
    let impossible = e.counts().iter().zip(p.iter()).any(|(&c, q)| q == 0.0 && c > 0);
    let cells: Vec<(u64, f64)> =
        e.counts().iter().zip(p.iter()).filter(|(_, q)| *q > 0.0).map(|(&c, q)| (c, q)).collect();
    let statistic = if impossible { f64::INFINITY } else { pearson(&cells, n) };
    let df = cells.len().saturating_sub(1);
    let small = cells.iter().any(|(_, q)| q * n < MIN_EXPECTED);

    let (p_value, method) = if impossible {
        (0.0, if small { GofMethod::ExactMultinomial } else { GofMethod::ChiSquare })
    } else if df == 0 {
        (1.0, GofMethod::ChiSquare)
    } else if !small {
        (chi_square_sf(statistic, df), GofMethod::ChiSquare)
    } else if let Some(pv) = exact_multinomial(&cells, e.n()) {
        (pv, GofMethod::ExactMultinomial)
    } else {
        (chi_square_sf(statistic, df), GofMethod::ChiSquareSmallCounts)
    };
    Ok(GofReport { statistic, p_value, reject: p_value < alpha, method, df })
}

/// Pearson chi-square test of homogeneity between two empirical
/// distributions over the same alphabet.
pub fn homogeneity_test(e0: &EmpiricalDist, e1: &EmpiricalDist, alpha: f64) -> Result<GofReport> {
    if e0.outcomes() != e1.outcomes() {
        return Err(Error::AlphabetMismatch { left: e0.outcomes(), right: e1.outcomes() });
    }
    let (n0, n1) = (e0.n() as f64, e1.n() as f64);
    let total = n0 + n1;
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&c0, &c1) in e0.counts().iter().zip(e1.counts()) {
        let col = (c0 + c1) as f64;
        if col == 0.0 {
            continue;
        }
        used += 1;
        let (x0, x1) = (n0 * col / total, n1 * col / total);
        statistic += (c0 as f64 - x0).powi(2) / x0 + (c1 as f64 - x1).powi(2) / x1;
    }
    let df = used.saturating_sub(1);
    let p_value = if df == 0 { 1.0 } else { chi_square_sf(statistic, df) };
    Ok(GofReport { statistic, p_value, reject: p_value < alpha, method: GofMethod::ChiSquare, df })
}

fn pearson(cells: &[(u64, f64)], n: f64) -> f64 {
    cells
        .iter()
        .map(|&(c, q)| {
            let expected = q * n;
            (c as f64 - expected).powi(2) / expected
        })
        .sum()
}

fn chi_square_sf(x: f64, df: usize) -> f64 {
    if !x.is_finite() {
        return 0.0;
    }
    ChiSquared::new(df as f64).expect("df >= 1").sf(x)
}

fn compositions(n: u64, k: usize) -> Option<u128> {
    // C(n + k - 1, k - 1)
    let mut acc: u128 = 1;
    for i in 1..k as u128 {
        acc = acc.checked_mul(n as u128 + i)? / i;
        if acc > EXACT_LIMIT {
            return None;
        }
    }
    Some(acc)
}

/// Sum of the probabilities of all outcome vectors no more likely than the
/// observed one.
fn exact_multinomial(cells: &[(u64, f64)], n: u64) -> Option<f64> {
    compositions(n, cells.len())?;
    let ln_q: Vec<f64> = cells.iter().map(|(_, q)| q.ln()).collect();
    let ln_n_fact = ln_gamma(n as f64 + 1.0);
    let log_pmf = |counts: &[u64]| -> f64 {
        ln_n_fact + counts.iter().zip(&ln_q).map(|(&c, lq)| c as f64 * lq - ln_gamma(c as f64 + 1.0)).sum::<f64>()
    };
    let observed: Vec<u64> = cells.iter().map(|(c, _)| *c).collect();
    let threshold = log_pmf(&observed) + 1e-7;
    let mut p_value = 0.0;
    let mut counts = vec![0u64; cells.len()];
    enumerate(&mut counts, 0, n, &mut |c| {
        let lp = log_pmf(c);
        if lp <= threshold {
            p_value += lp.exp();
        }
    });
    Some(p_value.min(1.0))
}

fn enumerate(counts: &mut Vec<u64>, idx: usize, remaining: u64, visit: &mut impl FnMut(&[u64])) {
    if idx == counts.len() - 1 {
        counts[idx] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        enumerate(counts, idx + 1, remaining - c, visit);
    }
}

/// Wilson score interval for `count` successes out of `n`.
pub fn wilson_interval(count: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if count == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if count == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}
