//! Collapse families `f_{aa'}(s)`: the probability that a box whose latent
//! collapsed outcome is `a` answers `a'` when probed `s` seconds after the
//! collapse-triggering input.
//!
//! Families are functions of elapsed time only. The trigger instant lives in
//! whatever schedule evaluates them. At `s = 0` every built-in family returns
//! the bound prior, and for `s >= dt_a` (with `s > 0`) it returns the
//! Kronecker delta on the latent outcome.

mod validation;

pub use validation::{default_grid, validate_family, Clause, ClauseCheck, ValidationReport, BC_TOL};

use serde::{Deserialize, Serialize};

use crate::behaviors::Distribution;
use crate::error::{Error, Result};

/// Residual weight at which an exponential family is declared collapsed.
pub const EXPONENTIAL_CUTOFF: f64 = 1e-9;

/// Tolerance used when checking that a prior matches the family's prior.
pub const PRIOR_MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    /// `f = delta` for every `s > 0`.
    Instantaneous,
    /// Convex ramp from the prior to the delta, reaching it at `dt_a`.
    Linear,
    /// Frozen at the prior until `dt_a`, then the delta.
    Step,
    /// Convex mix with weight `1 - exp(-rate_a s)`, truncated at the cutoff.
    Exponential,
    /// Tabulated values, linearly interpolated.
    Table,
}

/// Tabulated family: `values[k][a][a']` is `f_{aa'}` at `times[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableGrid {
    pub times: Vec<f64>,
    pub values: Vec<Vec<Vec<f64>>>,
}

/// Serializable description of a collapse family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Distribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<TableGrid>,
}

impl FamilySpec {
    fn bare(kind: FamilyKind, p0: Distribution) -> Self {
        Self { kind, p0: Some(p0), dt: None, rates: None, grid: None }
    }

    pub fn instantaneous(p0: Distribution) -> Self {
        Self::bare(FamilyKind::Instantaneous, p0)
    }

    pub fn linear(p0: Distribution, dt: Vec<f64>) -> Self {
        Self { dt: Some(dt), ..Self::bare(FamilyKind::Linear, p0) }
    }

    pub fn step(p0: Distribution, dt: Vec<f64>) -> Self {
        Self { dt: Some(dt), ..Self::bare(FamilyKind::Step, p0) }
    }

    pub fn exponential(p0: Distribution, rates: Vec<f64>) -> Self {
        Self { rates: Some(rates), ..Self::bare(FamilyKind::Exponential, p0) }
    }

    pub fn table(p0: Distribution, dt: Vec<f64>, grid: TableGrid) -> Self {
        Self { dt: Some(dt), grid: Some(grid), ..Self::bare(FamilyKind::Table, p0) }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    Instantaneous,
    Linear,
    Step,
    Exponential {
        rates: Vec<f64>,
    },
    /// `values[k]` is the flattened `|A| x |A|` matrix at `times[k]`.
    Table {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// A concrete collapse family bound to its prior `P0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseFamily {
    prior: Distribution,
    durations: Vec<f64>,
    dt_min: f64,
    dt_max: f64,
    profile: Profile,
}

/// Builds a family and checks the boundary conditions on [`default_grid`].
pub fn make_family(spec: &FamilySpec) -> Result<CollapseFamily> {
    let family = CollapseFamily::build_unchecked(spec)?;
    let report = validate_family(&family, &default_grid(&family, 1001))?;
    if !report.pass {
        return Err(Error::BoundaryViolation(Box::new(report)));
    }
    Ok(family)
}

impl CollapseFamily {
    /// Structural construction without the boundary-condition check, for
    /// diagnosing user-supplied tables.
    pub fn build_unchecked(spec: &FamilySpec) -> Result<Self> {
        let prior = spec.p0.clone().ok_or_else(|| Error::InvalidSpec("family has no bound prior p0".into()))?;
        let n = prior.len();
        let check_len = |name: &str, v: &[f64]| -> Result<()> {
            if v.len() != n {
                return Err(Error::InvalidSpec(format!("{name} has {} entries, prior has {n} outcomes", v.len())));
            }
            if let Some(bad) = v.iter().find(|t| !t.is_finite() || **t < 0.0) {
                return Err(Error::InvalidSpec(format!("{name} contains invalid value {bad}")));
            }
            Ok(())
        };
        let require_dt = || -> Result<Vec<f64>> {
            let dt =
                spec.dt.clone().ok_or_else(|| Error::InvalidSpec(format!("{:?} family requires dt", spec.kind)))?;
            check_len("dt", &dt)?;
            Ok(dt)
        };

        let (durations, profile) = match spec.kind {
            FamilyKind::Instantaneous => (vec![0.0; n], Profile::Instantaneous),
            FamilyKind::Linear => (require_dt()?, Profile::Linear),
            FamilyKind::Step => (require_dt()?, Profile::Step),
            FamilyKind::Exponential => {
                let rates =
                    spec.rates.clone().ok_or_else(|| Error::InvalidSpec("exponential family requires rates".into()))?;
                check_len("rates", &rates)?;
                if rates.iter().any(|r| *r <= 0.0) {
                    return Err(Error::InvalidSpec("exponential rates must be positive".into()));
                }
                let cut = -EXPONENTIAL_CUTOFF.ln();
                let durations = rates.iter().map(|r| cut / r).collect();
                (durations, Profile::Exponential { rates })
            }
            FamilyKind::Table => {
                let durations = require_dt()?;
                let grid = spec.grid.as_ref().ok_or_else(|| Error::InvalidSpec("table family requires grid".into()))?;
                (durations, Self::table_profile(grid, n)?)
            }
        };
        let dt_min = durations.iter().copied().fold(f64::INFINITY, f64::min);
        let dt_max = durations.iter().copied().fold(0.0, f64::max);
        Ok(Self { prior, durations, dt_min, dt_max, profile })
    }

    fn table_profile(grid: &TableGrid, n: usize) -> Result<Profile> {
        let times = &grid.times;
        if times.is_empty() || times.len() != grid.values.len() {
            return Err(Error::InvalidSpec(format!(
                "table has {} times and {} value matrices",
                times.len(),
                grid.values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidSpec("table times must start at elapsed 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSpec("table times must be finite and strictly increasing".into()));
        }
        let mut values = Vec::with_capacity(times.len());
        for (k, m) in grid.values.iter().enumerate() {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidSpec(format!("table matrix {k} is not {n}x{n}")));
            }
            let flat: Vec<f64> = m.iter().flatten().copied().collect();
            if flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSpec(format!("table matrix {k} has non-finite entries")));
            }
            values.push(flat);
        }
        Ok(Profile::Table { times: times.clone(), values })
    }

    pub fn kind(&self) -> FamilyKind {
        match self.profile {
            Profile::Instantaneous => FamilyKind::Instantaneous,
            Profile::Linear => FamilyKind::Linear,
            Profile::Step => FamilyKind::Step,
            Profile::Exponential { .. } => FamilyKind::Exponential,
            Profile::Table { .. } => FamilyKind::Table,
        }
    }

    pub fn prior(&self) -> &Distribution {
        &self.prior
    }

    pub fn outcomes(&self) -> usize {
        self.prior.len()
    }

    /// Per-outcome collapse durations `dt_a`.
    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    /// Shortest collapse duration.
    pub fn dt_min(&self) -> f64 {
        self.dt_min
    }

    /// Longest collapse duration; every row is a delta beyond it.
    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    /// Elapsed times where the family may have kinks or jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.durations.clone();
        if let Profile::Table { times, .. } = &self.profile {
            pts.extend_from_slice(times);
        }
        pts.retain(|t| *t > 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `f_{aa'}(s)` for elapsed `s >= 0`.
    pub fn value(&self, latent: usize, output: usize, elapsed: f64) -> f64 {
        let p0 = self.prior.prob(output);
        let delta = if latent == output { 1.0 } else { 0.0 };
        let mix = |w: f64| (1.0 - w) * p0 + w * delta;
        let dt = self.durations[latent];
        match &self.profile {
            Profile::Table { times, values } => {
                let n = self.outcomes();
                interpolate(times, values, latent * n + output, elapsed)
            }
            _ if elapsed <= 0.0 => p0,
            Profile::Instantaneous => delta,
            Profile::Linear => {
                if elapsed >= dt {
                    delta
                } else {
                    mix(elapsed / dt)
                }
            }
            Profile::Step => {
                if elapsed >= dt {
                    delta
                } else {
                    p0
                }
            }
            Profile::Exponential { rates } => {
                if elapsed >= dt {
                    delta
                } else {
                    mix(-(-rates[latent] * elapsed).exp_m1())
                }
            }
        }
    }

    /// Row `f_{a.}(s)`.
    pub fn row(&self, latent: usize, elapsed: f64) -> Vec<f64> {
        (0..self.outcomes()).map(|o| self.value(latent, o, elapsed)).collect()
    }

    pub fn check_prior(&self, p0: &Distribution) -> Result<()> {
        if p0.len() != self.prior.len() || self.prior.max_abs_diff(p0)? > PRIOR_MATCH_TOL {
            return Err(Error::PriorMismatch);
        }
        Ok(())
    }
}

fn interpolate(times: &[f64], values: &[Vec<f64>], idx: usize, s: f64) -> f64 {
    if s <= times[0] {
        return values[0][idx];
    }
    let last = times.len() - 1;
    if s >= times[last] {
        return values[last][idx];
    }
    let k = times.partition_point(|t| *t <= s) - 1;
    let (t0, t1) = (times[k], times[k + 1]);
    let w = (s - t0) / (t1 - t0);
    (1.0 - w) * values[k][idx] + w * values[k + 1][idx]
}

/// Evolved single-box marginal `P(a'|s) = sum_a P0(a) f_{aa'}(s)`.
pub fn marginal_at(family: &CollapseFamily, p0: &Distribution, elapsed: f64) -> Result<Distribution> {
    family.check_prior(p0)?;
    if !(elapsed >= 0.0) {
        return Err(Error::TimeBeforeTrigger(elapsed));
    }
    let n = family.outcomes();
    let mut out = vec![0.0; n];
    for (latent, w) in p0.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (o, slot) in out.iter_mut().enumerate() {
            *slot += w * family.value(latent, o, elapsed);
        }
    }
    Distribution::new(out)
}

/// Total variation between the evolved marginal and the prior.
pub fn single_box_witness(family: &CollapseFamily, p0: &Distribution, elapsed: f64) -> Result<f64> {
    if !(elapsed >= 0.0) || !elapsed.is_finite() {
        return Err(Error::TimeOutsideWindow(elapsed));
    }
    marginal_at(family, p0, elapsed)?.tv_distance(p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(w: &[f64]) -> Distribution {
        Distribution::new(w.to_vec()).unwrap()
    }

    /// Outcome 0 collapses instantly, outcome 1 stays at the prior until s = 1.
    fn asymmetric() -> CollapseFamily {
        make_family(&FamilySpec::step(p(&[0.3, 0.7]), vec![0.0, 1.0])).unwrap()
    }

    #[test]
    fn instantaneous_is_delta_after_trigger() {
        let f = make_family(&FamilySpec::instantaneous(p(&[0.3, 0.7]))).unwrap();
        for eps in [1e-12, 1e-3, 0.5, 10.0] {
            assert_eq!(f.value(0, 0, eps), 1.0);
            assert_eq!(f.value(0, 1, eps), 0.0);
            assert_eq!(f.value(1, 1, eps), 1.0);
        }
        assert_eq!(f.dt_min(), 0.0);
        assert_eq!(f.dt_max(), 0.0);
    }

    #[test]
    fn linear_endpoints_and_midpoint() {
        let f = make_family(&FamilySpec::linear(p(&[0.3, 0.7]), vec![1.0, 1.0])).unwrap();
        assert_eq!(f.value(0, 0, 0.0), 0.3);
        assert_eq!(f.value(0, 1, 0.0), 0.7);
        assert!((f.value(0, 0, 0.5) - 0.65).abs() < 1e-15);
        assert_eq!(f.value(0, 0, 1.0), 1.0);
    }

    #[test]
    fn exponential_cutoff_is_finite() {
        let f = make_family(&FamilySpec::exponential(p(&[0.4, 0.6]), vec![2.0, 5.0])).unwrap();
        let cut = -EXPONENTIAL_CUTOFF.ln();
        assert!((f.durations()[0] - cut / 2.0).abs() < 1e-12);
        assert_eq!(f.dt_min(), cut / 5.0);
        let s = f.durations()[0];
        assert_eq!(f.value(0, 0, s), 1.0);
        assert!(f.value(0, 0, s * 0.999) < 1.0);
    }

    #[test]
    fn invalid_specs() {
        let missing_dt = FamilySpec { dt: None, ..FamilySpec::linear(p(&[0.5, 0.5]), vec![]) };
        assert!(matches!(make_family(&missing_dt), Err(Error::InvalidSpec(_))));
        let wrong_len = FamilySpec::linear(p(&[0.5, 0.5]), vec![1.0]);
        assert!(matches!(make_family(&wrong_len), Err(Error::InvalidSpec(_))));
        let neg = FamilySpec::step(p(&[0.5, 0.5]), vec![1.0, -1.0]);
        assert!(matches!(make_family(&neg), Err(Error::InvalidSpec(_))));
        let zero_rate = FamilySpec::exponential(p(&[0.5, 0.5]), vec![0.0, 1.0]);
        assert!(matches!(make_family(&zero_rate), Err(Error::InvalidSpec(_))));
        let no_prior = FamilySpec { p0: None, ..FamilySpec::instantaneous(p(&[1.0])) };
        assert!(matches!(make_family(&no_prior), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn table_violating_clause_two_is_rejected() {
        let grid = TableGrid {
            times: vec![0.0, 1.0],
            values: vec![vec![vec![0.3, 0.7], vec![0.3, 0.7]], vec![vec![0.9, 0.1], vec![0.0, 1.0]]],
        };
        let spec = FamilySpec::table(p(&[0.3, 0.7]), vec![1.0, 1.0], grid);
        match make_family(&spec) {
            Err(Error::BoundaryViolation(rep)) => {
                assert!(!rep.clause(Clause::Final).passed());
                assert!((rep.clause(Clause::Final).worst - 0.1).abs() < 1e-12);
            }
            other => panic!("expected boundary violation, got {other:?}"),
        }
    }

    #[test]
    fn marginal_examples() {
        let lin = make_family(&FamilySpec::linear(p(&[0.3, 0.7]), vec![1.0, 1.0])).unwrap();
        for s in [0.0, 0.1, 0.5, 0.99, 1.0, 3.0] {
            let m = marginal_at(&lin, lin.prior(), s).unwrap();
            assert!(m.max_abs_diff(lin.prior()).unwrap() < 1e-15);
        }
        let asym = asymmetric();
        let m = marginal_at(&asym, asym.prior(), 0.5).unwrap();
        assert!((m.prob(0) - 0.51).abs() < 1e-15);
        assert!((m.prob(1) - 0.49).abs() < 1e-15);
        assert_eq!(marginal_at(&asym, asym.prior(), 0.0).unwrap(), *asym.prior());
    }

    #[test]
    fn marginal_errors() {
        let asym = asymmetric();
        assert!(matches!(marginal_at(&asym, asym.prior(), -0.1), Err(Error::TimeBeforeTrigger(_))));
        assert!(matches!(marginal_at(&asym, &p(&[0.5, 0.5]), 0.1), Err(Error::PriorMismatch)));
    }

    #[test]
    fn witness_examples() {
        let inst = make_family(&FamilySpec::instantaneous(p(&[0.2, 0.8]))).unwrap();
        assert_eq!(single_box_witness(&inst, inst.prior(), 0.3).unwrap(), 0.0);
        let lin = make_family(&FamilySpec::linear(p(&[0.3, 0.7]), vec![1.0, 1.0])).unwrap();
        assert!(single_box_witness(&lin, lin.prior(), 0.5).unwrap() < 1e-15);
        let asym = asymmetric();
        let w = single_box_witness(&asym, asym.prior(), 0.5).unwrap();
        assert!((w - 0.21).abs() < 1e-15);
        assert!(matches!(single_box_witness(&asym, asym.prior(), -1.0), Err(Error::TimeOutsideWindow(_))));
    }

    #[test]
    fn spec_json_shape() {
        let json = r#"{"kind":"linear","p0":[0.3,0.7],"dt":[1.0,2.0]}"#;
        let spec: FamilySpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.kind, FamilyKind::Linear);
        let f = make_family(&spec).unwrap();
        assert_eq!(f.dt_max(), 2.0);
        assert_eq!(f.breakpoints(), vec![1.0, 2.0]);
    }
}
