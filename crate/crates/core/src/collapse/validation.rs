use std::fmt;

use super::CollapseFamily;
use crate::error::{Error, Result};

pub const BC_TOL: f64 = 1e-9;

/// The boundary conditions a collapse family must satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clause {
    /// `f_{aa'}(0) = P0(a')`.
    Initial,
    /// `f_{aa'}(s) = delta_{aa'}` for `s >= dt_a`, `s > 0`.
    Final,
    /// `sum_{a'} f_{aa'}(s) = 1`.
    Normalization,
    /// `0 <= f_{aa'}(s) <= 1`.
    Range,
}

impl Clause {
    pub const ALL: [Clause; 4] = [Clause::Initial, Clause::Final, Clause::Normalization, Clause::Range];

    pub fn label(&self) -> &'static str {
        match self {
            Clause::Initial => "clause 1 (initial: f(0) = P0)",
            Clause::Final => "clause 2 (final: f = delta after dt_a)",
            Clause::Normalization => "clause 3 (normalization)",
            Clause::Range => "range (0 <= f <= 1)",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClauseCheck {
    pub clause: Clause,
    pub worst: f64,
    /// `(elapsed, latent, output)` of the worst point; `output` is `None`
    /// for row-level checks.
    pub at: Option<(f64, usize, Option<usize>)>,
}

impl ClauseCheck {
    fn new(clause: Clause) -> Self {
        Self { clause, worst: 0.0, at: None }
    }

    fn record(&mut self, v: f64, at: (f64, usize, Option<usize>)) {
        if v > self.worst {
            self.worst = v;
            self.at = Some(at);
        }
    }

    pub fn passed(&self) -> bool {
        self.worst <= BC_TOL
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: [ClauseCheck; 4],
    pub points: usize,
}

impl ValidationReport {
    pub fn clause(&self, c: Clause) -> &ClauseCheck {
        self.checks.iter().find(|k| k.clause == c).expect("all clauses present")
    }

    pub fn failed(&self) -> impl Iterator<Item = &ClauseCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<42} {:>6} {:>12}  location", "check", "status", "worst")?;
        for c in &self.checks {
            let status = if c.passed() { "ok" } else { "FAIL" };
            let loc = match c.at {
                Some((s, a, Some(o))) => format!("s={s} a={a} a'={o}"),
                Some((s, a, None)) => format!("s={s} a={a}"),
                None => "-".into(),
            };
            writeln!(f, "{:<42} {:>6} {:>12.3e}  {}", c.clause.label(), status, c.worst, loc)?;
        }
        write!(f, "{} grid points checked", self.points)
    }
}

/// `n` evenly spaced elapsed times covering `[0, 1.25 dt*]` (or `[0, 1]`
/// for instantaneous families).
pub fn default_grid(family: &CollapseFamily, n: usize) -> Vec<f64> {
    let horizon = if family.dt_max() > 0.0 { 1.25 * family.dt_max() } else { 1.0 };
    let n = n.max(2);
    (0..n).map(|k| horizon * k as f64 / (n - 1) as f64).collect()
}

/// Checks every boundary condition on `grid`, augmented with `0`, each
/// `dt_a`, and the family's own breakpoints.
pub fn validate_family(family: &CollapseFamily, grid: &[f64]) -> Result<ValidationReport> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut points: Vec<f64> = grid.iter().copied().filter(|s| s.is_finite() && *s >= 0.0).collect();
    points.push(0.0);
    points.extend(family.durations().iter().copied());
    points.extend(family.breakpoints());
    points.sort_by(f64::total_cmp);
    points.dedup();

    let n = family.outcomes();
    let prior = family.prior();
    let mut initial = ClauseCheck::new(Clause::Initial);
    let mut fin = ClauseCheck::new(Clause::Final);
    let mut norm = ClauseCheck::new(Clause::Normalization);
    let mut range = ClauseCheck::new(Clause::Range);

    for &s in &points {
        for a in 0..n {
            let row = family.row(a, s);
            let total: f64 = row.iter().sum();
            norm.record((total - 1.0).abs(), (s, a, None));
            for (o, &v) in row.iter().enumerate() {
                let out_of_range = if v < 0.0 { -v } else { (v - 1.0).max(0.0) };
                range.record(out_of_range, (s, a, Some(o)));
                if s == 0.0 {
                    initial.record((v - prior.prob(o)).abs(), (s, a, Some(o)));
                } else if s >= family.durations()[a] {
                    let target = if a == o { 1.0 } else { 0.0 };
                    fin.record((v - target).abs(), (s, a, Some(o)));
                }
            }
        }
    }
    let checks = [initial, fin, norm, range];
    Ok(ValidationReport { pass: checks.iter().all(ClauseCheck::passed), checks, points: points.len() })
}
