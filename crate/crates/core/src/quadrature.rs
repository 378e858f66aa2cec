//! Adaptive Simpson quadrature in one dimension and nested over planar
//! regions.
//!
//! Integrands coming from collapse families are piecewise smooth (clamped
//! ramps, steps), so both entry points accept breakpoints; the interval is
//! split there before adapting.

use std::cell::Cell;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_DEPTH: u32 = 48;
/// Subdivision depth applied unconditionally, so coarse samples cannot
/// agree by accident on integrands with narrow features.
const MIN_DEPTH: u32 = 4;
/// Integrand evaluations allowed per call before giving up.
pub const MAX_EVALUATIONS: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl IntegrationResult {
    const ZERO: Self = Self { value: 0.0, error: 0.0, evaluations: 0 };

    fn add(&mut self, other: Self) {
        self.value += other.value;
        self.error += other.error;
        self.evaluations += other.evaluations;
    }
}

struct Accumulator {
    result: IntegrationResult,
    depth_exceeded: bool,
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<IntegrationResult> {
    integrate_with_breakpoints(f, a, b, &[], tol)
}

/// Integrates over `[a, b]` after splitting at the given breakpoints; the
/// tolerance is shared between pieces in proportion to their length.
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<IntegrationResult> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::Usage(format!("invalid integration interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Usage(format!("tolerance must be positive, got {tol}")));
    }
    if a == b {
        return Ok(IntegrationResult::ZERO);
    }
    let mut knots: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > a && p < b).collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.insert(0, a);
    knots.push(b);

    let mut acc = Accumulator { result: IntegrationResult::ZERO, depth_exceeded: false };
    let span = b - a;
    let last = knots.len() - 2;
    for (k, w) in knots.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        let piece_tol = tol * (hi - lo) / span;
        let m = 0.5 * (lo + hi);
        // Knots, and endpoints that are declared breakpoints, are sampled
        // from inside the piece (one-sided limits at jumps).
        let lo_eval = if k > 0 || breakpoints.contains(&lo) { lo.next_up() } else { lo };
        let hi_eval = if k < last || breakpoints.contains(&hi) { hi.next_down() } else { hi };
        let (flo, fm, fhi) = (f(lo_eval), f(m), f(hi_eval));
        acc.result.evaluations += 3;
        let whole = simpson(lo, hi, flo, fm, fhi);
        adapt(&f, lo, hi, flo, fm, fhi, whole, piece_tol, 0, &mut acc);
    }
    let r = acc.result;
    if acc.depth_exceeded {
        return Err(Error::MaxDepthExceeded { value: r.value, error: r.error });
    }
    Ok(r)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut Accumulator,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    acc.result.evaluations += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let converged = depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol;
    let unresolvable = lm <= a || rm >= b || m <= a || m >= b;
    let exhausted = depth >= MAX_DEPTH || acc.result.evaluations >= MAX_EVALUATIONS;
    if converged || unresolvable || exhausted {
        if !converged && !unresolvable {
            acc.depth_exceeded = true;
        }
        let value = left + right + delta / 15.0;
        let roundoff = 4.0 * f64::EPSILON * (left.abs() + right.abs());
        acc.result.add(IntegrationResult { value, error: delta.abs() / 15.0 + roundoff, evaluations: 0 });
        return;
    }
    adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, acc);
    adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, acc);
}

/// Planar integration domains for [`integrate2`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// `u in [u0, u1]`, `v in [v0, v1]`.
    Rectangle { u: (f64, f64), v: (f64, f64) },
    /// `u, v in [lower, upper]` with `|u - v| < width`.
    Band { lower: f64, upper: f64, width: f64 },
    /// `u, v in [lower, upper]` with `0 <= v - u <= width`.
    ForwardBand { lower: f64, upper: f64, width: f64 },
}

impl Region {
    fn outer(&self) -> (f64, f64) {
        match *self {
            Region::Rectangle { u, .. } => u,
            Region::Band { lower, upper, .. } | Region::ForwardBand { lower, upper, .. } => (lower, upper),
        }
    }

    /// Inner `v` limits for a given outer `u`, clamped to the window.
    fn inner(&self, u: f64) -> (f64, f64) {
        match *self {
            Region::Rectangle { v, .. } => v,
            Region::Band { lower, upper, width } => ((u - width).max(lower), (u + width).min(upper)),
            Region::ForwardBand { lower, upper, width } => (u.max(lower), (u + width).min(upper)),
        }
    }

    fn is_null(&self) -> bool {
        match *self {
            Region::Rectangle { u, v } => u.0 >= u.1 || v.0 >= v.1,
            Region::Band { lower, upper, width } => width <= 0.0 || lower >= upper,
            Region::ForwardBand { lower, upper, .. } => lower >= upper,
        }
    }

    /// Outer abscissae where the inner limits switch between clamped and free.
    fn kinks(&self) -> Vec<f64> {
        match *self {
            Region::Rectangle { .. } => vec![],
            Region::Band { lower, upper, width } => vec![lower + width, upper - width],
            Region::ForwardBand { upper, width, .. } => vec![upper - width],
        }
    }
}

/// Nested adaptive quadrature of `f(u, v)` over `region`.
///
/// `breakpoints` are applied on both axes. The reported error adds the
/// outer estimate to the accumulated inner estimates weighted by the outer
/// interval length.
pub fn integrate2<F: Fn(f64, f64) -> f64>(
    f: F,
    region: Region,
    breakpoints: &[f64],
    tol: f64,
) -> Result<IntegrationResult> {
    if region.is_null() {
        return Ok(IntegrationResult::ZERO);
    }
    let (a, b) = region.outer();
    let span = b - a;
    let inner_tol = 0.5 * tol / span;
    let max_inner_err = Cell::new(0.0f64);
    let inner_evals = Cell::new(0usize);
    let failure: Cell<Option<(f64, f64)>> = Cell::new(None);

    let outer_fn = |u: f64| -> f64 {
        let (lo, hi) = region.inner(u);
        if lo >= hi {
            return 0.0;
        }
        let r = integrate_with_breakpoints(|v| f(u, v), lo, hi, breakpoints, inner_tol);
        match r {
            Ok(r) => {
                max_inner_err.set(max_inner_err.get().max(r.error));
                inner_evals.set(inner_evals.get() + r.evaluations);
                r.value
            }
            Err(Error::MaxDepthExceeded { value, error }) => {
                failure.set(Some((value, error)));
                value
            }
            Err(_) => f64::NAN,
        }
    };
    let mut outer_breaks = region.kinks();
    outer_breaks.extend_from_slice(breakpoints);
    let outer = integrate_with_breakpoints(outer_fn, a, b, &outer_breaks, 0.5 * tol);
    let (value, outer_err, outer_evals, outer_failed) = match outer {
        Ok(r) => (r.value, r.error, r.evaluations, false),
        Err(Error::MaxDepthExceeded { value, error }) => (value, error, 0, true),
        Err(e) => return Err(e),
    };
    let error = outer_err + span * max_inner_err.get();
    if outer_failed || failure.get().is_some() || !value.is_finite() {
        return Err(Error::MaxDepthExceeded { value, error });
    }
    Ok(IntegrationResult { value, error, evaluations: outer_evals + inner_evals.get() })
}
