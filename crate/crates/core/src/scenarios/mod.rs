//! Analytic evaluators for the experiment layouts: a single box probed
//! twice, two perfectly correlated boxes with a fixed schedule, and the
//! randomized input-time window.

mod window;

pub use window::{Density, Window, WindowSpec, DENSITY_TOL};

use serde::{Deserialize, Serialize};

use crate::behaviors::{Alphabets, BoxBehavior, Distribution};
use crate::collapse::{marginal_at, CollapseFamily};
use crate::error::{Error, Result};
use crate::quadrature::{integrate2, integrate_with_breakpoints, Region};

/// Tolerance for the window quadratures.
pub const WINDOW_QUAD_TOL: f64 = 1e-10;
/// Largest mass defect tolerated in the window marginal before it is
/// reported as inconsistent.
pub const WINDOW_MASS_TOL: f64 = 1e-6;

/// Alice's input. Input 0 never triggers a collapse and always answers 0;
/// input 1 triggers it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Input {
    NonTriggering,
    Triggering,
}

impl Input {
    pub fn from_index(x: u8) -> Result<Self> {
        match x {
            0 => Ok(Input::NonTriggering),
            1 => Ok(Input::Triggering),
            other => Err(Error::InvalidSchedule(format!("input must be 0 or 1, got {other}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Input::NonTriggering => 0,
            Input::Triggering => 1,
        }
    }
}

/// Two perfectly correlated boxes sharing a prior `P0` and a collapse family.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoBoxScenario {
    family: CollapseFamily,
}

impl TwoBoxScenario {
    pub fn new(family: CollapseFamily) -> Self {
        Self { family }
    }

    pub fn prior(&self) -> &Distribution {
        self.family.prior()
    }

    pub fn family(&self) -> &CollapseFamily {
        &self.family
    }

    pub fn outcomes(&self) -> usize {
        self.family.outcomes()
    }

    /// First-measurement statistics `P0(a,b|x,y)`: input 0 answers 0 with
    /// certainty, and two triggering inputs agree (`a = b`).
    pub fn first_measurement_behavior(&self) -> BoxBehavior {
        let n = self.outcomes();
        let p0 = self.prior();
        let al = Alphabets { a: n, b: n, x: 2, y: 2 };
        BoxBehavior::from_fn(al, |x, y, a, b| match (x, y) {
            (0, 0) => f64::from(a == 0 && b == 0),
            (0, 1) => {
                if a == 0 {
                    p0.prob(b)
                } else {
                    0.0
                }
            }
            (1, 0) => {
                if b == 0 {
                    p0.prob(a)
                } else {
                    0.0
                }
            }
            _ => {
                if a == b {
                    p0.prob(a)
                } else {
                    0.0
                }
            }
        })
        .expect("first-measurement behavior is normalized")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(rename = "tA")]
    pub t_a: f64,
    #[serde(rename = "tB")]
    pub t_b: f64,
    pub x: u8,
}

impl Schedule {
    pub fn validate(&self) -> Result<Input> {
        if !(self.t_a.is_finite() && self.t_b.is_finite()) {
            return Err(Error::InvalidSchedule("times must be finite".into()));
        }
        if self.t_b < self.t_a {
            return Err(Error::InvalidSchedule(format!(
                "Bob's probe ({}) precedes Alice's input ({})",
                self.t_b, self.t_a
            )));
        }
        Input::from_index(self.x)
    }

    pub fn elapsed(&self) -> f64 {
        self.t_b - self.t_a
    }
}

/// Bob's output distribution `elapsed` seconds after Alice's input.
pub fn bob_marginal(s: &TwoBoxScenario, x: Input, elapsed: f64) -> Result<Distribution> {
    if !(elapsed >= 0.0) {
        return Err(Error::NegativeElapsed(elapsed));
    }
    match x {
        Input::NonTriggering => Ok(s.prior().clone()),
        Input::Triggering => marginal_at(s.family(), s.prior(), elapsed),
    }
}

/// Probability that two independent input times fall within `dt_min` of
/// each other.
pub fn theta(w: &Window, dt_min: f64) -> Result<f64> {
    if !(dt_min > 0.0) {
        return Ok(0.0);
    }
    if dt_min >= w.length() {
        return Ok(1.0);
    }
    let region = Region::Band { lower: 0.0, upper: w.length(), width: dt_min };
    pair_probability(w, region)
}

/// `P(0 <= t_B - t_A <= dt_min)`, the integral over `[0, dt_min]` of the
/// density of the non-negative time difference.
pub fn omega(w: &Window, dt_min: f64) -> Result<f64> {
    if !(dt_min > 0.0) {
        return Ok(0.0);
    }
    let width = dt_min.min(w.length());
    let region = Region::ForwardBand { lower: 0.0, upper: w.length(), width };
    pair_probability(w, region)
}

fn pair_probability(w: &Window, region: Region) -> Result<f64> {
    let r = integrate2(|u, v| w.pdf(u) * w.pdf(v), region, &w.breakpoints(), WINDOW_QUAD_TOL)
        .map_err(quadrature_failure)?;
    if r.error > 10.0 * WINDOW_QUAD_TOL {
        return Err(Error::QuadratureFailure { value: r.value, error: r.error });
    }
    Ok(r.value)
}

fn quadrature_failure(e: Error) -> Error {
    match e {
        Error::MaxDepthExceeded { value, error } => Error::QuadratureFailure { value, error },
        other => other,
    }
}

/// Intermediate quantities of the window marginal, before the
/// normalization check.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowTerms {
    pub dt_min: f64,
    pub theta: f64,
    pub omega: f64,
    /// `sum_b P0(b) int_0^{dt_min} f_{bb'}(t) g(t) dt`, indexed by `b'`.
    pub collapse_integrals: Vec<f64>,
    pub raw: Vec<f64>,
    pub mass: f64,
}

/// Evaluates `(1 - Theta) P0(b') + (Theta / Omega) sum_b P0(b) int_0^{dt_min}
/// f_{bb'}(t) g(t) dt` without any normalization check.
pub fn window_terms(s: &TwoBoxScenario, w: &Window) -> Result<WindowTerms> {
    let family = s.family();
    let p0 = s.prior();
    let n = s.outcomes();
    let dt_min = family.dt_min();
    let th = theta(w, dt_min)?;
    let om = omega(w, dt_min)?;

    let mut collapse_integrals = vec![0.0; n];
    if dt_min > 0.0 {
        let mut breaks = family.breakpoints();
        breaks.extend(w.breakpoints());
        let upper = dt_min.min(w.length());
        for (latent, pb) in p0.iter().enumerate() {
            if pb == 0.0 {
                continue;
            }
            for (o, slot) in collapse_integrals.iter_mut().enumerate() {
                let r = integrate_with_breakpoints(
                    |t| family.value(latent, o, t) * w.pdf(t),
                    0.0,
                    upper,
                    &breaks,
                    WINDOW_QUAD_TOL,
                )
                .map_err(quadrature_failure)?;
                *slot += pb * r.value;
            }
        }
    }

    let raw: Vec<f64> = (0..n)
        .map(|o| {
            let first = (1.0 - th) * p0.prob(o);
            if th == 0.0 {
                first
            } else {
                first + th / om * collapse_integrals[o]
            }
        })
        .collect();
    let mass = raw.iter().sum();
    Ok(WindowTerms { dt_min, theta: th, omega: om, collapse_integrals, raw, mass })
}

/// Bob's marginal in the window experiment with Alice choosing the
/// triggering input. Errors with [`Error::FormulaInconsistency`] when the
/// formula does not produce a normalized distribution.
pub fn window_marginal(s: &TwoBoxScenario, w: &Window) -> Result<Distribution> {
    let terms = window_terms(s, w)?;
    if (terms.mass - 1.0).abs() > WINDOW_MASS_TOL || terms.raw.iter().any(|v| *v < 0.0) {
        return Err(Error::FormulaInconsistency { mass: terms.mass, theta: terms.theta, omega: terms.omega });
    }
    Distribution::with_tolerance(terms.raw, WINDOW_MASS_TOL)
}
