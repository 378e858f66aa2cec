use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance for the input-time density.
pub const DENSITY_TOL: f64 = 1e-9;

/// Input-time density `g` on `[0, dt_window]`, measured from the window start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Density {
    Uniform,
    /// `g(t) ~ rate * exp(-rate t)` truncated to the window.
    TruncatedExponential {
        rate: f64,
    },
    /// Piecewise-linear density through `(times[k], density[k])`.
    Table {
        times: Vec<f64>,
        density: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub dt_window: f64,
    pub g: Density,
}

impl WindowSpec {
    pub fn uniform(dt_window: f64) -> Self {
        Self { dt_window, g: Density::Uniform }
    }

    pub fn truncated_exponential(dt_window: f64, rate: f64) -> Self {
        Self { dt_window, g: Density::TruncatedExponential { rate } }
    }
}

/// Validated window with CDF tables precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    spec: WindowSpec,
    shape: Shape,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Uniform,
    TruncExp { rate: f64, mass: f64 },
    Table { times: Vec<f64>, density: Vec<f64>, cumulative: Vec<f64> },
}

impl Window {
    pub fn new(spec: WindowSpec) -> Result<Self> {
        let len = spec.dt_window;
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidWindow(format!("window length must be positive, got {len}")));
        }
        let shape = match &spec.g {
            Density::Uniform => Shape::Uniform,
            Density::TruncatedExponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return Err(Error::InvalidWindow(format!("exponential rate must be positive, got {rate}")));
                }
                Shape::TruncExp { rate: *rate, mass: -(-rate * len).exp_m1() }
            }
            Density::Table { times, density } => {
                if times.len() < 2 || times.len() != density.len() {
                    return Err(Error::InvalidWindow("density table needs matching times and values".into()));
                }
                if times[0] != 0.0 || (times[times.len() - 1] - len).abs() > 1e-12 {
                    return Err(Error::InvalidWindow("density table must span [0, dt_window]".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidWindow("density times must be strictly increasing".into()));
                }
                if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(Error::InvalidWindow("density values must be non-negative".into()));
                }
                let mut cumulative = vec![0.0];
                for k in 1..times.len() {
                    let piece = 0.5 * (density[k - 1] + density[k]) * (times[k] - times[k - 1]);
                    cumulative.push(cumulative[k - 1] + piece);
                }
                let total = cumulative[cumulative.len() - 1];
                if (total - 1.0).abs() > DENSITY_TOL {
                    return Err(Error::InvalidWindow(format!("density integrates to {total}, expected 1")));
                }
                Shape::Table { times: times.clone(), density: density.clone(), cumulative }
            }
        };
        Ok(Self { spec, shape })
    }

    pub fn spec(&self) -> &WindowSpec {
        &self.spec
    }

    pub fn length(&self) -> f64 {
        self.spec.dt_window
    }

    /// Interior points where `g` is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Table { times, .. } => times[1..times.len() - 1].to_vec(),
            _ => vec![],
        }
    }

    pub fn pdf(&self, t: f64) -> f64 {
        let len = self.length();
        if !(0.0..=len).contains(&t) {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => 1.0 / len,
            Shape::TruncExp { rate, mass } => rate * (-rate * t).exp() / mass,
            Shape::Table { times, density, .. } => {
                let k = segment(times, t);
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                (1.0 - w) * density[k] + w * density[k + 1]
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        let len = self.length();
        if t <= 0.0 {
            return 0.0;
        }
        if t >= len {
            return 1.0;
        }
        match &self.shape {
            Shape::Uniform => t / len,
            Shape::TruncExp { rate, mass } => -(-rate * t).exp_m1() / mass,
            Shape::Table { times, density, cumulative } => {
                let k = segment(times, t);
                let x = t - times[k];
                let slope = (density[k + 1] - density[k]) / (times[k + 1] - times[k]);
                cumulative[k] + density[k] * x + 0.5 * slope * x * x
            }
        }
    }

    /// Inverse CDF for `u` in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        let len = self.length();
        let t = match &self.shape {
            Shape::Uniform => u * len,
            Shape::TruncExp { rate, mass } => -(-u * mass).ln_1p() / rate,
            Shape::Table { times, density, cumulative } => {
                let target = u * cumulative[cumulative.len() - 1];
                let k = cumulative.partition_point(|c| *c <= target).clamp(1, times.len() - 1) - 1;
                let h = times[k + 1] - times[k];
                let slope = (density[k + 1] - density[k]) / h;
                let r = target - cumulative[k];
                let d0 = density[k];
                let disc = (d0 * d0 + 2.0 * slope * r).max(0.0);
                let denom = d0 + disc.sqrt();
                let x = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
                times[k] + x.clamp(0.0, h)
            }
        };
        t.clamp(0.0, len)
    }
}

fn segment(times: &[f64], t: f64) -> usize {
    times.partition_point(|x| *x <= t).clamp(1, times.len() - 1) - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_with_breakpoints, DEFAULT_TOL};

    fn windows() -> Vec<Window> {
        vec![
            Window::new(WindowSpec::uniform(2.0)).unwrap(),
            Window::new(WindowSpec::truncated_exponential(1.5, 2.0)).unwrap(),
            Window::new(WindowSpec {
                dt_window: 1.0,
                g: Density::Table { times: vec![0.0, 0.5, 1.0], density: vec![0.5, 1.5, 0.5] },
            })
            .unwrap(),
        ]
    }

    #[test]
    fn densities_integrate_to_one_and_match_cdf() {
        for w in windows() {
            let r = integrate_with_breakpoints(|t| w.pdf(t), 0.0, w.length(), &w.breakpoints(), DEFAULT_TOL).unwrap();
            assert!((r.value - 1.0).abs() < 1e-9);
            for k in 0..=20 {
                let t = w.length() * k as f64 / 20.0;
                let num = integrate_with_breakpoints(|s| w.pdf(s), 0.0, t, &w.breakpoints(), 1e-12).unwrap();
                assert!((num.value - w.cdf(t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for w in windows() {
            for k in 0..100 {
                let u = k as f64 / 100.0;
                assert!((w.cdf(w.quantile(u)) - u).abs() < 1e-12, "{:?} u={u}", w.spec());
            }
        }
    }

    #[test]
    fn invalid_windows() {
        assert!(Window::new(WindowSpec::uniform(0.0)).is_err());
        assert!(Window::new(WindowSpec::truncated_exponential(1.0, -1.0)).is_err());
        let unnormalized =
            WindowSpec { dt_window: 1.0, g: Density::Table { times: vec![0.0, 1.0], density: vec![1.0, 1.5] } };
        assert!(matches!(Window::new(unnormalized), Err(Error::InvalidWindow(_))));
    }

    #[test]
    fn json_shape() {
        let w: WindowSpec =
            serde_json::from_str(r#"{"dt_window": 1.0, "g": {"kind": "truncated_exponential", "rate": 3.0}}"#).unwrap();
        assert_eq!(w.g, Density::TruncatedExponential { rate: 3.0 });
    }
}
