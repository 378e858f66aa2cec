//! Scenario files, grid specifications and provenance hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::behaviors::Distribution;
use crate::collapse::{FamilyKind, FamilySpec, PRIOR_MATCH_TOL};
use crate::error::{Error, Result};
use crate::scenarios::{Density, Schedule, WindowSpec};

/// Which experiment a scenario describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// One box probed at a fixed delay after its triggering input.
    Single,
    /// Two boxes, fixed input times.
    TwoBox,
    /// Two boxes, input times drawn from the window density.
    Window,
}

impl Layout {
    pub fn label(&self) -> &'static str {
        match self {
            Layout::Single => "single",
            Layout::TwoBox => "twobox",
            Layout::Window => "window",
        }
    }
}

/// Either an explicit list of points or a `start:stop:count` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Points(Vec<f64>),
    Spec(String),
}

impl GridValue {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match self {
            GridValue::Points(p) => p.clone(),
            GridValue::Spec(s) => parse_points(s)?,
        };
        if pts.is_empty() {
            return Err(Error::EmptyGrid);
        }
        Ok(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub p0: Distribution,
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<Layout>,
    /// Default elapsed-time grid for `witness`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridValue>,
}

const DEFAULT_SCHEDULE: Schedule = Schedule { t_a: 0.0, t_b: 0.0, x: 1 };

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The family spec with its prior bound to the top-level `p0`.
    pub fn family_spec(&self) -> Result<FamilySpec> {
        let mut spec = self.family.clone();
        match &spec.p0 {
            None => spec.p0 = Some(self.p0.clone()),
            Some(q) => {
                q.ensure_same_alphabet(&self.p0)?;
                if q.max_abs_diff(&self.p0)? > PRIOR_MATCH_TOL {
                    return Err(Error::PriorMismatch);
                }
            }
        }
        Ok(spec)
    }

    pub fn layout(&self) -> Layout {
        self.layout.unwrap_or(if self.window.is_some() { Layout::Window } else { Layout::TwoBox })
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule.unwrap_or(DEFAULT_SCHEDULE)
    }
}

/// A scenario file together with its provenance digest.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub hash: String,
}

impl LoadedScenario {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let scenario = serde_json::from_value(value.clone())?;
        Ok(Self { scenario, hash: canonical_hash(&value) })
    }
}

/// SHA-256 of the compact serialization with object keys sorted.
pub fn canonical_hash(value: &serde_json::Value) -> String {
    let mut out = String::new();
    canonical(value, &mut out);
    hex::encode(Sha256::digest(out.as_bytes()))
}

fn canonical(v: &serde_json::Value, out: &mut String) {
    use serde_json::Value;
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                canonical(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Parameters a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Elapsed,
    DtMin,
    DtWindow,
    N,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Elapsed => "elapsed",
            SweepParam::DtMin => "dt_min",
            SweepParam::DtWindow => "dt_window",
            SweepParam::N => "n",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "elapsed" | "s" => Ok(SweepParam::Elapsed),
            "dt_min" => Ok(SweepParam::DtMin),
            "dt_window" => Ok(SweepParam::DtWindow),
            "n" | "N" => Ok(SweepParam::N),
            other => Err(Error::Usage(format!(
                "unknown sweep parameter '{other}' (expected elapsed, dt_min, dt_window or n)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub param: SweepParam,
    pub points: Vec<f64>,
}

/// Parses `[param=]a,b,c` or `[param=]start:stop:count`.
pub fn parse_grid(spec: &str) -> Result<Grid> {
    let (param, body) = match spec.split_once('=') {
        Some((p, b)) => (SweepParam::parse(p.trim())?, b),
        None => (SweepParam::Elapsed, spec),
    };
    let points = parse_points(body)?;
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(Grid { param, points })
}

fn parse_points(body: &str) -> Result<Vec<f64>> {
    let body = body.trim();
    if body.is_empty() {
        return Ok(vec![]);
    }
    let num = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::Usage(format!("not a number in grid: '{s}'")))
    };
    if body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Usage(format!("range grid must be start:stop:count, got '{body}'")));
        }
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("grid count must be a whole number, got '{}'", parts[2])))?;
        return Ok(match count {
            0 => vec![],
            1 => vec![start],
            _ => (0..count)
                .map(|k| if k + 1 == count { stop } else { start + (stop - start) * k as f64 / (count - 1) as f64 })
                .collect(),
        });
    }
    body.split(',').map(num).collect()
}

/// Family spec whose shortest collapse duration is `dt_min`. Linear and
/// step durations are shifted; exponential rates are rescaled; an
/// instantaneous family becomes linear with every duration equal to `dt_min`.
pub fn with_dt_min(spec: &FamilySpec, dt_min: f64) -> Result<FamilySpec> {
    if !(dt_min.is_finite() && dt_min >= 0.0) {
        return Err(Error::InvalidConfig(format!("dt_min must be non-negative, got {dt_min}")));
    }
    let n = spec.p0.as_ref().map_or(0, Distribution::len);
    let mut out = spec.clone();
    match spec.kind {
        FamilyKind::Instantaneous => {
            if dt_min > 0.0 {
                out.kind = FamilyKind::Linear;
                out.dt = Some(vec![dt_min; n]);
            }
        }
        FamilyKind::Linear | FamilyKind::Step => {
            let dt = spec.dt.as_ref().ok_or_else(|| Error::InvalidSpec("family needs dt".into()))?;
            let lo = dt.iter().copied().fold(f64::INFINITY, f64::min);
            out.dt = Some(dt.iter().map(|d| d - lo + dt_min).collect());
        }
        FamilyKind::Exponential => {
            let rates = spec.rates.as_ref().ok_or_else(|| Error::InvalidSpec("family needs rates".into()))?;
            if dt_min == 0.0 {
                out = FamilySpec { kind: FamilyKind::Instantaneous, rates: None, ..out };
            } else {
                let fastest = rates.iter().copied().fold(0.0, f64::max);
                let cutoff = -crate::collapse::EXPONENTIAL_CUTOFF.ln();
                let scale = cutoff / (fastest * dt_min);
                out.rates = Some(rates.iter().map(|r| r * scale).collect());
            }
        }
        FamilyKind::Table => {
            return Err(Error::InvalidConfig("dt_min sweeps are not defined for tabulated families".into()))
        }
    }
    Ok(out)
}

/// Window with length `dt_window` and the same density shape.
pub fn with_dt_window(spec: &WindowSpec, dt_window: f64) -> Result<WindowSpec> {
    if let Density::Table { .. } = spec.g {
        return Err(Error::InvalidConfig("dt_window sweeps are not defined for tabulated densities".into()));
    }
    Ok(WindowSpec { dt_window, g: spec.g.clone() })
}
