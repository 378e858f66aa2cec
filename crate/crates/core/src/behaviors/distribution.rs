use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass accepted when constructing a [`Distribution`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probability vector over a finite outcome alphabet `0..len`.
///
/// Construction never renormalizes: weights that do not already sum to one
/// (within [`NORMALIZATION_TOL`]) are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, NORMALIZATION_TOL)
    }

    /// Like [`Distribution::new`] with a caller-chosen normalization tolerance.
    pub(crate) fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::NegativeWeight { index, value });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { weights })
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Self { weights: vec![1.0 / len as f64; len] })
    }

    /// Point mass on `outcome`.
    pub fn delta(len: usize, outcome: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyAlphabet);
        }
        let mut weights = vec![0.0; len];
        *weights.get_mut(outcome).ok_or(Error::AlphabetMismatch { left: len, right: outcome + 1 })? = 1.0;
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.weights[outcome]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().copied()
    }

    pub fn ensure_same_alphabet(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::AlphabetMismatch { left: self.len(), right: other.len() });
        }
        Ok(())
    }

    /// Total variation distance `(1/2) * sum |p_i - q_i|`.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        self.ensure_same_alphabet(other)?;
        let l1: f64 = self.iter().zip(other.iter()).map(|(p, q)| (p - q).abs()).sum();
        Ok(0.5 * l1)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.ensure_same_alphabet(other)?;
        Ok(self.iter().zip(other.iter()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
    }

    /// Maps a uniform variate `u` in `[0, 1)` to an outcome by inverse CDF.
    pub fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last_supported = 0;
        for (i, w) in self.iter().enumerate() {
            if w > 0.0 {
                last_supported = i;
                acc += w;
                if u < acc {
                    return i;
                }
            }
        }
        last_supported
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.weights
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, w) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, "]")
    }
}

/// Free-function form of [`Distribution::tv_distance`].
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.tv_distance(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fair_and_delta() {
        let fair = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(fair.weights(), &[0.5, 0.5]);
        let det = Distribution::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(det.sample_index(0.999), 0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(
            Distribution::new(vec![0.3, 0.7, 0.1]),
            Err(Error::NotNormalized { sum }) if (sum - 1.1).abs() < 1e-12
        ));
        assert!(matches!(Distribution::new(vec![1.5, -0.5]), Err(Error::NegativeWeight { index: 1, .. })));
        assert!(matches!(Distribution::new(vec![]), Err(Error::EmptyAlphabet)));
        assert!(matches!(Distribution::new(vec![f64::NAN, 1.0]), Err(Error::NegativeWeight { index: 0, .. })));
    }

    #[test]
    fn tv_examples() {
        let d = |w: &[f64]| Distribution::new(w.to_vec()).unwrap();
        assert_eq!(d(&[0.5, 0.5]).tv_distance(&d(&[0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(d(&[1.0, 0.0]).tv_distance(&d(&[0.0, 1.0])).unwrap(), 1.0);
        let tv = d(&[0.3, 0.7]).tv_distance(&d(&[0.51, 0.49])).unwrap();
        assert!((tv - 0.21).abs() < 1e-15);
        assert!(matches!(d(&[0.5, 0.5]).tv_distance(&d(&[1.0])), Err(Error::AlphabetMismatch { left: 2, right: 1 })));
    }

    #[test]
    fn json_rejects_unnormalized() {
        assert!(serde_json::from_str::<Distribution>("[0.2, 0.2]").is_err());
        let d: Distribution = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(d.prob(1), 0.75);
    }

    fn arb_dist(n: usize) -> impl Strategy<Value = Distribution> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", move |raw| {
            let s: f64 = raw.iter().sum();
            if s <= 1e-6 {
                return None;
            }
            let mut w: Vec<f64> = raw.iter().map(|x| x / s).collect();
            let tail: f64 = w[..n - 1].iter().sum();
            w[n - 1] = (1.0 - tail).max(0.0);
            Distribution::new(w).ok()
        })
    }

    proptest! {
        #[test]
        fn tv_is_a_metric(p in arb_dist(4), q in arb_dist(4), r in arb_dist(4)) {
            let pq = p.tv_distance(&q).unwrap();
            let qp = q.tv_distance(&p).unwrap();
            prop_assert!((pq - qp).abs() <= 1e-15);
            prop_assert!(p.tv_distance(&p).unwrap() <= 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
            let pr = p.tv_distance(&r).unwrap();
            let qr = q.tv_distance(&r).unwrap();
            prop_assert!(pr <= pq + qr + 1e-12);
        }
    }
}
