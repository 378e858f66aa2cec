//! Finite distributions and bipartite box behaviors `P(a,b|x,y)`, with
//! non-signaling and locality classification.

mod distribution;
mod polytope;

pub use distribution::{tv_distance, Distribution, NORMALIZATION_TOL};
pub use polytope::{is_local, BellInequality, LocalMixture, LocalStrategy, Locality, MAX_VERTICES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for analytic tables.
pub const ANALYTIC_TOL: f64 = 1e-9;

const TABLE_SUM_TOL: f64 = 1e-12;

/// Sizes of the outcome alphabets (`a`, `b`) and input sets (`x`, `y`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabets {
    pub a: usize,
    pub b: usize,
    pub x: usize,
    pub y: usize,
}

impl Alphabets {
    pub const CHSH: Alphabets = Alphabets { a: 2, b: 2, x: 2, y: 2 };

    pub fn table_len(&self) -> usize {
        self.a * self.b * self.x * self.y
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.y + y) * self.a + a) * self.b + b
    }
}

/// Conditional table `P(a,b|x,y)`, stored flat in `[x][y][a][b]` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BehaviorJson", into = "BehaviorJson")]
pub struct BoxBehavior {
    alphabets: Alphabets,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BehaviorJson {
    alphabets: Alphabets,
    table: Vec<Vec<Vec<Vec<f64>>>>,
}

impl BoxBehavior {
    pub fn new(alphabets: Alphabets, table: Vec<f64>) -> Result<Self> {
        let Alphabets { a, b, x, y } = alphabets;
        if a == 0 || b == 0 || x == 0 || y == 0 {
            return Err(Error::InvalidBehavior("empty alphabet or input set".into()));
        }
        if table.len() != alphabets.table_len() {
            return Err(Error::InvalidBehavior(format!(
                "table has {} entries, alphabets require {}",
                table.len(),
                alphabets.table_len()
            )));
        }
        if let Some(v) = table.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidBehavior(format!("negative or non-finite entry {v}")));
        }
        let block = a * b;
        for (k, chunk) in table.chunks(block).enumerate() {
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > TABLE_SUM_TOL {
                return Err(Error::InvalidBehavior(format!("P(.,.|x={},y={}) sums to {s}", k / y, k % y)));
            }
        }
        Ok(Self { alphabets, table })
    }

    /// Builds a table from `p(x, y, a, b)`.
    pub fn from_fn(alphabets: Alphabets, p: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut table = vec![0.0; alphabets.table_len()];
        for x in 0..alphabets.x {
            for y in 0..alphabets.y {
                for a in 0..alphabets.a {
                    for b in 0..alphabets.b {
                        table[alphabets.index(x, y, a, b)] = p(x, y, a, b);
                    }
                }
            }
        }
        Self::new(alphabets, table)
    }

    /// The PR box: `P(a,b|x,y) = 1/2` iff `a xor b = x and y`.
    pub fn pr_box() -> Self {
        Self::from_fn(Alphabets::CHSH, |x, y, a, b| if (a ^ b) == (x & y) { 0.5 } else { 0.0 })
            .expect("PR box is a valid behavior")
    }

    pub fn uniform_noise(alphabets: Alphabets) -> Result<Self> {
        let p = 1.0 / (alphabets.a * alphabets.b) as f64;
        Self::from_fn(alphabets, |_, _, _, _| p)
    }

    /// Product behavior `P(a,b|x,y) = p_x(a) q_y(b)`.
    pub fn product(alice: &[Distribution], bob: &[Distribution]) -> Result<Self> {
        let a = alice.first().map(Distribution::len).unwrap_or(0);
        let b = bob.first().map(Distribution::len).unwrap_or(0);
        if alice.iter().any(|d| d.len() != a) || bob.iter().any(|d| d.len() != b) {
            return Err(Error::InvalidBehavior("ragged marginals".into()));
        }
        let alphabets = Alphabets { a, b, x: alice.len(), y: bob.len() };
        Self::from_fn(alphabets, |x, y, ai, bi| alice[x].prob(ai) * bob[y].prob(bi))
    }

    pub fn alphabets(&self) -> Alphabets {
        self.alphabets
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[self.alphabets.index(x, y, a, b)]
    }

    /// `P(a|x,y) = sum_b P(a,b|x,y)`.
    pub fn alice_marginal(&self, x: usize, y: usize, a: usize) -> f64 {
        (0..self.alphabets.b).map(|b| self.p(x, y, a, b)).sum()
    }

    /// `P(b|x,y) = sum_a P(a,b|x,y)`.
    pub fn bob_marginal(&self, x: usize, y: usize, b: usize) -> f64 {
        (0..self.alphabets.a).map(|a| self.p(x, y, a, b)).sum()
    }
}

impl TryFrom<BehaviorJson> for BoxBehavior {
    type Error = Error;

    fn try_from(raw: BehaviorJson) -> Result<Self> {
        let al = raw.alphabets;
        let shape_ok = raw.table.len() == al.x
            && raw.table.iter().all(|by_y| {
                by_y.len() == al.y
                    && by_y.iter().all(|by_a| by_a.len() == al.a && by_a.iter().all(|row| row.len() == al.b))
            });
        if !shape_ok {
            return Err(Error::InvalidBehavior("table shape does not match alphabets (expected [x][y][a][b])".into()));
        }
        let flat = raw.table.into_iter().flatten().flatten().flatten().collect();
        BoxBehavior::new(al, flat)
    }
}

impl From<BoxBehavior> for BehaviorJson {
    fn from(bx: BoxBehavior) -> Self {
        let al = bx.alphabets;
        let table = (0..al.x)
            .map(|x| {
                (0..al.y).map(|y| (0..al.a).map(|a| (0..al.b).map(|b| bx.p(x, y, a, b)).collect()).collect()).collect()
            })
            .collect();
        BehaviorJson { alphabets: al, table }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// Location of the largest marginal discrepancy: the marginal of `party`
/// for its own `input` and `output` differs between two remote inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalViolation {
    pub party: Party,
    pub input: usize,
    pub output: usize,
    pub remote_inputs: (usize, usize),
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonSignalingReport {
    pub pass: bool,
    pub max_violation: f64,
    pub worst: Option<MarginalViolation>,
}

pub fn is_nonsignaling(bx: &BoxBehavior, tol: f64) -> NonSignalingReport {
    let al = bx.alphabets;
    let mut worst: Option<MarginalViolation> = None;
    let mut consider = |v: MarginalViolation| {
        if worst.is_none_or(|w| v.discrepancy > w.discrepancy) {
            worst = Some(v);
        }
    };
    for x in 0..al.x {
        for a in 0..al.a {
            for y in 0..al.y {
                for y2 in (y + 1)..al.y {
                    let d = (bx.alice_marginal(x, y, a) - bx.alice_marginal(x, y2, a)).abs();
                    consider(MarginalViolation {
                        party: Party::Alice,
                        input: x,
                        output: a,
                        remote_inputs: (y, y2),
                        discrepancy: d,
                    });
                }
            }
        }
    }
    for y in 0..al.y {
        for b in 0..al.b {
            for x in 0..al.x {
                for x2 in (x + 1)..al.x {
                    let d = (bx.bob_marginal(x, y, b) - bx.bob_marginal(x2, y, b)).abs();
                    consider(MarginalViolation {
                        party: Party::Bob,
                        input: y,
                        output: b,
                        remote_inputs: (x, x2),
                        discrepancy: d,
                    });
                }
            }
        }
    }
    let max_violation = worst.map_or(0.0, |w| w.discrepancy);
    NonSignalingReport { pass: max_violation <= tol, max_violation, worst: worst.filter(|w| w.discrepancy > tol) }
}

/// CHSH expression `E(0,0) + E(0,1) + E(1,0) - E(1,1)`.
pub fn chsh_value(bx: &BoxBehavior) -> Result<f64> {
    if bx.alphabets != Alphabets::CHSH {
        let al = bx.alphabets;
        return Err(Error::WrongScenarioShape(format!("|A|={} |B|={} |X|={} |Y|={}", al.a, al.b, al.x, al.y)));
    }
    let corr = |x, y| -> f64 {
        let mut e = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let sign = if a == b { 1.0 } else { -1.0 };
                e += sign * bx.p(x, y, a, b);
            }
        }
        e
    };
    Ok(corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1))
}
