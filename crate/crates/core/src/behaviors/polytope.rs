//! Local polytope membership by linear feasibility over the deterministic
//! local strategies.
//!
//! A behavior is local iff `sum_v w_v V_v = P`, `sum_v w_v = 1`, `w >= 0`
//! has a solution, where `V_v` ranges over deterministic strategies
//! `a = f(x)`, `b = g(y)`. Feasibility is decided with a phase-one simplex
//! on a dense tableau. When the system is infeasible the optimal phase-one
//! duals give a Farkas certificate, which is returned as a Bell-type
//! inequality satisfied by every vertex and violated by the behavior.

use super::{Alphabets, BoxBehavior};
use crate::error::{Error, Result};

/// Upper bound on the number of deterministic strategies enumerated.
pub const MAX_VERTICES: u128 = 10_000_000;

const PIVOT_EPS: f64 = 1e-12;

/// Deterministic local strategy: Alice outputs `alice[x]`, Bob outputs `bob[y]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalStrategy {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl LocalStrategy {
    /// The `k`-th strategy in mixed-radix order, Alice's outputs as the low digits.
    pub fn from_index(al: Alphabets, mut k: usize) -> Self {
        let mut alice = vec![0; al.x];
        let mut bob = vec![0; al.y];
        for slot in alice.iter_mut() {
            *slot = k % al.a;
            k /= al.a;
        }
        for slot in bob.iter_mut() {
            *slot = k % al.b;
            k /= al.b;
        }
        Self { alice, bob }
    }

    pub fn behavior(&self, al: Alphabets) -> BoxBehavior {
        BoxBehavior::from_fn(al, |x, y, a, b| if self.alice[x] == a && self.bob[y] == b { 1.0 } else { 0.0 })
            .expect("deterministic strategy is a valid behavior")
    }

    /// Table entries equal to one, in flat `[x][y][a][b]` indexing.
    fn support(&self, al: Alphabets) -> impl Iterator<Item = usize> + '_ {
        (0..al.x).flat_map(move |x| (0..al.y).map(move |y| al.index(x, y, self.alice[x], self.bob[y])))
    }
}

/// Convex combination of deterministic strategies.
#[derive(Clone, Debug)]
pub struct LocalMixture {
    pub alphabets: Alphabets,
    pub components: Vec<(LocalStrategy, f64)>,
}

impl LocalMixture {
    /// Flat table `sum_v w_v V_v`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut table = vec![0.0; self.alphabets.table_len()];
        for (s, w) in &self.components {
            for i in s.support(self.alphabets) {
                table[i] += w;
            }
        }
        table
    }

    pub fn max_residual(&self, bx: &BoxBehavior) -> f64 {
        self.reconstruct().iter().zip(bx.table()).map(|(r, p)| (r - p).abs()).fold(0.0, f64::max)
    }
}

/// `sum coefficients . P <= bound` for every local behavior.
#[derive(Clone, Debug)]
pub struct BellInequality {
    pub alphabets: Alphabets,
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

impl BellInequality {
    pub fn evaluate(&self, bx: &BoxBehavior) -> f64 {
        self.coefficients.iter().zip(bx.table()).map(|(c, p)| c * p).sum()
    }

    pub fn violation(&self, bx: &BoxBehavior) -> f64 {
        self.evaluate(bx) - self.bound
    }
}

#[derive(Clone, Debug)]
pub enum Locality {
    Local(LocalMixture),
    Nonlocal { inequality: BellInequality, violation: f64 },
}

impl Locality {
    pub fn is_member(&self) -> bool {
        matches!(self, Locality::Local(_))
    }
}

pub fn vertex_count(al: Alphabets) -> Option<u128> {
    let a = (al.a as u128).checked_pow(al.x as u32)?;
    let b = (al.b as u128).checked_pow(al.y as u32)?;
    a.checked_mul(b)
}

/// Decides membership of `bx` in the local polytope.
///
/// `tol` bounds the residual `|sum_v w_v V_v - P|_1` accepted as membership.
pub fn is_local(bx: &BoxBehavior, tol: f64) -> Result<Locality> {
    let al = bx.alphabets();
    let n_vertices = match vertex_count(al) {
        Some(n) if n <= MAX_VERTICES => n as usize,
        other => return Err(Error::ScenarioTooLarge { vertices: other.unwrap_or(u128::MAX), limit: MAX_VERTICES }),
    };
    let strategies: Vec<LocalStrategy> = (0..n_vertices).map(|k| LocalStrategy::from_index(al, k)).collect();

    // Rows: one per table entry plus the normalization row.
    let m = al.table_len() + 1;
    let mut rhs: Vec<f64> = bx.table().to_vec();
    rhs.push(1.0);
    let mut columns = vec![vec![0.0; m]; n_vertices];
    for (col, s) in columns.iter_mut().zip(&strategies) {
        for i in s.support(al) {
            col[i] = 1.0;
        }
        col[m - 1] = 1.0;
    }

    let sol = phase_one(&columns, &rhs);
    if sol.objective <= tol {
        let components = sol.primal.iter().zip(strategies).filter(|(w, _)| **w > 0.0).map(|(w, s)| (s, *w)).collect();
        return Ok(Locality::Local(LocalMixture { alphabets: al, components }));
    }

    // Every vertex satisfies y_tab . V + y_norm <= 0 by optimality of the duals.
    let (y_norm, y_tab) = sol.duals.split_last().expect("non-empty duals");
    let inequality = BellInequality { alphabets: al, coefficients: y_tab.to_vec(), bound: -y_norm };
    let violation = inequality.violation(bx);
    Ok(Locality::Nonlocal { inequality, violation })
}

struct PhaseOne {
    objective: f64,
    primal: Vec<f64>,
    duals: Vec<f64>,
}

/// Minimizes the sum of artificials for `A w + s = rhs`, `w, s >= 0`,
/// `rhs >= 0`, with Bland's rule.
fn phase_one(columns: &[Vec<f64>], rhs: &[f64]) -> PhaseOne {
    let m = rhs.len();
    let n = columns.len();
    let width = n + m + 1;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        for (j, col) in columns.iter().enumerate() {
            row[j] = col[i];
        }
        row[n + i] = 1.0;
        row[width - 1] = rhs[i];
    }
    // Reduced costs; the last entry holds minus the objective.
    let mut cost = vec![0.0; width];
    for i in 0..m {
        for j in 0..n {
            cost[j] -= t[i * width + j];
        }
        cost[width - 1] -= rhs[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    while let Some(enter) = (0..n + m).find(|&j| cost[j] < -PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + enter];
            if a > PIVOT_EPS {
                let ratio = t[i * width + width - 1] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        // Phase one is bounded below by zero, so an entering column always has a pivot row.
        let (r, _) = leave.expect("phase-one objective is bounded");
        pivot(&mut t, &mut cost, width, r, enter);
        basis[r] = enter;
    }

    let mut primal = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            primal[b] = t[i * width + width - 1].max(0.0);
        }
    }
    let duals = (0..m).map(|i| 1.0 - cost[n + i]).collect();
    PhaseOne { objective: -cost[width - 1], primal, duals }
}

fn pivot(t: &mut [f64], cost: &mut [f64], width: usize, r: usize, c: usize) {
    let m = t.len() / width;
    let p = t[r * width + c];
    for v in &mut t[r * width..(r + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = t[i * width + c];
        if f != 0.0 {
            for (v, pr) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
        }
    }
    let f = cost[c];
    if f != 0.0 {
        for (v, pr) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * pr;
        }
    }
}
