//! Direct minimization of the barycentric cost over couplings of small
//! measures.
//!
//! The decision variable is the coupling `π_ij = μ_i p(x_i, y_j)`. Moves go
//! along alternating cycles of the bipartite support graph, which keep both
//! marginals fixed exactly; every feasible direction decomposes conformally
//! into such cycles, so exact line searches along them cannot stall short of
//! the optimum of this convex problem.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::OracleConfig;
use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::{ksum, Scalar};
use crate::weak_transport::{optimal_weak_coupling, Refinement};

/// Largest support size accepted on either side.
pub const MAX_EXHAUSTIVE_ATOMS: usize = 4;
/// Largest `grid` accepted; the oracle runs `grid²` random starts.
pub const MAX_EXHAUSTIVE_GRID: usize = 64;

const SINKHORN_TOLERANCE: f64 = 1e-12;
const SINKHORN_ACCEPT: f64 = 1e-10;
const SINKHORN_ITERATIONS: usize = 10_000;
const MAX_SWEEPS: usize = 5_000;
const GOLDEN_ITERATIONS: usize = 90;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustiveResult<T> {
    pub value: T,
    /// Best value over the random starts alone, without the analytic start.
    pub random_value: T,
    /// Best coupling found, rows indexed by `μ`'s atoms, columns by `ν`'s.
    pub coupling: Vec<Vec<T>>,
    /// Starts actually run (random ones plus the analytic one, if usable).
    pub starts: usize,
    /// Largest marginal defect over all accepted starts.
    pub marginal_error: T,
}

type Cycle = Vec<(usize, usize, bool)>;

/// All alternating cycles `r₀c₀ r₁c₁ …`: `+` on `(r_l, c_l)`, `−` on
/// `(r_l, c_{l+1})`.
fn cycles(m: usize, k: usize) -> Vec<Cycle> {
    fn tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for t in &out {
                for i in 0..n {
                    if !t.contains(&i) {
                        let mut u = t.clone();
                        u.push(i);
                        next.push(u);
                    }
                }
            }
            out = next;
        }
        out
    }
    let mut all = Vec::new();
    for len in 2..=m.min(k) {
        for rows in tuples(m, len) {
            // Rotations describe the same cycle.
            if rows[0] != *rows.iter().min().unwrap() {
                continue;
            }
            for cols in tuples(k, len) {
                let mut cyc = Vec::with_capacity(2 * len);
                for l in 0..len {
                    cyc.push((rows[l], cols[l], true));
                    cyc.push((rows[l], cols[(l + 1) % len], false));
                }
                all.push(cyc);
            }
        }
    }
    all
}

struct Problem<'a, T> {
    x: &'a [T],
    mu: &'a [T],
    y: &'a [T],
    nu: &'a [T],
    theta: &'a CostFunction<T>,
}

impl<T: Scalar> Problem<'_, T> {
    fn value(&self, pi: &[Vec<T>]) -> T {
        ksum(pi.iter().enumerate().map(|(i, row)| {
            let bary = ksum(row.iter().zip(self.y).map(|(&p, &y)| p * y)) / self.mu[i];
            self.mu[i] * self.theta.eval_abs(self.x[i] - bary)
        }))
    }

    fn marginal_error(&self, pi: &[Vec<T>]) -> T {
        let rows = pi.iter().zip(self.mu).map(|(row, &m)| (ksum(row.iter().copied()) - m).abs());
        let cols = (0..self.y.len()).map(|j| (ksum(pi.iter().map(|row| row[j])) - self.nu[j]).abs());
        rows.chain(cols).fold(T::zero(), T::max)
    }

    /// Alternating row/column normalization of a non-negative matrix.
    fn sinkhorn(&self, mut pi: Vec<Vec<T>>) -> Option<Vec<Vec<T>>> {
        let tol = T::lit(SINKHORN_TOLERANCE);
        for _ in 0..SINKHORN_ITERATIONS {
            for (row, &m) in pi.iter_mut().zip(self.mu) {
                let s = ksum(row.iter().copied());
                if s <= T::zero() {
                    return None;
                }
                row.iter_mut().for_each(|p| *p = *p * m / s);
            }
            for (j, &n) in self.nu.iter().enumerate() {
                let s = ksum(pi.iter().map(|row| row[j]));
                if s <= T::zero() {
                    return None;
                }
                pi.iter_mut().for_each(|row| row[j] = row[j] * n / s);
            }
            if self.marginal_error(&pi) <= tol {
                break;
            }
        }
        (self.marginal_error(&pi) <= T::lit(SINKHORN_ACCEPT).max(T::tolerance(SINKHORN_ACCEPT))).then_some(pi)
    }

    fn shifted(pi: &[Vec<T>], cyc: &Cycle, eps: T) -> Vec<Vec<T>> {
        let mut out = pi.to_vec();
        for &(i, j, plus) in cyc {
            out[i][j] = if plus { out[i][j] + eps } else { out[i][j] - eps };
        }
        out
    }

    /// Exact line search along `cyc`; returns whether the point moved.
    fn improve_along(&self, pi: &mut Vec<Vec<T>>, cyc: &Cycle) -> bool {
        let mut lo = T::neg_infinity();
        let mut hi = T::infinity();
        for &(i, j, plus) in cyc {
            if plus {
                lo = lo.max(-pi[i][j]);
            } else {
                hi = hi.min(pi[i][j]);
            }
        }
        if !(hi - lo > T::epsilon()) {
            return false;
        }
        let f = |eps: T| self.value(&Self::shifted(pi, cyc, eps));
        let inv_phi = T::lit(0.5 * (5f64.sqrt() - 1.0));
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..GOLDEN_ITERATIONS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d);
            }
        }
        let base = self.value(pi);
        let candidates = [lo, hi, (a + b) / T::lit(2.0)];
        let (eps, best) = candidates
            .iter()
            .map(|&e| (e, f(e)))
            .fold((T::zero(), base), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        if eps == T::zero() || !(best < base) {
            return false;
        }
        let mut next = Self::shifted(pi, cyc, eps);
        // Clamp the entry the step drove to zero against rounding.
        next.iter_mut().flatten().for_each(|p| *p = p.max(T::zero()));
        *pi = next;
        true
    }

    fn descend(&self, mut pi: Vec<Vec<T>>, cycles: &[Cycle]) -> (T, Vec<Vec<T>>) {
        let mut value = self.value(&pi);
        for _ in 0..MAX_SWEEPS {
            let before = value;
            for cyc in cycles {
                self.improve_along(&mut pi, cyc);
            }
            value = self.value(&pi);
            if before - value <= T::epsilon() * (T::one() + value.abs()) {
                break;
            }
        }
        (value, pi)
    }
}

/// `T̄_θ(ν|μ)` computed straight from its definition, as the minimum of
/// `Σ_i μ_i θ(|x_i − Σ_j p_ij y_j|)` over couplings. Runs `grid²` random
/// Sinkhorn-normalized starts plus the start given by the analytic optimal
/// coupling.
pub fn exhaustive_weak_cost<T: Scalar>(
    nu: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    grid: usize,
    cfg: &OracleConfig,
) -> Result<ExhaustiveResult<T>> {
    cfg.validate()?;
    if mu.len() > MAX_EXHAUSTIVE_ATOMS || nu.len() > MAX_EXHAUSTIVE_ATOMS {
        return Err(Error::TooLarge(format!(
            "exhaustive oracle supports at most {MAX_EXHAUSTIVE_ATOMS} atoms per measure, got {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    if grid == 0 || grid > MAX_EXHAUSTIVE_GRID {
        return Err(Error::TooLarge(format!("grid must be in 1..={MAX_EXHAUSTIVE_GRID}, got {grid}")));
    }
    let problem = Problem { x: mu.atoms(), mu: mu.weights(), y: nu.atoms(), nu: nu.weights(), theta };
    let cycles = cycles(mu.len(), nu.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut analytic: Option<Vec<Vec<T>>> = None;
    if let Ok(w) = optimal_weak_coupling(nu, mu, theta, Refinement::Auto) {
        let rows: Option<Vec<usize>> =
            mu.atoms().iter().map(|x| w.source_atoms.iter().position(|s| s == x)).collect();
        let cols: Option<Vec<usize>> =
            nu.atoms().iter().map(|y| w.target_atoms.iter().position(|t| t == y)).collect();
        if let (Some(rows), Some(cols)) = (rows, cols) {
            let pi = rows
                .iter()
                .zip(mu.weights())
                .map(|(&r, &m)| cols.iter().map(|&c| m * w.kernel[r][c]).collect())
                .collect();
            analytic = problem.sinkhorn(pi);
        }
    }
    let mut starts: Vec<Vec<Vec<T>>> = Vec::new();
    for _ in 0..grid * grid {
        let raw = (0..mu.len())
            .map(|_| (0..nu.len()).map(|_| T::lit(rng.gen_range(0.05..1.0))).collect())
            .collect();
        if let Some(pi) = problem.sinkhorn(raw) {
            starts.push(pi);
        }
    }
    if starts.is_empty() {
        return Err(Error::Degenerate("no feasible start for the exhaustive oracle".into()));
    }

    let random_count = starts.len();
    starts.extend(analytic);
    let count = starts.len();
    let mut marginal_error = T::zero();
    let mut random_value = T::infinity();
    let mut best: Option<(T, Vec<Vec<T>>)> = None;
    for (k, start) in starts.into_iter().enumerate() {
        let (value, pi) = problem.descend(start, &cycles);
        marginal_error = marginal_error.max(problem.marginal_error(&pi));
        if k < random_count {
            random_value = random_value.min(value);
        }
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, pi));
        }
    }
    let (value, coupling) = best.expect("at least one start");
    Ok(ExhaustiveResult { value, random_value, coupling, starts: count, marginal_error })
}
