//! Independent referees for the fast paths: conditional-gradient
//! minimization over `Perm(b)`, exhaustive vertex enumeration, and direct
//! minimization of the barycentric cost over couplings.
//!
//! None of these use the projection or the quantile coupling; they only share
//! the measure and cost types.

mod exhaustive;
pub mod suite;

use std::collections::BTreeMap;

use serde::Serialize;

pub use exhaustive::{exhaustive_weak_cost, ExhaustiveResult, MAX_EXHAUSTIVE_ATOMS, MAX_EXHAUSTIVE_GRID};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::permutahedron::for_each_permutation;
use crate::scalar::{ksum, Scalar};

/// Step rule for [`fw_minimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FwStep {
    /// A Frank–Wolfe step with exact line search, then a sweep of exchange
    /// moves along the edge directions `e_i − e_j` of the permutahedron,
    /// each with an exact line search up to its exchange capacity.
    #[default]
    Exchange,
    /// Pairwise steps between the best vertex and the worst active vertex,
    /// with an exact line search.
    PairwiseLineSearch,
    /// Classical open-loop step `2/(k + 2)`.
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub step: FwStep,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_iterations: 50_000, tolerance: 1e-8, seed: 0, step: FwStep::default() }
    }
}

impl OracleConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.tolerance > 0.0) {
            return Err(Error::Domain("oracle budget and tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FwResult<T> {
    pub c_star: Vec<T>,
    pub value: T,
    /// Certified bound on `value − optimum` (see [`fw_minimize`]).
    pub gap: T,
    /// Plain Frank–Wolfe gap `max_s ⟨∇φ(c), c − s⟩` at the returned point.
    pub fw_gap: T,
    pub iterations: usize,
}

fn objective<T: Scalar>(a: &[T], c: &[T], theta: &CostFunction<T>) -> T {
    ksum(a.iter().zip(c).map(|(&x, &y)| theta.eval_abs(x - y))) / T::lit(a.len() as f64)
}

/// Gradient in `c` of `(1/n) Σ θ(|a_i − c_i|)`, using right derivatives of `θ`.
fn gradient<T: Scalar>(a: &[T], c: &[T], theta: &CostFunction<T>) -> Vec<T> {
    let nn = T::lit(a.len() as f64);
    a.iter()
        .zip(c)
        .map(|(&x, &y)| {
            let r = x - y;
            if r > T::zero() {
                -theta.right_derivative(r) / nn
            } else if r < T::zero() {
                theta.right_derivative(-r) / nn
            } else {
                T::zero()
            }
        })
        .collect()
}

fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    ksum(x.iter().zip(y).map(|(&p, &q)| p * q))
}

/// Vertex of `Perm(b)` minimizing `⟨g, s⟩`: the largest entries of `b` go
/// to the smallest entries of `g`. Returned as the permutation `σ` with
/// `s_i = b_desc[σ_i]`.
fn linear_minimizer<T: Scalar>(g: &[T], b_desc: &[T]) -> (Vec<usize>, Vec<T>) {
    let n = g.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| g[i].partial_cmp(&g[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut sigma = vec![0; n];
    for (rank, &i) in idx.iter().enumerate() {
        sigma[i] = rank;
    }
    let s = sigma.iter().map(|&r| b_desc[r]).collect();
    (sigma, s)
}

/// Groups of coordinates of `a` holding equal values. The objective is
/// convex and invariant under swapping coordinates within a group, so
/// averaging over groups never increases it: the minimum over `Perm(b)` is
/// attained on the image of `Perm(b)` under that averaging, whose vertices
/// are averaged vertices of `Perm(b)`.
struct TieClasses {
    classes: Vec<Vec<usize>>,
}

impl TieClasses {
    fn new<T: Scalar>(a: &[T]) -> Self {
        let mut order: Vec<usize> = (0..a.len()).collect();
        order.sort_by(|&i, &j| a[i].partial_cmp(&a[j]).unwrap_or(std::cmp::Ordering::Equal));
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match classes.last_mut() {
                Some(last) if a[last[0]] == a[i] => last.push(i),
                _ => classes.push(vec![i]),
            }
        }
        for class in &mut classes {
            class.sort_unstable();
        }
        Self { classes }
    }

    fn average<T: Scalar>(&self, v: &mut [T]) {
        for class in self.classes.iter().filter(|c| c.len() > 1) {
            let mean = ksum(class.iter().map(|&i| v[i])) / T::lit(class.len() as f64);
            class.iter().for_each(|&i| v[i] = mean);
        }
    }

    /// Representative of the permutations that average to the same vertex.
    fn canonical(&self, sigma: &mut [usize]) {
        for class in self.classes.iter().filter(|c| c.len() > 1) {
            let mut ranks: Vec<usize> = class.iter().map(|&i| sigma[i]).collect();
            ranks.sort_unstable();
            class.iter().zip(ranks).for_each(|(&i, r)| sigma[i] = r);
        }
    }
}

/// Largest `γ` with `c + γ(e_i − e_j) ∈ Perm(b)`: for each size `k`, the
/// heaviest `k`-set containing `i` but not `j` must stay below the sum of the
/// `k` largest entries of `b`.
fn exchange_capacity<T: Scalar>(c: &[T], i: usize, j: usize, b_prefix: &[T]) -> T {
    let mut others: Vec<T> = c.iter().enumerate().filter(|&(l, _)| l != i && l != j).map(|(_, &x)| x).collect();
    others.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let mut heaviest = c[i];
    let mut cap = b_prefix[0] - heaviest;
    for (k, &x) in others.iter().enumerate() {
        heaviest = heaviest + x;
        cap = cap.min(b_prefix[k + 1] - heaviest);
    }
    cap.max(T::zero())
}

/// Snapping radii, relative to `1 + max|a|`, tried when certifying.
const SNAP_RADII: [f64; 5] = [1e-13, 1e-11, 1e-9, 1e-7, 1e-5];

/// Best lower bound on `min_{Perm(b)} φ` from the supporting hyperplanes at
/// `c` and at copies of `c` whose near-zero residuals are snapped to zero.
/// Convexity of `φ` on all of ℝⁿ makes `φ(y) + min_s ⟨∇φ(y), s − y⟩` a valid
/// bound for every `y`, feasible or not; snapping matters when `θ'` is not
/// Lipschitz at zero and the gradient at `c` overstates the gap.
fn lower_bound<T: Scalar>(a: &[T], c: &[T], b_desc: &[T], theta: &CostFunction<T>) -> T {
    let scale = T::one() + a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let at = |y: &[T]| {
        let g = gradient(a, y, theta);
        let (_, s) = linear_minimizer(&g, b_desc);
        objective(a, y, theta) + dot(&g, &s) - dot(&g, y)
    };
    let mut best = at(c);
    for r in SNAP_RADII {
        let radius = T::lit(r) * scale;
        let y: Vec<T> = a.iter().zip(c).map(|(&x, &z)| if (x - z).abs() <= radius { x } else { z }).collect();
        if y != c {
            best = best.max(at(&y));
        }
    }
    best
}

/// Minimizes `γ ↦ φ(c + γd)` on `[0, γ_max]` by bisection on the sign of
/// the directional right derivative (the function is convex).
fn line_search<T: Scalar>(a: &[T], c: &[T], d: &[T], gamma_max: T, theta: &CostFunction<T>) -> T {
    let slope = |gamma: T| {
        let point: Vec<T> = c.iter().zip(d).map(|(&x, &y)| x + gamma * y).collect();
        dot(&gradient(a, &point, theta), d)
    };
    if slope(T::zero()) >= T::zero() {
        return T::zero();
    }
    if slope(gamma_max) <= T::zero() {
        return gamma_max;
    }
    let (mut lo, mut hi) = (T::zero(), gamma_max);
    for _ in 0..100 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Minimizes `(1/n) Σ θ(|a_i − c_i|)` over `c ∈ Perm(b)` by conditional
/// gradient. The linear minimization oracle over the permutahedron is a
/// sort. Stops once the certified gap `φ(c) − L` falls below
/// `cfg.tolerance`, where `L` is the best supporting-hyperplane lower bound
/// found near `c`; it never exceeds the plain Frank–Wolfe gap. Running out of
/// iterations first is an error.
///
/// Coordinates where `a` ties are kept equal throughout (see the averaging
/// argument on the tie classes), which removes a zigzag that otherwise
/// stalls the method when `θ'` is not Lipschitz at zero.
pub fn fw_minimize<T: Scalar>(a: &[T], b: &[T], theta: &CostFunction<T>, cfg: &OracleConfig) -> Result<FwResult<T>> {
    cfg.validate()?;
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::Empty("oracle vectors"));
    }
    let n = a.len();
    let mut b_desc = b.to_vec();
    b_desc.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    let tol = T::lit(cfg.tolerance);
    let ties = TieClasses::new(a);
    let vertex = |sigma: &[usize]| {
        let mut v: Vec<T> = sigma.iter().map(|&r| b_desc[r]).collect();
        ties.average(&mut v);
        v
    };
    // Minimizing ⟨g, A s⟩ over vertices s is minimizing ⟨A g, s⟩.
    let lmo = |g: &[T]| {
        let mut g = g.to_vec();
        ties.average(&mut g);
        let (mut sigma, _) = linear_minimizer(&g, &b_desc);
        ties.canonical(&mut sigma);
        let v = vertex(&sigma);
        (sigma, v)
    };

    // Start from the vertex that pairs b with a in reverse order, far from
    // the optimum, so the oracle does not inherit any structure.
    let (sigma0, mut c) = lmo(a);
    let b_prefix: Vec<T> = b_desc
        .iter()
        .scan(T::zero(), |acc, &x| {
            *acc = *acc + x;
            Some(*acc)
        })
        .collect();
    let mut active: BTreeMap<Vec<usize>, T> = BTreeMap::new();
    active.insert(sigma0, T::one());

    let mut gap = T::infinity();
    for k in 0..cfg.max_iterations {
        let g = gradient(a, &c, theta);
        let (sigma_s, s) = lmo(&g);
        let fw_gap = dot(&g, &c) - dot(&g, &s);
        let value = objective(a, &c, theta);
        gap = if fw_gap <= tol { fw_gap } else { fw_gap.min(value - lower_bound(a, &c, &b_desc, theta)) };
        if gap <= tol {
            return Ok(FwResult { value, c_star: c, gap, fw_gap, iterations: k });
        }
        match cfg.step {
            FwStep::Exchange => {
                let d: Vec<T> = s.iter().zip(&c).map(|(&x, &y)| x - y).collect();
                let gamma = line_search(a, &c, &d, T::one(), theta);
                for i in 0..n {
                    c[i] = c[i] + gamma * d[i];
                }
                let mut moved = gamma > T::zero();
                for i in 0..n {
                    for j in 0..n {
                        let g = gradient(a, &c, theta);
                        if i == j || g[i] >= g[j] {
                            continue;
                        }
                        let cap = exchange_capacity(&c, i, j, &b_prefix);
                        if cap <= T::zero() {
                            continue;
                        }
                        let mut d = vec![T::zero(); n];
                        d[i] = T::one();
                        d[j] = -T::one();
                        let step = line_search(a, &c, &d, cap, theta);
                        if step > T::zero() {
                            c[i] = c[i] + step;
                            c[j] = c[j] - step;
                            moved = true;
                        }
                    }
                }
                if !moved {
                    return Err(Error::BudgetExhausted { iterations: k, gap: gap.to_f64_lossy() });
                }
            }
            FwStep::OpenLoop => {
                let gamma = T::lit(2.0) / T::lit(k as f64 + 2.0);
                for i in 0..n {
                    c[i] = c[i] + gamma * (s[i] - c[i]);
                }
            }
            FwStep::PairwiseLineSearch => {
                let (away, weight) = active
                    .iter()
                    .map(|(sigma, &w)| (sigma.clone(), w, dot(&g, &vertex(sigma))))
                    .max_by(|x, y| x.2.partial_cmp(&y.2).unwrap_or(std::cmp::Ordering::Equal))
                    .map(|(sigma, w, _)| (sigma, w))
                    .expect("active set is never empty");
                let v = vertex(&away);
                let d: Vec<T> = s.iter().zip(&v).map(|(&x, &y)| x - y).collect();
                let gamma = line_search(a, &c, &d, weight, theta);
                if gamma > T::zero() {
                    for i in 0..n {
                        c[i] = c[i] + gamma * d[i];
                    }
                    {
                        let w = active.entry(sigma_s).or_insert(T::zero());
                        *w = *w + gamma;
                    }
                    let left = active.get(&away).copied().unwrap_or(T::zero()) - gamma;
                    if left <= T::zero() {
                        active.remove(&away);
                    } else {
                        active.insert(away, left);
                    }
                } else {
                    // No progress along the pairwise direction: take a plain
                    // Frank–Wolfe step towards s instead.
                    let d: Vec<T> = s.iter().zip(&c).map(|(&x, &y)| x - y).collect();
                    let gamma = line_search(a, &c, &d, T::one(), theta);
                    if gamma == T::zero() {
                        // Stalled at the resolution of the arithmetic.
                        return Err(Error::BudgetExhausted { iterations: k, gap: gap.to_f64_lossy() });
                    }
                    for i in 0..n {
                        c[i] = c[i] + gamma * d[i];
                    }
                    for w in active.values_mut() {
                        *w = *w * (T::one() - gamma);
                    }
                    {
                        let w = active.entry(sigma_s).or_insert(T::zero());
                        *w = *w + gamma;
                    }
                    active.retain(|_, w| *w > T::zero());
                }
            }
        }
    }
    Err(Error::BudgetExhausted { iterations: cfg.max_iterations, gap: gap.to_f64_lossy() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexScan<T> {
    pub value: T,
    /// `b` rearranged into the best vertex.
    pub best_vertex: Vec<T>,
}

/// Largest `n` accepted by [`vertex_scan`].
pub const MAX_VERTEX_SCAN: usize = 8;

/// `min_σ (1/n) Σ θ(|a_i − b_σ(i)|)` by enumerating all `n!` permutations.
pub fn vertex_scan<T: Scalar>(a: &[T], b: &[T], theta: &CostFunction<T>) -> Result<VertexScan<T>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::Empty("vertex scan vectors"));
    }
    if a.len() > MAX_VERTEX_SCAN {
        return Err(Error::TooLarge(format!("vertex scan needs n <= {MAX_VERTEX_SCAN}, got {}", a.len())));
    }
    let mut perm = b.to_vec();
    let mut best = VertexScan { value: T::infinity(), best_vertex: perm.clone() };
    for_each_permutation(&mut perm, &mut |p: &[T]| {
        let v = objective(a, p, theta);
        if v < best.value {
            best.value = v;
            best.best_vertex = p.to_vec();
        }
    });
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permutahedron::project;
    use crate::weak_transport::classical_cost;
    use crate::DiscreteMeasure;

    fn quad() -> CostFunction<f64> {
        CostFunction::power(2.0).unwrap()
    }

    #[test]
    fn point_of_the_polytope_costs_nothing() {
        let b = [3.0, -1.0, 0.5, 2.0];
        let a = [0.5, 3.0, 2.0, -1.0];
        let r = fw_minimize(&a, &b, &quad(), &OracleConfig::default()).unwrap();
        assert!(r.value < 1e-8);
        assert!(r.c_star.iter().zip(&a).all(|(c, x)| (c - x).abs() < 1e-4));
    }

    #[test]
    fn two_point_example() {
        let r = fw_minimize(&[0.0, 2.0], &[-1.0, 1.0], &quad(), &OracleConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn matches_projection_for_quadratic_cost() {
        let a = [1.5, -2.0, 4.0, 0.0, 0.0, 3.0];
        let b = [2.0, 2.0, -1.0, 0.5, -3.0, 1.0];
        let p = project(&a, &b).unwrap();
        let r = fw_minimize(&a, &b, &quad(), &OracleConfig::default()).unwrap();
        let dist = r.c_star.iter().zip(&p.c_hat).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dist < 1e-4, "{dist}");
        assert!(r.gap <= 1e-8);
    }

    #[test]
    fn argmin_does_not_depend_on_the_cost() {
        let a = [0.3, -1.7, 2.2, 4.1, -0.4];
        let b = [1.0, -2.0, 3.0, 0.0, 0.5];
        let c2 = fw_minimize(&a, &b, &quad(), &OracleConfig::default()).unwrap().c_star;
        let c4 = fw_minimize(&a, &b, &CostFunction::power(4.0).unwrap(), &OracleConfig::default()).unwrap().c_star;
        let dist = c2.iter().zip(&c4).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dist < 1e-3, "{dist}");
    }

    #[test]
    fn every_step_rule_reaches_the_two_point_optimum() {
        for step in [FwStep::Exchange, FwStep::PairwiseLineSearch] {
            let cfg = OracleConfig { step, ..OracleConfig::default() };
            let (a, b) = ([0.0, 2.0, 5.0, 0.5], [-1.0, 1.0, 3.0, 4.0]);
            let c = project(&a, &b).unwrap().c_hat;
            let expected = objective(&a, &c, &quad());
            let r = fw_minimize(&a, &b, &quad(), &cfg).unwrap();
            assert!((r.value - expected).abs() < 1e-6, "{step:?}: {} vs {expected}", r.value);
        }
    }

    #[test]
    fn open_loop_budget_is_reported() {
        let cfg = OracleConfig { step: FwStep::OpenLoop, max_iterations: 100, ..OracleConfig::default() };
        let err = fw_minimize(&[0.13, 0.71, -0.37, 0.29], &[-1.0, 0.5, 1.0, 2.0], &quad(), &cfg).unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { iterations: 100, .. }));
        let bad = OracleConfig { max_iterations: 0, ..OracleConfig::default() };
        assert!(fw_minimize(&[0.0], &[1.0], &quad(), &bad).is_err());
    }

    #[test]
    fn vertex_scan_matches_sorted_pairing() {
        let a = [0.4, -1.0, 2.5, 3.0, -2.2];
        let b = [1.0, 1.0, -4.0, 0.0, 2.0];
        for theta in [quad(), CostFunction::power(1.5).unwrap(), CostFunction::quad_lin(1.0).unwrap()] {
            let scan = vertex_scan(&a, &b, &theta).unwrap();
            let classical =
                classical_cost(&DiscreteMeasure::uniform(&b).unwrap(), &DiscreteMeasure::uniform(&a).unwrap(), &theta);
            assert!((scan.value - classical).abs() < 1e-12);
        }
        let one = vertex_scan(&[1.0], &[4.0], &quad()).unwrap();
        assert_eq!(one.value, 9.0);
        assert!(matches!(vertex_scan(&[0.0; 9], &[0.0; 9], &quad()), Err(Error::TooLarge(_))));
    }

    #[test]
    fn exchange_capacity_on_a_vertex() {
        // c = b sorted descending; moving mass upward from the last slot is blocked.
        let prefix = [3.0, 5.0, 6.0];
        assert_eq!(exchange_capacity(&[3.0, 2.0, 1.0], 0, 2, &prefix), 0.0);
        assert_eq!(exchange_capacity(&[3.0, 2.0, 1.0], 2, 0, &prefix), 2.0);
    }
}
