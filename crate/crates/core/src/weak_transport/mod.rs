//! Classical and weak (barycentric) transport costs on the line.
//!
//! The weak cost `T̄_θ(ν|μ) = inf_π ∫ θ(|x − ∫y p(x,dy)|) μ(dx)` is computed
//! through its cost-independent optimizer: on a common uniform refinement
//! `a` of `μ` and `b` of `ν`, the projection `ĉ` of `a` onto `Perm(b)` gives
//! `γ̂ = uniform(ĉ)`, the law dominated by `ν` in the convex order that is
//! closest to `μ` for every convex `θ` at once. The value is then the
//! classical cost between `γ̂` and `μ`.

mod rado;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

pub use rado::{rado_decompose, DoublyStochastic, TTransform};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::measures::{convex_order, majorize, DiscreteMeasure, UniformVector};
use crate::permutahedron::project;
use crate::scalar::{ksum, Scalar};

/// Refinement size used when weights are not small-denominator rationals.
pub const DEFAULT_REFINEMENT: usize = 2048;
/// Largest denominator recognised when reading a weight as a fraction.
pub const MAX_DENOMINATOR: u64 = 1000;
/// Largest common denominator accepted by [`Refinement::Auto`].
pub const MAX_EXACT_REFINEMENT: u64 = 10_000;

/// Size of the common uniform refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// The least common denominator of all weights when it is small (the
    /// refinement is then exact), otherwise [`DEFAULT_REFINEMENT`].
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for Refinement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Self::Fixed(n)),
            _ => Err(Error::Domain(format!("refinement must be `auto` or a positive integer, got `{s}`"))),
        }
    }
}

impl fmt::Display for Refinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => write!(f, "auto"),
            Self::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Smallest `q ≤ max_den` with `|w − p/q| ≤ tol` for some integer `p`,
/// found through the continued fraction expansion of `w`.
fn denominator(w: f64, max_den: u64, tol: f64) -> Option<u64> {
    let (mut h0, mut h1) = (0f64, 1f64);
    let (mut k0, mut k1) = (1f64, 0f64);
    let mut x = w;
    for _ in 0..64 {
        let q = x.floor();
        let (h2, k2) = (q * h1 + h0, q * k1 + k0);
        if k2 > max_den as f64 {
            return None;
        }
        if (w - h2 / k2).abs() <= tol {
            return Some(k2 as u64);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = x - q;
        if frac <= 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Refinement {
    /// The refinement size for the pair `(μ, ν)`.
    pub fn resolve<T: Scalar>(&self, measures: &[&DiscreteMeasure<T>]) -> Result<usize> {
        match *self {
            Self::Fixed(0) => Err(Error::Domain("refinement size must be positive".into())),
            Self::Fixed(n) => Ok(n),
            Self::Auto => {
                let tol = T::tolerance(1e-12).to_f64_lossy();
                let mut l = 1u64;
                for w in measures.iter().flat_map(|m| m.weights()) {
                    let Some(q) = denominator(w.to_f64_lossy(), MAX_DENOMINATOR, tol) else {
                        return Ok(DEFAULT_REFINEMENT);
                    };
                    l = l / gcd(l, q) * q;
                    if l > MAX_EXACT_REFINEMENT {
                        return Ok(DEFAULT_REFINEMENT);
                    }
                }
                Ok(l as usize)
            }
        }
    }
}

/// `T_θ(ν, μ) = ∫₀¹ θ(|F_μ⁻¹(u) − F_ν⁻¹(u)|) du`, the optimal classical cost
/// on the line, summed exactly over the merged cumulative-weight grids.
pub fn classical_cost<T: Scalar>(nu: &DiscreteMeasure<T>, mu: &DiscreteMeasure<T>, theta: &CostFunction<T>) -> T {
    let (wn, wm) = (nu.cumulative(), mu.cumulative());
    let (xn, xm) = (nu.atoms(), mu.atoms());
    let (mut i, mut j) = (0, 0);
    let mut prev = T::zero();
    let mut terms = Vec::with_capacity(wn.len() + wm.len());
    while i < wn.len() && j < wm.len() {
        let next = wn[i].min(wm[j]);
        if next > prev {
            terms.push((next - prev) * theta.eval_abs(xn[i] - xm[j]));
        }
        prev = next;
        if wn[i] == next {
            i += 1;
        }
        if wm[j] == next {
            j += 1;
        }
    }
    ksum(terms)
}

/// Result of [`weak_cost`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakCostResult<T> {
    /// `T̄_θ(ν|μ)`.
    pub value: T,
    /// The optimizer `γ̂ ⪯ ν`, identical for every convex cost.
    pub gamma_hat: DiscreteMeasure<T>,
    /// Pairs `(a_i, ĉ_i)` of the monotone map from refined `μ` onto `γ̂`.
    pub monotone_map: Vec<(T, T)>,
    pub refinement_n: usize,
}

/// Refined vectors `a` (of `μ`), `b` (of `ν`) and `ĉ` (aligned with `a`).
struct Optimizer<T> {
    a: Vec<T>,
    b: Vec<T>,
    c_hat: Vec<T>,
    n: usize,
}

fn optimizer<T: Scalar>(nu: &DiscreteMeasure<T>, mu: &DiscreteMeasure<T>, refinement: Refinement) -> Result<Optimizer<T>> {
    let n = refinement.resolve(&[mu, nu])?;
    let a = UniformVector::refine(mu, n)?.into_inner();
    let b = UniformVector::refine(nu, n)?.into_inner();
    let c_hat = project(&a, &b)?.c_hat;
    Ok(Optimizer { a, b, c_hat, n })
}

/// `T̄_θ(ν|μ)`: `μ` is the source of the kernel, `ν` supplies the barycenter
/// targets. Call with the arguments exchanged for `T̄_θ(μ|ν)`.
pub fn weak_cost<T: Scalar>(
    nu: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    refinement: Refinement,
) -> Result<WeakCostResult<T>> {
    let opt = optimizer(nu, mu, refinement)?;
    let nn = T::lit(opt.n as f64);
    let value = ksum(opt.a.iter().zip(&opt.c_hat).map(|(&x, &c)| theta.eval_abs(x - c))) / nn;
    let mut monotone_map: Vec<(T, T)> = opt.a.iter().copied().zip(opt.c_hat.iter().copied()).collect();
    monotone_map.dedup();
    Ok(WeakCostResult {
        value,
        gamma_hat: DiscreteMeasure::uniform(&opt.c_hat)?,
        monotone_map,
        refinement_n: opt.n,
    })
}

/// Comparison of `T̄_{θ₁+θ₂}` with `T̄_{θ₁} + T̄_{θ₂}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub holds: bool,
}

pub fn additivity_check<T: Scalar>(
    nu: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    theta1: &CostFunction<T>,
    theta2: &CostFunction<T>,
    refinement: Refinement,
) -> Result<AdditivityCheck<T>> {
    let both = CostFunction::sum(vec![theta1.clone(), theta2.clone()])?;
    let lhs = weak_cost(nu, mu, &both, refinement)?.value;
    let rhs = weak_cost(nu, mu, theta1, refinement)?.value + weak_cost(nu, mu, theta2, refinement)?.value;
    let holds = (lhs - rhs).abs() <= T::tolerance(1e-8) * (T::one() + rhs);
    Ok(AdditivityCheck { lhs, rhs, holds })
}

/// Row-stochastic kernel from the atoms of a dominated measure onto the
/// atoms of a dominating one, preserving barycenters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleKernel<T> {
    pub row_atoms: Vec<T>,
    pub row_weights: Vec<T>,
    pub col_atoms: Vec<T>,
    /// `matrix[i][j]` is the probability of moving `row_atoms[i]` to `col_atoms[j]`.
    pub matrix: Vec<Vec<T>>,
}

impl<T: Scalar> MartingaleKernel<T> {
    pub fn barycenter(&self, i: usize) -> T {
        ksum(self.matrix[i].iter().zip(&self.col_atoms).map(|(&p, &y)| p * y))
    }

    pub fn max_row_sum_defect(&self) -> T {
        self.matrix
            .iter()
            .map(|row| (ksum(row.iter().copied()) - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// `max_i |Σ_j M[i][j] y_j − x_i|`.
    pub fn max_barycenter_error(&self) -> T {
        (0..self.row_atoms.len())
            .map(|i| (self.barycenter(i) - self.row_atoms[i]).abs())
            .fold(T::zero(), T::max)
    }

    /// Largest deviation of `Σ_i w_i M[i][·]` from the given column weights.
    pub fn column_marginal_error(&self, target: &DiscreteMeasure<T>) -> T {
        column_error(&self.row_weights, &self.matrix, &self.col_atoms, target)
    }

    /// Largest deviation of the row atoms and weights from `source`; infinite
    /// when the supports differ.
    pub fn row_marginal_error(&self, source: &DiscreteMeasure<T>) -> T {
        row_error(&self.row_atoms, &self.row_weights, source)
    }
}

fn column_error<T: Scalar>(w: &[T], m: &[Vec<T>], cols: &[T], target: &DiscreteMeasure<T>) -> T {
    if cols != target.atoms() {
        return T::infinity();
    }
    (0..cols.len())
        .map(|j| (ksum(w.iter().zip(m).map(|(&wi, row)| wi * row[j])) - target.weights()[j]).abs())
        .fold(T::zero(), T::max)
}

fn row_error<T: Scalar>(atoms: &[T], w: &[T], source: &DiscreteMeasure<T>) -> T {
    if atoms != source.atoms() {
        return T::infinity();
    }
    w.iter().zip(source.weights()).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max)
}

/// Aggregates per-refined-point kernel rows `rows[i]` (over refined targets
/// `b`) by equal row keys and equal column values.
fn aggregate<T: Scalar>(keys: &[T], b: &[T], p: &DoublyStochastic<T>) -> (Vec<T>, Vec<T>, Vec<T>, Vec<Vec<T>>) {
    let n = keys.len();
    let nn = T::lit(n as f64);
    let mut col_atoms: Vec<T> = b.to_vec();
    col_atoms.dedup();
    let col_of = |j: usize| col_atoms.partition_point(|&y| y < b[j]);

    let mut row_atoms: Vec<T> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut sums: Vec<Vec<T>> = Vec::new();
    for (i, &key) in keys.iter().enumerate() {
        if row_atoms.last() != Some(&key) {
            row_atoms.push(key);
            counts.push(0);
            sums.push(vec![T::zero(); col_atoms.len()]);
        }
        let r = sums.len() - 1;
        counts[r] += 1;
        for j in 0..n {
            let q = p.matrix[j][i];
            if q != T::zero() {
                let c = col_of(j);
                sums[r][c] = sums[r][c] + q;
            }
        }
    }
    let row_weights = counts.iter().map(|&c| T::lit(c as f64) / nn).collect();
    let matrix = sums
        .into_iter()
        .zip(&counts)
        .map(|(row, &c)| row.into_iter().map(|x| x / T::lit(c as f64)).collect())
        .collect();
    (row_atoms, row_weights, col_atoms, matrix)
}

/// A martingale kernel from `γ` to `ν` for `γ ⪯ ν`.
///
/// Both measures are refined to a common uniform size; the refined vector
/// `c` of `γ` is then `bP` for a doubly stochastic `P`, and column `i` of `P`
/// is the law of the target of `c_i`. Refined duplicates are averaged back
/// onto the atoms of `γ`. When the refinement is inexact and breaks the
/// domination, `c` is first replaced by its projection onto `Perm(b)`, so the
/// barycenter identities then hold only up to the refinement error.
pub fn strassen_kernel<T: Scalar>(
    gamma: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    refinement: Refinement,
) -> Result<MartingaleKernel<T>> {
    if let crate::measures::ConvexOrder::NotDominated { witness } = convex_order(gamma, nu) {
        return Err(Error::NotDominated(format!("{witness:?}")));
    }
    let n = refinement.resolve(&[gamma, nu])?;
    let mut c = UniformVector::refine(gamma, n)?.into_inner();
    let b = UniformVector::refine(nu, n)?.into_inner();
    if !majorize(&c, &b)?.holds() {
        c = project(&c, &b)?.c_hat;
    }
    let p = rado_decompose(&c, &b)?;
    let (row_atoms, row_weights, col_atoms, matrix) = aggregate(&c, &b, &p);
    Ok(MartingaleKernel { row_atoms, row_weights, col_atoms, matrix })
}

/// An optimal coupling for `T̄_θ(ν|μ)`, given as kernel rows over the atoms
/// of `ν` for each atom of `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakCoupling<T> {
    pub source_atoms: Vec<T>,
    pub source_weights: Vec<T>,
    pub target_atoms: Vec<T>,
    pub kernel: Vec<Vec<T>>,
    /// Row barycenters `S(x) = ∫ y p(x, dy)`.
    pub barycenters: Vec<T>,
    /// Barycentric cost of this coupling.
    pub value: T,
    pub refinement_n: usize,
}

impl<T: Scalar> WeakCoupling<T> {
    /// `∫ θ(|x − S(x)|) μ(dx)` for this coupling.
    pub fn barycentric_cost(&self, theta: &CostFunction<T>) -> T {
        ksum(
            self.source_atoms
                .iter()
                .zip(&self.source_weights)
                .zip(&self.barycenters)
                .map(|((&x, &w), &s)| w * theta.eval_abs(x - s)),
        )
    }

    pub fn first_marginal_error(&self, mu: &DiscreteMeasure<T>) -> T {
        row_error(&self.source_atoms, &self.source_weights, mu)
    }

    pub fn second_marginal_error(&self, nu: &DiscreteMeasure<T>) -> T {
        column_error(&self.source_weights, &self.kernel, &self.target_atoms, nu)
    }
}

/// Composes the monotone map `a_i ↦ ĉ_i` with a martingale kernel from `γ̂`
/// to `ν`, giving a coupling of `μ` and `ν` whose barycentric cost is
/// `T̄_θ(ν|μ)`.
pub fn optimal_weak_coupling<T: Scalar>(
    nu: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    refinement: Refinement,
) -> Result<WeakCoupling<T>> {
    let opt = optimizer(nu, mu, refinement)?;
    let p = rado_decompose(&opt.c_hat, &opt.b)?;
    let (source_atoms, source_weights, target_atoms, kernel) = aggregate(&opt.a, &opt.b, &p);
    let mut coupling = WeakCoupling {
        barycenters: Vec::new(),
        source_atoms,
        source_weights,
        target_atoms,
        kernel,
        value: T::zero(),
        refinement_n: opt.n,
    };
    coupling.barycenters = coupling
        .kernel
        .iter()
        .map(|row| ksum(row.iter().zip(&coupling.target_atoms).map(|(&q, &y)| q * y)))
        .collect();
    coupling.value = coupling.barycentric_cost(theta);
    Ok(coupling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(atoms: &[f64]) -> DiscreteMeasure<f64> {
        DiscreteMeasure::uniform(atoms).unwrap()
    }

    fn power(p: f64) -> CostFunction<f64> {
        CostFunction::power(p).unwrap()
    }

    #[test]
    fn continued_fraction_denominators() {
        assert_eq!(denominator(0.5, 1000, 1e-12), Some(2));
        assert_eq!(denominator(1.0 / 3.0, 1000, 1e-12), Some(3));
        assert_eq!(denominator(2.0 / 7.0, 1000, 1e-12), Some(7));
        assert_eq!(denominator(1.0, 1000, 1e-12), Some(1));
        assert_eq!(denominator(std::f64::consts::FRAC_1_SQRT_2, 1000, 1e-12), None);
    }

    #[test]
    fn auto_refinement_uses_common_denominator() {
        let a = DiscreteMeasure::new(&[0.0, 1.0], Some(&[0.25, 0.75])).unwrap();
        let b = m(&[0.0, 1.0, 2.0]);
        assert_eq!(Refinement::Auto.resolve(&[&a, &b]).unwrap(), 12);
        let irr = DiscreteMeasure::new(&[0.0, 1.0], Some(&[1.0, std::f64::consts::PI])).unwrap();
        assert_eq!(Refinement::Auto.resolve(&[&irr]).unwrap(), DEFAULT_REFINEMENT);
        assert_eq!(Refinement::Fixed(5).resolve(&[&a]).unwrap(), 5);
        assert!(Refinement::Fixed(0).resolve(&[&a]).is_err());
        assert_eq!("auto".parse::<Refinement>().unwrap(), Refinement::Auto);
        assert_eq!("64".parse::<Refinement>().unwrap(), Refinement::Fixed(64));
        assert!("0".parse::<Refinement>().is_err());
    }

    #[test]
    fn classical_examples() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let sym = m(&[-1.0, 1.0]);
        assert_eq!(classical_cost(&sym, &d0, &power(2.0)), 1.0);
        assert_eq!(classical_cost(&sym, &sym, &power(2.0)), 0.0);
        assert_eq!(classical_cost(&sym, &m(&[0.0, 2.0]), &power(1.0)), 1.0);
        let skew = DiscreteMeasure::new(&[0.0, 1.0], Some(&[0.25, 0.75])).unwrap();
        assert_relative_eq!(classical_cost(&skew, &sym, &power(1.0)), 0.25 * 1.0 + 0.25 * 2.0 + 0.5 * 0.0);
    }

    #[test]
    fn weak_examples() {
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let sym = m(&[-1.0, 1.0]);
        for theta in [power(1.0), power(2.0), CostFunction::quad_lin(1.0).unwrap()] {
            let r = weak_cost(&sym, &d0, &theta, Refinement::Auto).unwrap();
            assert_eq!(r.value, 0.0);
            assert_eq!(r.gamma_hat, d0);
        }
        let r = weak_cost(&sym, &m(&[0.0, 2.0]), &power(2.0), Refinement::Auto).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.gamma_hat, sym);
        assert_eq!(r.refinement_n, 2);
        assert_eq!(r.monotone_map, vec![(0.0, -1.0), (2.0, 1.0)]);
        assert_eq!(classical_cost(&sym, &d0, &power(2.0)), 1.0);
    }

    #[test]
    fn additivity_examples() {
        let sym = m(&[-1.0, 1.0]);
        let r = additivity_check(&sym, &m(&[0.0, 2.0]), &power(2.0), &power(1.0), Refinement::Auto).unwrap();
        assert_eq!((r.lhs, r.rhs), (2.0, 2.0));
        assert!(r.holds);
        let r = additivity_check(&sym, &sym, &power(2.0), &power(1.0), Refinement::Auto).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn strassen_examples() {
        let sym = m(&[-1.0, 1.0]);
        let k = strassen_kernel(&DiscreteMeasure::dirac(0.0).unwrap(), &sym, Refinement::Auto).unwrap();
        assert_eq!(k.matrix, vec![vec![0.5, 0.5]]);
        let k = strassen_kernel(&sym, &sym, Refinement::Auto).unwrap();
        assert_eq!(k.matrix, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let k = strassen_kernel(&m(&[1.0, 1.0]), &m(&[0.0, 2.0]), Refinement::Auto).unwrap();
        assert_eq!(k.row_atoms, vec![1.0]);
        assert_eq!(k.matrix, vec![vec![0.5, 0.5]]);
        assert!(matches!(
            strassen_kernel(&sym, &DiscreteMeasure::dirac(0.0).unwrap(), Refinement::Auto),
            Err(Error::NotDominated(_))
        ));
    }

    #[test]
    fn strassen_kernel_on_weighted_measures() {
        let gamma = DiscreteMeasure::new(&[0.5, 2.0], Some(&[2.0, 1.0])).unwrap();
        let nu = DiscreteMeasure::new(&[-1.0, 1.0, 3.0], Some(&[1.0, 1.0, 1.0])).unwrap();
        let k = strassen_kernel(&gamma, &nu, Refinement::Auto).unwrap();
        assert!(k.max_row_sum_defect() < 1e-12);
        assert!(k.max_barycenter_error() < 1e-12);
        assert!(k.column_marginal_error(&nu) < 1e-12);
        assert!(k.row_marginal_error(&gamma) < 1e-12);
    }

    #[test]
    fn coupling_examples() {
        let sym = m(&[-1.0, 1.0]);
        let d0 = DiscreteMeasure::dirac(0.0).unwrap();
        let c = optimal_weak_coupling(&sym, &d0, &power(2.0), Refinement::Auto).unwrap();
        assert_eq!(c.kernel, vec![vec![0.5, 0.5]]);
        assert_eq!(c.value, 0.0);

        let mu = m(&[0.0, 2.0]);
        let c = optimal_weak_coupling(&sym, &mu, &power(2.0), Refinement::Auto).unwrap();
        assert_eq!(c.kernel, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(c.barycenters, vec![-1.0, 1.0]);
        assert_eq!(c.value, 1.0);
        assert_eq!(c.first_marginal_error(&mu), 0.0);
        assert_eq!(c.second_marginal_error(&sym), 0.0);
    }

    #[test]
    fn coupling_matches_weak_cost_on_weighted_instance() {
        let mu = DiscreteMeasure::new(&[-2.0, 0.0, 5.0], Some(&[0.2, 0.5, 0.3])).unwrap();
        let nu = DiscreteMeasure::new(&[-1.0, 1.0, 2.0, 4.0], Some(&[0.1, 0.4, 0.25, 0.25])).unwrap();
        let theta = CostFunction::quad_lin(1.0).unwrap();
        let w = weak_cost(&nu, &mu, &theta, Refinement::Auto).unwrap();
        let c = optimal_weak_coupling(&nu, &mu, &theta, Refinement::Auto).unwrap();
        assert_eq!(w.refinement_n, 20);
        assert_relative_eq!(c.value, w.value, max_relative = 1e-12);
        assert!(c.first_marginal_error(&mu) < 1e-12);
        assert!(c.second_marginal_error(&nu) < 1e-12);
        assert!(convex_order(&w.gamma_hat, &nu).holds());
    }
}
