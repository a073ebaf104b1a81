//! Discrete probability measures on the line.
//!
//! A [`DiscreteMeasure`] is kept in canonical form: atoms strictly
//! increasing, weights positive and summing to one. Everything downstream
//! (quantile calculus, the map `U_μ` pushing the symmetric exponential law
//! onto `μ`, convex order) relies on that form.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{ksum, sum_tolerance, Scalar};

/// Finitely supported probability measure in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure<T> {
    atoms: Vec<T>,
    weights: Vec<T>,
    #[serde(skip)]
    cumulative: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    /// Builds a measure from raw atoms and optional weights (uniform when
    /// absent). Atoms are sorted, duplicates merged and weights renormalized.
    pub fn new(raw_atoms: &[T], raw_weights: Option<&[T]>) -> Result<Self> {
        if raw_atoms.is_empty() {
            return Err(Error::Empty("atoms"));
        }
        if raw_atoms.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("atoms"));
        }
        let weights: Vec<T> = match raw_weights {
            None => vec![T::one(); raw_atoms.len()],
            Some(w) => {
                if w.len() != raw_atoms.len() {
                    return Err(Error::LengthMismatch { left: raw_atoms.len(), right: w.len() });
                }
                for (index, &value) in w.iter().enumerate() {
                    if !value.is_finite() {
                        return Err(Error::NonFinite("weights"));
                    }
                    if value <= T::zero() {
                        return Err(Error::NonPositiveWeight { index, value: value.to_f64_lossy() });
                    }
                }
                w.to_vec()
            }
        };

        let mut pairs: Vec<(T, T)> = raw_atoms.iter().copied().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
        let mut atoms: Vec<T> = Vec::with_capacity(pairs.len());
        let mut merged: Vec<T> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match atoms.last() {
                Some(&last) if last == x => {
                    let k = merged.len() - 1;
                    merged[k] = merged[k] + w;
                }
                _ => {
                    atoms.push(x);
                    merged.push(w);
                }
            }
        }
        let total = ksum(merged.iter().copied());
        let weights: Vec<T> = merged.into_iter().map(|w| w / total).collect();
        Ok(Self::from_canonical(atoms, weights))
    }

    /// Builds a measure from atoms that are already strictly increasing and
    /// weights that already sum to one.
    pub(crate) fn from_canonical(atoms: Vec<T>, weights: Vec<T>) -> Self {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = T::zero();
        let mut comp = T::zero();
        for &w in &weights {
            let y = w - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = T::one();
        }
        Self { atoms, weights, cumulative }
    }

    /// Point mass at `x`.
    pub fn dirac(x: T) -> Result<Self> {
        Self::new(&[x], None)
    }

    /// Uniform measure `(1/n) Σ δ_{values[i]}`; repeated values are merged.
    pub fn uniform(values: &[T]) -> Result<Self> {
        Self::new(values, None)
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Cumulative weights `W_1 < … < W_m = 1`.
    pub fn cumulative(&self) -> &[T] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_dirac(&self) -> bool {
        self.atoms.len() == 1
    }

    pub fn min_atom(&self) -> T {
        self.atoms[0]
    }

    pub fn max_atom(&self) -> T {
        self.atoms[self.atoms.len() - 1]
    }

    pub fn mean(&self) -> T {
        ksum(self.atoms.iter().zip(&self.weights).map(|(&x, &w)| x * w))
    }

    /// `F_μ(x) = μ(-∞, x]`.
    pub fn cdf(&self, x: T) -> T {
        let k = self.atoms.partition_point(|&a| a <= x);
        if k == 0 {
            T::zero()
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Left-continuous generalized inverse `F_μ⁻¹(u) = inf{x : F_μ(x) ≥ u}`
    /// for `u ∈ (0, 1]`.
    pub fn quantile(&self, u: T) -> Result<T> {
        if !(u > T::zero() && u <= T::one()) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1]")));
        }
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: T) -> T {
        let k = self.cumulative.partition_point(|&w| w < u);
        self.atoms[k.min(self.atoms.len() - 1)]
    }

    pub fn quantile_function(&self) -> QuantileFunction<T> {
        QuantileFunction { thresholds: self.cumulative.clone(), levels: self.atoms.clone() }
    }

    /// Median taken as `F_μ⁻¹(1/2)`.
    pub fn median(&self) -> T {
        self.quantile_unchecked(T::lit(0.5))
    }

    /// Stop-loss transform `∫ [x − t]₊ μ(dx)`.
    pub fn stop_loss(&self, t: T) -> T {
        ksum(self.atoms.iter().zip(&self.weights).map(|(&x, &w)| (x - t).max(T::zero()) * w))
    }

    /// Mass of the open upper tail `μ(x, ∞)`.
    pub fn upper_tail(&self, x: T) -> T {
        T::one() - self.cdf(x)
    }

    /// Mass of the open lower tail `μ(-∞, x)`.
    pub fn lower_tail(&self, x: T) -> T {
        let k = self.atoms.partition_point(|&a| a < x);
        if k == 0 {
            T::zero()
        } else {
            self.cumulative[k - 1]
        }
    }

    /// Image of the measure under `x ↦ −x`.
    pub fn mirror(&self) -> Self {
        let atoms = self.atoms.iter().rev().map(|&x| -x).collect();
        let weights = self.weights.iter().rev().copied().collect();
        Self::from_canonical(atoms, weights)
    }

    /// Image of the measure under `x ↦ λx` for `λ > 0`.
    pub fn dilate(&self, lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::Domain(format!("dilation factor {lambda} must be positive")));
        }
        let atoms = self.atoms.iter().map(|&x| x * lambda).collect();
        Ok(Self::from_canonical(atoms, self.weights.clone()))
    }

    /// The left-continuous non-decreasing map `U_μ` transporting the
    /// symmetric exponential law `τ(dx) = ½ e^{−|x|} dx` onto `μ`.
    pub fn u_map(&self) -> TransportMap<T> {
        let m = self.atoms.len();
        let jumps = self.cumulative[..m - 1].iter().map(|&w| exponential_quantile(w)).collect();
        TransportMap { jumps, plateaus: self.atoms.clone() }
    }

    /// Modulus of continuity `Δ_μ(u) = sup_x (U_μ(x+u) − U_μ(x))` for `u > 0`.
    pub fn modulus(&self, u: T) -> Result<T> {
        if !(u > T::zero()) {
            return Err(Error::Domain(format!("modulus window {u} must be positive")));
        }
        Ok(self.u_map().modulus_unchecked(u))
    }
}

/// Quantile function of the symmetric exponential law:
/// `log(2p)` for `p ≤ 1/2`, `−log(2(1 − p))` above.
pub fn exponential_quantile<T: Scalar>(p: T) -> T {
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    if p <= half {
        (two * p).ln()
    } else {
        -(two * (T::one() - p)).ln()
    }
}

/// CDF of the symmetric exponential law.
pub fn exponential_cdf<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    if x <= T::zero() {
        half * x.exp()
    } else {
        T::one() - half * (-x).exp()
    }
}

/// Step-function form of `F_μ⁻¹`: value `levels[k]` on `(thresholds[k-1], thresholds[k]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileFunction<T> {
    pub thresholds: Vec<T>,
    pub levels: Vec<T>,
}

impl<T: Scalar> QuantileFunction<T> {
    pub fn eval(&self, u: T) -> T {
        let k = self.thresholds.partition_point(|&w| w < u);
        self.levels[k.min(self.levels.len() - 1)]
    }
}

/// Left-continuous non-decreasing step map: `plateaus[k]` on
/// `(jumps[k-1], jumps[k]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportMap<T> {
    pub jumps: Vec<T>,
    pub plateaus: Vec<T>,
}

impl<T: Scalar> TransportMap<T> {
    pub fn eval(&self, x: T) -> T {
        let k = self.jumps.partition_point(|&s| s < x);
        self.plateaus[k]
    }

    pub(crate) fn modulus_unchecked(&self, u: T) -> T {
        // Plateau i can reach plateau j within a window u iff
        // s_{j-1} - s_i < u; the reachable j is monotone in i.
        let s = &self.jumps;
        let a = &self.plateaus;
        let mut best = T::zero();
        let mut j = 0usize;
        for i in 0..s.len() {
            j = j.max(i + 1);
            while j < s.len() && s[j] - s[i] < u {
                j += 1;
            }
            best = best.max(a[j] - a[i]);
        }
        best
    }

    /// Breakpoints of the modulus: sorted pairs `(d, Δ(d⁺))` where `d` runs
    /// over the distinct gaps `s_{j-1} − s_i` and `Δ(d⁺)` is the modulus
    /// just to the right of `d`.
    pub fn modulus_breakpoints(&self) -> Vec<(T, T)> {
        let s = &self.jumps;
        let a = &self.plateaus;
        let mut pairs: Vec<(T, T)> = Vec::new();
        for i in 0..s.len() {
            for j in (i + 1)..a.len() {
                pairs.push((s[j - 1] - s[i], a[j] - a[i]));
            }
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(Ordering::Equal));
        let mut out: Vec<(T, T)> = Vec::new();
        let mut running = T::zero();
        for (d, gap) in pairs {
            running = running.max(gap);
            match out.last_mut() {
                Some(last) if last.0 == d => last.1 = running,
                _ => out.push((d, running)),
            }
        }
        out
    }
}

/// Sorted vector read as the uniform measure `(1/n) Σ δ_{values[i]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> UniformVector<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("uniform vector"));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("uniform vector"));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        Ok(Self { values })
    }

    /// Deterministic `n`-point representation of `μ` by quantiles at the
    /// mid-levels `(k − 1/2)/n`. Exact when every weight is a multiple of `1/n`.
    pub fn refine(mu: &DiscreteMeasure<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("refinement size must be positive".into()));
        }
        let nn = T::lit(n as f64);
        let half = T::lit(0.5);
        let values = (1..=n)
            .map(|k| mu.quantile_unchecked((T::lit(k as f64) - half) / nn))
            .collect();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.values
    }

    pub fn to_measure(&self) -> DiscreteMeasure<T> {
        DiscreteMeasure::uniform(&self.values).expect("uniform vector is non-empty and finite")
    }
}

/// Why one measure fails to be dominated by another in the convex order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderWitness<T> {
    MeanMismatch { mean1: T, mean2: T },
    StopLoss { t: T, lhs: T, rhs: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConvexOrder<T> {
    Dominated,
    NotDominated { witness: OrderWitness<T> },
}

impl<T> ConvexOrder<T> {
    pub fn holds(&self) -> bool {
        matches!(self, ConvexOrder::Dominated)
    }
}

/// Decides `ν₁ ⪯ ν₂` through equal means and the stop-loss inequality
/// `∫[x−t]₊ dν₁ ≤ ∫[x−t]₊ dν₂`, checked at every atom of either measure.
/// Both sides are piecewise linear in `t` with kinks only at atoms.
pub fn convex_order<T: Scalar>(nu1: &DiscreteMeasure<T>, nu2: &DiscreteMeasure<T>) -> ConvexOrder<T> {
    let mean1 = nu1.mean();
    let mean2 = nu2.mean();
    let scale = nu1.atoms.iter().chain(&nu2.atoms).fold(T::zero(), |m, x| m.max(x.abs()));
    let n = nu1.len() + nu2.len();
    if (mean1 - mean2).abs() > sum_tolerance(1e-10, n, scale) {
        return ConvexOrder::NotDominated { witness: OrderWitness::MeanMismatch { mean1, mean2 } };
    }
    let slack = sum_tolerance(1e-12, n, scale);
    let mut ts: Vec<T> = nu1.atoms.iter().chain(&nu2.atoms).copied().collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    ts.dedup();
    for t in ts {
        let lhs = nu1.stop_loss(t);
        let rhs = nu2.stop_loss(t);
        if lhs > rhs + slack {
            return ConvexOrder::NotDominated { witness: OrderWitness::StopLoss { t, lhs, rhs } };
        }
    }
    ConvexOrder::Dominated
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MajorizationWitness<T> {
    /// The sum of the `j` largest entries of `a` exceeds that of `b`.
    SuffixSum { j: usize, lhs: T, rhs: T },
    TotalMismatch { lhs: T, rhs: T },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Majorization<T> {
    Majorized,
    NotMajorized { witness: MajorizationWitness<T> },
}

impl<T> Majorization<T> {
    pub fn holds(&self) -> bool {
        matches!(self, Majorization::Majorized)
    }
}

/// Decides whether `a` is majorized by `b` (`a ⪯ b`): every sum of the `j`
/// largest entries of `a` is at most that of `b`, with equal totals.
pub fn majorize<T: Scalar>(a: &[T], b: &[T]) -> Result<Majorization<T>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::Empty("majorization vectors"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    let desc = |x: &T, y: &T| y.partial_cmp(x).unwrap_or(Ordering::Equal);
    sa.sort_by(desc);
    sb.sort_by(desc);
    let n = sa.len();
    let abs_mass = ksum(sa.iter().chain(&sb).map(|x| x.abs()));
    let slack = sum_tolerance(1e-12, n, abs_mass);
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for j in 1..n {
        lhs = lhs + sa[j - 1];
        rhs = rhs + sb[j - 1];
        if lhs > rhs + slack {
            return Ok(Majorization::NotMajorized {
                witness: MajorizationWitness::SuffixSum { j, lhs, rhs },
            });
        }
    }
    let total_a = ksum(sa.iter().copied());
    let total_b = ksum(sb.iter().copied());
    if (total_a - total_b).abs() > sum_tolerance(1e-10, n, abs_mass) {
        return Ok(Majorization::NotMajorized {
            witness: MajorizationWitness::TotalMismatch { lhs: total_a, rhs: total_b },
        });
    }
    Ok(Majorization::Majorized)
}

/// Relative entropy `H(ν|μ) = Σ ν_i log(ν_i/μ_i)`, `+∞` unless `ν ≪ μ`.
pub fn relative_entropy<T: Scalar>(nu: &DiscreteMeasure<T>, mu: &DiscreteMeasure<T>) -> T {
    let mut terms = Vec::with_capacity(nu.len());
    for (&x, &w) in nu.atoms.iter().zip(&nu.weights) {
        match mu.atoms.binary_search_by(|a| a.partial_cmp(&x).unwrap_or(Ordering::Equal)) {
            Ok(k) => terms.push(w * (w / mu.weights[k]).ln()),
            Err(_) => return T::infinity(),
        }
    }
    ksum(terms).max(T::zero())
}
