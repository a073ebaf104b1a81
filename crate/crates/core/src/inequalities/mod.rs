//! Diagnostics for weak transport-entropy inequalities on the line.
//!
//! A measure `μ` satisfies `T̄(θ(a·))` for some `a > 0` exactly when the
//! modulus of `U_μ` is controlled by `θ⁻¹(u + t₀²)` (for `θ` quadratic on
//! `[0, t₀]`). This module evaluates that control exactly from the step
//! structure of `U_μ`, derives the explicit constants, computes the `K±`
//! tail functionals for costs vanishing near zero, and probes the resulting
//! inequality against random perturbations of `μ`.

mod dual;
mod log_sobolev;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

pub use dual::{dual_gap, inf_convolution, ConvexPLFunction, Curvature, DualGap};
pub use log_sobolev::{
    log_sobolev_check, Direction, LogSobolevCheck, MonotoneProfile, DEFAULT_PANELS, DEFAULT_RADIUS,
    LOG_SOBOLEV_CONSTANT,
};

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::measures::{relative_entropy, DiscreteMeasure};
use crate::scalar::Scalar;
use crate::weak_transport::{weak_cost, Refinement};

/// Multiplier `κ` in `D = κh²`.
pub const POINCARE_KAPPA: f64 = 5480.0;

/// `c = 1/(10√2)`, the slope constant in `l₀ = c/h`.
pub fn poincare_c<T: Scalar>() -> T {
    T::one() / (T::lit(10.0) * T::lit(2.0).sqrt())
}

fn check_t0<T: Scalar>(t0: T) -> Result<()> {
    if t0 > T::zero() && t0.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("t0 must be positive, got {t0}")))
    }
}

fn check_quadratic<T: Scalar>(theta: &CostFunction<T>, t0: T) -> Result<()> {
    if theta.is_quadratic_on(t0) {
        Ok(())
    } else {
        Err(Error::Hypothesis(format!("{theta} is not t² on [0, {t0}]")))
    }
}

/// `κ₁ = t₀ / (8 θ⁻¹(log 3 + t₀²))`.
pub fn kappa1<T: Scalar>(theta: &CostFunction<T>, t0: T) -> Result<T> {
    check_t0(t0)?;
    Ok(t0 / (T::lit(8.0) * theta.inverse(T::lit(3.0).ln() + t0 * t0)?))
}

/// `κ₂ = min(1, t₀) / (210 θ⁻¹(2 + t₀²))`.
pub fn kappa2<T: Scalar>(theta: &CostFunction<T>, t0: T) -> Result<T> {
    check_t0(t0)?;
    Ok(t0.min(T::one()) / (T::lit(210.0) * theta.inverse(T::lit(2.0) + t0 * t0)?))
}

/// Largest `b` with `Δ_μ(u) ≤ θ⁻¹(u + t₀²)/b` for every `u > 0`.
///
/// On each interval `(d_k, d_{k+1}]` between consecutive breakpoints the
/// modulus is constant, equal to `Δ_μ(d_k⁺)`, while `θ⁻¹(u + t₀²)` increases;
/// the infimum of the ratio is therefore the minimum of
/// `θ⁻¹(d_k + t₀²)/Δ_μ(d_k⁺)` over breakpoints. Infinite for a Dirac mass.
pub fn condition_ii_best_b<T: Scalar>(mu: &DiscreteMeasure<T>, theta: &CostFunction<T>, t0: T) -> Result<T> {
    check_t0(t0)?;
    check_quadratic(theta, t0)?;
    let mut best = T::infinity();
    for (d, delta) in mu.u_map().modulus_breakpoints() {
        if delta > T::zero() {
            best = best.min(theta.inverse(d + t0 * t0)? / delta);
        }
    }
    Ok(best)
}

/// Brute-force counterpart of [`condition_ii_best_b`] on a grid of `u`.
pub fn condition_ii_grid_scan<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    t0: T,
    u_max: T,
    points: usize,
) -> Result<T> {
    check_t0(t0)?;
    let map = mu.u_map();
    let mut best = T::infinity();
    for k in 1..=points {
        let u = u_max * T::lit(k as f64) / T::lit(points as f64);
        let delta = map.modulus_unchecked(u);
        if delta > T::zero() {
            best = best.min(theta.inverse(u + t0 * t0)? / delta);
        }
    }
    Ok(best)
}

/// Constants of the convex Poincaré characterization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareConstants<T> {
    /// `h = sup_x U_μ(x + 1) − U_μ(x)`.
    pub h: T,
    /// `D = κh²`.
    pub d: T,
    /// `l₀ = c/h`.
    pub l0: T,
}

impl<T: Scalar> PoincareConstants<T> {
    /// The cost `α` parameterized by `(D, l₀)`.
    pub fn alpha(&self) -> Result<CostFunction<T>> {
        CostFunction::capped_quad(self.d, self.l0)
    }
}

pub fn poincare_constants<T: Scalar>(mu: &DiscreteMeasure<T>) -> Result<PoincareConstants<T>> {
    let h = mu.modulus(T::one())?;
    if h == T::zero() {
        return Err(Error::Degenerate("point mass: all constants trivial".into()));
    }
    Ok(PoincareConstants { h, d: T::lit(POINCARE_KAPPA) * h * h, l0: poincare_c::<T>() / h })
}

/// The tail functionals `K⁺(b)` and `K⁻(b)` around the median.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPlusMinus<T> {
    pub k_plus: T,
    pub k_minus: T,
    pub median: T,
}

/// `K⁺(b) = sup_{x ≥ m} μ(x,∞)⁻¹ Σ_{u > x} e^{β(b(u−x))} μ_u` and its mirror
/// `K⁻(b)` over `x ≤ m`, with `0/0 = 0` and `m = F_μ⁻¹(1/2)`. Between atoms
/// the tail set is fixed and the exponent moves monotonically, so the
/// suprema are attained at atoms.
pub fn k_plus_minus<T: Scalar>(mu: &DiscreteMeasure<T>, beta: &CostFunction<T>, b: T) -> Result<KPlusMinus<T>> {
    if !(b > T::zero()) || !b.is_finite() {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    if !(beta.zero_radius() > T::zero()) {
        return Err(Error::Hypothesis(format!("{beta} must vanish on a neighbourhood of 0")));
    }
    let m = mu.median();
    let (x, w) = (mu.atoms(), mu.weights());
    let n = x.len();
    let mut k_plus = T::zero();
    let mut k_minus = T::zero();
    for i in 0..n {
        if x[i] >= m {
            let (mut mass, mut sum) = (T::zero(), T::zero());
            for j in (i + 1)..n {
                mass = mass + w[j];
                sum = sum + beta.eval_abs(b * (x[j] - x[i])).exp() * w[j];
            }
            if mass > T::zero() {
                k_plus = k_plus.max(sum / mass);
            }
        }
        if x[i] <= m {
            let (mut mass, mut sum) = (T::zero(), T::zero());
            for j in (0..i).rev() {
                mass = mass + w[j];
                sum = sum + beta.eval_abs(b * (x[i] - x[j])).exp() * w[j];
            }
            if mass > T::zero() {
                k_minus = k_minus.max(sum / mass);
            }
        }
    }
    Ok(KPlusMinus { k_plus, k_minus, median: m })
}

/// A named pass/fail line of a [`DiagnosticsReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &str, holds: bool, detail: String) -> Self {
        Self { name: name.into(), holds, detail }
    }
}

/// Everything known about `μ` with respect to a cost `θ` quadratic on `[0, t₀]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport<T> {
    pub jumps: Vec<T>,
    pub plateaus: Vec<T>,
    /// `(d, Δ_μ(d⁺))` pairs.
    pub breakpoints: Vec<(T, T)>,
    pub h: T,
    pub best_b: T,
    /// `κ₂ · best_b`: a scale for which `T̄(θ(a·))` holds.
    pub a_from_b: T,
    pub kappa1: T,
    pub kappa2: T,
    /// `D` and `l₀`; absent for a point mass.
    pub d: Option<T>,
    pub l0: Option<T>,
    pub k_plus: Option<T>,
    pub k_minus: Option<T>,
    pub verdicts: Vec<Verdict>,
}

/// Builds a [`DiagnosticsReport`]; `k_args` optionally supplies `(β, b)` for
/// the `K±` functionals.
pub fn diagnose<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    t0: T,
    k_args: Option<(&CostFunction<T>, T)>,
) -> Result<DiagnosticsReport<T>> {
    let map = mu.u_map();
    let best_b = condition_ii_best_b(mu, theta, t0)?;
    let kappa1 = kappa1(theta, t0)?;
    let kappa2 = kappa2(theta, t0)?;
    let h = mu.modulus(T::one())?;
    let poincare = poincare_constants(mu).ok();
    let mut verdicts = vec![
        Verdict::new("condition_ii", best_b > T::zero(), format!("best b = {best_b}")),
        Verdict::new(
            "convex_poincare",
            poincare.is_some(),
            match &poincare {
                Some(p) => format!("h = {}, D = {}, l0 = {}", p.h, p.d, p.l0),
                None => "degenerate: all constants trivial".into(),
            },
        ),
    ];
    let (mut k_plus, mut k_minus) = (None, None);
    if let Some((beta, b)) = k_args {
        let k = k_plus_minus(mu, beta, b)?;
        verdicts.push(Verdict::new(
            "k_plus_minus_finite",
            k.k_plus.is_finite() && k.k_minus.is_finite(),
            format!("K+ = {}, K- = {} at b = {b}", k.k_plus, k.k_minus),
        ));
        k_plus = Some(k.k_plus);
        k_minus = Some(k.k_minus);
    }
    Ok(DiagnosticsReport {
        breakpoints: map.modulus_breakpoints(),
        jumps: map.jumps,
        plateaus: map.plateaus,
        h,
        best_b,
        a_from_b: kappa2 * best_b,
        kappa1,
        kappa2,
        d: poincare.as_ref().map(|p| p.d),
        l0: poincare.as_ref().map(|p| p.l0),
        k_plus,
        k_minus,
        verdicts,
    })
}

/// Entropy slacks `H(ν|μ) − T̄(ν|μ)` and `H(ν|μ) − T̄(μ|ν)`.
pub fn entropy_slacks<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    cost: &CostFunction<T>,
    refinement: Refinement,
) -> Result<(T, T)> {
    let h = relative_entropy(nu, mu);
    let forward = weak_cost(nu, mu, cost, refinement)?.value;
    let backward = weak_cost(mu, nu, cost, refinement)?.value;
    Ok((h - forward, h - backward))
}

/// Outcome of [`entropy_inequality_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult<T> {
    pub best_b: T,
    pub kappa2: T,
    /// The scale `a = κ₂·b` of the probed cost `θ(a·)`.
    pub a: T,
    pub trials: usize,
    pub seed: u64,
    /// Smallest slack over all trials and both directions.
    pub min_slack: T,
    /// Trial index and direction (`"nu_given_mu"` or `"mu_given_nu"`) of the minimum.
    pub worst_trial: Option<usize>,
    pub worst_direction: Option<String>,
}

/// Random weights on the atoms of `μ`: a Dirichlet(1) draw.
pub fn dirichlet_reweight<T: Scalar>(mu: &DiscreteMeasure<T>, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure<T>> {
    let w: Vec<T> = (0..mu.len())
        .map(|_| {
            let e: f64 = Exp1.sample(rng);
            T::lit(e.max(f64::MIN_POSITIVE))
        })
        .collect();
    DiscreteMeasure::new(mu.atoms(), Some(&w))
}

/// Checks `T̄_{θ(a·)}(ν|μ) ≤ H(ν|μ)` and `T̄_{θ(a·)}(μ|ν) ≤ H(ν|μ)` with
/// `a = κ₂ · best_b` on `trials` Dirichlet reweightings `ν` of `μ`.
pub fn entropy_inequality_probe<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    t0: T,
    trials: usize,
    seed: u64,
) -> Result<ProbeResult<T>> {
    if mu.is_dirac() {
        return Err(Error::Degenerate("point mass: every inequality is trivial".into()));
    }
    let best_b = condition_ii_best_b(mu, theta, t0)?;
    let kappa2 = kappa2(theta, t0)?;
    let a = kappa2 * best_b;
    let cost = CostFunction::scaled(theta.clone(), a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut result = ProbeResult {
        best_b,
        kappa2,
        a,
        trials,
        seed,
        min_slack: T::infinity(),
        worst_trial: None,
        worst_direction: None,
    };
    for trial in 0..trials {
        let nu = dirichlet_reweight(mu, &mut rng)?;
        let (forward, backward) = entropy_slacks(mu, &nu, &cost, Refinement::Auto)?;
        for (slack, dir) in [(forward, "nu_given_mu"), (backward, "mu_given_nu")] {
            if slack < result.min_slack {
                result.min_slack = slack;
                result.worst_trial = Some(trial);
                result.worst_direction = Some(dir.into());
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bern(p: f64) -> DiscreteMeasure<f64> {
        DiscreteMeasure::new(&[0.0, 1.0], Some(&[1.0 - p, p])).unwrap()
    }

    fn uniform(k: usize) -> DiscreteMeasure<f64> {
        DiscreteMeasure::uniform(&(0..=k).map(|i| i as f64).collect::<Vec<_>>()).unwrap()
    }

    fn sq() -> CostFunction<f64> {
        CostFunction::power(2.0).unwrap()
    }

    #[test]
    fn constants_follow_their_formulas() {
        let k1 = kappa1(&sq(), 1.0).unwrap();
        assert_relative_eq!(k1, 1.0 / (8.0 * (3f64.ln() + 1.0).sqrt()), max_relative = 1e-15);
        let k2 = kappa2(&sq(), 1.0).unwrap();
        assert_relative_eq!(k2, 1.0 / (210.0 * 3f64.sqrt()), max_relative = 1e-15);
        let k2_small = kappa2(&sq(), 0.5).unwrap();
        assert_relative_eq!(k2_small, 0.5 / (210.0 * 2.25f64.sqrt()), max_relative = 1e-15);
        assert_relative_eq!(poincare_c::<f64>(), 1.0 / 200f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn best_b_examples() {
        assert_relative_eq!(condition_ii_best_b(&bern(0.5), &sq(), 1.0).unwrap(), 1.0, epsilon = 1e-15);
        let dirac = DiscreteMeasure::dirac(2.0).unwrap();
        assert!(condition_ii_best_b(&dirac, &sq(), 1.0).unwrap().is_infinite());
        let expected = (2.0 * 1.5f64.ln() + 1.0).sqrt() / 2.0;
        assert!((expected - 0.6729).abs() < 1e-4);
        assert_relative_eq!(condition_ii_best_b(&uniform(2), &sq(), 1.0).unwrap(), expected, max_relative = 1e-14);
        assert!(condition_ii_best_b(&bern(0.5), &sq(), 0.0).is_err());
        let not_quadratic = CostFunction::power(3.0).unwrap();
        assert!(matches!(condition_ii_best_b(&bern(0.5), &not_quadratic, 1.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn best_b_agrees_with_grid_scan() {
        for mu in [bern(0.2), uniform(2), uniform(5)] {
            let exact = condition_ii_best_b(&mu, &sq(), 1.0).unwrap();
            let grid = condition_ii_grid_scan(&mu, &sq(), 1.0, 20.0, 200_000).unwrap();
            assert!(grid >= exact - 1e-12);
            assert!(grid <= exact + 1e-3, "{grid} vs {exact}");
        }
    }

    #[test]
    fn best_b_scales_inversely() {
        let mu = DiscreteMeasure::new(&[-1.0, 0.5, 2.0], Some(&[0.3, 0.3, 0.4])).unwrap();
        let b = condition_ii_best_b(&mu, &sq(), 1.0).unwrap();
        let b3 = condition_ii_best_b(&mu.dilate(3.0).unwrap(), &sq(), 1.0).unwrap();
        assert_relative_eq!(b3, b / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn poincare_examples() {
        let p = poincare_constants(&bern(0.5)).unwrap();
        assert_eq!((p.h, p.d), (1.0, 5480.0));
        assert_relative_eq!(p.l0, 1.0 / (10.0 * 2f64.sqrt()), max_relative = 1e-15);
        assert!(matches!(
            poincare_constants(&DiscreteMeasure::dirac(0.0).unwrap()),
            Err(Error::Degenerate(_))
        ));
        let p = poincare_constants(&uniform(2)).unwrap();
        assert_eq!((p.h, p.d), (2.0, 21920.0));
        assert_eq!(p.alpha().unwrap(), CostFunction::capped_quad(21920.0, p.l0).unwrap());
    }

    #[test]
    fn k_plus_minus_examples() {
        let beta = CostFunction::quad_excess(2.0, 2.0).unwrap();
        let k = k_plus_minus(&DiscreteMeasure::dirac(0.0).unwrap(), &beta, 1.0).unwrap();
        assert_eq!((k.k_plus, k.k_minus), (0.0, 0.0));
        let k = k_plus_minus(&bern(0.5), &beta, 1.0).unwrap();
        assert_eq!(k.median, 0.0);
        assert_eq!(k.k_plus, 1.0);
        assert_eq!(k.k_minus, 0.0);
        let mu = uniform(4);
        let mut prev = (0.0, 0.0);
        for b in [0.5, 1.0, 2.0, 4.0] {
            let k = k_plus_minus(&mu, &beta, b).unwrap();
            assert!(k.k_plus >= prev.0 && k.k_minus >= prev.1);
            prev = (k.k_plus, k.k_minus);
        }
        assert!(matches!(k_plus_minus(&mu, &sq(), 1.0), Err(Error::Hypothesis(_))));
        assert!(k_plus_minus(&mu, &beta, 0.0).is_err());
    }

    #[test]
    fn k_plus_minus_swap_under_mirror() {
        let beta = CostFunction::quad_excess(0.5, 2.0).unwrap();
        let mu = DiscreteMeasure::new(&[-1.0, 0.0, 1.5, 4.0], Some(&[0.2, 0.4, 0.3, 0.1])).unwrap();
        let k = k_plus_minus(&mu, &beta, 1.3).unwrap();
        let km = k_plus_minus(&mu.mirror(), &beta, 1.3).unwrap();
        assert_eq!((k.k_plus, k.k_minus), (km.k_minus, km.k_plus));
    }

    #[test]
    fn diagnose_bernoulli() {
        let beta = CostFunction::quad_excess(2.0, 2.0).unwrap();
        let r = diagnose(&bern(0.5), &sq(), 1.0, Some((&beta, 1.0))).unwrap();
        assert_eq!(r.best_b, 1.0);
        assert_eq!(r.h, 1.0);
        assert_eq!(r.d, Some(5480.0));
        assert_eq!(r.jumps, vec![0.0]);
        assert_eq!(r.k_plus, Some(1.0));
        assert!(r.verdicts.iter().all(|v| v.holds));
        let r = diagnose(&DiscreteMeasure::dirac(1.0).unwrap(), &sq(), 1.0, None).unwrap();
        assert_eq!(r.d, None);
        assert!(r.best_b.is_infinite());
    }

    #[test]
    fn probe_self_slack_is_zero() {
        let mu = uniform(2);
        let cost = CostFunction::scaled(sq(), 0.01).unwrap();
        let (f, b) = entropy_slacks(&mu, &mu, &cost, Refinement::Auto).unwrap();
        assert_eq!((f, b), (0.0, 0.0));
    }

    #[test]
    fn probe_bernoulli_holds() {
        let r = entropy_inequality_probe(&bern(0.5), &sq(), 1.0, 50, 11).unwrap();
        assert!(r.min_slack >= -1e-9);
        assert_relative_eq!(r.a, r.kappa2 * r.best_b);
        assert!(entropy_inequality_probe(&DiscreteMeasure::dirac(0.0).unwrap(), &sq(), 1.0, 5, 0).is_err());
    }

    #[test]
    fn probe_is_deterministic() {
        let a = entropy_inequality_probe(&uniform(3), &sq(), 1.0, 10, 3).unwrap();
        let b = entropy_inequality_probe(&uniform(3), &sq(), 1.0, 10, 3).unwrap();
        assert_eq!(a, b);
    }
}
