//! Convex cost functions `θ : ℝ⁺ → ℝ⁺` with `θ(0) = 0`.
//!
//! The family is closed under positive rescaling of the argument and under
//! finite sums, which is what the weak transport-entropy machinery needs
//! (`θ(a·)` and `θ₁ + θ₂`). Every constructor validates the parameters that
//! keep the cost convex.

mod parse;

use std::fmt;

use serde::Serialize;

pub use parse::parse_theta;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A convex, non-decreasing cost on `[0, ∞)` vanishing at zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction<T> {
    /// `t^p`, `p ≥ 1`.
    Power { p: T },
    /// `t²` on `[0, t₀]`, `2 t t₀ − t₀²` beyond.
    QuadLin { t0: T },
    /// `[θ(t) − t²]₊` for the base `θ(t) = t² + [t − t₀]₊^p`, i.e.
    /// `[t − t₀]₊^p`: vanishes exactly on `[0, t₀]`.
    QuadExcess { t0: T, p: T },
    /// `u²/(2D)` for `u ≤ l₀D`, `l₀u − l₀²D/2` beyond.
    CappedQuad { d: T, l0: T },
    /// `t ↦ inner(a·t)`, `a > 0`.
    Scaled { inner: Box<CostFunction<T>>, a: T },
    Sum { terms: Vec<CostFunction<T>> },
}

fn positive<T: Scalar>(name: &str, v: T) -> Result<T> {
    if v.is_finite() && v > T::zero() {
        Ok(v)
    } else {
        Err(Error::NonConvex(format!("{name} must be positive and finite, got {v}")))
    }
}

fn exponent<T: Scalar>(p: T) -> Result<T> {
    if p.is_finite() && p >= T::one() {
        Ok(p)
    } else {
        Err(Error::NonConvex(format!("exponent p must be at least 1, got {p}")))
    }
}

impl<T: Scalar> CostFunction<T> {
    pub fn power(p: T) -> Result<Self> {
        Ok(Self::Power { p: exponent(p)? })
    }

    pub fn quad_lin(t0: T) -> Result<Self> {
        Ok(Self::QuadLin { t0: positive("t0", t0)? })
    }

    pub fn quad_excess(t0: T, p: T) -> Result<Self> {
        Ok(Self::QuadExcess { t0: positive("t0", t0)?, p: exponent(p)? })
    }

    pub fn capped_quad(d: T, l0: T) -> Result<Self> {
        Ok(Self::CappedQuad { d: positive("D", d)?, l0: positive("l0", l0)? })
    }

    pub fn scaled(inner: Self, a: T) -> Result<Self> {
        Ok(Self::Scaled { inner: Box::new(inner), a: positive("a", a)? })
    }

    pub fn sum(terms: Vec<Self>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("cost sum"));
        }
        Ok(Self::Sum { terms })
    }

    /// `θ(t)` for `t ≥ 0`.
    pub fn eval(&self, t: T) -> Result<T> {
        if t < T::zero() || t.is_nan() {
            return Err(Error::Domain(format!("cost argument {t} must be non-negative")));
        }
        Ok(self.value(t))
    }

    /// `θ(|x|)`.
    pub fn eval_abs(&self, x: T) -> T {
        self.value(x.abs())
    }

    fn value(&self, t: T) -> T {
        let two = T::lit(2.0);
        match self {
            Self::Power { p } => {
                if *p == two {
                    t * t
                } else if *p == T::one() {
                    t
                } else {
                    t.powf(*p)
                }
            }
            Self::QuadLin { t0 } => {
                if t <= *t0 {
                    t * t
                } else {
                    two * t * *t0 - *t0 * *t0
                }
            }
            Self::QuadExcess { t0, p } => {
                let e = (t - *t0).max(T::zero());
                if e == T::zero() {
                    T::zero()
                } else {
                    e.powf(*p)
                }
            }
            Self::CappedQuad { d, l0 } => {
                if t <= *l0 * *d {
                    t * t / (two * *d)
                } else {
                    *l0 * t - *l0 * *l0 * *d / two
                }
            }
            Self::Scaled { inner, a } => inner.value(*a * t),
            Self::Sum { terms } => terms.iter().map(|c| c.value(t)).sum(),
        }
    }

    /// Right derivative `θ'(t⁺)` for `t ≥ 0`.
    pub fn right_derivative(&self, t: T) -> T {
        let t = t.max(T::zero());
        let two = T::lit(2.0);
        match self {
            Self::Power { p } => {
                if *p == T::one() {
                    T::one()
                } else if t == T::zero() {
                    T::zero()
                } else {
                    *p * t.powf(*p - T::one())
                }
            }
            Self::QuadLin { t0 } => two * t.min(*t0),
            Self::QuadExcess { t0, p } => {
                if t < *t0 {
                    T::zero()
                } else if *p == T::one() {
                    T::one()
                } else {
                    *p * (t - *t0).powf(*p - T::one())
                }
            }
            Self::CappedQuad { d, l0 } => (t / *d).min(*l0),
            Self::Scaled { inner, a } => *a * inner.right_derivative(*a * t),
            Self::Sum { terms } => terms.iter().map(|c| c.right_derivative(t)).sum(),
        }
    }

    /// Generalized inverse `inf{t ≥ 0 : θ(t) ≥ y}` for `y > 0`.
    pub fn inverse(&self, y: T) -> Result<T> {
        if !(y > T::zero()) || !y.is_finite() {
            return Err(Error::Domain(format!("inverse argument {y} must be positive")));
        }
        Ok(self.inverse_unchecked(y))
    }

    fn inverse_unchecked(&self, y: T) -> T {
        let two = T::lit(2.0);
        match self {
            Self::Power { p } => {
                if *p == two {
                    y.sqrt()
                } else {
                    y.powf(T::one() / *p)
                }
            }
            Self::QuadLin { t0 } => {
                if y <= *t0 * *t0 {
                    y.sqrt()
                } else {
                    (y + *t0 * *t0) / (two * *t0)
                }
            }
            Self::QuadExcess { t0, p } => *t0 + y.powf(T::one() / *p),
            Self::CappedQuad { d, l0 } => {
                let knee = *l0 * *l0 * *d / two;
                if y <= knee {
                    (two * *d * y).sqrt()
                } else {
                    (y + knee) / *l0
                }
            }
            Self::Scaled { inner, a } => inner.inverse_unchecked(y) / *a,
            Self::Sum { .. } => self.bisect_inverse(y),
        }
    }

    fn bisect_inverse(&self, y: T) -> T {
        let mut lo = T::zero();
        let mut hi = T::one();
        while self.value(hi) < y {
            lo = hi;
            hi = hi * T::lit(2.0);
            if !hi.is_finite() {
                return T::infinity();
            }
        }
        let rel = T::tolerance(1e-12);
        for _ in 0..400 {
            if hi - lo <= rel * hi {
                break;
            }
            let mid = lo + (hi - lo) / T::lit(2.0);
            if self.value(mid) >= y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `sup{t : θ(t) = 0}`; zero for costs that are positive off the origin.
    pub fn zero_radius(&self) -> T {
        match self {
            Self::QuadExcess { t0, .. } => *t0,
            Self::Scaled { inner, a } => inner.zero_radius() / *a,
            Self::Sum { terms } => terms.iter().map(|c| c.zero_radius()).fold(T::infinity(), T::min),
            _ => T::zero(),
        }
    }

    /// `lim_{t→∞} θ'(t)`, infinite for superlinear costs.
    pub fn asymptotic_slope(&self) -> T {
        match self {
            Self::Power { p } | Self::QuadExcess { p, .. } => {
                if *p == T::one() {
                    T::one()
                } else {
                    T::infinity()
                }
            }
            Self::QuadLin { t0 } => T::lit(2.0) * *t0,
            Self::CappedQuad { l0, .. } => *l0,
            Self::Scaled { inner, a } => *a * inner.asymptotic_slope(),
            Self::Sum { terms } => terms.iter().map(|c| c.asymptotic_slope()).sum(),
        }
    }

    /// Whether `θ(t) = t²` on `[0, t₀]`.
    pub fn is_quadratic_on(&self, t0: T) -> bool {
        self.quadratic_coefficient_on(t0) == Some(T::one())
    }

    /// `Some(c)` when `θ(t) = c·t²` on `[0, t₀]` (with `c = 0` meaning the
    /// cost vanishes there).
    fn quadratic_coefficient_on(&self, t0: T) -> Option<T> {
        let two = T::lit(2.0);
        match self {
            Self::Power { p } => (*p == two).then_some(T::one()),
            Self::QuadLin { t0: s } => (t0 <= *s).then_some(T::one()),
            Self::QuadExcess { t0: s, .. } => (t0 <= *s).then_some(T::zero()),
            Self::CappedQuad { d, l0 } => (t0 <= *l0 * *d).then(|| T::one() / (two * *d)),
            Self::Scaled { inner, a } => inner.quadratic_coefficient_on(*a * t0).map(|c| c * *a * *a),
            Self::Sum { terms } => {
                let mut total = T::zero();
                for c in terms {
                    total = total + c.quadratic_coefficient_on(t0)?;
                }
                Some(total)
            }
        }
    }
}

impl<T: Scalar> fmt::Display for CostFunction<T> {
    /// Writes the cost back in the θ-spec grammar understood by [`parse_theta`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { p } => write!(f, "power:p={p}"),
            Self::QuadLin { t0 } => write!(f, "quadlin:t0={t0}"),
            Self::QuadExcess { t0, p } => write!(f, "quadexcess:t0={t0},p={p}"),
            Self::CappedQuad { d, l0 } => write!(f, "alpha:D={d},l0={l0}"),
            Self::Scaled { inner, a } => write!(f, "scale:a={a}({inner})"),
            Self::Sum { terms } => {
                write!(f, "sum(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn zoo() -> Vec<CostFunction<f64>> {
        vec![
            CostFunction::power(1.0).unwrap(),
            CostFunction::power(1.5).unwrap(),
            CostFunction::power(2.0).unwrap(),
            CostFunction::power(3.7).unwrap(),
            CostFunction::quad_lin(1.0).unwrap(),
            CostFunction::quad_excess(0.5, 2.0).unwrap(),
            CostFunction::quad_excess(1.0, 1.0).unwrap(),
            CostFunction::capped_quad(1.0, 1.0).unwrap(),
            CostFunction::capped_quad(3.0, 0.2).unwrap(),
            CostFunction::scaled(CostFunction::quad_lin(1.0).unwrap(), 0.5).unwrap(),
            CostFunction::sum(vec![
                CostFunction::quad_lin(1.0).unwrap(),
                CostFunction::quad_excess(1.0, 3.0).unwrap(),
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        let theta1 = CostFunction::quad_lin(1.0).unwrap();
        assert_eq!(theta1.eval(2.0).unwrap(), 3.0);
        let alpha = CostFunction::capped_quad(1.0, 1.0).unwrap();
        assert_eq!(alpha.eval(2.0).unwrap(), 1.5);
        for c in zoo() {
            assert_eq!(c.eval(0.0).unwrap(), 0.0, "{c}");
        }
        assert!(theta1.eval(-1.0).is_err());
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(CostFunction::power(2.0).unwrap().inverse(4.0).unwrap(), 2.0);
        assert_eq!(CostFunction::quad_lin(1.0).unwrap().inverse(3.0).unwrap(), 2.0);
        let tiny = CostFunction::power(2.0).unwrap().inverse(1e-300).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-149);
        assert!(CostFunction::power(2.0).unwrap().inverse(0.0).is_err());
    }

    #[test]
    fn constructors_reject_non_convex_parameters() {
        assert!(matches!(CostFunction::power(0.5), Err(Error::NonConvex(_))));
        assert!(CostFunction::quad_lin(0.0).is_err());
        assert!(CostFunction::capped_quad(-1.0, 1.0).is_err());
        assert!(CostFunction::capped_quad(1.0, 0.0).is_err());
        assert!(CostFunction::scaled(CostFunction::power(2.0).unwrap(), 0.0).is_err());
        assert!(CostFunction::<f64>::sum(vec![]).is_err());
    }

    #[test]
    fn convexity_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in zoo() {
            for _ in 0..10_000 {
                let mut v = [rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0)];
                v.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let [s, t, u] = v;
                if u - s < 1e-9 {
                    continue;
                }
                let chord = ((u - t) * c.value(s) + (t - s) * c.value(u)) / (u - s);
                assert!(c.value(t) <= chord + 1e-12 * (1.0 + chord), "{c} at {s} {t} {u}");
            }
        }
    }

    #[test]
    fn right_derivative_is_monotone_and_matches_difference_quotient() {
        for c in zoo() {
            let mut prev = -1.0;
            for k in 0..600 {
                let t = k as f64 * 0.01;
                let d = c.right_derivative(t);
                assert!(d >= prev - 1e-12, "{c} at {t}");
                prev = d;
                let h = 1e-9;
                let fd = (c.value(t + h) - c.value(t)) / h;
                assert!((fd - d).abs() <= 1e-4 * (1.0 + d.abs()), "{c} at {t}: {fd} vs {d}");
            }
        }
    }

    #[test]
    fn inverse_is_a_right_inverse() {
        for c in zoo() {
            for y in [1e-6, 0.01, 0.3, 1.0, 2.5, 17.0, 400.0] {
                let t = c.inverse(y).unwrap();
                assert!(c.value(t) >= y - 1e-12 * (y + t), "{c} y={y}");
                let below = t * (1.0 - 1e-6);
                assert!(c.value(below) < y, "{c} y={y}");
            }
        }
    }

    #[test]
    fn scaled_inverse_divides_by_factor() {
        for c in zoo() {
            let s = CostFunction::scaled(c.clone(), 2.5).unwrap();
            for y in [0.01, 1.0, 9.0] {
                assert_relative_eq!(s.inverse(y).unwrap(), c.inverse(y).unwrap() / 2.5, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn zero_radius_and_asymptotic_slope() {
        let excess = CostFunction::<f64>::quad_excess(2.0, 2.0).unwrap();
        assert_eq!(excess.zero_radius(), 2.0);
        assert_eq!(CostFunction::scaled(excess.clone(), 4.0).unwrap().zero_radius(), 0.5);
        assert_eq!(CostFunction::power(2.0).unwrap().zero_radius(), 0.0);
        assert_eq!(CostFunction::quad_lin(1.5).unwrap().asymptotic_slope(), 3.0);
        assert_eq!(CostFunction::capped_quad(2.0, 0.1).unwrap().asymptotic_slope(), 0.1);
        assert!(excess.asymptotic_slope().is_infinite());
        for c in zoo() {
            let far = c.right_derivative(1e6);
            assert!(far <= c.asymptotic_slope() + 1e-9, "{c}");
        }
    }

    #[test]
    fn quadratic_near_zero_detection() {
        assert!(CostFunction::power(2.0).unwrap().is_quadratic_on(5.0));
        assert!(CostFunction::quad_lin(1.0).unwrap().is_quadratic_on(1.0));
        assert!(!CostFunction::quad_lin(1.0).unwrap().is_quadratic_on(1.5));
        assert!(!CostFunction::power(1.5).unwrap().is_quadratic_on(1.0));
        assert!(CostFunction::capped_quad(0.5, 4.0).unwrap().is_quadratic_on(1.0));
        let mixed = CostFunction::sum(vec![
            CostFunction::quad_lin(2.0).unwrap(),
            CostFunction::quad_excess(1.0, 2.0).unwrap(),
        ])
        .unwrap();
        assert!(mixed.is_quadratic_on(1.0));
        assert!(!mixed.is_quadratic_on(1.2));
    }
}
