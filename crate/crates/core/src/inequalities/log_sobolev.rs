//! Numerical check of the discrete log-Sobolev inequality for the symmetric
//! exponential law `τ(dx) = ½e^{−|x|}dx`:
//! `Ent_τ(e^f) ≤ 2740 ∫ (f(x) − f(x ∓ 1))² e^f dτ` for non-decreasing `f`
//! whose unit increments stay below `1/(10√2)`.

use serde::Serialize;

use super::poincare_c;
use crate::error::{Error, Result};
use crate::scalar::{ksum, Scalar};

pub const LOG_SOBOLEV_CONSTANT: f64 = 2740.0;
/// Default half-width of the quadrature window.
pub const DEFAULT_RADIUS: f64 = 30.0;
/// Default number of Simpson panels.
pub const DEFAULT_PANELS: usize = 200_000;

/// A bounded non-decreasing function on ℝ.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonotoneProfile<T> {
    /// Linear interpolation between knots, constant beyond them.
    PiecewiseLinear { knots: Vec<(T, T)> },
    /// `base + Σ_{p ≤ x} height`, over `(position, height)` jumps.
    Steps { base: T, jumps: Vec<(T, T)> },
}

impl<T: Scalar> MonotoneProfile<T> {
    pub fn piecewise_linear(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Empty("knots"));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFinite("knots"));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Domain("knot positions must be strictly increasing".into()));
        }
        Ok(Self::PiecewiseLinear { knots })
    }

    pub fn steps(base: T, mut jumps: Vec<(T, T)>) -> Result<Self> {
        if !base.is_finite() || jumps.iter().any(|(p, h)| !p.is_finite() || !h.is_finite()) {
            return Err(Error::NonFinite("step profile"));
        }
        jumps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        Ok(Self::Steps { base, jumps })
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            Self::PiecewiseLinear { knots } => {
                let k = knots.partition_point(|&(p, _)| p <= x);
                if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let ((x0, y0), (x1, y1)) = (knots[k - 1], knots[k]);
                    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
                }
            }
            Self::Steps { base, jumps } => {
                let k = jumps.partition_point(|&(p, _)| p <= x);
                *base + ksum(jumps[..k].iter().map(|&(_, h)| h))
            }
        }
    }

    pub fn is_non_decreasing(&self) -> bool {
        match self {
            Self::PiecewiseLinear { knots } => knots.windows(2).all(|w| w[0].1 <= w[1].1),
            Self::Steps { jumps, .. } => jumps.iter().all(|&(_, h)| h >= T::zero()),
        }
    }

    /// `sup_x f(x) − f(x − 1)`, exactly.
    pub fn max_unit_increment(&self) -> T {
        match self {
            Self::PiecewiseLinear { knots } => {
                // x ↦ f(x) − f(x − 1) is piecewise linear with kinks at the
                // knots and the knots shifted by one.
                knots
                    .iter()
                    .flat_map(|&(p, _)| [p, p + T::one()])
                    .map(|x| self.eval(x) - self.eval(x - T::one()))
                    .fold(T::zero(), T::max)
            }
            Self::Steps { jumps, .. } => {
                // The window (x − 1, x] holds the most mass when x sits on a jump.
                jumps
                    .iter()
                    .map(|&(x, _)| {
                        ksum(jumps.iter().filter(|&&(p, _)| p > x - T::one() && p <= x).map(|&(_, h)| h))
                    })
                    .fold(T::zero(), T::max)
            }
        }
    }
}

/// Which unit difference enters the energy term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `f(x) − f(x − 1)`.
    Minus,
    /// `f(x + 1) − f(x)`.
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogSobolevCheck<T> {
    /// `Ent_τ(e^f)`.
    pub lhs: T,
    /// `2740 ∫ (f(x) − f(x ∓ 1))² e^f dτ`.
    pub rhs: T,
    pub holds: bool,
    pub max_increment: T,
}

/// Composite Simpson quadrature of both sides on `[−R, R]` with `panels`
/// (even) subintervals. Rejects profiles outside the hypothesis class.
pub fn log_sobolev_check<T: Scalar>(
    f: &MonotoneProfile<T>,
    direction: Direction,
    radius: T,
    panels: usize,
) -> Result<LogSobolevCheck<T>> {
    if !(radius > T::zero()) || !radius.is_finite() {
        return Err(Error::Domain(format!("quadrature radius must be positive, got {radius}")));
    }
    if panels < 2 || !panels.is_multiple_of(2) {
        return Err(Error::Domain(format!("Simpson needs an even number of panels, got {panels}")));
    }
    if !f.is_non_decreasing() {
        return Err(Error::Hypothesis("profile must be non-decreasing".into()));
    }
    let bound = poincare_c::<T>() + T::lit(1e-12);
    let exact = f.max_unit_increment();
    if exact > bound {
        return Err(Error::Hypothesis(format!("unit increment {exact} exceeds 1/(10√2)")));
    }

    let h = T::lit(2.0) * radius / T::lit(panels as f64);
    let half = T::lit(0.5);
    let mut z = Vec::with_capacity(panels + 1);
    let mut fz = Vec::with_capacity(panels + 1);
    let mut energy = Vec::with_capacity(panels + 1);
    let mut grid_max = T::zero();
    for k in 0..=panels {
        let x = -radius + T::lit(k as f64) * h;
        let fx = f.eval(x);
        let inc = match direction {
            Direction::Minus => fx - f.eval(x - T::one()),
            Direction::Plus => f.eval(x + T::one()) - fx,
        };
        grid_max = grid_max.max(inc);
        let w = if k == 0 || k == panels {
            T::one()
        } else if k % 2 == 1 {
            T::lit(4.0)
        } else {
            T::lit(2.0)
        };
        let dens = w * half * (-x.abs()).exp();
        let e = fx.exp() * dens;
        z.push(e);
        fz.push(fx * e);
        energy.push(inc * inc * e);
    }
    if grid_max > bound {
        return Err(Error::Hypothesis(format!("unit increment {grid_max} exceeds 1/(10√2)")));
    }
    let third = h / T::lit(3.0);
    let mass = ksum(z) * third;
    let lhs = ksum(fz) * third - mass * mass.ln();
    let rhs = T::lit(LOG_SOBOLEV_CONSTANT) * ksum(energy) * third;
    Ok(LogSobolevCheck { holds: lhs <= rhs + T::tolerance(1e-9), lhs, rhs, max_increment: exact.max(grid_max) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile() {
        let f = MonotoneProfile::piecewise_linear(vec![(0.0, 0.0)]).unwrap();
        let r = log_sobolev_check(&f, Direction::Minus, DEFAULT_RADIUS, DEFAULT_PANELS).unwrap();
        assert!(r.lhs.abs() < 1e-12);
        assert_eq!(r.rhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn clamped_linear_profile() {
        let f = MonotoneProfile::<f64>::piecewise_linear(vec![(-5.0, -0.35), (5.0, 0.35)]).unwrap();
        assert!((f.max_unit_increment() - 0.07).abs() < 1e-15);
        for dir in [Direction::Minus, Direction::Plus] {
            let r = log_sobolev_check(&f, dir, DEFAULT_RADIUS, DEFAULT_PANELS).unwrap();
            assert!(r.holds);
            assert!(r.lhs > 0.0 && r.rhs > r.lhs);
        }
    }

    #[test]
    fn entropy_of_a_step_matches_closed_form() {
        // f = s·1_{x ≥ 0}: Ent = ½(s e^s) − m log m with m = ½(1 + e^s).
        let s: f64 = 0.05;
        let f = MonotoneProfile::steps(0.0, vec![(0.0, s)]).unwrap();
        let r = log_sobolev_check(&f, Direction::Minus, 40.0, 400_000).unwrap();
        let m = 0.5 * (1.0 + s.exp());
        let expected = 0.5 * s * s.exp() - m * m.ln();
        assert!((r.lhs - expected).abs() < 1e-5, "{} vs {expected}", r.lhs);
    }

    #[test]
    fn hypothesis_gate() {
        let steep = MonotoneProfile::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.1)]).unwrap();
        assert!(matches!(
            log_sobolev_check(&steep, Direction::Minus, DEFAULT_RADIUS, 1000),
            Err(Error::Hypothesis(_))
        ));
        let jumps = MonotoneProfile::<f64>::steps(0.0, vec![(0.0, 0.05), (0.5, 0.05)]).unwrap();
        assert!((jumps.max_unit_increment() - 0.1).abs() < 1e-15);
        assert!(log_sobolev_check(&jumps, Direction::Plus, DEFAULT_RADIUS, 1000).is_err());
        let falling = MonotoneProfile::steps(0.0, vec![(0.0, -0.01)]).unwrap();
        assert!(log_sobolev_check(&falling, Direction::Minus, DEFAULT_RADIUS, 1000).is_err());
        let flat = MonotoneProfile::piecewise_linear(vec![(0.0, 0.0)]).unwrap();
        assert!(log_sobolev_check(&flat, Direction::Minus, DEFAULT_RADIUS, 1001).is_err());
    }

    #[test]
    fn profile_evaluation() {
        let f = MonotoneProfile::steps(1.0, vec![(2.0, 0.5), (-1.0, 0.25)]).unwrap();
        assert_eq!(f.eval(-2.0), 1.0);
        assert_eq!(f.eval(-1.0), 1.25);
        assert_eq!(f.eval(5.0), 1.75);
        let g = MonotoneProfile::piecewise_linear(vec![(0.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_eq!(g.eval(-3.0), 0.0);
        assert_eq!(g.eval(1.0), 0.5);
        assert_eq!(g.eval(9.0), 1.0);
    }
}
