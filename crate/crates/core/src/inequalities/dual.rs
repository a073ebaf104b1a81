//! Piecewise-linear potentials, their inf-convolutions with a cost, and the
//! weak duality bound for the barycentric transport cost.

use serde::Serialize;

use crate::costs::CostFunction;
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::{ksum, Scalar};
use crate::weak_transport::{weak_cost, Refinement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Convex,
    Concave,
}

/// Continuous piecewise-linear function on ℝ: linear interpolation between
/// `(breakpoints[k], values[k])`, extended by `left_slope` and `right_slope`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexPLFunction<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    left_slope: T,
    right_slope: T,
    curvature: Curvature,
}

impl<T: Scalar> ConvexPLFunction<T> {
    /// Validates strictly increasing breakpoints and slopes that are
    /// monotone in the direction given by `curvature`.
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, left_slope: T, right_slope: T, curvature: Curvature) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Empty("breakpoints"));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::LengthMismatch { left: breakpoints.len(), right: values.len() });
        }
        if breakpoints.iter().chain(&values).chain([&left_slope, &right_slope]).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("piecewise-linear function"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("breakpoints must be strictly increasing".into()));
        }
        let f = Self { breakpoints, values, left_slope, right_slope, curvature };
        let slopes = f.segment_slopes();
        let scale = slopes.iter().fold(T::one(), |m, s| m.max(s.abs()));
        let tol = T::tolerance(1e-12) * scale;
        let ok = slopes.windows(2).all(|w| match curvature {
            Curvature::Convex => w[1] >= w[0] - tol,
            Curvature::Concave => w[1] <= w[0] + tol,
        });
        if !ok {
            return Err(Error::NonConvex(format!("slopes {slopes:?} are not {curvature:?}")));
        }
        Ok(f)
    }

    pub fn convex(breakpoints: Vec<T>, values: Vec<T>, left_slope: T, right_slope: T) -> Result<Self> {
        Self::new(breakpoints, values, left_slope, right_slope, Curvature::Convex)
    }

    pub fn concave(breakpoints: Vec<T>, values: Vec<T>, left_slope: T, right_slope: T) -> Result<Self> {
        Self::new(breakpoints, values, left_slope, right_slope, Curvature::Concave)
    }

    /// `x ↦ intercept + slope·x`.
    pub fn affine(intercept: T, slope: T) -> Result<Self> {
        Self::convex(vec![T::zero()], vec![intercept], slope, slope)
    }

    pub fn zero() -> Self {
        Self::affine(T::zero(), T::zero()).expect("zero function is valid")
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    /// Slopes of the `m + 1` linear pieces, left to right.
    pub fn segment_slopes(&self) -> Vec<T> {
        let (x, v) = (&self.breakpoints, &self.values);
        let mut s = Vec::with_capacity(x.len() + 1);
        s.push(self.left_slope);
        for k in 1..x.len() {
            s.push((v[k] - v[k - 1]) / (x[k] - x[k - 1]));
        }
        s.push(self.right_slope);
        s
    }

    pub fn eval(&self, y: T) -> T {
        let (x, v) = (&self.breakpoints, &self.values);
        let last = x.len() - 1;
        if y <= x[0] {
            return v[0] + self.left_slope * (y - x[0]);
        }
        if y >= x[last] {
            return v[last] + self.right_slope * (y - x[last]);
        }
        let k = x.partition_point(|&b| b <= y);
        let t = (y - x[k - 1]) / (x[k] - x[k - 1]);
        v[k - 1] + t * (v[k] - v[k - 1])
    }

    /// Index of the piece to the left of `y` (piece `k` lies between
    /// breakpoints `k − 1` and `k`).
    fn piece_left(&self, y: T) -> usize {
        self.breakpoints.partition_point(|&b| b < y)
    }

    fn piece_right(&self, y: T) -> usize {
        self.breakpoints.partition_point(|&b| b <= y)
    }

    /// Left derivative `g′₋(y)`.
    pub fn slope_left(&self, y: T) -> T {
        self.segment_slopes()[self.piece_left(y)]
    }

    /// Right derivative `g′₊(y)`.
    pub fn slope_right(&self, y: T) -> T {
        self.segment_slopes()[self.piece_right(y)]
    }

    /// `|∇g|(y) = min_{λ∈[0,1]} |λ g′₋(y) + (1 − λ) g′₊(y)|`: zero when the
    /// one-sided slopes straddle zero, else the smaller of their magnitudes.
    pub fn grad_norm(&self, y: T) -> T {
        let (l, r) = (self.slope_left(y), self.slope_right(y));
        if l.min(r) <= T::zero() && l.max(r) >= T::zero() {
            T::zero()
        } else {
            l.abs().min(r.abs())
        }
    }

    /// The closed set of minimizers of a convex function, as `(lo, hi)` with
    /// infinite ends allowed; `None` when the infimum is not attained.
    pub fn argmin(&self) -> Option<(T, T)> {
        if self.curvature != Curvature::Convex || self.left_slope > T::zero() || self.right_slope < T::zero() {
            return None;
        }
        let s = self.segment_slopes();
        let x = &self.breakpoints;
        let lo = if s[0] == T::zero() {
            T::neg_infinity()
        } else {
            x[(0..x.len()).find(|&k| s[k + 1] >= T::zero()).unwrap_or(x.len() - 1)]
        };
        let hi = if s[x.len()] == T::zero() {
            T::infinity()
        } else {
            x[(0..x.len()).rev().find(|&k| s[k] <= T::zero()).unwrap_or(0)]
        };
        Some((lo, hi))
    }
}

const GOLDEN_TOLERANCE: f64 = 1e-10;

/// `Q_t g(x) = inf_y { g(y) + t θ(|x − y|/t) }` at each point of `xs`.
///
/// The objective is convex in `y`. When `g` attains its minimum, a minimizer
/// lies between `x` and the projection of `x` onto `argmin g`; otherwise the
/// bracket is found by doubling steps in the descent direction of `g`. A
/// golden-section search to `1e-10` is then refined by evaluating the
/// bracket ends and every breakpoint of `g` inside the bracket.
pub fn inf_convolution<T: Scalar>(g: &ConvexPLFunction<T>, theta: &CostFunction<T>, t: T, xs: &[T]) -> Result<Vec<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!("time t must be positive, got {t}")));
    }
    if g.curvature != Curvature::Convex {
        return Err(Error::NonConvex("inf-convolution needs a convex potential".into()));
    }
    let growth = theta.asymptotic_slope();
    if g.left_slope > growth || g.right_slope < -growth {
        return Err(Error::Domain("potential is unbounded below against this cost".into()));
    }
    xs.iter().map(|&x| inf_convolution_at(g, theta, t, x)).collect()
}

fn inf_convolution_at<T: Scalar>(g: &ConvexPLFunction<T>, theta: &CostFunction<T>, t: T, x: T) -> Result<T> {
    let h = |y: T| g.eval(y) + t * theta.eval_abs((x - y) / t);
    let (lo, hi) = match g.argmin() {
        Some((l, r)) => {
            let p = x.max(l).min(r);
            (x.min(p), x.max(p))
        }
        None => {
            let dir = if g.slope_right(x) < T::zero() { T::one() } else { -T::one() };
            let mut step = T::one().max(x.abs()) * T::lit(1e-3);
            let mut prev = h(x);
            let mut far = x;
            loop {
                let y = x + dir * step;
                let hy = h(y);
                if !hy.is_finite() || !step.is_finite() {
                    return Err(Error::Domain("inf-convolution is not attained".into()));
                }
                if hy >= prev {
                    far = y;
                    break;
                }
                prev = hy;
                step = step * T::lit(2.0);
                if step > T::lit(1e300) {
                    break;
                }
            }
            if far == x {
                return Err(Error::Domain("inf-convolution is not attained".into()));
            }
            (x.min(far), x.max(far))
        }
    };
    let mut best = h(lo).min(h(hi));
    if hi > lo {
        let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut hc, mut hd) = (h(c), h(d));
        let tol = T::tolerance(GOLDEN_TOLERANCE) * T::one().max(lo.abs()).max(hi.abs());
        for _ in 0..400 {
            if b - a <= tol {
                break;
            }
            if hc <= hd {
                b = d;
                d = c;
                hd = hc;
                c = b - inv_phi * (b - a);
                hc = h(c);
            } else {
                a = c;
                c = d;
                hc = hd;
                d = a + inv_phi * (b - a);
                hd = h(d);
            }
        }
        best = best.min(hc).min(hd);
        for &y in g.breakpoints.iter().filter(|&&y| y > lo && y < hi) {
            best = best.min(h(y));
        }
    }
    Ok(best)
}

/// Weak duality report: each potential's dual value `∫Q₁φ dμ − ∫φ dν`
/// against `T̄_θ(ν|μ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualGap<T> {
    pub weak_cost: T,
    pub dual_values: Vec<T>,
    /// `max dual value − T̄_θ(ν|μ)`; weak duality makes it non-positive.
    pub gap: T,
}

/// Evaluates `∫ Q₁φ dμ − ∫ φ dν − T̄_θ(ν|μ)` for convex potentials `φ`, where
/// `Q₁φ(x) = inf_y {φ(y) + θ(|x − y|)}`. The infimum-convolution acts on the
/// source side `μ` and the potential is integrated against the target `ν`.
pub fn dual_gap<T: Scalar>(
    nu: &DiscreteMeasure<T>,
    mu: &DiscreteMeasure<T>,
    theta: &CostFunction<T>,
    potentials: &[ConvexPLFunction<T>],
    refinement: Refinement,
) -> Result<DualGap<T>> {
    if potentials.is_empty() {
        return Err(Error::Empty("potentials"));
    }
    let value = weak_cost(nu, mu, theta, refinement)?.value;
    let mut dual_values = Vec::with_capacity(potentials.len());
    for phi in potentials {
        let q = inf_convolution(phi, theta, T::one(), mu.atoms())?;
        let on_mu = ksum(q.iter().zip(mu.weights()).map(|(&a, &w)| a * w));
        let on_nu = ksum(nu.atoms().iter().zip(nu.weights()).map(|(&y, &w)| phi.eval(y) * w));
        dual_values.push(on_mu - on_nu);
    }
    let gap = dual_values.iter().fold(T::neg_infinity(), |m, &v| m.max(v)) - value;
    Ok(DualGap { weak_cost: value, dual_values, gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn abs() -> ConvexPLFunction<f64> {
        ConvexPLFunction::convex(vec![0.0], vec![0.0], -1.0, 1.0).unwrap()
    }

    fn sq() -> CostFunction<f64> {
        CostFunction::power(2.0).unwrap()
    }

    #[test]
    fn construction_and_evaluation() {
        let g = ConvexPLFunction::convex(vec![-1.0, 0.0, 2.0], vec![1.0, 0.0, 1.0], -2.0, 3.0).unwrap();
        assert_eq!(g.segment_slopes(), vec![-2.0, -1.0, 0.5, 3.0]);
        assert_eq!(g.eval(-2.0), 3.0);
        assert_eq!(g.eval(1.0), 0.5);
        assert_eq!(g.eval(3.0), 4.0);
        assert_eq!((g.slope_left(0.0), g.slope_right(0.0)), (-1.0, 0.5));
        assert_eq!(g.argmin(), Some((0.0, 0.0)));
        assert!(ConvexPLFunction::convex(vec![0.0, 1.0], vec![0.0, 5.0], 6.0, 7.0).is_err());
        assert!(ConvexPLFunction::concave(vec![0.0, 1.0], vec![0.0, 5.0], 6.0, 4.0).is_ok());
        assert!(ConvexPLFunction::convex(vec![1.0, 0.0], vec![0.0, 0.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn gradient_norm() {
        let g = ConvexPLFunction::convex(vec![0.0, 1.0], vec![0.0, 2.0], -1.0, 3.0).unwrap();
        assert_eq!(g.grad_norm(0.0), 0.0);
        assert_eq!(g.grad_norm(1.0), 2.0);
        assert_eq!(g.grad_norm(0.5), 2.0);
        assert_eq!(g.grad_norm(-4.0), 1.0);
        let c = ConvexPLFunction::concave(vec![0.0], vec![0.0], 1.0, -1.0).unwrap();
        assert_eq!(c.grad_norm(0.0), 0.0);
        assert_eq!(c.grad_norm(2.0), 1.0);
    }

    #[test]
    fn argmin_with_flat_pieces() {
        let g = ConvexPLFunction::convex(vec![-1.0, 1.0], vec![0.0, 0.0], -1.0, 1.0).unwrap();
        assert_eq!(g.argmin(), Some((-1.0, 1.0)));
        let z = ConvexPLFunction::<f64>::zero();
        assert_eq!(z.argmin(), Some((f64::NEG_INFINITY, f64::INFINITY)));
        assert_eq!(ConvexPLFunction::affine(0.0, 1.0).unwrap().argmin(), None);
    }

    #[test]
    fn zero_potential() {
        let q = inf_convolution(&ConvexPLFunction::zero(), &sq(), 1.0, &[-3.0, 0.0, 2.5]).unwrap();
        assert_eq!(q, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn absolute_value_potential() {
        let xs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.05).collect();
        let q = inf_convolution(&abs(), &sq(), 1.0, &xs).unwrap();
        for (&x, &v) in xs.iter().zip(&q) {
            let expected = if x.abs() <= 0.5 { x * x } else { x.abs() - 0.25 };
            assert!((v - expected).abs() < 1e-9, "{x}: {v} vs {expected}");
            let dense = (-4000..=4000)
                .map(|k| k as f64 * 1e-3)
                .map(|y: f64| y.abs() + (x - y) * (x - y))
                .fold(f64::INFINITY, f64::min);
            assert!(v <= dense + 1e-12 && v >= dense - 1e-6);
        }
    }

    #[test]
    fn affine_potential() {
        for slope in [-2.5, -0.3, 0.7, 4.0] {
            let g = ConvexPLFunction::affine(1.0, slope).unwrap();
            let xs = [-2.0, 0.0, 3.0];
            let q = inf_convolution(&g, &sq(), 1.0, &xs).unwrap();
            for (&x, &v) in xs.iter().zip(&q) {
                assert_relative_eq!(v, g.eval(x) - slope * slope / 4.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn time_scaling() {
        let q = inf_convolution(&abs(), &sq(), 2.0, &[3.0]).unwrap();
        assert_relative_eq!(q[0], 3.0 - 0.5, epsilon = 1e-9);
    }

    #[test]
    fn rejects_unbounded_objectives() {
        let steep = ConvexPLFunction::affine(0.0, 3.0).unwrap();
        let linear = CostFunction::quad_lin(1.0).unwrap();
        assert!(inf_convolution(&steep, &linear, 1.0, &[0.0]).is_err());
        let concave = ConvexPLFunction::concave(vec![0.0], vec![0.0], 1.0, -1.0).unwrap();
        assert!(inf_convolution(&concave, &sq(), 1.0, &[0.0]).is_err());
        assert!(inf_convolution(&abs(), &sq(), 0.0, &[0.0]).is_err());
    }

    #[test]
    fn orientation_regression() {
        let mu = DiscreteMeasure::dirac(0.0).unwrap();
        let nu = DiscreteMeasure::uniform(&[-1.0, 1.0]).unwrap();
        let phi = ConvexPLFunction::convex(vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0], -2.0, 2.0).unwrap();
        let gap = dual_gap(&nu, &mu, &sq(), &[phi], Refinement::Auto).unwrap();
        assert_eq!(gap.weak_cost, 0.0);
        assert_relative_eq!(gap.gap, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_potential_gap_is_minus_cost() {
        let mu = DiscreteMeasure::uniform(&[0.0, 2.0]).unwrap();
        let nu = DiscreteMeasure::uniform(&[-1.0, 1.0]).unwrap();
        let gap = dual_gap(&nu, &mu, &sq(), &[ConvexPLFunction::zero()], Refinement::Auto).unwrap();
        assert_eq!(gap.gap, -1.0);
    }

    #[test]
    fn affine_potential_attains_duality() {
        // φ(y) = Ly gives Q₁φ(x) = Lx − L²/4 and dual value L − L²/4,
        // maximal at L = 2 where it reaches T̄ = 1.
        let mu = DiscreteMeasure::uniform(&[0.0, 2.0]).unwrap();
        let nu = DiscreteMeasure::uniform(&[-1.0, 1.0]).unwrap();
        let phis = [ConvexPLFunction::affine(0.0, 1.0).unwrap(), ConvexPLFunction::affine(0.0, 2.0).unwrap()];
        let gap = dual_gap(&nu, &mu, &sq(), &phis, Refinement::Auto).unwrap();
        assert_relative_eq!(gap.dual_values[0], 0.75, epsilon = 1e-9);
        assert_relative_eq!(gap.dual_values[1], 1.0, epsilon = 1e-9);
        assert!(gap.gap.abs() < 1e-9);
    }
}
