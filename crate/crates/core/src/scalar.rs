//! Floating-point scalar abstraction shared by every numeric routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the library computes with: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// An absolute tolerance of `base`, floored at a small multiple of the
    /// type's machine epsilon so single precision gets a usable slack.
    fn tolerance(base: f64) -> Self {
        let base = Self::lit(base);
        let floor = Self::epsilon() * Self::lit(64.0);
        base.max(floor)
    }

    /// Lossy conversion to `f64` for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Tolerance for comparing running sums of `n` terms of magnitude up to
/// `scale`: `base`, unless accumulated rounding could exceed it.
pub(crate) fn sum_tolerance<T: Scalar>(base: f64, n: usize, scale: T) -> T {
    let rounding = T::epsilon() * T::lit(4.0 * n.max(1) as f64) * scale.abs().max(T::one());
    T::tolerance(base).max(rounding)
}

/// Kahan-compensated sum.
pub(crate) fn ksum<T: Scalar, I: IntoIterator<Item = T>>(iter: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in iter {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_floors_for_single_precision() {
        assert_eq!(<f64 as Scalar>::tolerance(1e-12), 1e-12);
        assert!(<f32 as Scalar>::tolerance(1e-12) > 1e-6);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs = std::iter::once(1.0f64).chain(std::iter::repeat_n(1e-16, 10_000));
        let s = ksum(xs);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }
}
