//! Doubly stochastic witnesses of majorization, built from T-transforms.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::majorize;
use crate::scalar::{ksum, sum_tolerance, Scalar};

/// One T-transform `λI + (1 − λ)Q`, `Q` swapping coordinates `j` and `k`
/// of the non-increasingly sorted vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TTransform<T> {
    pub j: usize,
    pub k: usize,
    pub lambda: T,
}

/// Doubly stochastic `P` with `a = bP`, i.e. `a_i = Σ_j b_j P[j][i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublyStochastic<T> {
    pub matrix: Vec<Vec<T>>,
    /// The T-transforms applied, in order, to `b` sorted non-increasingly.
    pub transforms: Vec<TTransform<T>>,
}

impl<T: Scalar> DoublyStochastic<T> {
    pub fn n(&self) -> usize {
        self.matrix.len()
    }

    /// The row vector `bP`.
    pub fn apply(&self, b: &[T]) -> Vec<T> {
        let n = self.n();
        (0..n).map(|i| ksum((0..n).map(|j| b[j] * self.matrix[j][i]))).collect()
    }

    /// Largest deviation of a row or column sum from one.
    pub fn stochastic_defect(&self) -> T {
        let n = self.n();
        let mut worst = T::zero();
        for i in 0..n {
            let row = ksum(self.matrix[i].iter().copied());
            let col = ksum((0..n).map(|j| self.matrix[j][i]));
            worst = worst.max((row - T::one()).abs()).max((col - T::one()).abs());
        }
        worst
    }

    pub fn min_entry(&self) -> T {
        self.matrix.iter().flatten().fold(T::infinity(), |m, &x| m.min(x))
    }
}

fn descending_order<T: Scalar>(v: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[j].partial_cmp(&v[i]).unwrap_or(Ordering::Equal));
    order
}

/// Finds a doubly stochastic `P` with `a = bP` for `a ⪯ b`, as a product of
/// at most `n − 1` T-transforms. Each step picks the last coordinate where
/// the running vector still exceeds `a` and the first later coordinate where
/// it falls short, then moves mass between them until one of the two
/// matches `a` exactly.
pub fn rado_decompose<T: Scalar>(a: &[T], b: &[T]) -> Result<DoublyStochastic<T>> {
    if !majorize(a, b)?.holds() {
        return Err(Error::NotMajorized);
    }
    let n = a.len();
    let oa = descending_order(a);
    let ob = descending_order(b);
    let target: Vec<T> = oa.iter().map(|&i| a[i]).collect();
    let mut x: Vec<T> = ob.iter().map(|&i| b[i]).collect();

    let scale = x.iter().chain(&target).fold(T::zero(), |m, v| m.max(v.abs()));
    let tol = sum_tolerance(1e-12, n, scale);

    let mut m = vec![vec![T::zero(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let mut transforms = Vec::new();
    for _ in 0..n {
        let Some(j) = (0..n).rev().find(|&j| x[j] > target[j] + tol) else {
            break;
        };
        let Some(k) = ((j + 1)..n).find(|&k| x[k] < target[k] - tol) else {
            break;
        };
        let gap = x[j] - x[k];
        let over = x[j] - target[j];
        let under = target[k] - x[k];
        let delta = over.min(under);
        let lambda = T::one() - delta / gap;
        if over <= under {
            x[j] = target[j];
            x[k] = x[k] + delta;
        } else {
            x[k] = target[k];
            x[j] = x[j] - delta;
        }
        let mu = T::one() - lambda;
        for row in m.iter_mut() {
            let (cj, ck) = (row[j], row[k]);
            row[j] = lambda * cj + mu * ck;
            row[k] = mu * cj + lambda * ck;
        }
        transforms.push(TTransform { j, k, lambda });
    }

    let mut matrix = vec![vec![T::zero(); n]; n];
    for (p, &rb) in ob.iter().enumerate() {
        for (q, &ca) in oa.iter().enumerate() {
            matrix[rb][ca] = m[p][q];
        }
    }
    Ok(DoublyStochastic { matrix, transforms })
}
