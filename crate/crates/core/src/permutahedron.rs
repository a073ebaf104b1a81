//! Euclidean projection onto the permutahedron `Perm(b)`, the convex hull of
//! all coordinate permutations of `b`, together with the certificates that
//! characterize it.
//!
//! The projection is computed by the isotonic reduction: after removing the
//! mean difference, sort `a` non-increasingly, fit a non-increasing sequence
//! `v` to `a↓ − b↓` in least squares (pool adjacent violators) and set
//! `ĉ↓ = a↓ − v`. The pooled runs of `v` are exactly the blocks on which the
//! residual `a − ĉ` is constant.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{majorize, Majorization};
use crate::scalar::{ksum, sum_tolerance, Scalar};

/// A maximal run of sorted coordinates on which the residual `a − ĉ` is constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block<T> {
    /// First position, in the ascending order of `a`.
    pub start: usize,
    /// One past the last position.
    pub end: usize,
    /// Common value of `a_i − ĉ_i` on the block.
    pub residual: T,
}

/// Projection of `a` onto `Perm(b)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult<T> {
    /// `ĉ`, aligned with the coordinates of the input `a`.
    pub c_hat: Vec<T>,
    /// Blocks over the ascending order of `a`; residuals strictly increase
    /// from one block to the next (strictly decrease when `a` is read
    /// non-increasingly).
    pub blocks: Vec<Block<T>>,
    /// Mean correction `(Σa − Σb)/n`.
    pub shift: T,
    /// `order[k]` is the index of the `k`-th smallest coordinate of `a`.
    pub order: Vec<usize>,
}

impl<T: Scalar> ProjectionResult<T> {
    /// `ĉ` listed in the ascending order of `a` (hence non-decreasing).
    pub fn c_hat_sorted(&self) -> Vec<T> {
        self.order.iter().map(|&i| self.c_hat[i]).collect()
    }
}

fn ascending_order<T: Scalar>(a: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[i].partial_cmp(&a[j]).unwrap_or(Ordering::Equal));
    order
}

fn check_pair<T: Scalar>(a: &[T], b: &[T]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::Empty("projection vectors"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("projection vectors"));
    }
    Ok(())
}

/// Projects `a` onto `Perm(b)`. Both slices may be in any order.
pub fn project<T: Scalar>(a: &[T], b: &[T]) -> Result<ProjectionResult<T>> {
    check_pair(a, b)?;
    let n = a.len();
    let nn = T::lit(n as f64);
    let shift = (ksum(a.iter().copied()) - ksum(b.iter().copied())) / nn;

    let order = ascending_order(a);
    let mut b_desc = b.to_vec();
    b_desc.sort_by(|x, y| y.partial_cmp(x).unwrap_or(Ordering::Equal));
    let a_desc: Vec<T> = order.iter().rev().map(|&i| a[i] - shift).collect();

    // Pool adjacent violators for a non-increasing fit; equal neighbours are
    // pooled too so that every reported block has a distinct residual.
    let mut sums: Vec<T> = Vec::with_capacity(n);
    let mut counts: Vec<usize> = Vec::with_capacity(n);
    for p in 0..n {
        let mut s = a_desc[p] - b_desc[p];
        let mut c = 1usize;
        while let (Some(&ps), Some(&pc)) = (sums.last(), counts.last()) {
            if ps / T::lit(pc as f64) <= s / T::lit(c as f64) {
                s = s + ps;
                c += pc;
                sums.pop();
                counts.pop();
            } else {
                break;
            }
        }
        sums.push(s);
        counts.push(c);
    }

    let mut c_desc = vec![T::zero(); n];
    let mut desc_blocks = Vec::with_capacity(sums.len());
    let mut p = 0;
    for (&s, &c) in sums.iter().zip(&counts) {
        let v = s / T::lit(c as f64);
        for q in p..p + c {
            c_desc[q] = a_desc[q] - v;
        }
        desc_blocks.push((p, p + c, v + shift));
        p += c;
    }

    // Tied coordinates of `a` share their projection; average away any
    // rounding difference so the symmetry is exact.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && a_desc[end] == a_desc[start] {
            end += 1;
        }
        if end - start > 1 {
            let mean = ksum(c_desc[start..end].iter().copied()) / T::lit((end - start) as f64);
            c_desc[start..end].iter_mut().for_each(|x| *x = mean);
        }
        start = end;
    }

    let mut c_hat = vec![T::zero(); n];
    for (p, &i) in order.iter().rev().enumerate() {
        c_hat[i] = c_desc[p];
    }
    let blocks = desc_blocks
        .into_iter()
        .rev()
        .map(|(s, e, residual)| Block { start: n - e, end: n - s, residual })
        .collect();
    Ok(ProjectionResult { c_hat, blocks, shift, order })
}

/// Outcome of testing `⟨a − ĉ, b_σ − ĉ⟩ ≤ slack` over vertices `b_σ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalVerdict<T> {
    pub holds: bool,
    /// Largest inner product encountered.
    pub worst: T,
    pub permutations_checked: usize,
}

/// Largest `n` for which every vertex of `Perm(b)` is enumerated.
pub const EXHAUSTIVE_VERTEX_LIMIT: usize = 7;
/// Number of random vertices sampled above [`EXHAUSTIVE_VERTEX_LIMIT`].
pub const SAMPLED_VERTICES: usize = 10_000;

/// Checks the projection inequality `⟨a − ĉ, c − ĉ⟩ ≤ 0` on the vertices of
/// `Perm(b)` (which suffices by linearity in `c`): all of them when
/// `n ≤ 7`, otherwise a seeded sample of `10⁴` permutations.
pub fn check_variational<T: Scalar>(
    a: &[T],
    result: &ProjectionResult<T>,
    b: &[T],
) -> Result<VariationalVerdict<T>> {
    check_pair(a, b)?;
    let c = &result.c_hat;
    if c.len() != a.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: c.len() });
    }
    let n = a.len();
    let r: Vec<T> = a.iter().zip(c).map(|(&x, &y)| x - y).collect();
    let r_dot_c = ksum(r.iter().zip(c).map(|(&x, &y)| x * y));
    let scale = ksum(r.iter().map(|x| x.abs()))
        * b.iter().chain(c).fold(T::zero(), |m, x| m.max(x.abs()));
    let slack = sum_tolerance(1e-9, n, scale);

    let mut worst = T::neg_infinity();
    let mut checked = 0usize;
    let mut visit = |perm: &[T]| {
        let v = ksum(r.iter().zip(perm).map(|(&x, &y)| x * y)) - r_dot_c;
        worst = worst.max(v);
        checked += 1;
    };
    let mut perm = b.to_vec();
    if n <= EXHAUSTIVE_VERTEX_LIMIT {
        for_each_permutation(&mut perm, &mut visit);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SAMPLED_VERTICES {
            perm.shuffle(&mut rng);
            visit(&perm);
        }
    }
    Ok(VariationalVerdict { holds: worst <= slack, worst, permutations_checked: checked })
}

/// Visits every permutation of `items` (Heap's algorithm).
pub(crate) fn for_each_permutation<T: Copy, F: FnMut(&[T])>(items: &mut [T], f: &mut F) {
    let n = items.len();
    let mut c = vec![0usize; n];
    f(items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Whether `c ∈ Perm(b)`, i.e. `c ⪯ b`.
pub fn in_permutahedron<T: Scalar>(c: &[T], b: &[T]) -> Result<bool> {
    Ok(majorize(c, b)?.holds())
}

/// Tests the minimality of the residual: `a − ĉ ⪯ a − c` for a point `c` of
/// `Perm(b)`.
pub fn residual_majorization<T: Scalar>(
    a: &[T],
    result: &ProjectionResult<T>,
    c: &[T],
    b: &[T],
) -> Result<Majorization<T>> {
    check_pair(a, b)?;
    check_pair(a, c)?;
    if !in_permutahedron(c, b)? {
        return Err(Error::NotInPolytope);
    }
    let r_hat: Vec<T> = a.iter().zip(&result.c_hat).map(|(&x, &y)| x - y).collect();
    let r: Vec<T> = a.iter().zip(c).map(|(&x, &y)| x - y).collect();
    majorize(&r_hat, &r)
}
