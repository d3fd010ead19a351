//! Dense vector kernels over plain slices.
//!
//! All reductions use a fixed left-to-right summation order so results are
//! reproducible bit for bit.

use crate::Scalar;

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = T::zero();
    for (&ai, &bi) in a.iter().zip(b) {
        acc += ai * bi;
    }
    acc
}

#[inline]
pub fn norm2_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

/// Euclidean norm, scaled to avoid overflow for large entries.
pub fn norm2<T: Scalar>(a: &[T]) -> T {
    let scale = norm_inf(a);
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let mut acc = T::zero();
    for &ai in a {
        let t = ai / scale;
        acc += t * t;
    }
    scale * acc.sqrt()
}

#[inline]
pub fn norm1<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc + x.abs())
}

#[inline]
pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale<T: Scalar>(alpha: T, x: &mut [T]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

pub fn all_finite<T: Scalar>(a: &[T]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Euclidean norm of the concatenation of several blocks.
pub fn norm2_blocks<T: Scalar>(blocks: &[&[T]]) -> T {
    blocks
        .iter()
        .fold(T::zero(), |acc, b| acc + norm2_sq(b))
        .sqrt()
}
