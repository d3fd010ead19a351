use crate::Scalar;

/// A linear map `R^ncols -> R^nrows` together with its adjoint.
pub trait LinearOperator<T: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `y = Op x`
    fn apply(&self, x: &[T], y: &mut [T]);

    /// `y = Opᵀ x`
    fn apply_adjoint(&self, x: &[T], y: &mut [T]);
}

/// The identity map on `R^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl<T: Scalar> LinearOperator<T> for Identity {
    fn nrows(&self) -> usize {
        self.0
    }
    fn ncols(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
}

/// Diagonal map.
#[derive(Debug, Clone)]
pub struct Diagonal<T>(pub Vec<T>);

impl<T: Scalar> LinearOperator<T> for Diagonal<T> {
    fn nrows(&self) -> usize {
        self.0.len()
    }
    fn ncols(&self) -> usize {
        self.0.len()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        for ((yi, &xi), &di) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = di * xi;
        }
    }
    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        self.apply(x, y);
    }
}
