//! Preconditioned conjugate gradients with a diagonal preconditioner.

use crate::error::{check_len, Error, Result};
use crate::linalg::operator::LinearOperator;
use crate::linalg::vector::{axpy, dot, norm2};
use crate::Scalar;

/// Explicit residual recomputation period, bounds drift of the recurrence.
const RESIDUAL_REFRESH: usize = 50;

#[derive(Debug, Clone)]
pub struct PcgOptions<T> {
    pub max_iters: usize,
    /// Stop once `‖Op x − rhs‖ ≤ tol · max(1, ‖rhs‖)`.
    pub tol: T,
    /// Diagonal preconditioner `P ≈ diag(Op)`; applied as `P⁻¹ r`.
    pub preconditioner: Option<Vec<T>>,
}

impl<T: Scalar> PcgOptions<T> {
    pub fn new(max_iters: usize, tol: T) -> Self {
        Self {
            max_iters,
            tol,
            preconditioner: None,
        }
    }

    pub fn with_preconditioner(mut self, diag: Vec<T>) -> Self {
        self.preconditioner = Some(diag);
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidParameter("pcg tolerance must be positive".into()));
        }
        if let Some(p) = &self.preconditioner {
            check_len("pcg preconditioner", n, p.len())?;
            if !p.iter().all(|&d| d > T::zero() && d.is_finite()) {
                return Err(Error::InvalidParameter(
                    "pcg preconditioner entries must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome<T> {
    pub solution: Vec<T>,
    pub residual_norm: T,
    pub iters: usize,
    pub converged: bool,
}

/// Solves `op · x = rhs` for symmetric positive definite `op`, starting from
/// `x0` (zero when absent).
pub fn pcg_solve<T: Scalar, Op: LinearOperator<T> + ?Sized>(
    op: &Op,
    rhs: &[T],
    opts: &PcgOptions<T>,
    x0: Option<&[T]>,
) -> Result<PcgOutcome<T>> {
    let n = op.ncols();
    check_len("pcg operator must be square", op.nrows(), n)?;
    check_len("pcg rhs", n, rhs.len())?;
    opts.validate(n)?;

    let threshold = opts.tol * T::one().max(norm2(rhs));
    let mut x = match x0 {
        Some(x0) => {
            check_len("pcg initial guess", n, x0.len())?;
            x0.to_vec()
        }
        None => vec![T::zero(); n],
    };
    let mut ap = vec![T::zero(); n];
    let mut r = rhs.to_vec();
    if x0.is_some() {
        op.apply(&x, &mut ap);
        axpy(-T::one(), &ap, &mut r);
    }
    let precondition = |r: &[T], z: &mut [T]| match &opts.preconditioner {
        Some(p) => {
            for ((zi, &ri), &pi) in z.iter_mut().zip(r).zip(p) {
                *zi = ri / pi;
            }
        }
        None => z.copy_from_slice(r),
    };

    let mut rnorm = norm2(&r);
    if rnorm <= threshold {
        return Ok(PcgOutcome {
            solution: x,
            residual_norm: rnorm,
            iters: 0,
            converged: true,
        });
    }
    let mut z = vec![T::zero(); n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for it in 1..=opts.max_iters {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(Error::NonFinite("pcg curvature"));
        }
        if pap <= T::zero() {
            // Breakdown: the operator is not positive definite along p.
            return Err(Error::NotPositiveDefinite {
                index: it,
                value: pap.to_f64_lossy(),
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        if it % RESIDUAL_REFRESH == 0 {
            op.apply(&x, &mut ap);
            r.copy_from_slice(rhs);
            axpy(-T::one(), &ap, &mut r);
        } else {
            axpy(-alpha, &ap, &mut r);
        }
        rnorm = norm2(&r);
        if !rnorm.is_finite() {
            return Err(Error::NonFinite("pcg residual"));
        }
        if rnorm <= threshold {
            return Ok(PcgOutcome {
                solution: x,
                residual_norm: rnorm,
                iters: it,
                converged: true,
            });
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, &zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Ok(PcgOutcome {
        solution: x,
        residual_norm: rnorm,
        iters: opts.max_iters,
        converged: false,
    })
}
