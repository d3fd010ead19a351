//! Problem data and the full primal-dual variable set.
//!
//! The problem is
//!
//! ```text
//! min_x ‖A x − b‖ + λ₁ Σ_j ω_j ‖x_{G_j}‖ + λ₂ ‖x‖₁
//! s.t.  B_E x = c_E,  B_I x − c_I ≥ 0
//! ```
//!
//! The stacked operator `N = [A; B_E; B_I]` (`m̂ × n`, `m̂ = m + m_E + m_I`)
//! is formed once at construction and drives every matrix-vector product in
//! the solvers.

use crate::error::{check_len, Error, Result};
use crate::linalg::CscMatrix;
use crate::prox::{GroupPartition, PenaltyParams};
use crate::Scalar;

#[derive(Debug, Clone)]
pub struct Problem<T> {
    a: CscMatrix<T>,
    b: Vec<T>,
    b_eq: CscMatrix<T>,
    c_eq: Vec<T>,
    b_in: CscMatrix<T>,
    c_in: Vec<T>,
    groups: GroupPartition<T>,
    params: PenaltyParams<T>,
    stacked: CscMatrix<T>,
}

impl<T: Scalar> Problem<T> {
    /// Pass empty (`0 × n`) matrices and empty vectors for absent
    /// constraint blocks.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: CscMatrix<T>,
        b: Vec<T>,
        b_eq: CscMatrix<T>,
        c_eq: Vec<T>,
        b_in: CscMatrix<T>,
        c_in: Vec<T>,
        groups: GroupPartition<T>,
        params: PenaltyParams<T>,
    ) -> Result<Self> {
        let n = a.ncols();
        check_len("b", a.nrows(), b.len())?;
        check_len("B_E columns", n, b_eq.ncols())?;
        check_len("c_E", b_eq.nrows(), c_eq.len())?;
        check_len("B_I columns", n, b_in.ncols())?;
        check_len("c_I", b_in.nrows(), c_in.len())?;
        check_len("group partition dimension", n, groups.dim())?;
        if ![&b, &c_eq, &c_in].iter().all(|v| v.iter().all(|x| x.is_finite())) {
            return Err(Error::NonFinite("problem vectors"));
        }
        let stacked = CscMatrix::vstack(&[&a, &b_eq, &b_in])?;
        Ok(Self {
            a,
            b,
            b_eq,
            c_eq,
            b_in,
            c_in,
            groups,
            params,
            stacked,
        })
    }

    /// Problem without linear constraints.
    pub fn unconstrained(
        a: CscMatrix<T>,
        b: Vec<T>,
        groups: GroupPartition<T>,
        params: PenaltyParams<T>,
    ) -> Result<Self> {
        let n = a.ncols();
        Self::new(
            a,
            b,
            CscMatrix::zeros(0, n),
            Vec::new(),
            CscMatrix::zeros(0, n),
            Vec::new(),
            groups,
            params,
        )
    }

    pub fn with_params(mut self, params: PenaltyParams<T>) -> Self {
        self.params = params;
        self
    }

    pub fn set_params(&mut self, params: PenaltyParams<T>) {
        self.params = params;
    }

    pub fn a(&self) -> &CscMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &[T] {
        &self.b
    }
    pub fn b_eq(&self) -> &CscMatrix<T> {
        &self.b_eq
    }
    pub fn c_eq(&self) -> &[T] {
        &self.c_eq
    }
    pub fn b_in(&self) -> &CscMatrix<T> {
        &self.b_in
    }
    pub fn c_in(&self) -> &[T] {
        &self.c_in
    }
    pub fn groups(&self) -> &GroupPartition<T> {
        &self.groups
    }
    pub fn params(&self) -> &PenaltyParams<T> {
        &self.params
    }

    /// `N = [A; B_E; B_I]`
    pub fn stacked(&self) -> &CscMatrix<T> {
        &self.stacked
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }
    pub fn n(&self) -> usize {
        self.a.ncols()
    }
    pub fn m_eq(&self) -> usize {
        self.b_eq.nrows()
    }
    pub fn m_in(&self) -> usize {
        self.b_in.nrows()
    }
    /// `m̂ = m + m_E + m_I`
    pub fn m_hat(&self) -> usize {
        self.stacked.nrows()
    }

    /// `(b; c_E; c_I)`
    pub fn stacked_rhs(&self) -> Vec<T> {
        let mut r = Vec::with_capacity(self.m_hat());
        r.extend_from_slice(&self.b);
        r.extend_from_slice(&self.c_eq);
        r.extend_from_slice(&self.c_in);
        r
    }

    /// Splits a stacked dual vector into its `(u, v_E, v_I)` blocks.
    pub fn split_dual<'a>(&self, xi: &'a [T]) -> (&'a [T], &'a [T], &'a [T]) {
        let (u, rest) = xi.split_at(self.m());
        let (ve, vi) = rest.split_at(self.m_eq());
        (u, ve, vi)
    }

    pub fn split_dual_mut<'a>(&self, xi: &'a mut [T]) -> (&'a mut [T], &'a mut [T], &'a mut [T]) {
        let (u, rest) = xi.split_at_mut(self.m());
        let (ve, vi) = rest.split_at_mut(self.m_eq());
        (u, ve, vi)
    }

    /// Primal objective `‖Ax − b‖ + p(x)`.
    pub fn primal_objective(&self, x: &[T]) -> T {
        let mut r = self.a.mul_vec(x);
        for (ri, &bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        crate::prox::h_value(&r) + crate::prox::p_value(x, &self.groups, &self.params)
    }

    /// `‖Aᵀ b‖_∞`, the scale used by the standard λ settings.
    pub fn a_tr_b_norm_inf(&self) -> T {
        self.a.tr_mul_norm_inf(&self.b)
    }
}

/// `(x, y, z, u, v_E, v_I, w, s)`: primal variables, slacks and the dual
/// variables of the constrained problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub u: Vec<T>,
    pub v_eq: Vec<T>,
    pub v_in: Vec<T>,
    pub w: Vec<T>,
    pub s: Vec<T>,
}

impl<T: Scalar> PrimalDualPoint<T> {
    pub fn zeros(problem: &Problem<T>) -> Self {
        let (m, n) = (problem.m(), problem.n());
        Self {
            x: vec![T::zero(); n],
            y: vec![T::zero(); m],
            z: vec![T::zero(); problem.m_in()],
            u: vec![T::zero(); m],
            v_eq: vec![T::zero(); problem.m_eq()],
            v_in: vec![T::zero(); problem.m_in()],
            w: vec![T::zero(); m],
            s: vec![T::zero(); n],
        }
    }

    /// Checks that every block has the dimension `problem` expects.
    pub fn check_dims(&self, problem: &Problem<T>) -> Result<()> {
        check_len("x", problem.n(), self.x.len())?;
        check_len("y", problem.m(), self.y.len())?;
        check_len("z", problem.m_in(), self.z.len())?;
        check_len("u", problem.m(), self.u.len())?;
        check_len("v_E", problem.m_eq(), self.v_eq.len())?;
        check_len("v_I", problem.m_in(), self.v_in.len())?;
        check_len("w", problem.m(), self.w.len())?;
        check_len("s", problem.n(), self.s.len())
    }

    /// The stacked dual block `(u; v_E; v_I)`.
    pub fn stacked_dual(&self) -> Vec<T> {
        let mut xi = Vec::with_capacity(self.u.len() + self.v_eq.len() + self.v_in.len());
        xi.extend_from_slice(&self.u);
        xi.extend_from_slice(&self.v_eq);
        xi.extend_from_slice(&self.v_in);
        xi
    }
}
