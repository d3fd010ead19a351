//! Relative KKT residuals, objective values and the sparsity count used to
//! judge and report solutions.

use crate::linalg::vector::{dot, norm1, norm2, norm2_blocks};
use crate::problem::{PrimalDualPoint, Problem};
use crate::prox::{project_unit_ball, prox_p_conjugate};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals<T> {
    /// Relative primal infeasibility.
    pub r_p: T,
    /// Relative dual infeasibility.
    pub r_d: T,
    /// Relative complementarity.
    pub r_c: T,
    /// Relative duality gap.
    pub r_g: T,
    /// `max(R_P, R_D, R_C)`
    pub eta: T,
    pub pobj: T,
    pub dobj: T,
}

/// Evaluates all residuals at `point`. The conjugate terms of the dual
/// objective are indicators and are taken as zero.
pub fn compute_kkt_residuals<T: Scalar>(point: &PrimalDualPoint<T>, problem: &Problem<T>) -> KktResiduals<T> {
    let PrimalDualPoint { x, y, z, u, v_eq, v_in, w, s } = point;

    // R_P
    let ax = problem.a().mul_vec(x);
    let r1: Vec<T> = ax
        .iter()
        .zip(y)
        .zip(problem.b())
        .map(|((&a, &yi), &bi)| a - yi - bi)
        .collect();
    let mut r2 = problem.b_eq().mul_vec(x);
    for (r, &c) in r2.iter_mut().zip(problem.c_eq()) {
        *r -= c;
    }
    let bix = problem.b_in().mul_vec(x);
    let r3: Vec<T> = bix
        .iter()
        .zip(problem.c_in())
        .zip(z)
        .map(|((&a, &c), &zi)| a - c + zi)
        .collect();
    let p_den = T::one() + norm2(problem.b()) + norm2(problem.c_eq()) + norm2(problem.c_in());
    let r_p = (norm2(&r1) + norm2(&r2) + norm2(&r3)) / p_den;

    // R_D
    let mut dual_res = problem.stacked().tr_mul_vec(&point.stacked_dual());
    for (d, &si) in dual_res.iter_mut().zip(s) {
        *d += si;
    }
    let w_minus_u: Vec<T> = w.iter().zip(u).map(|(&a, &b)| a - b).collect();
    let d_den = T::one() + norm2(u) + norm2(v_eq) + norm2(v_in) + norm2(s) + norm2(w);
    let r_d = (norm2(&dual_res) + norm2(&w_minus_u)) / d_den;

    // R_C, unit-parameter proxes
    let wy: Vec<T> = w.iter().zip(y).map(|(&a, &b)| a + b).collect();
    let pw = project_unit_ball(&wy);
    let c1: Vec<T> = w.iter().zip(&pw).map(|(&a, &b)| a - b).collect();
    let sx: Vec<T> = s.iter().zip(x).map(|(&a, &b)| a + b).collect();
    let ps = prox_p_conjugate(&sx, T::one(), problem.groups(), problem.params());
    let c2: Vec<T> = s.iter().zip(&ps).map(|(&a, &b)| a - b).collect();
    let c3: Vec<T> = bix
        .iter()
        .zip(problem.c_in())
        .zip(v_in)
        .map(|((&a, &c), &vi)| vi - (a - c + vi).min(T::zero()))
        .collect();
    let c_den = T::one() + norm2(w) + norm2(s) + norm2(v_in);
    let r_c = (norm2(&c1) + norm2(&c2) + norm2(&c3)) / c_den;

    let pobj = problem.primal_objective(x);
    let dobj = dual_objective(point, problem);
    let r_g = (pobj - dobj).abs() / (T::one() + pobj.abs() + dobj.abs());
    KktResiduals {
        r_p,
        r_d,
        r_c,
        r_g,
        eta: r_p.max(r_d).max(r_c),
        pobj,
        dobj,
    }
}

/// `−(⟨b,u⟩ + ⟨c_E,v_E⟩ + ⟨c_I,v_I⟩)`
pub fn dual_objective<T: Scalar>(point: &PrimalDualPoint<T>, problem: &Problem<T>) -> T {
    -(dot(problem.b(), &point.u) + dot(problem.c_eq(), &point.v_eq) + dot(problem.c_in(), &point.v_in))
}

/// Smallest `k` such that the `k` largest magnitudes of `x` carry at least
/// `0.9999 ‖x‖₁`; zero for `x = 0`.
pub fn count_nnz<T: Scalar>(x: &[T]) -> usize {
    let total = norm1(x);
    if total == T::zero() {
        return 0;
    }
    let mut mags: Vec<T> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let target = T::lit(0.9999) * total;
    let mut acc = T::zero();
    for (k, &m) in mags.iter().enumerate() {
        acc += m;
        if acc >= target {
            return k + 1;
        }
    }
    mags.len()
}

/// `‖(x, y, z)‖`
pub(crate) fn multiplier_norm<T: Scalar>(x: &[T], y: &[T], z: &[T]) -> T {
    norm2_blocks(&[x, y, z])
}
