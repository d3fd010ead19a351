//! Semi-proximal ADMM on the dual problem.
//!
//! The `(u, v_E, v_I)` block is updated by one solve with the fixed matrix
//! `M = N Nᵀ + blockdiag(I, τ̃σ⁻²I, I)`, factored once; `(v̂_I, w, s)` have
//! closed forms; the multipliers take steps of length `τσ`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use crate::alm::{IterationInfo, Progress, SolveReport, Termination};
use crate::error::{check_len, Error, Result};
use crate::kkt::{compute_kkt_residuals, count_nnz};
use crate::linalg::vector::norm2;
use crate::linalg::{pcg_solve, Cholesky, CscMatrix, LinearOperator, PcgOptions};
use crate::problem::{PrimalDualPoint, Problem};
use crate::prox::{project_unit_ball, prox_p_conjugate};
use crate::Scalar;

/// Largest `m̂` factored densely.
const DENSE_LIMIT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams<T> {
    pub sigma: T,
    /// Multiplier step, in `(0, (1+√5)/2)`.
    pub tau: T,
    /// Weight of the proximal term on `v_E`.
    pub tau_tilde: T,
    pub max_iters: usize,
    pub tol: T,
    /// `η_kkt` is evaluated every this many iterations.
    pub check_every: usize,
    pub time_limit: Option<Duration>,
}

impl<T: Scalar> Default for AdmmParams<T> {
    fn default() -> Self {
        Self {
            sigma: T::one(),
            tau: T::lit(1.618),
            tau_tilde: T::one(),
            max_iters: 10_000,
            tol: T::lit(1e-6),
            check_every: 10,
            time_limit: None,
        }
    }
}

impl<T: Scalar> AdmmParams<T> {
    pub fn validate(&self) -> Result<()> {
        let golden = (T::one() + T::lit(5.0).sqrt()) / T::lit(2.0);
        let ok = self.sigma > T::zero()
            && self.tau > T::zero()
            && self.tau < golden
            && self.tau_tilde >= T::zero()
            && self.tol > T::zero()
            && self.check_every > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("ADMM parameters out of range".into()))
        }
    }
}

enum MSolver<T> {
    Dense(Cholesky<T>),
    Pcg { diag: Vec<T> },
}

/// Cached factorization of `M`.
pub struct AdmmFactorization<T> {
    n_mat: CscMatrix<T>,
    /// `blockdiag(I, τ̃σ⁻²I, I)` as a vector.
    shift: Vec<T>,
    solver: MSolver<T>,
    solves: AtomicUsize,
}

impl<T: Scalar> std::fmt::Debug for AdmmFactorization<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdmmFactorization")
            .field("dim", &self.shift.len())
            .field("dense", &matches!(self.solver, MSolver::Dense(_)))
            .finish()
    }
}

struct MOperator<'a, T> {
    n_mat: &'a CscMatrix<T>,
    shift: &'a [T],
}

impl<T: Scalar> LinearOperator<T> for MOperator<'_, T> {
    fn nrows(&self) -> usize {
        self.shift.len()
    }
    fn ncols(&self) -> usize {
        self.shift.len()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        let t = self.n_mat.tr_mul_vec(x);
        self.n_mat.mul_vec_into(&t, y);
        for ((yi, &xi), &d) in y.iter_mut().zip(x).zip(self.shift) {
            *yi += d * xi;
        }
    }
    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        self.apply(x, y);
    }
}

pub fn factorize_m<T: Scalar>(problem: &Problem<T>, params: &AdmmParams<T>) -> Result<AdmmFactorization<T>> {
    params.validate()?;
    let (m, me, mi) = (problem.m(), problem.m_eq(), problem.m_in());
    let mut shift = vec![T::one(); m + me + mi];
    let prox_weight = params.tau_tilde / (params.sigma * params.sigma);
    shift[m..m + me].iter_mut().for_each(|d| *d = prox_weight);
    let n_mat = problem.stacked().clone();
    let solver = if shift.len() <= DENSE_LIMIT {
        let mut mat = n_mat.gram_outer();
        mat.add_diagonal(&shift);
        MSolver::Dense(mat.cholesky()?)
    } else {
        let mut diag = shift.clone();
        for c in 0..n_mat.ncols() {
            for (r, v) in n_mat.col_iter(c) {
                diag[r] += v * v;
            }
        }
        if diag.iter().any(|&d| !(d > T::zero())) {
            return Err(Error::NotPositiveDefinite { index: 0, value: 0.0 });
        }
        MSolver::Pcg { diag }
    };
    Ok(AdmmFactorization {
        n_mat,
        shift,
        solver,
        solves: AtomicUsize::new(0),
    })
}

impl<T: Scalar> AdmmFactorization<T> {
    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// Number of solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// `M x`
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.dim()];
        MOperator { n_mat: &self.n_mat, shift: &self.shift }.apply(x, &mut y);
        y
    }

    /// `M⁻¹ rhs`
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        check_len("ADMM rhs", self.dim(), rhs.len())?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        match &self.solver {
            MSolver::Dense(chol) => Ok(chol.solve(rhs)),
            MSolver::Pcg { diag } => {
                let op = MOperator { n_mat: &self.n_mat, shift: &self.shift };
                let opts = PcgOptions::new(self.dim().max(1000), T::lit(1e-11)).with_preconditioner(diag.clone());
                Ok(pcg_solve(&op, rhs, &opts, None)?.solution)
            }
        }
    }
}

/// Runs ADMM, factoring `M` first.
pub fn admm_solve<T: Scalar>(
    problem: &Problem<T>,
    params: &AdmmParams<T>,
    warm: Option<&PrimalDualPoint<T>>,
    progress: Option<Progress<'_, T>>,
) -> Result<(PrimalDualPoint<T>, SolveReport<T>)> {
    let factor = factorize_m(problem, params)?;
    admm_solve_with(problem, params, &factor, warm, progress)
}

/// Runs ADMM with a factorization built by [`factorize_m`] for the same
/// problem data, `σ` and `τ̃`.
pub fn admm_solve_with<T: Scalar>(
    problem: &Problem<T>,
    params: &AdmmParams<T>,
    factor: &AdmmFactorization<T>,
    warm: Option<&PrimalDualPoint<T>>,
    mut progress: Option<Progress<'_, T>>,
) -> Result<(PrimalDualPoint<T>, SolveReport<T>)> {
    params.validate()?;
    check_len("ADMM factorization", problem.m_hat(), factor.dim())?;
    let start = Instant::now();
    let mut pt = match warm {
        Some(p) => {
            p.check_dims(problem)?;
            p.clone()
        }
        None => PrimalDualPoint::zeros(problem),
    };
    let mut v_hat: Vec<T> = pt.v_in.iter().map(|&v| v.min(T::zero())).collect();
    let mut kkt = compute_kkt_residuals(&pt, problem);
    let mut eta_history = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut iters = 0;

    if !(warm.is_some() && kkt.eta < params.tol) {
        for k in 0..params.max_iters {
            admm_step(problem, params, factor, &mut pt, &mut v_hat)?;
            iters = k + 1;
            let last = k + 1 == params.max_iters;
            let out_of_time = params.time_limit.is_some_and(|cap| start.elapsed() >= cap);
            if iters % params.check_every == 0 || last || out_of_time {
                kkt = compute_kkt_residuals(&pt, problem);
                eta_history.push(kkt.eta);
                if let Some(cb) = progress.as_mut() {
                    cb(&IterationInfo {
                        k,
                        eta: kkt.eta,
                        r_p: kkt.r_p,
                        r_d: kkt.r_d,
                        r_c: kkt.r_c,
                        r_g: kkt.r_g,
                        pobj: kkt.pobj,
                        dobj: kkt.dobj,
                        sigma: params.sigma,
                        newton_steps: 0,
                    });
                }
                if kkt.eta < params.tol {
                    termination = Termination::Converged;
                    break;
                }
            }
            if out_of_time {
                termination = Termination::TimeLimit;
                break;
            }
        }
    } else {
        termination = Termination::Converged;
    }

    let report = SolveReport {
        iters,
        newton_iters: 0,
        eta_history,
        kkt,
        time: start.elapsed(),
        nnz: count_nnz(&pt.x),
        termination,
    };
    Ok((pt, report))
}

/// One iteration; `v_hat` carries `v̂_I` between calls.
pub fn admm_step<T: Scalar>(
    problem: &Problem<T>,
    params: &AdmmParams<T>,
    factor: &AdmmFactorization<T>,
    pt: &mut PrimalDualPoint<T>,
    v_hat: &mut Vec<T>,
) -> Result<()> {
    let sigma = params.sigma;
    let inv = T::one() / sigma;
    let (m, me) = (problem.m(), problem.m_eq());

    // rhs = −N(s − x/σ) + (w − y/σ; τ̃σ⁻²v_E; v̂_I + z/σ) − (b; c_E; c_I)/σ
    let t: Vec<T> = pt.s.iter().zip(&pt.x).map(|(&s, &x)| s - inv * x).collect();
    let mut rhs = problem.stacked().mul_vec(&t);
    let data = problem.stacked_rhs();
    for (r, &d) in rhs.iter_mut().zip(&data) {
        *r = -*r - inv * d;
    }
    for (r, (&w, &y)) in rhs[..m].iter_mut().zip(pt.w.iter().zip(&pt.y)) {
        *r += w - inv * y;
    }
    let prox_weight = params.tau_tilde * inv * inv;
    for (r, &v) in rhs[m..m + me].iter_mut().zip(&pt.v_eq) {
        *r += prox_weight * v;
    }
    for (r, (&vh, &z)) in rhs[m + me..].iter_mut().zip(v_hat.iter().zip(&pt.z)) {
        *r += vh + inv * z;
    }
    let xi = factor.solve(&rhs)?;
    let (u, v_eq, v_in) = problem.split_dual(&xi);

    *v_hat = v_in
        .iter()
        .zip(&pt.z)
        .map(|(&v, &z)| (v - inv * z).min(T::zero()))
        .collect();
    let wy: Vec<T> = pt.y.iter().zip(u).map(|(&y, &ui)| inv * y + ui).collect();
    let w = project_unit_ball(&wy);
    let nt = problem.stacked().tr_mul_vec(&xi);
    let sx: Vec<T> = pt.x.iter().zip(&nt).map(|(&x, &a)| inv * x - a).collect();
    let s = prox_p_conjugate(&sx, sigma, problem.groups(), problem.params());

    let step = params.tau * sigma;
    for ((x, &a), &si) in pt.x.iter_mut().zip(&nt).zip(&s) {
        *x -= step * (a + si);
    }
    for ((y, &wi), &ui) in pt.y.iter_mut().zip(&w).zip(u) {
        *y -= step * (wi - ui);
    }
    for ((z, &vi), &vh) in pt.z.iter_mut().zip(v_in).zip(v_hat.iter()) {
        *z -= step * (vi - vh);
    }
    pt.u = u.to_vec();
    pt.v_eq = v_eq.to_vec();
    pt.v_in = v_in.to_vec();
    pt.w = w;
    pt.s = s;
    debug_assert!(norm2(&pt.w) <= T::one() + T::lit(1e-10));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{GroupPartition, PenaltyParams};

    #[test]
    fn zero_data_is_a_fixed_point() {
        let p = Problem::unconstrained(
            CscMatrix::zeros(3, 4),
            vec![0.0; 3],
            GroupPartition::contiguous(4, 2).unwrap(),
            PenaltyParams::new(0.1, 0.1).unwrap(),
        )
        .unwrap();
        let (pt, rep) = admm_solve(&p, &AdmmParams::default(), None, None).unwrap();
        assert!(rep.converged());
        assert_eq!(rep.iters, 10);
        assert!(pt.x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_m_when_n_is_zero() {
        let p = Problem::new(
            CscMatrix::zeros(2, 3),
            vec![0.0; 2],
            CscMatrix::zeros(1, 3),
            vec![0.0],
            CscMatrix::zeros(0, 3),
            vec![],
            GroupPartition::contiguous(3, 1).unwrap(),
            PenaltyParams::new(0.1, 0.1).unwrap(),
        )
        .unwrap();
        let params = AdmmParams { sigma: 2.0, tau_tilde: 4.0, ..AdmmParams::default() };
        let f = factorize_m(&p, &params).unwrap();
        assert_eq!(f.solve(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(f.solve_count(), 1);
    }
}
