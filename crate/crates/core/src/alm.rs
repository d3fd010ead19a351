//! Augmented Lagrangian method on the dual, with semismooth Newton inner
//! solves.
//!
//! Each outer iteration approximately minimizes `φ_k` and moves the
//! multipliers to
//!
//! ```text
//! x⁺ = x − σ(Aᵀu + B_Eᵀv_E + B_Iᵀv_I + s)
//! y⁺ = y − σ(w − u)
//! z⁺ = −Π₊(σv_I − z)
//! ```
//!
//! which coincide with `Prox_{σp}(x − σNᵀξ)`, `Prox_{σh}(y + σu)` and
//! `−Π₊(σv_I − z)` at the inner iterate.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::kkt::{compute_kkt_residuals, count_nnz, multiplier_norm, KktResiduals};
use crate::linalg::vector::{norm2, norm2_blocks};
use crate::problem::{PrimalDualPoint, Problem};
use crate::ssn::{ssn_minimize, InnerProblem, SsnParams, SsnStatus};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlmParams<T> {
    pub sigma0: T,
    /// Penalty growth factor, `≥ 1`.
    pub rho: T,
    pub sigma_max: T,
    /// Stop once `η_kkt < tol`.
    pub tol: T,
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
    /// `ε_k = δ_k = c / (k+1)²`
    pub c_summable: T,
    /// `δ′_k = c′ / (k+1)`
    pub c_vanishing: T,
    /// When set, σ grows only after inner solves with at most this many
    /// Newton steps; otherwise it grows every iteration.
    pub fast_inner_steps: Option<usize>,
    /// Inner solves also stop once `‖∇φ‖ ≤ floor · tol · (1 + ‖b‖ + ‖c_E‖ + ‖c_I‖)`.
    pub inner_floor: T,
}

impl<T: Scalar> Default for AlmParams<T> {
    fn default() -> Self {
        Self {
            sigma0: T::one(),
            rho: T::lit(1.3),
            sigma_max: T::lit(1e6),
            tol: T::lit(1e-6),
            max_iters: 200,
            time_limit: None,
            c_summable: T::one(),
            c_vanishing: T::one(),
            fast_inner_steps: None,
            inner_floor: T::lit(0.1),
        }
    }
}

impl<T: Scalar> AlmParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma0 > T::zero()
            && self.rho >= T::one()
            && self.sigma_max >= self.sigma0
            && self.tol > T::zero()
            && self.c_summable > T::zero()
            && self.c_vanishing >= T::zero()
            && self.inner_floor >= T::zero();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("augmented Lagrangian parameters out of range".into()))
        }
    }

    /// `ε_k = δ_k`
    pub fn eps_k(&self, k: usize) -> T {
        let k1 = T::from_usize_lossy(k + 1);
        self.c_summable / (k1 * k1)
    }

    /// `δ′_k`
    pub fn delta_prime_k(&self, k: usize) -> T {
        self.c_vanishing / T::from_usize_lossy(k + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerCriterion {
    /// `‖∇φ_k‖ ≤ ε_k/σ_k · max(1, ‖(x, y, z)‖)`
    A,
    /// `‖∇φ_k‖ ≤ δ_k/σ_k · ‖Δ(x, y, z)‖`
    B,
    /// `‖∇φ_k‖ ≤ δ′_k/(2σ_k) · ‖Δ(x, y, z)‖`
    BPrime,
}

/// Scalar form of the inner stopping tests. `mult_norm` is `‖(x, y, z)‖`
/// and `delta_norm` is `‖(x⁺ − x, y⁺ − y, z⁺ − z)‖`; `tolerance` is `ε_k`,
/// `δ_k` or `δ′_k` according to `criterion`.
pub fn inner_stop_satisfied<T: Scalar>(
    criterion: InnerCriterion,
    grad_norm: T,
    sigma: T,
    tolerance: T,
    mult_norm: T,
    delta_norm: T,
) -> bool {
    let bound = match criterion {
        InnerCriterion::A => tolerance / sigma * T::one().max(mult_norm),
        InnerCriterion::B => tolerance / sigma * delta_norm,
        InnerCriterion::BPrime => tolerance / (T::lit(2.0) * sigma) * delta_norm,
    };
    grad_norm <= bound
}

/// Inner stopping test at outer iteration `k` given old and candidate
/// multipliers.
#[allow(clippy::too_many_arguments)]
pub fn check_inner_stop<T: Scalar>(
    criterion: InnerCriterion,
    params: &AlmParams<T>,
    k: usize,
    sigma: T,
    grad_norm: T,
    old: (&[T], &[T], &[T]),
    new: (&[T], &[T], &[T]),
) -> bool {
    let tolerance = match criterion {
        InnerCriterion::A | InnerCriterion::B => params.eps_k(k),
        InnerCriterion::BPrime => params.delta_prime_k(k),
    };
    let mult_norm = multiplier_norm(old.0, old.1, old.2);
    let dx = diff(new.0, old.0);
    let dy = diff(new.1, old.1);
    let dz = diff(new.2, old.2);
    let delta_norm = norm2_blocks(&[&dx, &dy, &dz]);
    inner_stop_satisfied(criterion, grad_norm, sigma, tolerance, mult_norm, delta_norm)
}

fn diff<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&p, &q)| p - q).collect()
}

/// Emitted once per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationInfo<T> {
    pub k: usize,
    pub eta: T,
    pub r_p: T,
    pub r_d: T,
    pub r_c: T,
    pub r_g: T,
    pub pobj: T,
    pub dobj: T,
    pub sigma: T,
    pub newton_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    TimeLimit,
    /// The inner solver could not decrease `φ` any further.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub iters: usize,
    /// Total Newton steps; zero for ADMM.
    pub newton_iters: usize,
    pub eta_history: Vec<T>,
    pub kkt: KktResiduals<T>,
    pub time: Duration,
    pub nnz: usize,
    pub termination: Termination,
}

impl<T: Scalar> SolveReport<T> {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

pub type Progress<'a, T> = &'a mut dyn FnMut(&IterationInfo<T>);

/// Runs the augmented Lagrangian method from `warm` (all zeros when
/// absent).
pub fn alm_solve<T: Scalar>(
    problem: &Problem<T>,
    params: &AlmParams<T>,
    ssn_params: &SsnParams<T>,
    warm: Option<&PrimalDualPoint<T>>,
    mut progress: Option<Progress<'_, T>>,
) -> Result<(PrimalDualPoint<T>, SolveReport<T>)> {
    params.validate()?;
    ssn_params.validate()?;
    let start = Instant::now();
    let mut point = match warm {
        Some(p) => {
            p.check_dims(problem)?;
            p.clone()
        }
        None => PrimalDualPoint::zeros(problem),
    };
    let data_scale = T::one() + norm2(problem.b()) + norm2(problem.c_eq()) + norm2(problem.c_in());
    let floor = params.inner_floor * params.tol * data_scale;

    let mut kkt = compute_kkt_residuals(&point, problem);
    let mut eta_history = Vec::new();
    let mut sigma = params.sigma0;
    let mut newton_iters = 0;
    let mut termination = Termination::MaxIterations;
    let mut iters = 0;

    if warm.is_some() && kkt.eta < params.tol {
        termination = Termination::Converged;
    } else {
        for k in 0..params.max_iters {
            let inner = InnerProblem {
                problem,
                x: &point.x,
                y: &point.y,
                z: &point.z,
                sigma,
            };
            let xi0 = point.stacked_dual();
            let old = (&point.x[..], &point.y[..], &point.z[..]);
            let mut stop = |info: &crate::ssn::StopInfo<'_, T>| {
                if info.grad_norm <= floor {
                    return true;
                }
                let new = (info.x_new, info.y_new, info.z_new);
                check_inner_stop(InnerCriterion::A, params, k, sigma, info.grad_norm, old, new)
                    && check_inner_stop(InnerCriterion::BPrime, params, k, sigma, info.grad_norm, old, new)
            };
            let out = ssn_minimize(&inner, Some(&xi0), ssn_params, &mut stop)?;
            let steps = out.report.iters;
            newton_iters += steps;
            iters = k + 1;

            let st = out.state;
            let (u, v_eq, v_in) = problem.split_dual(&st.xi);
            point = PrimalDualPoint {
                x: st.prox_p,
                y: st.prox_h,
                z: st.proj_r.iter().map(|&r| -r).collect(),
                u: u.to_vec(),
                v_eq: v_eq.to_vec(),
                v_in: v_in.to_vec(),
                w: out.w,
                s: out.s,
            };
            kkt = compute_kkt_residuals(&point, problem);
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
                    sigma,
                    newton_steps: steps,
                });
            }
            log::debug!(
                "alm k={k} eta={:e} rp={:e} rd={:e} rc={:e} sigma={:e} newton={steps}",
                kkt.eta,
                kkt.r_p,
                kkt.r_d,
                kkt.r_c,
                sigma
            );

            if kkt.eta < params.tol {
                termination = Termination::Converged;
                break;
            }
            if out.report.status == SsnStatus::LineSearchFailed && steps == 0 {
                termination = Termination::Stalled;
                break;
            }
            if params.time_limit.is_some_and(|cap| start.elapsed() >= cap) {
                termination = Termination::TimeLimit;
                break;
            }
            if params.fast_inner_steps.is_none_or(|cap| steps <= cap) {
                sigma = (sigma * params.rho).min(params.sigma_max);
            }
        }
    }

    if norm2(&point.y) < T::lit(1e-10) * (T::one() + norm2(problem.b())) {
        log::warn!("residual multiplier y is nearly zero; the Newton systems may be close to singular");
    }
    let report = SolveReport {
        iters,
        newton_iters,
        eta_history,
        kkt,
        time: start.elapsed(),
        nnz: count_nnz(&point.x),
        termination,
    };
    Ok((point, report))
}
