//! Semismooth Newton method for the inner problem `min φ(u, v_E, v_I)` of the
//! augmented Lagrangian loop, with the multipliers `(x, y, z)` and `σ` held
//! fixed.
//!
//! With `ξ = (u; v_E; v_I)` and `N = [A; B_E; B_I]`,
//!
//! ```text
//! φ(ξ) = (1/2σ)(‖Prox_{σh}(y + σu)‖² + ‖Prox_{σp}(x − σNᵀξ)‖² + ‖Π₊(σv_I − z)‖²)
//!        + ⟨(b; c_E; c_I), ξ⟩ − (1/2σ)(‖x‖² + ‖y‖² + ‖z‖²)
//! ```
//!
//! The conjugate terms `h*(w)` and `p*(s)` are indicators evaluated at
//! points that are feasible by construction, so they contribute zero.

use crate::error::{Error, Result};
use crate::linalg::vector::{all_finite, axpy, dot, norm2, norm2_sq};
use crate::newton::{assemble_system, build_active_sets, solve_newton, NewtonSystem, SolveMethod, SolveStrategy};
use crate::problem::Problem;
use crate::prox::{jacobian_orthant, jacobian_prox_h, jacobian_prox_p_from_v, prox_h, prox_p};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnParams<T> {
    /// Armijo constant, in `(0, 1/2)`.
    pub mu: T,
    /// Cap on the linear solve tolerance, in `(0, 1)`.
    pub eta_bar: T,
    /// Forcing exponent, in `(0, 1]`.
    pub tau: T,
    /// Ridge scale, in `(0, 1)`.
    pub nu1: T,
    /// Ridge cap, in `(0, 1)`.
    pub nu2: T,
    /// Backtracking factor, in `(0, 1)`.
    pub delta: T,
    pub max_iters: usize,
    pub max_line_search: usize,
    pub strategy: SolveStrategy,
}

impl<T: Scalar> Default for SsnParams<T> {
    fn default() -> Self {
        Self {
            mu: T::lit(1e-4),
            eta_bar: T::lit(0.1),
            tau: T::lit(0.2),
            nu1: T::lit(1e-3),
            nu2: T::lit(0.5),
            delta: T::lit(0.5),
            max_iters: 100,
            max_line_search: 50,
            strategy: SolveStrategy::Auto,
        }
    }
}

impl<T: Scalar> SsnParams<T> {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: T| v > T::zero() && v < T::one();
        let ok = self.mu > T::zero()
            && self.mu < T::lit(0.5)
            && open_unit(self.eta_bar)
            && self.tau > T::zero()
            && self.tau <= T::one()
            && open_unit(self.nu1)
            && open_unit(self.nu2)
            && open_unit(self.delta)
            && self.max_line_search > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter("semismooth Newton parameters out of range".into()))
        }
    }
}

/// Fixed data of one inner problem.
#[derive(Debug, Clone, Copy)]
pub struct InnerProblem<'a, T> {
    pub problem: &'a Problem<T>,
    pub x: &'a [T],
    pub y: &'a [T],
    pub z: &'a [T],
    pub sigma: T,
}

/// Everything derived from one `ξ`, recomputed together.
#[derive(Debug, Clone)]
pub struct InnerState<T> {
    pub xi: Vec<T>,
    /// `y + σu`
    pub u_h: Vec<T>,
    /// `x − σNᵀξ`
    pub u_p: Vec<T>,
    /// `σv_I − z`
    pub u_r: Vec<T>,
    /// `Prox_{σh}(u_h)`, the candidate `y⁺`.
    pub prox_h: Vec<T>,
    /// `Prox_{σp}(u_p)`, the candidate `x⁺`.
    pub prox_p: Vec<T>,
    /// Soft-threshold stage of `Prox_{σp}(u_p)`.
    pub v: Vec<T>,
    /// `Π₊(u_r)`; the candidate `z⁺` is its negative.
    pub proj_r: Vec<T>,
    pub phi: T,
    pub grad: Vec<T>,
    pub grad_norm: T,
}

impl<'a, T: Scalar> InnerProblem<'a, T> {
    fn constant(&self) -> T {
        (norm2_sq(self.x) + norm2_sq(self.y) + norm2_sq(self.z)) / (T::lit(2.0) * self.sigma)
    }

    pub fn evaluate(&self, xi: &[T]) -> InnerState<T> {
        let p = self.problem;
        let sigma = self.sigma;
        let (u, _, v_in) = p.split_dual(xi);
        let u_h: Vec<T> = self.y.iter().zip(u).map(|(&yi, &ui)| yi + sigma * ui).collect();
        let mut u_p = p.stacked().tr_mul_vec(xi);
        for (a, &xi_) in u_p.iter_mut().zip(self.x) {
            *a = xi_ - sigma * *a;
        }
        let u_r: Vec<T> = v_in.iter().zip(self.z).map(|(&vi, &zi)| sigma * vi - zi).collect();

        let ph = prox_h(&u_h, sigma);
        let pp = prox_p(&u_p, sigma, p.groups(), p.params());
        let pr: Vec<T> = u_r.iter().map(|&a| a.max(T::zero())).collect();

        let two_sigma = T::lit(2.0) * sigma;
        let rhs = p.stacked_rhs();
        let phi = (norm2_sq(&ph) + norm2_sq(&pp.result) + norm2_sq(&pr)) / two_sigma + dot(&rhs, xi)
            - self.constant();

        // ∇φ = (y⁺; 0; Π₊(u_r)) − N x⁺ + (b; c_E; c_I)
        let mut grad = p.stacked().mul_vec(&pp.result);
        for (g, &r) in grad.iter_mut().zip(&rhs) {
            *g = r - *g;
        }
        for (g, &h) in grad.iter_mut().zip(&ph) {
            *g += h;
        }
        let off = p.m() + p.m_eq();
        for (g, &r) in grad[off..].iter_mut().zip(&pr) {
            *g += r;
        }
        let grad_norm = norm2(&grad);
        InnerState {
            xi: xi.to_vec(),
            u_h,
            u_p,
            u_r,
            prox_h: ph,
            prox_p: pp.result,
            v: pp.v,
            proj_r: pr,
            phi,
            grad,
            grad_norm,
        }
    }

    /// `H + εI` at `state`, in structured form.
    pub fn newton_system(&self, state: &InnerState<T>, eps: T) -> Result<NewtonSystem<T>> {
        let p = self.problem;
        let jp = jacobian_prox_p_from_v(&state.u_p, state.v.clone(), self.sigma, p.groups(), p.params());
        let active = build_active_sets(&jp.v, &jp.theta, self.sigma, p.groups(), p.params());
        assemble_system(
            &jacobian_prox_h(&state.u_h, self.sigma),
            &jp,
            &jacobian_orthant(&state.u_r),
            p.stacked(),
            p.m(),
            p.m_eq(),
            &active,
            self.sigma,
            eps,
        )
    }

    /// `w = Prox_{h*/σ}(y/σ + u) = (u_h − Prox_{σh}(u_h))/σ`
    pub fn dual_w(&self, state: &InnerState<T>) -> Vec<T> {
        state
            .u_h
            .iter()
            .zip(&state.prox_h)
            .map(|(&a, &b)| (a - b) / self.sigma)
            .collect()
    }

    /// `s = Prox_{p*/σ}(x/σ − Nᵀξ) = (u_p − Prox_{σp}(u_p))/σ`
    pub fn dual_s(&self, state: &InnerState<T>) -> Vec<T> {
        state
            .u_p
            .iter()
            .zip(&state.prox_p)
            .map(|(&a, &b)| (a - b) / self.sigma)
            .collect()
    }
}

pub fn eval_phi<T: Scalar>(xi: &[T], x: &[T], y: &[T], z: &[T], sigma: T, problem: &Problem<T>) -> T {
    InnerProblem { problem, x, y, z, sigma }.evaluate(xi).phi
}

pub fn eval_grad_phi<T: Scalar>(xi: &[T], x: &[T], y: &[T], z: &[T], sigma: T, problem: &Problem<T>) -> Vec<T> {
    InnerProblem { problem, x, y, z, sigma }.evaluate(xi).grad
}

/// Passed to the stopping callback before each Newton step.
#[derive(Debug)]
pub struct StopInfo<'a, T> {
    pub iter: usize,
    pub grad_norm: T,
    /// Candidate multipliers the outer loop would move to.
    pub x_new: &'a [T],
    pub y_new: &'a [T],
    /// `−Π₊(σv_I − z)`
    pub z_new: &'a [T],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsnStatus {
    /// The stopping callback accepted the iterate.
    Stopped,
    MaxIterations,
    /// No step length gave any decrease of `φ`.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct SsnReport<T> {
    /// Newton steps taken.
    pub iters: usize,
    /// `‖∇φ‖` at every iterate, starting with the initial one.
    pub grad_norms: Vec<T>,
    /// `φ` at every iterate, starting with the initial one.
    pub phi_values: Vec<T>,
    pub step_sizes: Vec<T>,
    /// `⟨∇φ, Δ⟩` of every direction taken.
    pub slopes: Vec<T>,
    pub methods: Vec<SolveMethod>,
    pub status: SsnStatus,
}

#[derive(Debug, Clone)]
pub struct SsnOutcome<T> {
    pub state: InnerState<T>,
    pub w: Vec<T>,
    pub s: Vec<T>,
    pub report: SsnReport<T>,
}

/// Minimizes `φ` from `xi0` (zero when absent). `stop` is consulted at
/// every iterate, including the first, and ends the loop when it returns
/// true.
pub fn ssn_minimize<T: Scalar>(
    inner: &InnerProblem<'_, T>,
    xi0: Option<&[T]>,
    params: &SsnParams<T>,
    stop: &mut dyn FnMut(&StopInfo<'_, T>) -> bool,
) -> Result<SsnOutcome<T>> {
    params.validate()?;
    let m_hat = inner.problem.m_hat();
    let xi0 = match xi0 {
        Some(v) => {
            crate::error::check_len("initial dual point", m_hat, v.len())?;
            v.to_vec()
        }
        None => vec![T::zero(); m_hat],
    };
    let mut state = inner.evaluate(&xi0);
    let mut report = SsnReport {
        iters: 0,
        grad_norms: vec![state.grad_norm],
        phi_values: vec![state.phi],
        step_sizes: Vec::new(),
        slopes: Vec::new(),
        methods: Vec::new(),
        status: SsnStatus::MaxIterations,
    };
    let roundoff = T::lit(50.0) * T::epsilon();

    loop {
        if !state.phi.is_finite() || !all_finite(&state.grad) {
            return Err(Error::NonFinite("inner gradient"));
        }
        let z_new: Vec<T> = state.proj_r.iter().map(|&r| -r).collect();
        let info = StopInfo {
            iter: report.iters,
            grad_norm: state.grad_norm,
            x_new: &state.prox_p,
            y_new: &state.prox_h,
            z_new: &z_new,
        };
        if stop(&info) {
            report.status = SsnStatus::Stopped;
            break;
        }
        if report.iters >= params.max_iters {
            report.status = SsnStatus::MaxIterations;
            break;
        }

        let gn = state.grad_norm;
        let eps = params.nu1 * params.nu2.min(gn);
        let eta = params.eta_bar.min(gn.powf(T::one() + params.tau));
        let system = inner.newton_system(&state, eps)?;
        let rhs: Vec<T> = state.grad.iter().map(|&g| -g).collect();
        let sol = solve_newton(&system, &rhs, params.strategy, eta)?;
        let mut dir = sol.delta;
        let mut slope = dot(&state.grad, &dir);
        if !(slope < T::zero()) {
            log::debug!("newton direction is not a descent direction, using -grad");
            dir = rhs;
            slope = -gn * gn;
        }

        // Armijo backtracking; the slack absorbs roundoff in φ.
        let slack = roundoff * (T::one() + state.phi.abs());
        let mut alpha = T::one();
        let mut accepted = None;
        let mut last_trial = None;
        for _ in 0..params.max_line_search {
            let mut trial_xi = state.xi.clone();
            axpy(alpha, &dir, &mut trial_xi);
            let trial = inner.evaluate(&trial_xi);
            if trial.phi <= state.phi + params.mu * alpha * slope + slack {
                accepted = Some(trial);
                break;
            }
            last_trial = Some((trial, alpha));
            alpha *= params.delta;
        }
        let next = match accepted {
            Some(t) => t,
            None => match last_trial {
                Some((t, a)) if t.phi < state.phi => {
                    alpha = a;
                    t
                }
                _ => {
                    report.status = SsnStatus::LineSearchFailed;
                    break;
                }
            },
        };
        state = next;
        report.iters += 1;
        report.grad_norms.push(state.grad_norm);
        report.phi_values.push(state.phi);
        report.step_sizes.push(alpha);
        report.slopes.push(slope);
        report.methods.push(sol.method);
    }

    let w = inner.dual_w(&state);
    let s = inner.dual_s(&state);
    Ok(SsnOutcome { state, w, s, report })
}
