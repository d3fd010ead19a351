//! The regularized semismooth Newton system `(H + εI) Δ = −∇φ`.
//!
//! `H = σ(blockdiag(V₁, 0, V₃) + N V₂ Nᵀ)` is never formed. `N V₂ Nᵀ` is
//! replaced by `D Dᵀ` where `D` has one column per active index of every
//! shrinking group plus one column per shrinking group, and `V₁` (identity
//! minus a scaled projector) is kept as a diagonal term plus one extra
//! low-rank column. Solves go through a Woodbury reduction onto the small
//! core, a dense factorization of the assembled matrix when the core
//! reduction is ill-conditioned, or diagonally preconditioned CG.

use crate::error::{check_len, Error, Result};
use crate::linalg::vector::{axpy, norm2};
use crate::linalg::{pcg_solve, Cholesky, CscMatrix, DenseMatrix, LinearOperator, PcgOptions};
use crate::prox::{GroupCase, GroupPartition, PenaltyParams, ProxHJacobian, ProxPJacobian};
use crate::Scalar;

/// Below this `min Λ / max Λ` the Woodbury reduction is replaced by a
/// dense factorization.
const WOODBURY_MIN_CONDITION: f64 = 1e-8;
const REFINEMENT_STEPS: usize = 2;

/// Active index sets of the Newton system.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSets {
    /// `Ξ_j = {i ∈ G_j : θ_i = 1}` for every group.
    pub xi: Vec<Vec<usize>>,
    /// `Ξ_> = {j : ‖P_j v‖ > σλ_{1,j}}`, ascending.
    pub shrinking: Vec<usize>,
    /// `Σ_{j ∈ Ξ_>} |Ξ_j|`
    pub r: usize,
    /// `|Ξ_>|`
    pub r2: usize,
}

pub fn build_active_sets<T: Scalar>(
    v: &[T],
    theta: &[T],
    sigma: T,
    groups: &GroupPartition<T>,
    params: &PenaltyParams<T>,
) -> ActiveSets {
    let mut xi = Vec::with_capacity(groups.len());
    let mut shrinking = Vec::new();
    let mut r = 0;
    for (j, g) in groups.groups().iter().enumerate() {
        let members: Vec<usize> = g.iter().copied().filter(|&i| theta[i] == T::one()).collect();
        let radius = sigma * params.group_lambda(groups, j);
        if crate::prox::group_norm(v, g) > radius {
            shrinking.push(j);
            r += members.len();
        }
        xi.push(members);
    }
    let r2 = shrinking.len();
    ActiveSets { xi, shrinking, r, r2 }
}

/// How [`solve_newton`] picks its method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveStrategy {
    /// Direct when `r + r₂ ≤ 500` and `m̂ ≤ 5000`, PCG otherwise.
    #[default]
    Auto,
    Direct,
    Pcg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Woodbury,
    DenseCholesky,
    Pcg,
}

#[derive(Debug, Clone)]
pub struct NewtonSolution<T> {
    pub delta: Vec<T>,
    /// `‖H Δ − rhs‖`, measured without the ridge.
    pub residual: T,
    pub method: SolveMethod,
    pub pcg_iters: usize,
    /// False when PCG hit its iteration cap before reaching the tolerance.
    pub converged: bool,
}

/// `H + εI = σ(Diag + D Dᵀ + ℓ ℓᵀ) + εI` on `R^{m̂}`.
#[derive(Debug, Clone)]
pub struct NewtonSystem<T> {
    sigma: T,
    eps: T,
    diag: Vec<T>,
    /// `D = [B C]`, `m̂ × (r + r₂)`.
    d: DenseMatrix<T>,
    /// Rank-one part of `V₁`, padded with zeros to length `m̂`.
    v1_col: Option<Vec<T>>,
}

/// Builds the structured Newton matrix from the three Jacobian elements.
/// `m` is the length of the `u` block and `m_eq` the length of the `v_E`
/// block; `jac_r` covers the `v_I` block.
#[allow(clippy::too_many_arguments)]
pub fn assemble_system<T: Scalar>(
    jac_h: &ProxHJacobian<T>,
    jac_p: &ProxPJacobian<T>,
    jac_r: &[T],
    n_mat: &CscMatrix<T>,
    m: usize,
    m_eq: usize,
    active: &ActiveSets,
    sigma: T,
    eps: T,
) -> Result<NewtonSystem<T>> {
    let m_hat = n_mat.nrows();
    check_len("newton: m + m_E + m_I", m_hat, m + m_eq + jac_r.len())?;
    check_len("newton: theta length", n_mat.ncols(), jac_p.theta.len())?;
    if !(sigma > T::zero()) || !(eps >= T::zero()) {
        return Err(Error::InvalidParameter(
            "newton system needs sigma > 0 and eps >= 0".into(),
        ));
    }

    let mut diag = vec![T::zero(); m_hat];
    let v1_col = match jac_h {
        ProxHJacobian::Inside => None,
        ProxHJacobian::Outside { ratio, unit } => {
            check_len("newton: V1 dimension", m, unit.len())?;
            diag[..m].iter_mut().for_each(|d| *d = T::one() - *ratio);
            let scale = ratio.sqrt();
            let mut col = vec![T::zero(); m_hat];
            for (c, &e) in col.iter_mut().zip(unit) {
                *c = scale * e;
            }
            Some(col)
        }
    };
    diag[m + m_eq..].copy_from_slice(jac_r);

    let width = active.r + active.r2;
    let mut d = DenseMatrix::zeros(m_hat, width);
    let mut col = 0;
    let mut c_cols = Vec::with_capacity(active.r2);
    for &j in &active.shrinking {
        let (ratio, norm) = match jac_p.cases[j] {
            GroupCase::Shrink { ratio, norm } => (ratio, norm),
            GroupCase::Zero => {
                return Err(Error::NegativeLowRankWeight {
                    group: j,
                    value: f64::NAN,
                })
            }
        };
        let b_weight = T::one() - ratio;
        if b_weight < T::zero() {
            return Err(Error::NegativeLowRankWeight {
                group: j,
                value: b_weight.to_f64_lossy(),
            });
        }
        let b_scale = b_weight.sqrt();
        let c_scale = (ratio / (norm * norm)).sqrt();
        let mut c_j = vec![T::zero(); m_hat];
        for &i in &active.xi[j] {
            n_mat.add_col_to(i, b_scale, d.col_mut(col));
            n_mat.add_col_to(i, c_scale * jac_p.v[i], &mut c_j);
            col += 1;
        }
        c_cols.push(c_j);
    }
    for c_j in c_cols {
        d.col_mut(col).copy_from_slice(&c_j);
        col += 1;
    }
    debug_assert_eq!(col, width);

    Ok(NewtonSystem {
        sigma,
        eps,
        diag,
        d,
        v1_col,
    })
}

impl<T: Scalar> NewtonSystem<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    /// The factor `D`; its width is `r + r₂`.
    pub fn low_rank_factor(&self) -> &DenseMatrix<T> {
        &self.d
    }

    /// Diagonal part of `blockdiag(V₁, 0, V₃)`.
    pub fn diagonal_part(&self) -> &[T] {
        &self.diag
    }

    /// `√(σ/‖y + σu‖) · (y + σu)/‖y + σu‖` when `V₁ ≠ 0`.
    pub fn v1_column(&self) -> Option<&[T]> {
        self.v1_col.as_deref()
    }

    /// `out = H d`, without the ridge.
    pub fn apply_h(&self, x: &[T], out: &mut [T]) {
        let mut tmp = vec![T::zero(); self.d.ncols()];
        self.d.tr_mul_vec_into(x, &mut tmp);
        self.d.mul_vec_into(&tmp, out);
        for ((o, &di), &xi) in out.iter_mut().zip(&self.diag).zip(x) {
            *o += di * xi;
        }
        if let Some(l) = &self.v1_col {
            axpy(crate::linalg::dot(l, x), l, out);
        }
        crate::linalg::vector::scale(self.sigma, out);
    }

    /// `diag(H) + ε`, computed from the structured representation.
    pub fn preconditioner(&self) -> Vec<T> {
        let mut p = self.diag.clone();
        for c in 0..self.d.ncols() {
            for (pi, &v) in p.iter_mut().zip(self.d.col(c)) {
                *pi += v * v;
            }
        }
        if let Some(l) = &self.v1_col {
            for (pi, &v) in p.iter_mut().zip(l) {
                *pi += v * v;
            }
        }
        p.iter().map(|&v| self.sigma * v + self.eps).collect()
    }

    /// Dense `H + εI`; meant for small systems and tests.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut h = self.low_rank_outer();
        for i in 0..n {
            for j in 0..n {
                let v = self.sigma * h.get(i, j);
                h.set(i, j, v);
            }
        }
        let ridge: Vec<T> = self.diag.iter().map(|&d| self.sigma * d + self.eps).collect();
        h.add_diagonal(&ridge);
        h
    }

    /// `D Dᵀ + ℓ ℓᵀ` as a dense matrix.
    fn low_rank_outer(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut g = self.d.transpose().gram();
        if let Some(l) = &self.v1_col {
            for j in 0..n {
                for i in 0..n {
                    let v = g.get(i, j) + l[i] * l[j];
                    g.set(i, j, v);
                }
            }
        }
        g
    }

    /// The low-rank columns `[D ℓ]` used by the Woodbury reduction.
    fn woodbury_columns(&self) -> DenseMatrix<T> {
        match &self.v1_col {
            None => self.d.clone(),
            Some(l) => {
                let n = self.dim();
                let k = self.d.ncols();
                let mut data = Vec::with_capacity(n * (k + 1));
                data.extend_from_slice(self.d.as_col_major());
                data.extend_from_slice(l);
                DenseMatrix::from_col_major(n, k + 1, data).expect("sizes agree")
            }
        }
    }
}

impl<T: Scalar> LinearOperator<T> for NewtonSystem<T> {
    fn nrows(&self) -> usize {
        self.dim()
    }
    fn ncols(&self) -> usize {
        self.dim()
    }
    /// `y = (H + εI) x`
    fn apply(&self, x: &[T], y: &mut [T]) {
        self.apply_h(x, y);
        axpy(self.eps, x, y);
    }
    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        self.apply(x, y);
    }
}

/// Factorization of `H + εI` reused across refinement steps.
enum DirectFactor<T> {
    /// `(Λ + U Uᵀ)/σ`-form: `Λ`, `U`, and the Cholesky factor of
    /// `I + Uᵀ Λ⁻¹ U`.
    Woodbury {
        lambda: Vec<T>,
        u: DenseMatrix<T>,
        core: Cholesky<T>,
    },
    Dense(Cholesky<T>),
}

impl<T: Scalar> DirectFactor<T> {
    fn new(sys: &NewtonSystem<T>) -> Result<Self> {
        let n = sys.dim();
        let ridge = sys.eps / sys.sigma;
        let lambda: Vec<T> = sys.diag.iter().map(|&d| d + ridge).collect();
        let lmax = lambda.iter().fold(T::zero(), |a, &b| a.max(b));
        let lmin = lambda.iter().fold(T::infinity(), |a, &b| a.min(b));
        let u = sys.woodbury_columns();
        let well_conditioned = lmin > T::zero() && lmin >= T::lit(WOODBURY_MIN_CONDITION) * lmax;
        if well_conditioned && u.ncols() < n {
            let mut scaled = u.clone();
            for c in 0..scaled.ncols() {
                for (v, &l) in scaled.col_mut(c).iter_mut().zip(&lambda) {
                    *v /= l.sqrt();
                }
            }
            let mut core = scaled.gram();
            core.add_diagonal(&vec![T::one(); u.ncols()]);
            if let Ok(core) = core.cholesky() {
                return Ok(Self::Woodbury { lambda, u, core });
            }
        }
        Ok(Self::Dense(sys.to_dense().cholesky()?))
    }

    /// Solves `(H + εI) x = rhs`.
    fn solve(&self, sys: &NewtonSystem<T>, rhs: &[T]) -> Vec<T> {
        match self {
            Self::Dense(chol) => chol.solve(rhs),
            Self::Woodbury { lambda, u, core } => {
                // (Λ + UUᵀ)⁻¹ y = Λ⁻¹y − Λ⁻¹U (I + UᵀΛ⁻¹U)⁻¹ UᵀΛ⁻¹y, y = rhs/σ
                let ly: Vec<T> = rhs
                    .iter()
                    .zip(lambda)
                    .map(|(&r, &l)| r / (sys.sigma * l))
                    .collect();
                let t = core.solve(&u.tr_mul_vec(&ly));
                let ut = u.mul_vec(&t);
                ly.iter()
                    .zip(&ut)
                    .zip(lambda)
                    .map(|((&a, &b), &l)| a - b / l)
                    .collect()
            }
        }
    }

    fn method(&self) -> SolveMethod {
        match self {
            Self::Woodbury { .. } => SolveMethod::Woodbury,
            Self::Dense(_) => SolveMethod::DenseCholesky,
        }
    }
}

/// Solves `(H + εI) Δ = rhs`. The PCG path stops once the residual of the
/// regularized system is below `pcg_tol`; the reported residual is always
/// `‖HΔ − rhs‖`.
pub fn solve_newton<T: Scalar>(
    system: &NewtonSystem<T>,
    rhs: &[T],
    strategy: SolveStrategy,
    pcg_tol: T,
) -> Result<NewtonSolution<T>> {
    let n = system.dim();
    check_len("newton rhs", n, rhs.len())?;
    let direct = match strategy {
        SolveStrategy::Direct => true,
        SolveStrategy::Pcg => false,
        SolveStrategy::Auto => system.d.ncols() <= 500 && n <= 5000,
    };
    if direct {
        match DirectFactor::new(system) {
            Ok(factor) => {
                let mut delta = factor.solve(system, rhs);
                let mut r = vec![T::zero(); n];
                for _ in 0..REFINEMENT_STEPS {
                    system.apply(&delta, &mut r);
                    for (ri, &bi) in r.iter_mut().zip(rhs) {
                        *ri = bi - *ri;
                    }
                    let corr = factor.solve(system, &r);
                    axpy(T::one(), &corr, &mut delta);
                }
                if delta.iter().all(|v| v.is_finite()) {
                    let residual = h_residual(system, &delta, rhs);
                    return Ok(NewtonSolution {
                        delta,
                        residual,
                        method: factor.method(),
                        pcg_iters: 0,
                        converged: true,
                    });
                }
                log::debug!("direct newton solve produced non-finite values, using pcg");
            }
            Err(e) => log::debug!("direct newton factorization failed ({e}), using pcg"),
        }
    }

    let scale = T::one().max(norm2(rhs));
    let tol = (pcg_tol / scale).max(T::epsilon() * T::epsilon());
    let opts = PcgOptions::new(n.min(500), tol).with_preconditioner(system.preconditioner());
    let out = pcg_solve(system, rhs, &opts, None)?;
    let residual = h_residual(system, &out.solution, rhs);
    Ok(NewtonSolution {
        delta: out.solution,
        residual,
        method: SolveMethod::Pcg,
        pcg_iters: out.iters,
        converged: out.converged,
    })
}

fn h_residual<T: Scalar>(system: &NewtonSystem<T>, delta: &[T], rhs: &[T]) -> T {
    let mut r = vec![T::zero(); delta.len()];
    system.apply_h(delta, &mut r);
    for (ri, &bi) in r.iter_mut().zip(rhs) {
        *ri -= bi;
    }
    norm2(&r)
}
