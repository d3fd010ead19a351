//! Brute-force reference implementations for testing. Everything here is
//! `f64`, dense and slow, and deliberately shares no code with the solver
//! crate.

use std::fmt;

/// Row-major dense matrix.
pub type Mat = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    DimensionTooLarge { dim: usize, max: usize },
    NearKink { distance: f64, radius: f64 },
    Singular { pivot: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionTooLarge { dim, max } => write!(f, "dimension {dim} exceeds {max}"),
            Self::NearKink { distance, radius } => {
                write!(f, "point within {distance:e} of a kink (radius {radius:e})")
            }
            Self::Singular { pivot } => write!(f, "singular matrix at pivot {pivot}"),
        }
    }
}

impl std::error::Error for OracleError {}

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

pub fn identity(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    let cols = a.first().map_or(0, Vec::len);
    (0..cols).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>, OracleError> {
    let n = b.len();
    let mut m: Mat = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap_or(k);
        if m[p][k] == 0.0 {
            return Err(OracleError::Singular { pivot: k });
        }
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            if f != 0.0 {
                for j in k..=n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    Ok(x)
}

/// Which function a prox is taken of.
#[derive(Debug, Clone, Copy)]
pub enum ProxTarget<'a> {
    /// `‖·‖₂`
    Norm,
    /// `λ₁ Σ ω_j ‖x_{G_j}‖ + λ₂ ‖x‖₁`
    SparseGroup {
        groups: &'a [Vec<usize>],
        weights: &'a [f64],
        lambda1: f64,
        lambda2: f64,
    },
}

pub const PROX_ORACLE_MAX_DIM: usize = 64;

/// Objective `f(w) + (1/2σ)‖w − u‖²` with exact (nonsmooth) `f`.
pub fn prox_objective(target: ProxTarget<'_>, w: &[f64], u: &[f64], sigma: f64) -> f64 {
    let quad: f64 = w.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sigma);
    quad + penalty(target, w)
}

pub fn penalty(target: ProxTarget<'_>, w: &[f64]) -> f64 {
    match target {
        ProxTarget::Norm => norm(w),
        ProxTarget::SparseGroup { groups, weights, lambda1, lambda2 } => {
            let g: f64 = groups
                .iter()
                .zip(weights)
                .map(|(g, wt)| wt * norm(&g.iter().map(|&i| w[i]).collect::<Vec<_>>()))
                .sum();
            lambda1 * g + lambda2 * w.iter().map(|v| v.abs()).sum::<f64>()
        }
    }
}

/// Smoothed objective with every norm `‖z‖` replaced by `√(‖z‖² + μ²)`,
/// its gradient and Hessian.
fn smoothed(target: ProxTarget<'_>, w: &[f64], u: &[f64], sigma: f64, mu: f64) -> (f64, Vec<f64>, Mat) {
    let n = w.len();
    let mut val: f64 = w.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sigma);
    let mut grad: Vec<f64> = w.iter().zip(u).map(|(a, b)| (a - b) / sigma).collect();
    let mut hess = identity(n);
    for row in hess.iter_mut() {
        for v in row.iter_mut() {
            *v /= sigma;
        }
    }
    let mut add_norm = |idx: &[usize], coef: f64| {
        let sq: f64 = idx.iter().map(|&i| w[i] * w[i]).sum();
        let s = (sq + mu * mu).sqrt();
        val += coef * s;
        for &i in idx {
            grad[i] += coef * w[i] / s;
        }
        for &i in idx {
            for &j in idx {
                let d = if i == j { 1.0 / s } else { 0.0 };
                hess[i][j] += coef * (d - w[i] * w[j] / (s * s * s));
            }
        }
    };
    match target {
        ProxTarget::Norm => add_norm(&(0..n).collect::<Vec<_>>(), 1.0),
        ProxTarget::SparseGroup { groups, weights, lambda1, lambda2 } => {
            for (g, wt) in groups.iter().zip(weights) {
                if lambda1 > 0.0 {
                    add_norm(g, lambda1 * wt);
                }
            }
            if lambda2 > 0.0 {
                for i in 0..n {
                    add_norm(&[i], lambda2);
                }
            }
        }
    }
    (val, grad, hess)
}

/// `argmin_w f(w) + (1/2σ)‖w − u‖²` by damped Newton on a smoothed
/// objective, driving the smoothing parameter from 1 down to 1e-13.
pub fn prox_oracle(target: ProxTarget<'_>, u: &[f64], sigma: f64) -> Result<Vec<f64>, OracleError> {
    let n = u.len();
    if n > PROX_ORACLE_MAX_DIM {
        return Err(OracleError::DimensionTooLarge { dim: n, max: PROX_ORACLE_MAX_DIM });
    }
    let mut w = u.to_vec();
    let mut mu = 1.0;
    while mu >= 1e-13 {
        for _ in 0..100 {
            let (f0, g, h) = smoothed(target, &w, u, sigma, mu);
            let step = gauss_solve(&h, &g.iter().map(|v| -v).collect::<Vec<_>>())?;
            let slope: f64 = g.iter().zip(&step).map(|(a, b)| a * b).sum();
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                let (f1, _, _) = smoothed(target, &trial, u, sigma, mu);
                if f1 <= f0 + 1e-4 * t * slope {
                    w = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if !moved || norm(&step) * t <= 1e-16 * (1.0 + norm(&w)) {
                break;
            }
        }
        mu *= 0.1;
    }
    Ok(w)
}

/// Finite-difference settings.
#[derive(Debug, Clone, Copy)]
pub struct FiniteDiffSpec {
    pub step: f64,
    /// Points closer than this to a kink are rejected.
    pub exclusion_radius: f64,
}

impl Default for FiniteDiffSpec {
    fn default() -> Self {
        Self { step: 1e-7, exclusion_radius: 1e-6 }
    }
}

pub type VectorMap<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;
pub type ScalarMap<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Central-difference Jacobian, one column per input coordinate.
/// `kink_distance` reports how far `point` is from the nearest point of
/// nondifferentiability.
pub fn finite_diff_jacobian(
    map: VectorMap<'_>,
    point: &[f64],
    spec: FiniteDiffSpec,
    kink_distance: Option<ScalarMap<'_>>,
) -> Result<Mat, OracleError> {
    if let Some(dist) = kink_distance {
        let d = dist(point);
        if d < spec.exclusion_radius {
            return Err(OracleError::NearKink { distance: d, radius: spec.exclusion_radius });
        }
    }
    let rows = map(point).len();
    let mut jac = zeros(rows, point.len());
    let mut p = point.to_vec();
    for j in 0..point.len() {
        let orig = p[j];
        p[j] = orig + spec.step;
        let plus = map(&p);
        p[j] = orig - spec.step;
        let minus = map(&p);
        p[j] = orig;
        for i in 0..rows {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * spec.step);
        }
    }
    Ok(jac)
}

/// Central-difference gradient of a scalar function.
pub fn finite_diff_gradient(f: &dyn Fn(&[f64]) -> f64, point: &[f64], step: f64) -> Vec<f64> {
    let mut p = point.to_vec();
    (0..point.len())
        .map(|j| {
            let orig = p[j];
            p[j] = orig + step;
            let plus = f(&p);
            p[j] = orig - step;
            let minus = f(&p);
            p[j] = orig;
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Dense element of `∂Prox_{σ‖·‖}(u)`: zero inside the ball, otherwise
/// `(1 − σ/‖u‖)I + σ uuᵀ/‖u‖³`.
pub fn dense_jacobian_prox_norm(u: &[f64], sigma: f64) -> Mat {
    let n = u.len();
    let nu = norm(u);
    let mut m = zeros(n, n);
    if nu <= sigma {
        return m;
    }
    for i in 0..n {
        for j in 0..n {
            m[i][j] = sigma * u[i] * u[j] / (nu * nu * nu) + if i == j { 1.0 - sigma / nu } else { 0.0 };
        }
    }
    m
}

/// Dense `(I − P*ΣP)Θ` for the sparse-group prox at `u`.
pub fn dense_jacobian_prox_sparse_group(
    u: &[f64],
    sigma: f64,
    groups: &[Vec<usize>],
    weights: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Mat {
    let n = u.len();
    let t = sigma * lambda2;
    let theta: Vec<f64> = u.iter().map(|&x| if x.abs() > t { 1.0 } else { 0.0 }).collect();
    let v: Vec<f64> = u.iter().map(|&x| x.signum() * (x.abs() - t).max(0.0)).collect();
    let mut m = zeros(n, n);
    for (g, wt) in groups.iter().zip(weights) {
        let vg: Vec<f64> = g.iter().map(|&i| v[i]).collect();
        let nv = norm(&vg);
        let radius = sigma * lambda1 * wt;
        if nv <= radius {
            continue;
        }
        for &i in g {
            for &j in g {
                let eye = if i == j { 1.0 - radius / nv } else { 0.0 };
                m[i][j] = (eye + radius * v[i] * v[j] / (nv * nv * nv)) * theta[j];
            }
        }
    }
    m
}

/// `Prox_{σp}(u)` for the sparse-group penalty, from the closed form.
pub fn prox_sparse_group_closed_form(
    u: &[f64],
    sigma: f64,
    groups: &[Vec<usize>],
    weights: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Vec<f64> {
    let t = sigma * lambda2;
    let v: Vec<f64> = u.iter().map(|&x| x.signum() * (x.abs() - t).max(0.0)).collect();
    let mut out = vec![0.0; u.len()];
    for (g, wt) in groups.iter().zip(weights) {
        let nv = norm(&g.iter().map(|&i| v[i]).collect::<Vec<_>>());
        let radius = sigma * lambda1 * wt;
        if nv > radius {
            for &i in g {
                out[i] = (1.0 - radius / nv) * v[i];
            }
        }
    }
    out
}

/// Dense data of a constrained problem for the scripted ADMM step.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub a: Mat,
    pub b: Vec<f64>,
    pub b_eq: Mat,
    pub c_eq: Vec<f64>,
    pub b_in: Mat,
    pub c_in: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// State of the semi-proximal ADMM.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub v_eq: Vec<f64>,
    pub v_in: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub w: Vec<f64>,
    pub s: Vec<f64>,
}

/// One semi-proximal ADMM iteration transcribed line by line: assemble `M`
/// and `rhs` block by block, solve by Gaussian elimination, then the
/// closed-form block updates and the multiplier steps.
pub fn admm_step_scripted(p: &DenseProblem, st: &AdmmState, sigma: f64, tau: f64, tau_tilde: f64) -> AdmmState {
    let (m, me, mi) = (p.b.len(), p.c_eq.len(), p.c_in.len());
    let n = p.a.first().map_or(0, Vec::len);
    let blocks = [&p.a, &p.b_eq, &p.b_in];
    let sizes = [m, me, mi];
    let total = m + me + mi;

    // M = (A; B_E; B_I)(Aᵀ B_Eᵀ B_Iᵀ) + blockdiag(I, τ̃σ⁻²I, I)
    let mut big = zeros(total, total);
    let mut offs = [0; 3];
    offs[1] = m;
    offs[2] = m + me;
    for (bi, blk_i) in blocks.iter().enumerate() {
        for (bj, blk_j) in blocks.iter().enumerate() {
            for r in 0..sizes[bi] {
                for c in 0..sizes[bj] {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += blk_i[r][k] * blk_j[c][k];
                    }
                    big[offs[bi] + r][offs[bj] + c] = acc;
                }
            }
        }
    }
    for i in 0..total {
        big[i][i] += if i >= m && i < m + me { tau_tilde / (sigma * sigma) } else { 1.0 };
    }

    // rhs
    let t: Vec<f64> = (0..n).map(|k| st.s[k] - st.x[k] / sigma).collect();
    let mut rhs = vec![0.0; total];
    for r in 0..m {
        rhs[r] = -dotv(&p.a[r], &t) + (st.w[r] - st.y[r] / sigma) - p.b[r] / sigma;
    }
    for r in 0..me {
        rhs[m + r] = -dotv(&p.b_eq[r], &t) + tau_tilde / (sigma * sigma) * st.v_eq[r] - p.c_eq[r] / sigma;
    }
    for r in 0..mi {
        rhs[m + me + r] = -dotv(&p.b_in[r], &t) + (st.v_hat[r] + st.z[r] / sigma) - p.c_in[r] / sigma;
    }
    let sol = gauss_solve(&big, &rhs).expect("M is positive definite");
    let u = sol[..m].to_vec();
    let v_eq = sol[m..m + me].to_vec();
    let v_in = sol[m + me..].to_vec();

    let v_hat: Vec<f64> = (0..mi).map(|r| (v_in[r] - st.z[r] / sigma).min(0.0)).collect();
    // w = Prox_{h*/σ}(y/σ + u): projection onto the unit ball
    let wy: Vec<f64> = (0..m).map(|r| st.y[r] / sigma + u[r]).collect();
    let nw = norm(&wy);
    let w: Vec<f64> = wy.iter().map(|&v| if nw > 1.0 { v / nw } else { v }).collect();
    // s = Prox_{p*/σ}(q) = q − Prox_{σp}(σq)/σ
    let mut nt = vec![0.0; n];
    for k in 0..n {
        nt[k] = (0..m).map(|r| p.a[r][k] * u[r]).sum::<f64>()
            + (0..me).map(|r| p.b_eq[r][k] * v_eq[r]).sum::<f64>()
            + (0..mi).map(|r| p.b_in[r][k] * v_in[r]).sum::<f64>();
    }
    let q: Vec<f64> = (0..n).map(|k| st.x[k] / sigma - nt[k]).collect();
    let sq: Vec<f64> = q.iter().map(|v| sigma * v).collect();
    let pr = prox_sparse_group_closed_form(&sq, sigma, &p.groups, &p.weights, p.lambda1, p.lambda2);
    let s: Vec<f64> = (0..n).map(|k| q[k] - pr[k] / sigma).collect();

    let x = (0..n).map(|k| st.x[k] - tau * sigma * (nt[k] + s[k])).collect();
    let y = (0..m).map(|r| st.y[r] - tau * sigma * (w[r] - u[r])).collect();
    let z = (0..mi).map(|r| st.z[r] - tau * sigma * (v_in[r] - v_hat[r])).collect();
    AdmmState { x, y, z, u, v_eq, v_in, v_hat, w, s }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_small() {
        let x = gauss_solve(&vec![vec![0.0, 2.0], vec![3.0, 0.0]], &[4.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(gauss_solve(&zeros(2, 2), &[1.0, 1.0]).is_err());
    }

    #[test]
    fn norm_prox_at_zero_and_outside() {
        let w = prox_oracle(ProxTarget::Norm, &[0.0, 0.0], 1.0).unwrap();
        assert!(norm(&w) < 1e-12);
        let w = prox_oracle(ProxTarget::Norm, &[6.0, 8.0], 5.0).unwrap();
        assert!((w[0] - 3.0).abs() < 1e-9 && (w[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn linear_map_jacobian_is_exact() {
        let a = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 4.0]];
        let f = |x: &[f64]| matvec(&a, x);
        let j = finite_diff_jacobian(&f, &[0.3, -0.7], FiniteDiffSpec::default(), None).unwrap();
        for (r, row) in j.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!((v - a[r][c]).abs() < 1e-8);
            }
        }
        let kink = |_: &[f64]| 0.0;
        assert!(finite_diff_jacobian(&f, &[0.0, 0.0], FiniteDiffSpec::default(), Some(&kink)).is_err());
    }
}
