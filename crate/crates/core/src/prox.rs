//! Proximal mappings of `h = ‖·‖₂`, of the sparse-group penalty
//! `p(x) = λ₁ Σ_j ω_j ‖x_{G_j}‖ + λ₂ ‖x‖₁` and of the nonnegative orthant
//! indicator, together with one element of each generalized Jacobian.
//!
//! `prox_h(u, σ)` and `prox_p(u, σ, ..)` denote `Prox_{σh}` and `Prox_{σp}`.
//! Jacobians are kept in structured form and applied in `O(n)`; the element
//! picked at nondifferentiable points is always the one whose block vanishes
//! (`V₁ = 0` on the ball boundary, `θ_i = 0` at `|u_i| = σλ₂`, the group block
//! zero when `‖P_j v‖ = σλ_{1,j}`, orthant derivative `0` at ties).

use crate::error::{check_len, Error, Result};
use crate::linalg::vector::{dot, norm1, norm2};
use crate::Scalar;

/// Partition of `{0, .., n-1}` into groups with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition<T> {
    n: usize,
    groups: Vec<Vec<usize>>,
    weights: Vec<T>,
}

impl<T: Scalar> GroupPartition<T> {
    pub fn new(n: usize, groups: Vec<Vec<usize>>, weights: Vec<T>) -> Result<Self> {
        check_len("group weights", groups.len(), weights.len())?;
        let mut seen = vec![false; n];
        for (j, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGroups(format!("group {j} is empty")));
            }
            for &i in g {
                if i >= n {
                    return Err(Error::InvalidGroups(format!(
                        "group {j} has index {i} outside 0..{n}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidGroups(format!(
                        "index {i} belongs to more than one group"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidGroups(format!("index {i} is not covered")));
        }
        if let Some(j) = weights.iter().position(|&w| !(w > T::zero() && w.is_finite())) {
            return Err(Error::InvalidGroups(format!("weight of group {j} is not positive")));
        }
        Ok(Self { n, groups, weights })
    }

    /// Groups with weights `ω_j = √|G_j|`.
    pub fn with_sqrt_weights(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let weights = groups
            .iter()
            .map(|g| T::from_usize_lossy(g.len()).sqrt())
            .collect();
        Self::new(n, groups, weights)
    }

    /// `num_groups` contiguous groups of size `⌊n/J⌋`, the remainder going to
    /// the last group; weights `√|G_j|`.
    pub fn contiguous(n: usize, num_groups: usize) -> Result<Self> {
        if num_groups == 0 || num_groups > n {
            return Err(Error::InvalidGroups(format!(
                "cannot split {n} indices into {num_groups} groups"
            )));
        }
        let size = n / num_groups;
        let groups = (0..num_groups)
            .map(|j| {
                let end = if j + 1 == num_groups { n } else { (j + 1) * size };
                (j * size..end).collect()
            })
            .collect();
        Self::with_sqrt_weights(n, groups)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    #[inline]
    pub fn group(&self, j: usize) -> &[usize] {
        &self.groups[j]
    }

    #[inline]
    pub fn weight(&self, j: usize) -> T {
        self.weights[j]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

/// Regularization weights `λ₁` (group level) and `λ₂` (entry level).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams<T> {
    pub lambda1: T,
    pub lambda2: T,
}

impl<T: Scalar> PenaltyParams<T> {
    pub fn new(lambda1: T, lambda2: T) -> Result<Self> {
        if !(lambda1 >= T::zero() && lambda2 >= T::zero())
            || !lambda1.is_finite()
            || !lambda2.is_finite()
        {
            return Err(Error::InvalidParameter(
                "regularization parameters must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// Group radius `λ_{1,j} = λ₁ ω_j`.
    #[inline]
    pub fn group_lambda(&self, groups: &GroupPartition<T>, j: usize) -> T {
        self.lambda1 * groups.weight(j)
    }
}

/// `h(x) = ‖x‖₂`
pub fn h_value<T: Scalar>(x: &[T]) -> T {
    norm2(x)
}

/// `p(x) = λ₁ Σ ω_j ‖x_{G_j}‖ + λ₂ ‖x‖₁`
pub fn p_value<T: Scalar>(x: &[T], groups: &GroupPartition<T>, params: &PenaltyParams<T>) -> T {
    let mut group_part = T::zero();
    let mut buf = Vec::new();
    for (j, g) in groups.groups().iter().enumerate() {
        buf.clear();
        buf.extend(g.iter().map(|&i| x[i]));
        group_part += groups.weight(j) * norm2(&buf);
    }
    params.lambda1 * group_part + params.lambda2 * norm1(x)
}

/// `Prox_{σh}(u)`: zero inside the ball of radius `σ`, radial shrink outside.
pub fn prox_h<T: Scalar>(u: &[T], sigma: T) -> Vec<T> {
    debug_assert!(sigma > T::zero());
    let nu = norm2(u);
    if nu <= sigma {
        return vec![T::zero(); u.len()];
    }
    let factor = T::one() - sigma / nu;
    u.iter().map(|&ui| factor * ui).collect()
}

/// `Prox_{h*/σ}(u)`, the projection onto the unit ℓ₂ ball (independent of σ
/// because `h*` is an indicator).
pub fn prox_h_conjugate<T: Scalar>(u: &[T], sigma: T) -> Vec<T> {
    debug_assert!(sigma > T::zero());
    project_unit_ball(u)
}

pub(crate) fn project_unit_ball<T: Scalar>(u: &[T]) -> Vec<T> {
    let nu = norm2(u);
    if nu <= T::one() {
        u.to_vec()
    } else {
        u.iter().map(|&ui| ui / nu).collect()
    }
}

/// Output of [`prox_p`]: the prox itself and the intermediate
/// soft-thresholded vector `v = Prox_{σp₂}(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxP<T> {
    pub result: Vec<T>,
    pub v: Vec<T>,
}

/// Elementwise soft-thresholding `sign(u) ∘ max(|u| − t, 0)`.
pub fn soft_threshold<T: Scalar>(u: &[T], t: T) -> Vec<T> {
    u.iter()
        .map(|&ui| {
            let a = ui.abs() - t;
            if a > T::zero() {
                ui.signum() * a
            } else {
                T::zero()
            }
        })
        .collect()
}

/// `Prox_{σp}(u) = v − Π_{B₂}(v)` with `v = Prox_{σp₂}(u)`: entrywise soft
/// threshold at `σλ₂` followed by group shrinkage at `σλ_{1,j}`.
pub fn prox_p<T: Scalar>(
    u: &[T],
    sigma: T,
    groups: &GroupPartition<T>,
    params: &PenaltyParams<T>,
) -> ProxP<T> {
    debug_assert!(sigma > T::zero());
    debug_assert_eq!(u.len(), groups.dim());
    let v = soft_threshold(u, sigma * params.lambda2);
    let mut result = vec![T::zero(); u.len()];
    for (j, g) in groups.groups().iter().enumerate() {
        let nv = group_norm(&v, g);
        let radius = sigma * params.group_lambda(groups, j);
        if nv > radius {
            let factor = T::one() - radius / nv;
            for &i in g {
                result[i] = factor * v[i];
            }
        }
    }
    ProxP { result, v }
}

/// `Prox_{p*/σ}(u) = u − σ⁻¹ Prox_{σp}(σu)`, the projection onto
/// `λ₂B_∞ + (λ_{1,1}B₂ × … × λ_{1,J}B₂)`.
pub fn prox_p_conjugate<T: Scalar>(
    u: &[T],
    sigma: T,
    groups: &GroupPartition<T>,
    params: &PenaltyParams<T>,
) -> Vec<T> {
    let scaled: Vec<T> = u.iter().map(|&ui| sigma * ui).collect();
    let pp = prox_p(&scaled, sigma, groups, params);
    u.iter()
        .zip(&pp.result)
        .map(|(&ui, &ri)| ui - ri / sigma)
        .collect()
}

/// `Π_{R₊}(u)`
pub fn project_orthant<T: Scalar>(u: &[T]) -> Vec<T> {
    u.iter().map(|&ui| ui.max(T::zero())).collect()
}

/// `Π_{R₋}(u) = −Π_{R₊}(−u)`
pub fn project_neg_orthant<T: Scalar>(u: &[T]) -> Vec<T> {
    u.iter().map(|&ui| ui.min(T::zero())).collect()
}

#[inline]
pub(crate) fn group_norm<T: Scalar>(v: &[T], g: &[usize]) -> T {
    let scale = g.iter().fold(T::zero(), |acc, &i| acc.max(v[i].abs()));
    if scale == T::zero() {
        return scale;
    }
    let mut acc = T::zero();
    for &i in g {
        let t = v[i] / scale;
        acc += t * t;
    }
    scale * acc.sqrt()
}

/// Element `V₁` of `∂Prox_{σh}(u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxHJacobian<T> {
    /// `‖u‖ ≤ σ`: `V₁ = 0`.
    Inside,
    /// `‖u‖ > σ`: `V₁ = (1 − ratio) I + ratio · û ûᵀ` with `ratio = σ/‖u‖`.
    Outside { ratio: T, unit: Vec<T> },
}

impl<T: Scalar> ProxHJacobian<T> {
    pub fn apply(&self, d: &[T]) -> Vec<T> {
        match self {
            Self::Inside => vec![T::zero(); d.len()],
            Self::Outside { ratio, unit } => {
                let proj = *ratio * dot(unit, d);
                let keep = T::one() - *ratio;
                d.iter()
                    .zip(unit)
                    .map(|(&di, &ui)| keep * di + proj * ui)
                    .collect()
            }
        }
    }
}

pub fn jacobian_prox_h<T: Scalar>(u: &[T], sigma: T) -> ProxHJacobian<T> {
    let nu = norm2(u);
    if nu <= sigma {
        ProxHJacobian::Inside
    } else {
        ProxHJacobian::Outside {
            ratio: sigma / nu,
            unit: u.iter().map(|&ui| ui / nu).collect(),
        }
    }
}

/// Per-group selection of `Σ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupCase<T> {
    /// `‖P_j v‖ ≤ σλ_{1,j}`: `Σ_j = I`, the group block of `M` vanishes.
    Zero,
    /// `‖P_j v‖ > σλ_{1,j}`: `ratio = σλ_{1,j}/‖P_j v‖ ∈ [0, 1)`.
    Shrink { ratio: T, norm: T },
}

/// Element `M = (I − P*ΣP)Θ` of the surrogate Jacobian of `Prox_{σp}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxPJacobian<T> {
    /// Diagonal of `Θ`, entries in `{0, 1}`.
    pub theta: Vec<T>,
    /// `v = Prox_{σp₂}(u)`; nonzero exactly where `θ_i = 1`.
    pub v: Vec<T>,
    pub cases: Vec<GroupCase<T>>,
    groups: Vec<Vec<usize>>,
}

impl<T: Scalar> ProxPJacobian<T> {
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// `M d` in `O(n)`.
    pub fn apply(&self, d: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); d.len()];
        for (g, case) in self.groups.iter().zip(&self.cases) {
            if let GroupCase::Shrink { ratio, norm } = *case {
                let mut proj = T::zero();
                for &i in g {
                    proj += self.v[i] * self.theta[i] * d[i];
                }
                proj = ratio * proj / (norm * norm);
                let keep = T::one() - ratio;
                for &i in g {
                    out[i] = keep * self.theta[i] * d[i] + proj * self.v[i];
                }
            }
        }
        out
    }
}

pub fn jacobian_prox_p<T: Scalar>(
    u: &[T],
    sigma: T,
    groups: &GroupPartition<T>,
    params: &PenaltyParams<T>,
) -> ProxPJacobian<T> {
    let v = soft_threshold(u, sigma * params.lambda2);
    jacobian_prox_p_from_v(u, v, sigma, groups, params)
}

/// Same as [`jacobian_prox_p`] but reuses an already computed
/// `v = Prox_{σp₂}(u)`.
pub fn jacobian_prox_p_from_v<T: Scalar>(
    u: &[T],
    v: Vec<T>,
    sigma: T,
    groups: &GroupPartition<T>,
    params: &PenaltyParams<T>,
) -> ProxPJacobian<T> {
    let threshold = sigma * params.lambda2;
    let theta = u
        .iter()
        .map(|&ui| if ui.abs() > threshold { T::one() } else { T::zero() })
        .collect();
    let cases = groups
        .groups()
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let nv = group_norm(&v, g);
            let radius = sigma * params.group_lambda(groups, j);
            if nv > radius {
                GroupCase::Shrink {
                    ratio: radius / nv,
                    norm: nv,
                }
            } else {
                GroupCase::Zero
            }
        })
        .collect();
    ProxPJacobian {
        theta,
        v,
        cases,
        groups: groups.groups().to_vec(),
    }
}

/// Diagonal element of `∂Π_{R₊}(u)`: `1` where `u_i > 0`, else `0`.
pub fn jacobian_orthant<T: Scalar>(u: &[T]) -> Vec<T> {
    u.iter()
        .map(|&ui| if ui > T::zero() { T::one() } else { T::zero() })
        .collect()
}
