mod common;

use common::*;
use rand::Rng;
use sqrtlasso::linalg::DenseMatrix;
use sqrtlasso::prox::*;
use sqrtlasso_oracle::{
    dense_jacobian_prox_norm, dense_jacobian_prox_sparse_group, finite_diff_jacobian, prox_objective, prox_oracle,
    FiniteDiffSpec, ProxTarget,
};

fn log_uniform(r: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (r.gen_range(lo.ln()..hi.ln())).exp()
}

struct Instance {
    u: Vec<f64>,
    sigma: f64,
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
}

impl Instance {
    fn random(seed: u64, max_dim: usize) -> Self {
        let mut r = rng(seed);
        let n = r.gen_range(1..=max_dim);
        let scale = log_uniform(&mut r, 0.1, 5.0);
        let u = gauss(&mut r, n).iter().map(|v| scale * v).collect();
        let groups = random_groups(&mut r, n);
        let weights = sqrt_weights(&groups);
        let lambda1 = if r.gen_bool(0.15) { 0.0 } else { log_uniform(&mut r, 0.01, 2.0) };
        let lambda2 = if r.gen_bool(0.15) { 0.0 } else { log_uniform(&mut r, 0.01, 2.0) };
        Self { u, sigma: log_uniform(&mut r, 0.05, 5.0), groups, weights, lambda1, lambda2 }
    }

    fn partition(&self) -> GroupPartition<f64> {
        GroupPartition::new(self.u.len(), self.groups.clone(), self.weights.clone()).unwrap()
    }

    fn params(&self) -> PenaltyParams<f64> {
        PenaltyParams::new(self.lambda1, self.lambda2).unwrap()
    }

    fn target(&self) -> ProxTarget<'_> {
        ProxTarget::SparseGroup {
            groups: &self.groups,
            weights: &self.weights,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
        }
    }
}

#[test]
fn prox_h_matches_oracle() {
    for seed in 0..40 {
        let inst = Instance::random(seed, 64);
        let closed = prox_h(&inst.u, inst.sigma);
        let oracle = prox_oracle(ProxTarget::Norm, &inst.u, inst.sigma).unwrap();
        assert!(max_abs_diff(&closed, &oracle) <= 1e-7, "seed {seed}");
        let f_closed = prox_objective(ProxTarget::Norm, &closed, &inst.u, inst.sigma);
        let f_oracle = prox_objective(ProxTarget::Norm, &oracle, &inst.u, inst.sigma);
        assert!(f_oracle >= f_closed - 1e-10);
    }
}

#[test]
fn prox_p_matches_oracle() {
    for seed in 100..140 {
        let inst = Instance::random(seed, 64);
        let closed = prox_p(&inst.u, inst.sigma, &inst.partition(), &inst.params()).result;
        let oracle = prox_oracle(inst.target(), &inst.u, inst.sigma).unwrap();
        assert!(max_abs_diff(&closed, &oracle) <= 1e-7, "seed {seed}");
        let f_closed = prox_objective(inst.target(), &closed, &inst.u, inst.sigma);
        let f_oracle = prox_objective(inst.target(), &oracle, &inst.u, inst.sigma);
        assert!(f_oracle >= f_closed - 1e-10);
    }
}

#[test]
fn prox_of_norm_at_zero_is_zero() {
    assert_eq!(prox_h(&[0.0; 4], 1.0), vec![0.0; 4]);
    assert_eq!(prox_oracle(ProxTarget::Norm, &[0.0; 4], 1.0).unwrap(), vec![0.0; 4]);
    assert!(prox_oracle(ProxTarget::Norm, &[0.0; 65], 1.0).is_err());
}

#[test]
fn moreau_identity() {
    for seed in 0..200 {
        let inst = Instance::random(seed, 40);
        let t = inst.sigma;
        let x = &inst.u;
        let scaled: Vec<f64> = x.iter().map(|v| v / t).collect();
        let tol = 1e-13 * (1.0 + norm(x));

        let h1 = prox_h(x, t);
        let h2 = prox_h_conjugate(&scaled, t);
        let res: Vec<f64> = (0..x.len()).map(|i| h1[i] + t * h2[i] - x[i]).collect();
        assert!(norm(&res) <= tol, "h seed {seed}");

        let p1 = prox_p(x, t, &inst.partition(), &inst.params()).result;
        let p2 = prox_p_conjugate(&scaled, t, &inst.partition(), &inst.params());
        let res: Vec<f64> = (0..x.len()).map(|i| p1[i] + t * p2[i] - x[i]).collect();
        assert!(norm(&res) <= tol, "p seed {seed}");
    }
}

#[test]
fn prox_optimality_under_perturbation() {
    for seed in 0..10 {
        let inst = Instance::random(seed, 30);
        let mut r = rng(seed + 1000);
        let wh = prox_h(&inst.u, inst.sigma);
        let wp = prox_p(&inst.u, inst.sigma, &inst.partition(), &inst.params()).result;
        let fh = prox_objective(ProxTarget::Norm, &wh, &inst.u, inst.sigma);
        let fp = prox_objective(inst.target(), &wp, &inst.u, inst.sigma);
        for _ in 0..1000 {
            let d = gauss(&mut r, inst.u.len());
            let len = r.gen_range(0.0..1e-3) / norm(&d);
            let ph: Vec<f64> = wh.iter().zip(&d).map(|(a, b)| a + len * b).collect();
            let pp: Vec<f64> = wp.iter().zip(&d).map(|(a, b)| a + len * b).collect();
            assert!(fh <= prox_objective(ProxTarget::Norm, &ph, &inst.u, inst.sigma) + 1e-14);
            assert!(fp <= prox_objective(inst.target(), &pp, &inst.u, inst.sigma) + 1e-14);
        }
    }
}

#[test]
fn nonexpansive() {
    for seed in 0..200 {
        let inst = Instance::random(seed, 30);
        let mut r = rng(seed + 7);
        let other: Vec<f64> = inst.u.iter().map(|v| v + 0.5 * r.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let gap = norm(&inst.u.iter().zip(&other).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dh: Vec<f64> = prox_h(&inst.u, inst.sigma)
            .iter()
            .zip(prox_h(&other, inst.sigma))
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm(&dh) <= gap * (1.0 + 1e-12));
        let (g, p) = (inst.partition(), inst.params());
        let dp: Vec<f64> = prox_p(&inst.u, inst.sigma, &g, &p)
            .result
            .iter()
            .zip(prox_p(&other, inst.sigma, &g, &p).result)
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm(&dp) <= gap * (1.0 + 1e-12));
    }
}

fn materialize(apply: impl Fn(&[f64]) -> Vec<f64>, n: usize) -> Vec<Vec<f64>> {
    // column j = apply(e_j); returned row-major
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            apply(&e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

#[test]
fn prox_p_jacobian_is_symmetric_psd_with_spectrum_in_unit_interval() {
    for seed in 0..30 {
        let inst = Instance::random(seed, 40);
        let n = inst.u.len();
        let jac = jacobian_prox_p(&inst.u, inst.sigma, &inst.partition(), &inst.params());
        let m = materialize(|d| jac.apply(d), n);
        let oracle = dense_jacobian_prox_sparse_group(
            &inst.u,
            inst.sigma,
            &inst.groups,
            &inst.weights,
            inst.lambda1,
            inst.lambda2,
        );
        for i in 0..n {
            assert!(max_abs_diff(&m[i], &oracle[i]) <= 1e-12);
            for j in 0..n {
                assert!((m[i][j] - m[j][i]).abs() <= 1e-14);
            }
        }
        // M ⪰ 0 and I − M ⪰ 0
        let shifted = |sign: f64, base: f64| {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| sign * m[i][j] + if i == j { base + 1e-10 } else { 0.0 }).collect())
                .collect();
            DenseMatrix::from_rows(&rows).unwrap().cholesky().is_ok()
        };
        assert!(shifted(1.0, 0.0), "M not PSD, seed {seed}");
        assert!(shifted(-1.0, 1.0), "I - M not PSD, seed {seed}");
    }
}

fn frob_rel(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            num += (x - y) * (x - y);
            den += y * y;
        }
    }
    num.sqrt() / den.sqrt().max(1e-12)
}

#[test]
fn jacobians_match_finite_differences() {
    let spec = FiniteDiffSpec::default();
    let mut checked = [0usize; 3];
    let mut seed = 0;
    while checked.iter().any(|&c| c < 50) {
        seed += 1;
        let inst = Instance::random(seed, 20);
        let n = inst.u.len();
        let sigma = inst.sigma;

        if checked[0] < 50 {
            let f = |x: &[f64]| prox_h(x, sigma);
            let kink = |x: &[f64]| (norm(x) - sigma).abs();
            if let Ok(fd) = finite_diff_jacobian(&f, &inst.u, spec, Some(&kink)) {
                let jac = jacobian_prox_h(&inst.u, sigma);
                let mat = materialize(|d| jac.apply(d), n);
                let oracle = dense_jacobian_prox_norm(&inst.u, sigma);
                assert!(frob_rel(&mat, &oracle) <= 1e-12);
                if oracle.iter().flatten().any(|&v| v != 0.0) {
                    assert!(frob_rel(&fd, &mat) <= 1e-4, "h seed {seed}");
                } else {
                    assert!(fd.iter().flatten().all(|&v| v.abs() <= 1e-6));
                }
                checked[0] += 1;
            }
        }

        if checked[1] < 50 {
            let (g, p) = (inst.partition(), inst.params());
            let f = |x: &[f64]| prox_p(x, sigma, &g, &p).result;
            let kink = |x: &[f64]| {
                let t = sigma * inst.lambda2;
                let v = soft_threshold(x, t);
                let entry = x.iter().map(|xi| (xi.abs() - t).abs()).fold(f64::INFINITY, f64::min);
                let group = inst
                    .groups
                    .iter()
                    .zip(&inst.weights)
                    .map(|(grp, w)| {
                        let nv = grp.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
                        (nv - sigma * inst.lambda1 * w).abs()
                    })
                    .fold(f64::INFINITY, f64::min);
                entry.min(group)
            };
            if let Ok(fd) = finite_diff_jacobian(&f, &inst.u, spec, Some(&kink)) {
                let jac = jacobian_prox_p(&inst.u, sigma, &g, &p);
                let mat = materialize(|d| jac.apply(d), n);
                if mat.iter().flatten().any(|&v| v != 0.0) {
                    assert!(frob_rel(&fd, &mat) <= 1e-4, "p seed {seed}");
                } else {
                    assert!(fd.iter().flatten().all(|&v| v.abs() <= 1e-6));
                }
                checked[1] += 1;
            }
        }

        if checked[2] < 50 {
            let f = |x: &[f64]| project_orthant(x);
            let kink = |x: &[f64]| x.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            if let Ok(fd) = finite_diff_jacobian(&f, &inst.u, spec, Some(&kink)) {
                let diag = jacobian_orthant(&inst.u);
                let mat: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
                    .collect();
                if diag.iter().any(|&v| v != 0.0) {
                    assert!(frob_rel(&fd, &mat) <= 1e-4);
                }
                checked[2] += 1;
            }
        }
    }
}
