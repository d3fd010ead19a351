#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sqrtlasso::linalg::CscMatrix;
use sqrtlasso::problem::Problem;
use sqrtlasso::prox::{GroupPartition, PenaltyParams};
use sqrtlasso_oracle::Mat;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random partition of `0..n` into nonempty groups of mixed sizes.
pub fn random_groups(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut groups = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.gen_range(1..=6).min(n - start);
        let mut g = idx[start..start + len].to_vec();
        g.sort_unstable();
        groups.push(g);
        start += len;
    }
    groups
}

pub fn sqrt_weights(groups: &[Vec<usize>]) -> Vec<f64> {
    groups.iter().map(|g| (g.len() as f64).sqrt()).collect()
}

pub fn csc_from_rows(rows: &Mat, ncols: usize) -> CscMatrix<f64> {
    let mut trip = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v != 0.0 {
                trip.push((r, c, v));
            }
        }
    }
    CscMatrix::from_triplets(rows.len(), ncols, &trip).unwrap()
}

pub fn csc_to_rows(a: &CscMatrix<f64>) -> Mat {
    let d = a.to_dense();
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| d.get(r, c)).collect()).collect()
}

/// Gaussian `A`, random 0/±1 constraint rows with zero right-hand sides.
pub struct RandomSpec {
    pub m: usize,
    pub n: usize,
    pub m_eq: usize,
    pub m_in: usize,
    pub lambda1: f64,
    pub lambda2: f64,
}

pub fn random_dense_problem(spec: &RandomSpec, seed: u64) -> (Problem<f64>, sqrtlasso_oracle::DenseProblem) {
    let mut r = rng(seed);
    let a: Mat = (0..spec.m).map(|_| gauss(&mut r, spec.n)).collect();
    let b = gauss(&mut r, spec.m);
    let sign_row = |r: &mut ChaCha8Rng| -> Vec<f64> {
        (0..spec.n)
            .map(|_| match r.gen_range(0..4) {
                0 => 1.0,
                1 => -1.0,
                _ => 0.0,
            })
            .collect()
    };
    let b_eq: Mat = (0..spec.m_eq).map(|_| sign_row(&mut r)).collect();
    let b_in: Mat = (0..spec.m_in).map(|_| sign_row(&mut r)).collect();
    let c_eq = vec![0.0; spec.m_eq];
    let c_in = gauss(&mut r, spec.m_in).iter().map(|v| -v.abs()).collect::<Vec<_>>();
    let groups = random_groups(&mut r, spec.n);
    let weights = sqrt_weights(&groups);
    let problem = Problem::new(
        csc_from_rows(&a, spec.n),
        b.clone(),
        csc_from_rows(&b_eq, spec.n),
        c_eq.clone(),
        csc_from_rows(&b_in, spec.n),
        c_in.clone(),
        GroupPartition::new(spec.n, groups.clone(), weights.clone()).unwrap(),
        PenaltyParams::new(spec.lambda1, spec.lambda2).unwrap(),
    )
    .unwrap();
    let dense = sqrtlasso_oracle::DenseProblem {
        a,
        b,
        b_eq,
        c_eq,
        b_in,
        c_in,
        groups,
        weights,
        lambda1: spec.lambda1,
        lambda2: spec.lambda2,
    };
    (problem, dense)
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    num / den.max(1e-12)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fixed multipliers and a dual point of an inner subproblem.
pub struct InnerSetup {
    pub problem: Problem<f64>,
    pub dense: sqrtlasso_oracle::DenseProblem,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub sigma: f64,
    pub xi: Vec<f64>,
}

pub fn random_inner(seed: u64, m: usize, n: usize, m_eq: usize, m_in: usize) -> InnerSetup {
    let mut r = rng(seed ^ 0xabcdef);
    let spec = RandomSpec {
        m,
        n,
        m_eq,
        m_in,
        lambda1: r.gen_range(0.02..0.3),
        lambda2: r.gen_range(0.02..0.3),
    };
    let (problem, dense) = random_dense_problem(&spec, seed);
    let sigma = r.gen_range(0.2..3.0);
    let x = gauss(&mut r, n);
    let y = gauss(&mut r, m);
    let z: Vec<f64> = gauss(&mut r, m_in).iter().map(|v| -v.abs()).collect();
    let xi: Vec<f64> = gauss(&mut r, m + m_eq + m_in).iter().map(|v| 0.5 * v).collect();
    InnerSetup { problem, dense, x, y, z, sigma, xi }
}

pub fn stacked_rows(d: &sqrtlasso_oracle::DenseProblem) -> Mat {
    d.a.iter().chain(&d.b_eq).chain(&d.b_in).cloned().collect()
}
