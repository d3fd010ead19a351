mod common;

use common::*;
use sqrtlasso::linalg::CscMatrix;
use sqrtlasso::problem::Problem;
use sqrtlasso::prox::{prox_p_conjugate, GroupPartition, PenaltyParams};
use sqrtlasso::ssn::*;
use sqrtlasso_oracle::{finite_diff_gradient, finite_diff_jacobian, FiniteDiffSpec};

/// Distance (in the arguments of the three prox maps) to the nearest kink of
/// `∇φ`.
fn kink_distance(s: &InnerSetup, xi: &[f64]) -> f64 {
    let inner = InnerProblem { problem: &s.problem, x: &s.x, y: &s.y, z: &s.z, sigma: s.sigma };
    let st = inner.evaluate(xi);
    let sigma = s.sigma;
    let d = &s.dense;
    let mut dist = (norm(&st.u_h) - sigma).abs();
    for &u in &st.u_p {
        dist = dist.min((u.abs() - sigma * d.lambda2).abs());
    }
    for (g, w) in d.groups.iter().zip(&d.weights) {
        let nv = g.iter().map(|&i| st.v[i] * st.v[i]).sum::<f64>().sqrt();
        dist = dist.min((nv - sigma * d.lambda1 * w).abs());
    }
    for &u in &st.u_r {
        dist = dist.min(u.abs());
    }
    // a unit move of ξ moves the arguments by at most σ(1 + ‖N‖_F)
    let n_scale: f64 = stacked_rows(d).iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    dist / (sigma * (1.0 + n_scale))
}

#[test]
fn gradient_matches_finite_differences_of_phi() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let s = random_inner(seed, 6, 25, 2, 3);
        if kink_distance(&s, &s.xi) < 1e-5 {
            continue;
        }
        let f = |xi: &[f64]| eval_phi(xi, &s.x, &s.y, &s.z, s.sigma, &s.problem);
        let fd = finite_diff_gradient(&f, &s.xi, 1e-6);
        let g = eval_grad_phi(&s.xi, &s.x, &s.y, &s.z, s.sigma, &s.problem);
        assert!(rel_err(&fd, &g) < 1e-5, "seed {seed}: {}", rel_err(&fd, &g));
        checked += 1;
    }
}

#[test]
fn newton_matrix_matches_finite_differences_of_gradient() {
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let s = random_inner(seed, 6, 25, 2, 3);
        let spec = FiniteDiffSpec { step: 1e-7, exclusion_radius: 1e-5 };
        let g = |xi: &[f64]| eval_grad_phi(xi, &s.x, &s.y, &s.z, s.sigma, &s.problem);
        let kink = |xi: &[f64]| kink_distance(&s, xi);
        let Ok(fd) = finite_diff_jacobian(&g, &s.xi, spec, Some(&kink)) else {
            continue;
        };
        let inner = InnerProblem { problem: &s.problem, x: &s.x, y: &s.y, z: &s.z, sigma: s.sigma };
        let sys = inner.newton_system(&inner.evaluate(&s.xi), 0.0).unwrap();
        let h = sys.to_dense();
        let dim = fd.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                num += (fd[i][j] - h.get(i, j)).powi(2);
                den += h.get(i, j).powi(2);
            }
        }
        assert!(num.sqrt() <= 1e-4 * den.sqrt(), "seed {seed}");
        checked += 1;
    }
}

#[test]
fn zero_data_zero_point() {
    let s = random_inner(3, 4, 10, 1, 2);
    let xi = vec![0.0; s.problem.m_hat()];
    let (x, y, z) = (vec![0.0; 10], vec![0.0; 4], vec![0.0; 2]);
    assert_eq!(eval_phi(&xi, &x, &y, &z, 1.0, &s.problem), 0.0);
    assert_eq!(eval_grad_phi(&xi, &x, &y, &z, 1.0, &s.problem), s.problem.stacked_rhs());
}

/// `m = 5`, `n = 20`, one group, no constraints.
fn tiny_problem() -> (Problem<f64>, Vec<f64>, Vec<f64>) {
    let mut r = rng(2024);
    let rows: Vec<Vec<f64>> = (0..5).map(|_| gauss(&mut r, 20)).collect();
    let a = csc_from_rows(&rows, 20);
    let b = gauss(&mut r, 5);
    let p = Problem::unconstrained(
        a,
        b,
        GroupPartition::contiguous(20, 1).unwrap(),
        PenaltyParams::new(0.1, 0.1).unwrap(),
    )
    .unwrap();
    let x = gauss(&mut r, 20);
    let y = gauss(&mut r, 5);
    (p, x, y)
}

#[test]
fn superlinear_tail() {
    let (p, x, y) = tiny_problem();
    let inner = InnerProblem { problem: &p, x: &x, y: &y, z: &[], sigma: 1.0 };
    let out = ssn_minimize(&inner, None, &SsnParams::default(), &mut |s| s.grad_norm <= 1e-12).unwrap();
    assert_eq!(out.report.status, SsnStatus::Stopped);
    let g = &out.report.grad_norms;
    assert!(g.len() >= 3, "{g:?}");
    for pair in g[g.len() - 3..].windows(2) {
        assert!(pair[1] <= 10.0 * pair[0].powf(1.2), "{g:?}");
    }
}

#[test]
fn starting_at_the_solution_takes_no_steps() {
    let (p, x, y) = tiny_problem();
    let inner = InnerProblem { problem: &p, x: &x, y: &y, z: &[], sigma: 1.0 };
    let params = SsnParams::default();
    let first = ssn_minimize(&inner, None, &params, &mut |s| s.grad_norm <= 1e-12).unwrap();
    let again = ssn_minimize(&inner, Some(&first.state.xi), &params, &mut |s| s.grad_norm <= 1e-12).unwrap();
    assert_eq!(again.report.iters, 0);
    assert!(again.state.grad_norm <= 1e-10);
}

#[test]
fn accepted_steps_satisfy_armijo_and_duals_are_feasible() {
    for seed in 0..15 {
        let s = random_inner(seed, 8, 40, 3, 3);
        let inner = InnerProblem { problem: &s.problem, x: &s.x, y: &s.y, z: &s.z, sigma: s.sigma };
        let params = SsnParams::default();
        let out = ssn_minimize(&inner, None, &params, &mut |st| st.grad_norm <= 1e-10).unwrap();
        let rep = &out.report;
        assert_eq!(rep.status, SsnStatus::Stopped, "seed {seed}");
        for j in 0..rep.iters {
            let (phi0, phi1) = (rep.phi_values[j], rep.phi_values[j + 1]);
            let slack = 50.0 * f64::EPSILON * (1.0 + phi0.abs());
            assert!(phi1 <= phi0 + params.mu * rep.step_sizes[j] * rep.slopes[j] + slack);
            // strict descent unless the predicted decrease is below roundoff
            let predicted = rep.step_sizes[j] * rep.slopes[j].abs();
            assert!(phi1 < phi0 || predicted <= slack, "seed {seed} step {j}");
        }
        assert!(norm(&out.w) <= 1.0 + 1e-10);
        let proj = prox_p_conjugate(&out.s, 1.0, s.problem.groups(), s.problem.params());
        assert!(max_abs_diff(&proj, &out.s) <= 1e-10);
    }
}

#[test]
fn converged_inner_solution_has_tiny_gradient() {
    let s = random_inner(42, 6, 30, 2, 2);
    let inner = InnerProblem { problem: &s.problem, x: &s.x, y: &s.y, z: &s.z, sigma: s.sigma };
    let params = SsnParams { strategy: sqrtlasso::newton::SolveStrategy::Pcg, max_iters: 200, ..SsnParams::default() };
    let out = ssn_minimize(&inner, None, &params, &mut |st| st.grad_norm <= 1e-12).unwrap();
    let g = eval_grad_phi(&out.state.xi, &s.x, &s.y, &s.z, s.sigma, &s.problem);
    assert!(norm(&g) <= 1e-10);
}

#[test]
fn rejects_bad_parameters() {
    let p = SsnParams::<f64> { mu: 0.7, ..SsnParams::default() };
    assert!(p.validate().is_err());
    let empty = CscMatrix::<f64>::zeros(0, 1);
    assert_eq!(empty.nrows(), 0);
}
