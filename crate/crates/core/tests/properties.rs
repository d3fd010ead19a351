mod common;

use common::*;
use proptest::prelude::*;
use sqrtlasso::alm::{alm_solve, AlmParams, IterationInfo};
use sqrtlasso::data::{generate, Family, GeneratorSpec};
use sqrtlasso::kkt::{compute_kkt_residuals, count_nnz};
use sqrtlasso::linalg::{pcg_solve, DenseMatrix, LinearOperator, PcgOptions};
use sqrtlasso::problem::PrimalDualPoint;
use sqrtlasso::prox::{jacobian_prox_p, GroupPartition, PenaltyParams};
use sqrtlasso::ssn::SsnParams;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sparse_adjoint(rows in 1usize..20, cols in 1usize..20, seed in any::<u64>()) {
        let mut r = rng(seed);
        let dense: Vec<Vec<f64>> = (0..rows)
            .map(|_| gauss(&mut r, cols).into_iter().map(|v| if v > 0.5 { v } else { 0.0 }).collect())
            .collect();
        let a = csc_from_rows(&dense, cols);
        let (v, w) = (gauss(&mut r, cols), gauss(&mut r, rows));
        let mut av = vec![0.0; rows];
        let mut atw = vec![0.0; cols];
        a.apply(&v, &mut av);
        a.apply_adjoint(&w, &mut atw);
        let lhs: f64 = av.iter().zip(&w).map(|(p, q)| p * q).sum();
        let rhs: f64 = v.iter().zip(&atw).map(|(p, q)| p * q).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + norm(&v) * norm(&w)));
    }

    #[test]
    fn pcg_postcondition(n in 1usize..25, iters in 1usize..40, seed in any::<u64>()) {
        let mut r = rng(seed);
        let g: Vec<Vec<f64>> = (0..n).map(|_| gauss(&mut r, n)).collect();
        let mut spd = DenseMatrix::from_rows(&g).unwrap().gram();
        spd.add_diagonal(&vec![0.1; n]);
        let rhs = gauss(&mut r, n);
        let tol = 1e-8;
        let out = pcg_solve(&spd, &rhs, &PcgOptions::new(iters, tol), None).unwrap();
        let res: Vec<f64> = spd.mul_vec(&out.solution).iter().zip(&rhs).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&res) <= 1.0001 * tol.max(tol * norm(&rhs)) || out.iters == iters);
    }

    #[test]
    fn prox_p_jacobian_spectrum(seed in any::<u64>(), n in 1usize..25, sigma in 0.1f64..3.0, l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
        let mut r = rng(seed);
        let u: Vec<f64> = gauss(&mut r, n).iter().map(|v| 2.0 * v).collect();
        let groups = random_groups(&mut r, n);
        let part = GroupPartition::with_sqrt_weights(n, groups).unwrap();
        let jac = jacobian_prox_p(&u, sigma, &part, &PenaltyParams::new(l1, l2).unwrap());
        for _ in 0..5 {
            let d = gauss(&mut r, n);
            let md = jac.apply(&d);
            let q: f64 = md.iter().zip(&d).map(|(a, b)| a * b).sum();
            let dd: f64 = d.iter().map(|v| v * v).sum();
            prop_assert!(q >= -1e-12 && q <= dd * (1.0 + 1e-12));
        }
    }

    #[test]
    fn nnz_bounds(x in prop::collection::vec(-10.0f64..10.0, 0..50)) {
        let k = count_nnz(&x);
        prop_assert!(k <= x.iter().filter(|&&v| v != 0.0).count());
        let total: f64 = x.iter().map(|v| v.abs()).sum();
        prop_assert_eq!(k == 0, total == 0.0);
        let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        if k > 0 {
            let head: f64 = mags[..k].iter().sum();
            let shorter: f64 = mags[..k - 1].iter().sum();
            prop_assert!(head >= 0.9999 * total);
            prop_assert!(shorter < 0.9999 * total);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_problems_are_well_formed(
        family in prop::sample::select(vec![Family::General, Family::Reparameterized, Family::SumToZero]),
        m in 2usize..15,
        groups in 4usize..20,
        extra in 0usize..30,
        seed in any::<u64>(),
    ) {
        let n = groups + extra;
        let spec = GeneratorSpec { family, m, n, m_eq: groups / 4, m_in: groups / 4, groups, seed, ..GeneratorSpec::default() }
            .normalized();
        let g = generate::<f64>(&spec).unwrap();
        let p = &g.problem;
        let parts = p.groups().groups();
        prop_assert!(GroupPartition::new(n, parts.to_vec(), p.groups().weights().to_vec()).is_ok());
        let weights_ok = parts.iter().zip(p.groups().weights()).all(|(grp, &w)| (w - (grp.len() as f64).sqrt()).abs() < 1e-15);
        prop_assert!(weights_ok);
        for mat in [p.b_eq(), p.b_in()] {
            prop_assert!(mat.values().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn m_is_symmetric(seed in any::<u64>(), me in 0usize..4, mi in 0usize..4) {
        let spec = RandomSpec { m: 6, n: 15, m_eq: me, m_in: mi, lambda1: 0.1, lambda2: 0.1 };
        let (p, _) = random_dense_problem(&spec, seed);
        let mut m = p.stacked().gram_outer();
        m.add_diagonal(&vec![1.0; p.m_hat()]);
        prop_assert!(m.max_abs_asymmetry() <= 1e-13);
    }

    #[test]
    fn alm_iterates_keep_z_nonpositive_and_sigma_monotone(seed in any::<u64>(), k in 1usize..5) {
        let spec = RandomSpec { m: 8, n: 24, m_eq: 1, m_in: 3, lambda1: 0.0, lambda2: 0.0 };
        let (mut p, _) = random_dense_problem(&spec, seed);
        let s = p.a_tr_b_norm_inf();
        p.set_params(PenaltyParams::new(0.05 * s, 0.05 * s).unwrap());
        let mut sigmas = Vec::new();
        let mut cb = |i: &IterationInfo<f64>| sigmas.push(i.sigma);
        let params = AlmParams { max_iters: k, ..AlmParams::default() };
        let (pt, rep) = alm_solve(&p, &params, &SsnParams::default(), None, Some(&mut cb)).unwrap();
        prop_assert!(pt.z.iter().all(|&z| z <= 0.0));
        prop_assert!(sigmas.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(rep.kkt.eta, rep.kkt.r_p.max(rep.kkt.r_d).max(rep.kkt.r_c));
    }

    #[test]
    fn eta_is_max_of_components(seed in any::<u64>()) {
        let spec = RandomSpec { m: 5, n: 12, m_eq: 1, m_in: 2, lambda1: 0.2, lambda2: 0.1 };
        let (p, _) = random_dense_problem(&spec, seed);
        let mut r = rng(seed);
        let mut pt = PrimalDualPoint::zeros(&p);
        pt.x = gauss(&mut r, 12);
        pt.u = gauss(&mut r, 5);
        pt.w = gauss(&mut r, 5);
        let k = compute_kkt_residuals(&pt, &p);
        prop_assert_eq!(k.eta, k.r_p.max(k.r_d).max(k.r_c));
        prop_assert!(k.r_p >= 0.0 && k.r_d >= 0.0 && k.r_c >= 0.0);
    }
}
