use proptest::prelude::*;
use sqrtlasso_cli::format::{format_table, parse_shorthand, shorthand};
use sqrtlasso_cli::{ResultRow, SolverKind};

fn row(eta: f64, pobj: f64, lambda: f64) -> ResultRow {
    ResultRow {
        pbname: "p".into(),
        family: "I".into(),
        m: 1,
        n: 2,
        m_eq: 0,
        m_in: 0,
        setting: "S1".into(),
        gamma: 1e-3,
        lambda1: lambda,
        lambda2: lambda,
        solver: SolverKind::Ssnal,
        termination: "converged",
        nnz: 1,
        eta,
        r_p: 0.0,
        r_d: 0.0,
        r_c: 0.0,
        r_g: 0.0,
        pobj,
        dobj: pobj,
        iters: 3,
        newton_iters: 7,
        time_secs: 0.0,
    }
}

fn within_last_digit(text: &str, value: f64, decimals: i32) -> bool {
    let parsed = parse_shorthand(text).expect("shorthand parses");
    let exp = value.abs().log10().floor() as i32;
    // rounding may carry into the next decade
    let ulp = 10f64.powi(exp + 1 - decimals);
    (parsed - value).abs() <= ulp
}

proptest! {
    #[test]
    fn table_numbers_parse_back(
        eta in 1e-12f64..1.0,
        pobj in 1e-4f64..1e4,
        lambda in 1e-5f64..10.0,
    ) {
        let table = format_table(&[row(eta, pobj, lambda)]);
        let line = table.lines().nth(1).unwrap();
        let cells: Vec<&str> = line.split_whitespace().collect();
        let lams: Vec<&str> = cells[2].split(';').collect();
        prop_assert!(within_last_digit(lams[0], lambda, 3));
        prop_assert!(within_last_digit(cells[4], eta, 1));
        prop_assert!(within_last_digit(cells[5], pobj, 4));
        prop_assert_eq!(cells[6], "3(7)");
    }

    #[test]
    fn shorthand_round_trip(v in -1e8f64..1e8, d in 0usize..6) {
        prop_assume!(v.abs() > 1e-300);
        let s = shorthand(v, d);
        prop_assert!(within_last_digit(&s, v, d as i32));
    }
}
