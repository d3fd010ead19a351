//! Text formatting for the results table: `1.0-3` scientific shorthand and
//! `h:mm:ss` times with leading parts elided.

use std::fmt::Write;

use crate::run::{ResultRow, SolverKind};

/// `value` with `decimals` mantissa decimals and the exponent written as a
/// bare signed integer, so `9.8e-7` becomes `9.8-7` and `326.01` becomes
/// `3.2601+2`.
pub fn shorthand(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    let s = format!("{value:.decimals$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < 0 {
        format!("{mantissa}{exp}")
    } else {
        format!("{mantissa}+{exp}")
    }
}

/// Inverse of [`shorthand`].
pub fn parse_shorthand(text: &str) -> Option<f64> {
    let split = text
        .char_indices()
        .skip(1)
        .filter(|&(_, c)| c == '+' || c == '-')
        .map(|(i, _)| i)
        .last()?;
    let mantissa: f64 = text[..split].parse().ok()?;
    let exp: i32 = text[split..].trim_start_matches('+').parse().ok()?;
    format!("{mantissa}e{exp}").parse().ok()
}

/// Whole seconds as `ss`, `m:ss` or `h:mm:ss`.
pub fn format_time(seconds: f64) -> String {
    let total = seconds.max(0.0).round() as u64;
    let (h, m, s) = (total / 3600, (total / 60) % 60, total % 60);
    if h > 0 {
        format!("{h}:{m:02}:{s:02}")
    } else if m > 0 {
        format!("{m}:{s:02}")
    } else {
        format!("{s:02}")
    }
}

fn iter_cell(row: &ResultRow) -> String {
    match row.solver {
        SolverKind::Ssnal => format!("{}({})", row.iters, row.newton_iters),
        SolverKind::Admm => row.iters.to_string(),
    }
}

/// Aligned table with one line per problem and `γ`; when both solvers ran,
/// per-solver cells are joined by `|` (SSN-ALM first).
pub fn format_table(rows: &[ResultRow]) -> String {
    let header: Vec<String> = ["pbname", "m;n;mE;mI", "λ1;λ2", "nnz", "η_kkt", "pobj", "iter", "time"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut lines = vec![header];

    let mut i = 0;
    while i < rows.len() {
        let mut j = i + 1;
        while j < rows.len() && rows[j].pbname == rows[i].pbname && rows[j].gamma == rows[i].gamma {
            j += 1;
        }
        let cell = &rows[i..j];
        let r = &rows[i];
        let join = |f: &dyn Fn(&ResultRow) -> String| cell.iter().map(f).collect::<Vec<_>>().join(" | ");
        lines.push(vec![
            r.pbname.clone(),
            format!("{};{};{};{}", r.m, r.n, r.m_eq, r.m_in),
            format!("{};{}", shorthand(r.lambda1, 3), shorthand(r.lambda2, 3)),
            join(&|x| x.nnz.to_string()),
            join(&|x| shorthand(x.eta, 1)),
            join(&|x| shorthand(x.pobj, 4)),
            join(&iter_cell),
            join(&|x| format_time(x.time_secs)),
        ]);
        i = j;
    }

    let ncols = lines[0].len();
    let widths: Vec<usize> = (0..ncols)
        .map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in &lines {
        let mut text = String::new();
        for (c, cell) in line.iter().enumerate() {
            if c > 0 {
                text.push_str("  ");
            }
            let pad = widths[c] - cell.chars().count();
            if c == 0 {
                let _ = write!(text, "{cell}{}", " ".repeat(pad));
            } else {
                let _ = write!(text, "{}{cell}", " ".repeat(pad));
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    }
    out
}
