//! Problem construction: synthetic instances, sparse regression files in
//! `label index:value` format, and the standard λ settings.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::CscMatrix;
use crate::problem::Problem;
use crate::prox::{GroupPartition, PenaltyParams};
use crate::Scalar;

/// Constraint pattern of a test problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `B_E x = 0`, `B_I x ≥ 0`, rows selecting pairs of whole groups.
    General,
    /// `B_E x = 0` only.
    Reparameterized,
    /// `Σ_i x_i = 0`.
    SumToZero,
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" | "GENERAL" => Ok(Self::General),
            "II" | "2" | "REPARAMETERIZED" => Ok(Self::Reparameterized),
            "III" | "3" | "SUM-TO-ZERO" | "SUMTOZERO" => Ok(Self::SumToZero),
            other => Err(Error::InvalidParameter(format!("unknown problem family '{other}'"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::General => "I",
            Self::Reparameterized => "II",
            Self::SumToZero => "III",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSetting {
    /// `λ₁ = λ₂ = 0.5 γ ‖Aᵀb‖_∞`
    S1,
    /// `λ₁ = 0.8 γ ‖Aᵀb‖_∞`, `λ₂ = 0.2 γ ‖Aᵀb‖_∞`
    S2,
}

impl FromStr for LambdaSetting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" | "1" => Ok(Self::S1),
            "S2" | "2" => Ok(Self::S2),
            other => Err(Error::InvalidParameter(format!("unknown lambda setting '{other}'"))),
        }
    }
}

impl std::fmt::Display for LambdaSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::S1 => "S1",
            Self::S2 => "S2",
        })
    }
}

pub fn lambda_settings<T: Scalar>(a: &CscMatrix<T>, b: &[T], gamma: T, setting: LambdaSetting) -> Result<PenaltyParams<T>> {
    if !(gamma > T::zero()) || !gamma.is_finite() {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    let scale = gamma * a.tr_mul_norm_inf(b);
    let (c1, c2) = match setting {
        LambdaSetting::S1 => (0.5, 0.5),
        LambdaSetting::S2 => (0.8, 0.2),
    };
    PenaltyParams::new(T::lit(c1) * scale, T::lit(c2) * scale)
}

/// Recipe for a synthetic instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub m: usize,
    pub n: usize,
    pub m_eq: usize,
    pub m_in: usize,
    /// Number of groups `J`.
    pub groups: usize,
    /// Fraction of nonzero entries inside an active ground-truth group.
    pub group_density: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            family: Family::General,
            m: 100,
            n: 2000,
            m_eq: 24,
            m_in: 24,
            groups: 200,
            group_density: 0.2,
            noise: 0.1,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    /// Forces the constraint counts implied by the family: no inequality
    /// rows for II, one equality row and no inequality rows for III.
    pub fn normalized(mut self) -> Self {
        match self.family {
            Family::General => {}
            Family::Reparameterized => self.m_in = 0,
            Family::SumToZero => {
                self.m_eq = 1;
                self.m_in = 0;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.m == 0 || self.n == 0 || self.groups == 0 || self.groups > self.n {
            return bad(format!(
                "invalid dimensions m={} n={} J={}",
                self.m, self.n, self.groups
            ));
        }
        match self.family {
            Family::Reparameterized if self.m_in != 0 => return bad("family II has no inequality rows".into()),
            Family::SumToZero if self.m_eq != 1 || self.m_in != 0 => {
                return bad("family III has exactly one equality row".into())
            }
            _ => {}
        }
        if !(self.group_density > 0.0 && self.group_density <= 1.0) || !(self.noise >= 0.0) {
            return bad("group density must be in (0, 1] and noise nonnegative".into());
        }
        if self.family != Family::SumToZero && 2 * (self.m_eq + self.m_in) > self.groups {
            return bad(format!(
                "{} constraint rows need at least {} groups",
                self.m_eq + self.m_in,
                2 * (self.m_eq + self.m_in)
            ));
        }
        Ok(())
    }

    /// Parses a flat `key = value` file; `#` starts a comment. Unknown keys
    /// are an error. Keys: `family m n m_eq m_in groups group_density noise
    /// seed` (`mE`, `mI`, `J` are accepted as aliases).
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let parse_err = |e: &dyn std::fmt::Display| Error::Parse {
                line: line_no,
                msg: format!("bad value for {key}: {e}"),
            };
            macro_rules! num {
                () => {
                    value.parse().map_err(|e| parse_err(&e))?
                };
            }
            match key {
                "family" => spec.family = value.parse().map_err(|e| parse_err(&e))?,
                "m" => spec.m = num!(),
                "n" => spec.n = num!(),
                "m_eq" | "mE" => spec.m_eq = num!(),
                "m_in" | "mI" => spec.m_in = num!(),
                "groups" | "J" => spec.groups = num!(),
                "group_density" => spec.group_density = num!(),
                "noise" => spec.noise = num!(),
                "seed" => spec.seed = num!(),
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unknown key '{key}'"),
                    })
                }
            }
        }
        Ok(spec)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        Self::from_config_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "family = {}", self.family);
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "m_eq = {}", self.m_eq);
        let _ = writeln!(s, "m_in = {}", self.m_in);
        let _ = writeln!(s, "groups = {}", self.groups);
        let _ = writeln!(s, "group_density = {}", self.group_density);
        let _ = writeln!(s, "noise = {}", self.noise);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

/// Constraint matrices `(B_E, B_I)` of a family on `n` variables. For
/// families I and II row `r` (equality rows first) is the indicator of
/// groups `r` and `J − 1 − r`.
pub fn family_constraints<T: Scalar>(
    family: Family,
    groups: &GroupPartition<T>,
    m_eq: usize,
    m_in: usize,
) -> Result<(CscMatrix<T>, CscMatrix<T>)> {
    let n = groups.dim();
    let j_count = groups.len();
    match family {
        Family::SumToZero => {
            let row: Vec<_> = (0..n).map(|i| (0, i, T::one())).collect();
            Ok((CscMatrix::from_triplets(1, n, &row)?, CscMatrix::zeros(0, n)))
        }
        Family::General | Family::Reparameterized => {
            let m_in = if family == Family::Reparameterized { 0 } else { m_in };
            if 2 * (m_eq + m_in) > j_count {
                return Err(Error::InvalidParameter(format!(
                    "{} constraint rows need at least {} groups",
                    m_eq + m_in,
                    2 * (m_eq + m_in)
                )));
            }
            let row_of = |r: usize| {
                let mut t = Vec::new();
                for j in [r, j_count - 1 - r] {
                    t.extend(groups.group(j).iter().map(|&i| (i, T::one())));
                }
                t
            };
            let build = |rows: std::ops::Range<usize>| {
                let (offset, count) = (rows.start, rows.len());
                let t: Vec<_> = rows
                    .flat_map(|r| row_of(r).into_iter().map(move |(i, v)| (r - offset, i, v)))
                    .collect();
                CscMatrix::from_triplets(count, n, &t)
            };
            let be = build(0..m_eq)?;
            let bi = build(m_eq..m_eq + m_in)?;
            Ok((be, bi))
        }
    }
}

/// A generated instance together with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedProblem<T> {
    pub problem: Problem<T>,
    pub x_true: Vec<T>,
}

/// Builds a synthetic instance; λ is left at zero, use [`lambda_settings`]
/// and [`Problem::set_params`].
pub fn generate<T: Scalar>(spec: &GeneratorSpec) -> Result<GeneratedProblem<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (m, n) = (spec.m, spec.n);
    let mut gauss = || -> f64 { rng.sample(StandardNormal) };

    let mut dense = Vec::with_capacity(m * n);
    for _ in 0..m * n {
        dense.push(T::lit(gauss()));
    }
    let a_dense = crate::linalg::DenseMatrix::from_col_major(m, n, dense)?;
    let a = CscMatrix::from_dense(&a_dense)?;

    let groups = GroupPartition::contiguous(n, spec.groups)?;
    let active = spec.groups.div_ceil(10);
    let mut x_true = vec![T::zero(); n];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut chosen = sample(&mut rng, spec.groups, active).into_vec();
    chosen.sort_unstable();
    for j in chosen {
        let g = groups.group(j);
        let k = ((spec.group_density * g.len() as f64).ceil() as usize).clamp(1, g.len());
        let mut idx = sample(&mut rng, g.len(), k).into_vec();
        idx.sort_unstable();
        for t in idx {
            x_true[g[t]] = T::lit(rng.sample(StandardNormal));
        }
    }
    let mut b = a.mul_vec(&x_true);
    for bi in b.iter_mut() {
        let e: f64 = rng.sample(StandardNormal);
        *bi += T::lit(spec.noise * e);
    }

    let (be, bi) = family_constraints(spec.family, &groups, spec.m_eq, spec.m_in)?;
    let (me, mi) = (be.nrows(), bi.nrows());
    let problem = Problem::new(
        a,
        b,
        be,
        vec![T::zero(); me],
        bi,
        vec![T::zero(); mi],
        groups,
        PenaltyParams::new(T::zero(), T::zero())?,
    )?;
    Ok(GeneratedProblem { problem, x_true })
}

/// Reads `label index:value ...` lines with 1-based indices. The column
/// count is the largest index seen, or `n_features` when that is larger.
pub fn read_sparse_regression<T: Scalar, R: Read>(reader: R, n_features: Option<usize>) -> Result<(CscMatrix<T>, Vec<T>)> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut max_col = 0;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut tokens = line.split_whitespace();
        let label = parse_finite::<T>(tokens.next().unwrap_or_default()).map_err(err)?;
        let row = labels.len();
        labels.push(label);
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got '{tok}'")))?;
            let i: usize = i.parse().map_err(|e| err(format!("bad index '{i}': {e}")))?;
            if i == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let v = parse_finite::<T>(v).map_err(err)?;
            max_col = max_col.max(i);
            triplets.push((row, i - 1, v));
        }
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let ncols = max_col.max(n_features.unwrap_or(0));
    let a = CscMatrix::from_triplets(labels.len(), ncols, &triplets)?;
    Ok((a, labels))
}

fn parse_finite<T: Scalar>(s: &str) -> std::result::Result<T, String> {
    let v: f64 = s.parse().map_err(|e| format!("bad number '{s}': {e}"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value '{s}'"));
    }
    Ok(T::lit(v))
}

pub fn load_sparse_regression<T: Scalar>(path: &Path, n_features: Option<usize>) -> Result<(CscMatrix<T>, Vec<T>)> {
    read_sparse_regression(std::fs::File::open(path)?, n_features)
}

/// Writes in the format read by [`read_sparse_regression`], using the
/// shortest decimal representation that round-trips.
pub fn write_sparse_regression<T: Scalar, W: Write>(mut out: W, a: &CscMatrix<T>, b: &[T]) -> Result<()> {
    crate::error::check_len("labels", a.nrows(), b.len())?;
    let at = a.transpose();
    for (r, &label) in b.iter().enumerate() {
        write!(out, "{label}")?;
        for (c, v) in at.col_iter(r) {
            write!(out, " {}:{v}", c + 1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_line() {
        let (a, b) = read_sparse_regression::<f64, _>("2.5 1:1.0 3:-2.0\n".as_bytes(), None).unwrap();
        assert_eq!(b, vec![2.5]);
        let d = a.to_dense();
        assert_eq!((d.get(0, 0), d.get(0, 1), d.get(0, 2)), (1.0, 0.0, -2.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_sparse_regression::<f64, _>("".as_bytes(), None).is_err());
        let e = read_sparse_regression::<f64, _>("1 1:2\n1 0:1\n".as_bytes(), None).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(read_sparse_regression::<f64, _>("1 2:nan\n".as_bytes(), None).is_err());
        assert!(read_sparse_regression::<f64, _>("1 2\n".as_bytes(), None).is_err());
    }

    #[test]
    fn lambda_formulas() {
        // Aᵀb = (2, 0)
        let a = CscMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]).unwrap();
        let s1 = lambda_settings(&a, &[2.0], 1.0, LambdaSetting::S1).unwrap();
        assert_eq!((s1.lambda1, s1.lambda2), (1.0, 1.0));
        let s2 = lambda_settings(&a, &[2.0], 1.0, LambdaSetting::S2).unwrap();
        assert_eq!((s2.lambda1, s2.lambda2), (1.6, 0.4));
        assert!(lambda_settings(&a, &[2.0], 0.0, LambdaSetting::S1).is_err());
    }

    #[test]
    fn config_round_trip() {
        let spec = GeneratorSpec {
            family: Family::Reparameterized,
            m_in: 0,
            seed: 42,
            ..GeneratorSpec::default()
        };
        let back = GeneratorSpec::from_config_str(&spec.to_config_string()).unwrap();
        assert_eq!(back, spec);
        assert!(matches!(
            GeneratorSpec::from_config_str("m = 3\nbogus = 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn family_shapes() {
        let spec = GeneratorSpec {
            family: Family::SumToZero,
            m: 5,
            n: 30,
            groups: 3,
            ..GeneratorSpec::default()
        }
        .normalized();
        let g = generate::<f64>(&spec).unwrap();
        assert_eq!(g.problem.m_eq(), 1);
        assert!(g.problem.b_eq().to_dense().as_col_major().iter().all(|&v| v == 1.0));
        assert!(g.problem.c_eq().iter().all(|&v| v == 0.0));

        let spec = GeneratorSpec {
            family: Family::Reparameterized,
            m: 5,
            n: 40,
            m_eq: 2,
            m_in: 3,
            groups: 8,
            ..GeneratorSpec::default()
        }
        .normalized();
        let g = generate::<f64>(&spec).unwrap();
        assert_eq!((g.problem.m_eq(), g.problem.m_in()), (2, 0));
    }
}
