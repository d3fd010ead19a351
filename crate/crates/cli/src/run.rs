//! Solve sweeps over `γ` and their results.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use sqrtlasso::admm::{admm_solve_with, factorize_m, AdmmFactorization, AdmmParams};
use sqrtlasso::alm::{alm_solve, AlmParams, SolveReport, Termination};
use sqrtlasso::data::{family_constraints, generate, lambda_settings, load_sparse_regression, Family, GeneratorSpec, LambdaSetting};
use sqrtlasso::prox::{GroupPartition, PenaltyParams};
use sqrtlasso::ssn::SsnParams;
use sqrtlasso::{PrimalDualPoint64, Problem64};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("dataset not found: {0}")]
    DatasetMissing(PathBuf),
    #[error(transparent)]
    Solver(#[from] sqrtlasso::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::DatasetMissing(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Ssnal,
    Admm,
    Both,
}

impl SolverChoice {
    fn kinds(self) -> &'static [SolverKind] {
        match self {
            Self::Ssnal => &[SolverKind::Ssnal],
            Self::Admm => &[SolverKind::Admm],
            Self::Both => &[SolverKind::Ssnal, SolverKind::Admm],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Ssnal,
    Admm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ssnal => "ssnal",
            Self::Admm => "admm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Generated(GeneratorSpec),
    Dataset {
        path: PathBuf,
        family: Family,
        m_eq: usize,
        m_in: usize,
        groups: usize,
        n_features: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverChoice,
    pub source: Source,
    pub setting: LambdaSetting,
    pub gammas: Vec<f64>,
    pub tol: f64,
    pub max_outer: usize,
    pub max_admm: usize,
    pub time_cap: Option<Duration>,
    pub csv_out: PathBuf,
    pub table_out: PathBuf,
    /// Zero every timing so output depends only on the inputs.
    pub deterministic: bool,
    /// Solve independent `γ` cells on worker threads, cold-started.
    pub parallel: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.gammas.is_empty() {
            return Err(CliError::Config("at least one --gamma is required".into()));
        }
        if self.gammas.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return Err(CliError::Config("gamma values must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::Config("--tol must be positive".into()));
        }
        if self.max_outer == 0 || self.max_admm == 0 {
            return Err(CliError::Config("iteration caps must be positive".into()));
        }
        if self.time_cap.is_some_and(|c| c.is_zero()) {
            return Err(CliError::Config("--time-cap must be positive".into()));
        }
        if let Source::Generated(spec) = &self.source {
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

/// One solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub pbname: String,
    pub family: String,
    pub m: usize,
    pub n: usize,
    pub m_eq: usize,
    pub m_in: usize,
    pub setting: String,
    pub gamma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub solver: SolverKind,
    pub termination: &'static str,
    pub nnz: usize,
    pub eta: f64,
    pub r_p: f64,
    pub r_d: f64,
    pub r_c: f64,
    pub r_g: f64,
    pub pobj: f64,
    pub dobj: f64,
    /// Outer iterations for SSN-ALM, iterations for ADMM.
    pub iters: usize,
    pub newton_iters: usize,
    pub time_secs: f64,
}

pub const CSV_HEADER: [&str; 23] = [
    "pbname", "family", "m", "n", "m_eq", "m_in", "setting", "gamma", "lambda1", "lambda2", "solver",
    "termination", "nnz", "eta_kkt", "r_p", "r_d", "r_c", "r_g", "pobj", "dobj", "iters", "newton_iters",
    "time_secs",
];

impl ResultRow {
    fn record(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:e}");
        vec![
            self.pbname.clone(),
            self.family.clone(),
            self.m.to_string(),
            self.n.to_string(),
            self.m_eq.to_string(),
            self.m_in.to_string(),
            self.setting.clone(),
            f(self.gamma),
            f(self.lambda1),
            f(self.lambda2),
            self.solver.name().to_string(),
            self.termination.to_string(),
            self.nnz.to_string(),
            f(self.eta),
            f(self.r_p),
            f(self.r_d),
            f(self.r_c),
            f(self.r_g),
            f(self.pobj),
            f(self.dobj),
            self.iters.to_string(),
            self.newton_iters.to_string(),
            f(self.time_secs),
        ]
    }
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max_iterations",
        Termination::TimeLimit => "time_limit",
        Termination::Stalled => "stalled",
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// The problem (with λ unset) and its display name.
pub fn build_problem(source: &Source) -> Result<(Problem64, String, Family), CliError> {
    match source {
        Source::Generated(spec) => {
            let g = generate::<f64>(spec)?;
            let name = format!("rand{}-s{}", spec.family, spec.seed);
            Ok((g.problem, name, spec.family))
        }
        Source::Dataset { path, family, m_eq, m_in, groups, n_features } => {
            if !path.is_file() {
                return Err(CliError::DatasetMissing(path.clone()));
            }
            let (a, b) = load_sparse_regression::<f64>(path, *n_features)?;
            let n = a.ncols();
            let part = GroupPartition::contiguous(n, (*groups).clamp(1, n.max(1)))?;
            let (be, bi) = family_constraints(*family, &part, *m_eq, *m_in)?;
            let (me, mi) = (be.nrows(), bi.nrows());
            let problem = Problem64::new(
                a,
                b,
                be,
                vec![0.0; me],
                bi,
                vec![0.0; mi],
                part,
                PenaltyParams::new(0.0, 0.0)?,
            )?;
            let stem = path.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
            Ok((problem, stem, *family))
        }
    }
}

struct Context<'a> {
    config: &'a RunConfig,
    base: &'a Problem64,
    name: &'a str,
    family: Family,
    factor: Option<&'a AdmmFactorization<f64>>,
}

impl Context<'_> {
    fn solve(
        &self,
        kind: SolverKind,
        gamma: f64,
        warm: Option<&PrimalDualPoint64>,
    ) -> Result<(PrimalDualPoint64, ResultRow), CliError> {
        let cfg = self.config;
        let lambda = lambda_settings(self.base.a(), self.base.b(), gamma, cfg.setting)?;
        let problem = self.base.clone().with_params(lambda);
        let (point, report): (PrimalDualPoint64, SolveReport<f64>) = match kind {
            SolverKind::Ssnal => {
                let params = AlmParams {
                    tol: cfg.tol,
                    max_iters: cfg.max_outer,
                    time_limit: cfg.time_cap,
                    ..AlmParams::default()
                };
                alm_solve(&problem, &params, &SsnParams::default(), warm, None)?
            }
            SolverKind::Admm => {
                let params = AdmmParams {
                    tol: cfg.tol,
                    max_iters: cfg.max_admm,
                    time_limit: cfg.time_cap,
                    ..AdmmParams::default()
                };
                let factor = self.factor.expect("ADMM factorization prepared");
                admm_solve_with(&problem, &params, factor, warm, None)?
            }
        };
        log::info!(
            "{} {} gamma={gamma:e}: {:?} after {} iterations, eta={:e}",
            self.name,
            kind.name(),
            report.termination,
            report.iters,
            report.kkt.eta
        );
        let row = ResultRow {
            pbname: self.name.to_string(),
            family: self.family.to_string(),
            m: problem.m(),
            n: problem.n(),
            m_eq: problem.m_eq(),
            m_in: problem.m_in(),
            setting: cfg.setting.to_string(),
            gamma,
            lambda1: lambda.lambda1,
            lambda2: lambda.lambda2,
            solver: kind,
            termination: termination_name(report.termination),
            nnz: report.nnz,
            eta: report.kkt.eta,
            r_p: report.kkt.r_p,
            r_d: report.kkt.r_d,
            r_c: report.kkt.r_c,
            r_g: report.kkt.r_g,
            pobj: report.kkt.pobj,
            dobj: report.kkt.dobj,
            iters: report.iters,
            newton_iters: report.newton_iters,
            time_secs: if cfg.deterministic { 0.0 } else { report.time.as_secs_f64() },
        };
        Ok((point, row))
    }
}

/// `γ` values, largest first, duplicates removed.
pub fn gamma_path(gammas: &[f64]) -> Vec<f64> {
    let mut g = gammas.to_vec();
    g.sort_by(|a, b| b.total_cmp(a));
    g.dedup();
    g
}

/// Runs every solve; rows come out per solver in descending `γ`.
pub fn solve_all(config: &RunConfig) -> Result<Vec<ResultRow>, CliError> {
    config.validate()?;
    let (base, name, family) = build_problem(&config.source)?;
    let kinds = config.solver.kinds();
    let factor = if kinds.contains(&SolverKind::Admm) {
        Some(factorize_m(&base, &AdmmParams::default())?)
    } else {
        None
    };
    let ctx = Context { config, base: &base, name: &name, family, factor: factor.as_ref() };
    let gammas = gamma_path(&config.gammas);
    let cells: Vec<(SolverKind, f64)> = kinds.iter().flat_map(|&k| gammas.iter().map(move |&g| (k, g))).collect();

    let mut rows = Vec::with_capacity(cells.len());
    if config.parallel {
        let slots: Vec<Mutex<Option<Result<ResultRow, CliError>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cells.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(kind, gamma)) = cells.get(i) else { break };
                    let out = ctx.solve(kind, gamma, None).map(|(_, row)| row);
                    *slots[i].lock().expect("result slot") = Some(out);
                });
            }
        });
        for slot in slots {
            rows.push(slot.into_inner().expect("result slot").expect("every cell solved")?);
        }
    } else {
        for &kind in kinds {
            let mut warm: Option<PrimalDualPoint64> = None;
            for &gamma in &gammas {
                let (point, row) = ctx.solve(kind, gamma, warm.as_ref())?;
                rows.push(row);
                warm = Some(point);
            }
        }
    }
    // SSN-ALM and ADMM rows of the same γ next to each other
    if kinds.len() > 1 {
        rows.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
    }
    Ok(rows)
}

/// Solves, then writes the CSV and the text table. Returns the table.
pub fn run(config: &RunConfig) -> Result<String, CliError> {
    let rows = solve_all(config)?;
    for path in [&config.csv_out, &config.table_out] {
        ensure_parent(path)?;
    }
    write_csv(std::fs::File::create(&config.csv_out)?, &rows)?;
    let table = crate::format::format_table(&rows);
    std::fs::write(&config.table_out, &table)?;
    Ok(table)
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}
