//! Command line flags and their translation into a [`RunConfig`].

use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use sqrtlasso::data::{Family, GeneratorSpec, LambdaSetting};

use crate::run::{CliError, RunConfig, SolverChoice, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Ssnal,
    Admm,
    Both,
}

/// Solve linearly constrained sparse group square-root Lasso problems and
/// tabulate the results.
#[derive(Debug, Parser)]
#[command(name = "sqrtlasso", version)]
pub struct Args {
    #[arg(long, value_enum, default_value = "ssnal")]
    pub solver: SolverArg,
    /// Constraint family: I, II or III.
    #[arg(long)]
    pub family: Option<String>,
    /// Sparse regression file (`label idx:val ...` per line) instead of a
    /// generated instance.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Feature count for the dataset; inferred from the largest index when
    /// absent.
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "mE")]
    pub m_eq: Option<usize>,
    #[arg(long = "mI")]
    pub m_in: Option<usize>,
    /// Number of groups.
    #[arg(long = "J")]
    pub groups: Option<usize>,
    /// λ setting: S1 or S2.
    #[arg(long, default_value = "S1")]
    pub setting: String,
    /// Repeatable; solved from largest to smallest with warm starts.
    #[arg(long, num_args = 1)]
    pub gamma: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_admm: usize,
    /// Wall-clock cap per solve in seconds.
    #[arg(long, default_value_t = 14_400.0)]
    pub time_cap: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "SQRTLASSO_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Defaults to `<out-dir>/results.csv`.
    #[arg(long)]
    pub csv_out: Option<PathBuf>,
    /// Defaults to `<out-dir>/results.txt`.
    #[arg(long)]
    pub table_out: Option<PathBuf>,
    /// Report zero timings so outputs are byte-reproducible.
    #[arg(long)]
    pub deterministic: bool,
    /// Generator config file (`key = value`); flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Solve each `γ` independently on worker threads (cold starts).
    #[arg(long)]
    pub parallel: bool,
}

pub const DEFAULT_GAMMAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl Args {
    pub fn into_config(self) -> Result<RunConfig, CliError> {
        let family: Option<Family> = self.family.as_deref().map(str::parse).transpose().map_err(config_err)?;
        let setting: LambdaSetting = self.setting.parse().map_err(config_err)?;
        let solver = match self.solver {
            SolverArg::Ssnal => SolverChoice::Ssnal,
            SolverArg::Admm => SolverChoice::Admm,
            SolverArg::Both => SolverChoice::Both,
        };
        if !(self.time_cap > 0.0 && self.time_cap.is_finite()) {
            return Err(CliError::Config("--time-cap must be a positive number of seconds".into()));
        }

        let source = if let Some(path) = self.dataset {
            let family = family.unwrap_or(Family::General);
            let (m_eq, m_in) = match family {
                Family::General => (self.m_eq.unwrap_or(0), self.m_in.unwrap_or(0)),
                Family::Reparameterized => (self.m_eq.unwrap_or(0), 0),
                Family::SumToZero => (1, 0),
            };
            Source::Dataset {
                path,
                family,
                m_eq,
                m_in,
                groups: self.groups.unwrap_or(1),
                n_features: self.n_features,
            }
        } else {
            let mut spec = match &self.config {
                Some(path) => {
                    if !path.is_file() {
                        return Err(CliError::Config(format!("config file {} not found", path.display())));
                    }
                    GeneratorSpec::from_config_file(path).map_err(config_err)?
                }
                None => GeneratorSpec::default(),
            };
            let family_given = family.is_some();
            if let Some(f) = family {
                spec.family = f;
            }
            macro_rules! take {
                ($($flag:ident => $field:ident),*) => {
                    $(if let Some(v) = self.$flag { spec.$field = v; })*
                };
            }
            take!(m => m, n => n, m_eq => m_eq, m_in => m_in, groups => groups, seed => seed);
            // a family switch without explicit counts implies that family's counts
            if family_given && self.m_eq.is_none() && self.m_in.is_none() {
                spec = spec.normalized();
            }
            spec.validate().map_err(config_err)?;
            Source::Generated(spec)
        };

        let gammas = if self.gamma.is_empty() { DEFAULT_GAMMAS.to_vec() } else { self.gamma };
        let config = RunConfig {
            solver,
            source,
            setting,
            gammas,
            tol: self.tol,
            max_outer: self.max_outer,
            max_admm: self.max_admm,
            time_cap: Some(Duration::from_secs_f64(self.time_cap)),
            csv_out: self.csv_out.unwrap_or_else(|| self.out_dir.join("results.csv")),
            table_out: self.table_out.unwrap_or_else(|| self.out_dir.join("results.txt")),
            deterministic: self.deterministic,
            parallel: self.parallel,
        };
        config.validate()?;
        Ok(config)
    }
}
