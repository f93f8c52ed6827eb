use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use micromaser::{default_n_max, fine_tuned_theta, ModelParams, RunOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_COLLISIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Run configuration. Every field can come from the `--config` JSON document
/// (same names, snake_case) or from a flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON configuration file; flags override its values.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Collision angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Collision angle as theta = Q pi / sqrt(M_EFF).
    #[arg(long, value_name = "M_EFF")]
    pub theta_m: Option<f64>,
    /// Multiplicity Q for --theta-m [default: 1].
    #[arg(long, value_name = "Q")]
    pub theta_q: Option<f64>,

    /// Ground-state probability of each incoming qubit.
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Qubit coherence in [0, 1] [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// Cavity damping per collision interval [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub gamma_tr: Option<f64>,
    /// Thermal photon number of the bath [default: 0].
    #[arg(long, allow_negative_numbers = true)]
    pub nbar: Option<f64>,
    /// Number of collisions [default: 1000].
    #[arg(long)]
    pub collisions: Option<usize>,
    /// Initial Fock truncation [default: max(2m+2, 32) at a fine-tuned angle, else 64].
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Largest truncation the run may grow to before it stops with a
    /// truncation overflow [default: 1024].
    #[arg(long, value_name = "N")]
    pub nmax_cap: Option<usize>,
    /// Record every N-th collision [default: 1].
    #[arg(long, value_name = "N")]
    pub decimate: Option<usize>,
    /// Output format [default: csv].
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output if omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// How the collision angle was specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSpec {
    Literal { theta: f64 },
    FineTuned { multiplicity: f64, m_eff: f64 },
}

impl ThetaSpec {
    pub fn value(&self) -> f64 {
        match *self {
            ThetaSpec::Literal { theta } => theta,
            ThetaSpec::FineTuned { multiplicity, m_eff } => fine_tuned_theta(multiplicity, m_eff),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub params: ModelParams,
    pub theta: ThetaSpec,
    pub options: RunOptions,
    pub format: Format,
    pub out: Option<PathBuf>,
}

fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

pub fn load_config_file(path: &Path) -> Result<RunConfig, CliError> {
    let file = File::open(path).map_err(|e| config_error(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| config_error(format!("invalid config {}: {e}", path.display())))
}

impl RunConfig {
    /// Fills every field unset in `self` from `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            config: self.config.or(base.config),
            theta: self.theta.or(base.theta),
            theta_m: self.theta_m.or(base.theta_m),
            theta_q: self.theta_q.or(base.theta_q),
            q: self.q.or(base.q),
            c: self.c.or(base.c),
            gamma_tr: self.gamma_tr.or(base.gamma_tr),
            nbar: self.nbar.or(base.nbar),
            collisions: self.collisions.or(base.collisions),
            nmax: self.nmax.or(base.nmax),
            nmax_cap: self.nmax_cap.or(base.nmax_cap),
            decimate: self.decimate.or(base.decimate),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
        }
    }

    /// Merges in the `--config` file, if one was named.
    pub fn with_file(self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(path) => {
                let file = load_config_file(path)?;
                Ok(self.over(file))
            }
            None => Ok(self),
        }
    }

    pub fn theta_spec(&self) -> Result<ThetaSpec, CliError> {
        match (self.theta, self.theta_m, self.theta_q) {
            (Some(_), Some(_), _) => Err(config_error("give either --theta or --theta-m, not both")),
            (Some(_), None, Some(_)) => Err(config_error("--theta-q needs --theta-m")),
            (Some(theta), None, None) => Ok(ThetaSpec::Literal { theta }),
            (None, Some(m_eff), q) => {
                let multiplicity = q.unwrap_or(1.0);
                if !(m_eff.is_finite() && m_eff > 0.0) {
                    return Err(config_error(format!("--theta-m {m_eff} must be positive")));
                }
                if !(multiplicity.is_finite() && multiplicity > 0.0) {
                    return Err(config_error(format!("--theta-q {multiplicity} must be positive")));
                }
                Ok(ThetaSpec::FineTuned { multiplicity, m_eff })
            }
            (None, None, _) => Err(config_error("missing collision angle: give --theta or --theta-m")),
        }
    }

    pub fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let theta = self.theta_spec()?;
        let q = self.q.ok_or_else(|| config_error("missing --q"))?;
        let decimate = self.decimate.unwrap_or(1);
        if decimate == 0 {
            return Err(config_error("--decimate must be positive"));
        }
        let defaults = RunOptions::default();
        let options = RunOptions {
            decimate,
            n_max_cap: self.nmax_cap.unwrap_or(defaults.n_max_cap),
            ..defaults
        };
        options.validate().map_err(|e| config_error(e.to_string()))?;
        let params = ModelParams {
            theta: theta.value(),
            q,
            c: self.c.unwrap_or(0.0),
            gamma_tr: self.gamma_tr.unwrap_or(0.0),
            nbar: self.nbar.unwrap_or(0.0),
            n_max: self.nmax.unwrap_or_else(|| default_n_max(theta.value())),
            collisions: self.collisions.unwrap_or(DEFAULT_COLLISIONS),
        };
        params.validate().map_err(|e| config_error(e.to_string()))?;
        if params.n_max > options.n_max_cap {
            return Err(config_error(format!(
                "--nmax {} exceeds --nmax-cap {}",
                params.n_max, options.n_max_cap
            )));
        }
        Ok(ResolvedRun {
            params,
            theta,
            options,
            format: self.format.unwrap_or_default(),
            out: self.out.clone(),
        })
    }
}
