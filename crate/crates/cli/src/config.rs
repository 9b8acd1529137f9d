//! Flag parsing, `--config` merging and per-subcommand defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use fedenv_core::fedsim::{AnalyticsTarget, CostFunction};
use fedenv_core::ingest::ColumnMap;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostArg {
    L1,
    L2,
    Both,
}

impl CostArg {
    pub fn costs(self) -> Vec<CostFunction> {
        match self {
            CostArg::L1 => vec![CostFunction::L1],
            CostArg::L2 => vec![CostFunction::L2],
            CostArg::Both => vec![CostFunction::L1, CostFunction::L2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetArg {
    /// Every client sample pooled into one CDF.
    Pooled,
    /// Samples of the aggregate sum signal.
    Sum,
}

impl From<TargetArg> for AnalyticsTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Pooled => AnalyticsTarget::PooledCdf,
            TargetArg::Sum => AnalyticsTarget::SumSignal,
        }
    }
}

/// Flags shared by every subcommand. Each one may also be given as a key of
/// the JSON object passed to `--config`; explicit flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Flags {
    /// JSON file with default values for any of the other flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Smart-meter CSV (timestamp, user, value columns).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub cost: Option<CostArg>,
    /// Comma-separated bandwidths.
    #[arg(long, value_delimiter = ',')]
    pub l_values: Option<Vec<usize>>,
    /// Comma-separated subsampling strides.
    #[arg(long, value_delimiter = ',')]
    pub s_values: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub analytics_target: Option<TargetArg>,
    /// Length of the common window in days.
    #[arg(long)]
    pub min_days: Option<usize>,
    #[arg(long)]
    pub timestamp_column: Option<String>,
    #[arg(long)]
    pub user_column: Option<String>,
    #[arg(long)]
    pub value_column: Option<String>,
    /// chrono format string, or `unix`.
    #[arg(long)]
    pub timestamp_format: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub utc_offset_hours: Option<i32>,
    /// Abscissa points per CDF curve.
    #[arg(long)]
    pub cdf_points: Option<usize>,
    /// Trials per bound-verification case.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated decay exponents for bound verification.
    #[arg(long, value_delimiter = ',')]
    pub p_values: Option<Vec<f64>>,
    /// Synthetic users with complete data.
    #[arg(long)]
    pub clients: Option<usize>,
    /// Synthetic users with one missing hour.
    #[arg(long)]
    pub dropouts: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    /// Run client solves on one thread.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub sequential: Option<bool>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Flags { config: $top.config.clone(), $($f: $top.$f.clone().or($base.$f.clone()),)* }
    };
}

impl Flags {
    /// Values from `self` take precedence over `base`.
    pub fn over(&self, base: &Flags) -> Flags {
        overlay!(
            self, base, dataset, output_dir, cost, l_values, s_values, seed, analytics_target,
            min_days, timestamp_column, user_column, value_column, timestamp_format,
            utc_offset_hours, cdf_points, trials, p_values, clients, dropouts, days, sequential
        )
    }

    /// Applies the `--config` file, if any.
    pub fn resolve_file(&self) -> Result<Flags> {
        match &self.config {
            None => Ok(self.clone()),
            Some(path) => Ok(self.over(&read_config(path)?)),
        }
    }
}

fn read_config(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Tradeoff,
    Cdf,
    Quantiles,
    Subsample,
    VerifyBounds,
    Synth,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Tradeoff => "tradeoff",
            Subcommand::Cdf => "cdf",
            Subcommand::Quantiles => "quantiles",
            Subcommand::Subsample => "subsample",
            Subcommand::VerifyBounds => "verify-bounds",
            Subcommand::Synth => "synth",
        }
    }

    pub fn needs_dataset(self) -> bool {
        !matches!(self, Subcommand::VerifyBounds | Subcommand::Synth)
    }

    fn default_l_values(self) -> Vec<usize> {
        match self {
            Subcommand::Tradeoff => vec![1, 10, 36, 72, 108, 144, 180, 252, 324, 360],
            Subcommand::Cdf | Subcommand::Quantiles => vec![36, 180, 324],
            Subcommand::Subsample => (1..=8).map(|i| 10 * i).collect(),
            Subcommand::VerifyBounds => vec![5, 10, 20],
            Subcommand::Synth => Vec::new(),
        }
    }

    fn default_s_values(self) -> Vec<usize> {
        match self {
            Subcommand::Subsample | Subcommand::VerifyBounds => vec![1, 2, 4, 8],
            _ => vec![1],
        }
    }
}

/// Fully resolved run settings; echoed verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub subcommand: Subcommand,
    pub dataset: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub cost: CostArg,
    pub l_values: Vec<usize>,
    pub s_values: Vec<usize>,
    pub seed: u64,
    pub analytics_target: TargetArg,
    pub min_days: usize,
    pub columns: ColumnMap,
    pub cdf_points: usize,
    pub trials: usize,
    pub p_values: Vec<f64>,
    pub clients: usize,
    pub dropouts: usize,
    pub days: usize,
    pub sequential: bool,
}

impl Settings {
    pub fn resolve(subcommand: Subcommand, flags: &Flags) -> Result<Settings> {
        let f = flags.resolve_file()?;
        let defaults = ColumnMap::default();
        let settings = Settings {
            subcommand,
            dataset: f.dataset,
            output_dir: f.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            cost: f.cost.unwrap_or(CostArg::Both),
            l_values: f.l_values.unwrap_or_else(|| subcommand.default_l_values()),
            s_values: f.s_values.unwrap_or_else(|| subcommand.default_s_values()),
            seed: f.seed.unwrap_or(0),
            analytics_target: f.analytics_target.unwrap_or(TargetArg::Pooled),
            min_days: f.min_days.unwrap_or(30),
            columns: ColumnMap {
                timestamp: f.timestamp_column.unwrap_or(defaults.timestamp),
                user: f.user_column.unwrap_or(defaults.user),
                value: f.value_column.unwrap_or(defaults.value),
                timestamp_format: f.timestamp_format.unwrap_or(defaults.timestamp_format),
                utc_offset_hours: f.utc_offset_hours.unwrap_or(defaults.utc_offset_hours),
            },
            cdf_points: f.cdf_points.unwrap_or(200),
            trials: f.trials.unwrap_or(20),
            p_values: f.p_values.unwrap_or_else(|| vec![1.5, 2.0, 3.0]),
            clients: f.clients.unwrap_or(8),
            dropouts: f.dropouts.unwrap_or(1),
            days: f.days.unwrap_or(30),
            sequential: f.sequential.unwrap_or(false),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        if self.subcommand.needs_dataset() && self.dataset.is_none() {
            bail!("{} requires --dataset", self.subcommand.name());
        }
        if self.subcommand != Subcommand::Synth && self.l_values.is_empty() {
            bail!("--l-values must not be empty");
        }
        if self.s_values.is_empty() || self.s_values.contains(&0) {
            bail!("--s-values must be a nonempty list of positive strides");
        }
        if self.subcommand == Subcommand::Synth && (self.clients == 0 || self.days == 0) {
            bail!("--clients and --days must be positive");
        }
        if self.subcommand == Subcommand::VerifyBounds && (self.trials == 0 || self.p_values.is_empty()) {
            bail!("--trials and --p-values must be nonempty");
        }
        Ok(())
    }
}
