//! Command-line flags and the optional TOML config whose keys mirror them.
//!
//! A flag given on the command line wins over the config file, which wins over
//! the built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use evt_kmeans::{Init, Kind, RunConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_BLOCK_SIZE: usize = 16;
pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kmeans,
    Gev,
    Gpd,
}

impl Algorithm {
    pub fn kind(self) -> Kind {
        match self {
            Algorithm::Kmeans => Kind::Plain,
            Algorithm::Gev => Kind::Gev,
            Algorithm::Gpd => Kind::Gpd,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Kmeans => "kmeans",
            Algorithm::Gev => "gev",
            Algorithm::Gpd => "gpd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Random,
    Kmeanspp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    BlockSize,
    Alpha,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::BlockSize => "block-size",
            SweepParam::Alpha => "alpha",
        }
    }
}

/// Clustering with extreme-value tail models: data generation, runs, sweeps and diagnostics.
#[derive(Debug, Parser)]
#[command(name = "evtkm", version, about)]
pub struct Cli {
    /// TOML file with defaults for any flag (keys use the flag names, e.g. `max-iter = 50`)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Gaussian-blob dataset with labels
    Synth(SynthArgs),
    /// Run one algorithm over several seeds and report metrics and timings
    Cluster(ClusterArgs),
    /// Run one algorithm for each value of a tail-extraction parameter
    Sweep(SweepArgs),
    /// Append uninformative features to a synthetic dataset and compare algorithms
    Robust(RobustArgs),
    /// Q-Q points of one cluster's fitted tail model
    Fitdiag(FitdiagArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataOpts {
    /// Dataset file
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Input format; defaults to libsvm for .libsvm/.svm files and csv otherwise
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Field delimiter for csv input and output
    #[arg(long)]
    pub delimiter: Option<char>,
    /// The csv input has no trailing label column
    #[arg(long)]
    pub unlabeled: bool,
    /// Scale every feature to unit variance before clustering
    #[arg(long)]
    pub standardize: bool,
    /// Also subtract column means when standardizing
    #[arg(long, requires = "standardize")]
    pub center: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunOpts {
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    /// Number of clusters
    #[arg(long)]
    pub k: Option<usize>,
    /// Block size for block maxima (gev)
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Tail fraction for threshold excesses (gpd)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stop when no centroid moves farther than this
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Base seed; repeat i uses seed + i
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutOpts {
    /// Result table; stdout when omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Also write a JSON summary here
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Per-coordinate standard deviation of each blob
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub delimiter: Option<char>,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataOpts,
    #[command(flatten)]
    pub run: RunOpts,
    #[command(flatten)]
    pub out: OutOpts,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataOpts,
    #[command(flatten)]
    pub run: RunOpts,
    #[command(flatten)]
    pub out: OutOpts,
    /// Parameter to vary
    #[arg(long, value_enum)]
    pub param: Option<SweepParam>,
    /// Comma-separated grid of values
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct RobustArgs {
    #[command(flatten)]
    pub run: RunOpts,
    #[command(flatten)]
    pub out: OutOpts,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed of the base dataset and its extra columns; defaults to --seed
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Comma-separated counts of uninformative features to append
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub extra_dims: Option<Vec<usize>>,
    /// Comma-separated algorithms to compare
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1..)]
    pub algorithms: Option<Vec<Algorithm>>,
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitdiagArgs {
    #[command(flatten)]
    pub data: DataOpts,
    #[command(flatten)]
    pub run: RunOpts,
    #[command(flatten)]
    pub out: OutOpts,
    /// Index of the cluster whose tail is diagnosed
    #[arg(long)]
    pub cluster: Option<usize>,
}

/// Contents of a `--config` file. Every key is optional and named like its flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub format: Option<Format>,
    pub delimiter: Option<char>,
    pub unlabeled: Option<bool>,
    pub standardize: Option<bool>,
    pub center: Option<bool>,
    pub algorithm: Option<Algorithm>,
    pub init: Option<InitArg>,
    pub k: Option<usize>,
    pub block_size: Option<usize>,
    pub alpha: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub sigma: Option<f64>,
    pub data_seed: Option<u64>,
    pub param: Option<SweepParam>,
    pub values: Option<Vec<f64>>,
    pub extra_dims: Option<Vec<usize>>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub cluster: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.to_path_buf(), msg: e.to_string() })
    }
}

macro_rules! fill {
    ($dst:expr, $cfg:expr; $($field:ident),+) => {
        $( if $dst.$field.is_none() { $dst.$field = $cfg.$field.clone(); } )+
    };
}

impl DataOpts {
    pub fn fill(&mut self, cfg: &FileConfig) {
        fill!(self, cfg; input, format, delimiter);
        self.unlabeled |= cfg.unlabeled.unwrap_or(false);
        self.standardize |= cfg.standardize.unwrap_or(false);
        self.center |= cfg.center.unwrap_or(false);
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        delimiter_byte(self.delimiter)
    }
}

pub fn delimiter_byte(d: Option<char>) -> Result<u8> {
    let c = d.unwrap_or(',');
    if c.is_ascii() {
        Ok(c as u8)
    } else {
        Err(CliError::Usage(format!("delimiter must be a single ASCII character, got {c:?}")))
    }
}

impl RunOpts {
    pub fn fill(&mut self, cfg: &FileConfig) {
        fill!(self, cfg; algorithm, init, k, block_size, alpha, tol, max_iter, seed, repeats);
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.algorithm.ok_or_else(|| CliError::Usage("--algorithm is required".into()))
    }

    pub fn repeats(&self) -> Result<usize> {
        match self.repeats.unwrap_or(DEFAULT_REPEATS) {
            0 => Err(CliError::Usage("--repeats must be at least 1".into())),
            r => Ok(r),
        }
    }

    /// Run settings for the base seed.
    pub fn run_config(&self) -> Result<RunConfig> {
        let k = self.k.ok_or_else(|| CliError::Usage("--k is required".into()))?;
        let mut cfg = RunConfig::new(k);
        cfg.init = match self.init.unwrap_or(InitArg::Kmeanspp) {
            InitArg::Random => Init::Random,
            InitArg::Kmeanspp => Init::KMeansPlusPlus,
        };
        cfg.bmm.block_size = self.block_size.unwrap_or(DEFAULT_BLOCK_SIZE);
        cfg.pot.alpha = self.alpha.unwrap_or(DEFAULT_ALPHA);
        cfg.tol = self.tol.unwrap_or(DEFAULT_TOL);
        cfg.max_iter = self.max_iter.unwrap_or(DEFAULT_MAX_ITER);
        cfg.seed = self.seed.unwrap_or(0);
        Ok(cfg)
    }
}

impl OutOpts {
    pub fn fill(&mut self, cfg: &FileConfig) {
        fill!(self, cfg; output, summary);
    }
}

impl SynthArgs {
    pub fn fill(&mut self, cfg: &FileConfig) {
        fill!(self, cfg; n, k, d, sigma, seed, output, format, delimiter);
    }
}

impl ClusterArgs {
    pub fn fill(&mut self, cfg: &FileConfig) {
        self.data.fill(cfg);
        self.run.fill(cfg);
        self.out.fill(cfg);
    }
}

impl SweepArgs {
    pub fn fill(&mut self, cfg: &FileConfig) {
        self.data.fill(cfg);
        self.run.fill(cfg);
        self.out.fill(cfg);
        fill!(self, cfg; param, values);
    }
}

impl RobustArgs {
    pub fn fill(&mut self, cfg: &FileConfig) {
        self.run.fill(cfg);
        self.out.fill(cfg);
        fill!(self, cfg; n, d, sigma, data_seed, extra_dims, algorithms);
        self.standardize |= cfg.standardize.unwrap_or(false);
    }
}

impl FitdiagArgs {
    pub fn fill(&mut self, cfg: &FileConfig) {
        self.data.fill(cfg);
        self.run.fill(cfg);
        self.out.fill(cfg);
        fill!(self, cfg; cluster);
    }
}

pub fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}
