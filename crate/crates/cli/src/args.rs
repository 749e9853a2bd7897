use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "isac", version, about = "Wideband THz ISAC antenna selection and hybrid beamforming simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a hybrid beamformer on one subarray and report its SE.
    Design(DesignArgs),
    /// Search for the best subarray.
    Select(SelectArgs),
    /// Monte Carlo sweep over one parameter.
    Sweep(SweepArgs),
    /// Export a labeled dataset for classifier training.
    ExportDataset(ExportArgs),
    /// Array gain of the full array versus direction, per subcarrier.
    GainProfile(GainArgs),
    /// Selection accuracy on a dataset under input corruption.
    EvalRobustness(RobustnessArgs),
}

/// Options shared by every subcommand. Precedence, lowest first:
/// defaults, `--config`, `--set`, the named flags.
#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` overrides on documented keys.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (directory for export-dataset).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "G")]
    pub g: Option<usize>,
    #[arg(long = "M")]
    pub m: Option<usize>,
    #[arg(long = "N_RF")]
    pub n_rf: Option<usize>,
    #[arg(long = "N_ds")]
    pub n_ds: Option<usize>,
    /// Carrier frequency, Hz.
    #[arg(long)]
    pub fc: Option<f64>,
    /// Bandwidth, Hz.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// SNR in dB (sets sigma2 = 10^(-snr/10)).
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<f64>,
    /// Disable beam-squint compensation.
    #[arg(long = "no-bsc")]
    pub no_bsc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Gss,
    Sequential,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub common: Common,
    /// One-based antenna indices, comma separated. Defaults to 1..=K.
    #[arg(long, value_delimiter = ',')]
    pub subarray: Option<Vec<usize>>,
    /// Also write the inner objective trace to `<out>.trace.csv`.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "gss")]
    pub mode: Mode,
    /// Block count for sequential mode.
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// snr, K, N_RF, G or epsilon.
    #[arg(long)]
    pub var: String,
    /// `start:step:stop` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Comma-separated methods; all by default.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Candidate set of the optimized methods (sequential searches the full set).
    #[arg(long, value_enum, default_value = "gss")]
    pub mode: Mode,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: Common,
    /// Channel realizations.
    #[arg(long, default_value_t = 10)]
    pub realizations: usize,
    /// Noise draws per realization and SNR.
    #[arg(long, default_value_t = 5)]
    pub draws: usize,
    /// Training SNRs in dB.
    #[arg(long = "snr-train", value_delimiter = ',', allow_hyphen_values = true, default_value = "15,20,25")]
    pub snr_train: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub blocks: usize,
}

#[derive(Debug, Args)]
pub struct GainArgs {
    #[command(flatten)]
    pub common: Common,
    /// User direction, degrees.
    #[arg(long, default_value_t = 40.0)]
    pub theta: f64,
    /// Grid step, degrees.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset directory written by export-dataset.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Test SNRs in dB; `inf` for clean inputs.
    #[arg(long = "snr-test", value_delimiter = ',', allow_hyphen_values = true, default_value = "-10,0,10,20,inf")]
    pub snr_test: Vec<f64>,
    #[arg(long, default_value_t = 2)]
    pub draws: usize,
    /// CSV `snr_test,sample,class` of external predictions instead of the
    /// model-based search.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}
