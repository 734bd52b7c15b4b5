//! `eoi`: build instruction corpora, score predictions, render reports and
//! generate synthetic fixtures.

mod commands;
mod logging;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use eo_instruct::fixtures::FIXTURE_DIR_ENV;

#[derive(Parser, Debug)]
#[command(
    name = "eoi",
    version,
    about = "Temporal EO instruction corpus toolkit"
)]
pub struct Cli {
    /// Worker threads; affects speed only, never output bytes.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Log line format on stderr.
    #[arg(long, global = true, value_enum, default_value_t = LogFormat::Text)]
    pub log_format: LogFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LogFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Ingest sources and write a conversation corpus plus manifest.
    Build(BuildArgs),
    /// Score a prediction file against a corpus.
    Eval(EvalArgs),
    /// Render one or more evaluation files as a table.
    Report(ReportArgs),
    /// Write a synthetic source tree.
    Fixtures(FixturesArgs),
    /// Write synthetic responses for a corpus.
    Oracle(OracleArgs),
    /// Turn per-image predictions into temporal predictions.
    Adapt(AdaptArgs),
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Source as `kind=path`, e.g. `xbd=/data/xbd`. Repeatable.
    #[arg(long = "source", value_name = "KIND=PATH")]
    pub sources: Vec<String>,
    /// Fixture tree to use for every source kind.
    #[arg(long, env = FIXTURE_DIR_ENV)]
    pub fixtures: Option<PathBuf>,
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub max_images: usize,
    /// Task weights, e.g. `xbd=cd_loc:1,qa:2;qfabric=tre`.
    #[arg(long)]
    pub mix: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub metadata_prob: f64,
    #[arg(long, default_value_t = 0.3)]
    pub subseq_prob: f64,
    /// Keep both the RGB and the Sentinel version of shared scenes.
    #[arg(long)]
    pub no_pair_fmow: bool,
    /// Corpus JSONL path.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to the corpus path with `.manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    F1,
    Accuracy,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSONL of `{id, response_text}`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Evaluation JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Keep only reports with this metric. Repeatable.
    #[arg(long = "metric", value_enum)]
    pub metrics: Vec<MetricChoice>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Evaluation JSON files written by `eval`.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct FixturesArgs {
    /// Output directory; defaults to the fixture cache directory.
    #[arg(long, env = FIXTURE_DIR_ENV)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Scenes per temporal source.
    #[arg(long, default_value_t = 10)]
    pub scenes: usize,
    /// Single-image examples; defaults to `--scenes`.
    #[arg(long)]
    pub single: Option<usize>,
    #[arg(long, default_value = "train")]
    pub split: String,
    #[arg(long)]
    pub damage_size: Option<u32>,
    #[arg(long)]
    pub urban_size: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleModeArg {
    Perfect,
    Noisy,
    Constant,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = OracleModeArg::Perfect)]
    pub mode: OracleModeArg,
    /// Response text for constant mode.
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub jitter: u32,
    #[arg(long, default_value_t = 0.0)]
    pub flip_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    pub miss_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AdaptArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSONL of `{id, image_index, boxes?, class?, answer?}`.
    #[arg(long)]
    pub per_image: PathBuf,
    /// Boxes from different images overlap above this IoU.
    #[arg(long, default_value_t = 0.0)]
    pub min_iou: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    logging::init(cli.log_format);
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            logging::report_error(&e);
            ExitCode::FAILURE
        }
    }
}
