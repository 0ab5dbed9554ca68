//! `fplfix`: command-line driver for the embedding experiments.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fplfix_core::pipeline::Branch;
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "fplfix", version, about = "Fixed-length fingerprint embedding experiments")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true, env = "FPLFIX_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Generate a synthetic corpus: PGM images, manifest.csv, minutiae.csv
    Synth(SynthArgs),
    /// Gabor-enhance one image or every image of a manifest
    Enhance(EnhanceArgs),
    /// Apply one seeded random rotation, shift and photometric change
    Augment(AugmentArgs),
    /// Extract an embedding archive from a manifest
    Extract(ExtractArgs),
    /// Reduce the dimension of an embedding archive
    Reduce(ReduceArgs),
    /// Score all mated and non-mated pairs of an archive
    Compare(CompareArgs),
    /// EER, FNMR at fixed FMR and DET curve from a score file
    EvalVerify(EvalVerifyArgs),
    /// Closed-set identification rates (CMC) from an archive
    EvalIdentify(EvalIdentifyArgs),
    /// FNMR over a grid of probe rotations and translations
    PerturbGrid(PerturbGridArgs),
    /// Comparison operation counts per embedding size
    Workload(WorkloadArgs),
    /// Verification performance per embedding size
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    identities: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct EnhancementOpts {
    #[arg(long, default_value_t = 16)]
    block_size: usize,
    #[arg(long, default_value_t = 4.0)]
    gabor_sigma: f64,
    #[arg(long)]
    binarize: bool,
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["input", "manifest"]))]
struct EnhanceArgs {
    /// Single input image (PGM or grayscale PNG)
    #[arg(long)]
    input: Option<PathBuf>,
    /// Manifest whose images are all enhanced into the `--out` directory
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output PGM file, or directory in manifest mode
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: EnhancementOpts,
}

#[derive(Debug, Args, Serialize)]
struct AugmentArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Maximum rotation in degrees
    #[arg(long, default_value_t = 0.0)]
    max_rotation: f64,
    /// Maximum shift in pixels per axis
    #[arg(long, default_value_t = 0.0)]
    max_shift: f64,
    /// Maximum brightness change as a fraction of full scale
    #[arg(long, default_value_t = 0.0)]
    brightness: f64,
    /// Maximum relative contrast change
    #[arg(long, default_value_t = 0.0)]
    contrast: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct ExtractArgs {
    #[arg(long)]
    branch: Branch,
    /// Manifest to extract from (texture and minutiae branches)
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Reduce to N dimensions with a projection fitted on the extracted set
    #[arg(long)]
    dim: Option<usize>,
    /// Write the fitted projection model here
    #[arg(long, requires = "dim")]
    projection_out: Option<PathBuf>,
    /// Ground-truth minutiae CSV; detection is used when absent
    #[arg(long)]
    minutiae: Option<PathBuf>,
    /// Texture archive to concatenate (concat branch)
    #[arg(long)]
    texture_archive: Option<PathBuf>,
    /// Minutiae archive to concatenate (concat branch)
    #[arg(long)]
    minutiae_archive: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReduceMethod {
    Pca,
    Truncate,
}

#[derive(Debug, Args, Serialize)]
struct ReduceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, required_unless_present = "model")]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = ReduceMethod::Pca)]
    method: ReduceMethod,
    /// Apply an existing projection model instead of fitting one
    #[arg(long, conflicts_with = "method")]
    model: Option<PathBuf>,
    /// Write the fitted projection model here
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep a seeded uniform sample of at most this many non-mated pairs
    #[arg(long)]
    non_mated_cap: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct EvalVerifyArgs {
    #[arg(long)]
    scores: PathBuf,
    /// JSON report
    #[arg(long)]
    out: PathBuf,
    /// DET curve CSV; defaults to det.csv next to the report
    #[arg(long)]
    det_out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.01,0.1")]
    fmr: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    det_points: usize,
}

#[derive(Debug, Args, Serialize)]
struct EvalIdentifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Highest rank reported; defaults to the number of instances
    #[arg(long)]
    max_rank: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
struct PerturbGridArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "texture")]
    branch: Branch,
    /// Reduce to N dimensions with a projection fitted on the clean set
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    fmr: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50")]
    r: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50")]
    t: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth minutiae CSV; detection is used when absent
    #[arg(long)]
    minutiae: Option<PathBuf>,
    /// Heatmap CSV; the frozen threshold goes to a .json sidecar
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct WorkloadArgs {
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256,512,1024,2048")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 2048)]
    baseline: usize,
    /// Output CSV; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "texture")]
    branch: Branch,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256,512,1024")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 0.001)]
    fmr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Raw embedding cache: read when present, written otherwise
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    minutiae: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|c| c.downcast_ref::<fplfix_core::Error>())
        .map_or("runtime", fplfix_core::Error::kind)
}

/// The error chain joined with ": ", skipping causes already quoted by
/// the message above them.
fn chain_message(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if parts.last().is_none_or(|p| !p.contains(&text)) {
            parts.push(text);
        }
    }
    single_line(&parts.join(": "))
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    ExitCode::from(2)
                }
                _ => {
                    let text = e.render().to_string();
                    let message = text.split("\n\nUsage:").next().unwrap_or_default();
                    eprintln!("error: usage: {}", single_line(message.trim_start_matches("error: ")));
                    ExitCode::from(2)
                }
            };
        }
    };

    match serde_json::to_string(&cli) {
        Ok(config) => eprintln!("config: {config}"),
        Err(e) => eprintln!("config: <unprintable: {e}>"),
    }

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: runtime: {}", single_line(&e.to_string()));
            return ExitCode::FAILURE;
        }
    }

    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", error_kind(&e), chain_message(&e));
            ExitCode::FAILURE
        }
    }
}
