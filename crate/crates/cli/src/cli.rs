//! Command-line interface: `sample`, `bench`, and `islands` subcommands.
//!
//! Exit codes: 0 on success, 1 when a sampler failed at runtime (partial
//! results are still written), 2 on usage or configuration errors.

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use spreadnuts_core::evaluation::{generate_random_mixture, MixtureGenConfig};
use spreadnuts_core::rng::derive_seed;

use crate::output::{resolve_output_path, write_histogram_csv, write_json, write_samples_csv};
use crate::report::{summarize_by_dimension, DimensionSummary, TrialReport, REPORT_SCHEMA_VERSION};
use crate::targets::load_target;
use crate::trial::{run_trial, two_island_experiment, SamplerKind, TrialSettings};

/// An inclusive integer range written `lo..hi` (or a single value).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InclusiveRange {
    pub lo: usize,
    pub hi: usize,
}

impl FromStr for InclusiveRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| e.to_string());
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo == 0 || lo > hi {
            return Err(format!("range {s:?} must be non-empty with positive bounds"));
        }
        Ok(InclusiveRange { lo, hi })
    }
}

impl fmt::Display for InclusiveRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spreadnuts",
    version,
    about = "Seeded MCMC sampling and benchmarking: NUTS, SpreadNUTS, and direct mixture sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one sampler on one target and write the sample stream.
    Sample(SampleArgs),
    /// Benchmark samplers on randomly generated Gaussian mixtures.
    Bench(BenchArgs),
    /// Two-island mode-exploration experiment at given mode separations.
    Islands(IslandsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SampleFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct CommonRunArgs {
    /// Total draws per sampler (burn-in included).
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Leading draws to discard (and to adapt the step size over).
    #[arg(long, default_value_t = 500)]
    burn: usize,
    /// Master seed; all randomness derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed leapfrog step size (default: auto-tuned during burn-in).
    #[arg(long)]
    step_size: Option<f64>,
    /// Cap on trajectory doublings per NUTS draw.
    #[arg(long, default_value_t = 10)]
    max_depth: usize,
    /// Energy-error threshold treated as a divergence.
    #[arg(long, default_value_t = 1000.0)]
    divergence_threshold: f64,
    /// Dual-averaging target acceptance statistic.
    #[arg(long, default_value_t = 0.8)]
    target_accept: f64,
    /// Cumulative point budget per SpreadNUTS draw.
    #[arg(long, default_value_t = 1024)]
    max_total_points: u64,
    /// Disable the exploration-biased candidate selection of SpreadNUTS.
    #[arg(long)]
    no_selection_bias: bool,
    /// Record wall-clock timings in reports (breaks byte-identical output).
    #[arg(long)]
    timings: bool,
}

impl CommonRunArgs {
    fn settings(&self, samplers: Vec<SamplerKind>) -> TrialSettings {
        TrialSettings {
            n_samples: self.n,
            burn_in: self.burn,
            samplers,
            max_depth: self.max_depth,
            divergence_threshold: self.divergence_threshold,
            target_accept: self.target_accept,
            step_size: self.step_size,
            max_total_points: self.max_total_points,
            selection_bias: !self.no_selection_bias,
            record_timings: self.timings,
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Which sampler to run.
    #[arg(long, value_enum)]
    sampler: SamplerKind,
    /// Built-in target name (std-normal-1d, two-island-2.5, ...) or a
    /// mixture specification file.
    #[arg(long)]
    target: String,
    #[command(flatten)]
    run: CommonRunArgs,
    /// Output file (default: samples.csv / samples.json in the output dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: SampleFormat,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Trials per dimension.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Inclusive dimension range, e.g. 1..3.
    #[arg(long, default_value = "1..3")]
    dims: InclusiveRange,
    /// Inclusive range of mixture component counts.
    #[arg(long, default_value = "1..4")]
    components: InclusiveRange,
    /// Samplers to compare.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [SamplerKind::Nuts, SamplerKind::SpreadNuts, SamplerKind::Direct])]
    samplers: Vec<SamplerKind>,
    #[command(flatten)]
    run: CommonRunArgs,
    /// Report file (default: bench_report.json in the output dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-trial histogram CSVs into this directory.
    #[arg(long)]
    histograms: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IslandsArgs {
    /// Mode separation magnitude; repeat for several experiments.
    #[arg(long = "mu", required = true)]
    mu: Vec<f64>,
    /// Samplers to compare.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [SamplerKind::Nuts, SamplerKind::SpreadNuts, SamplerKind::Direct])]
    samplers: Vec<SamplerKind>,
    #[command(flatten)]
    run: CommonRunArgs,
    /// Report file (default: islands_report.json in the output dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-trial histogram CSVs into this directory.
    #[arg(long)]
    histograms: Option<PathBuf>,
}

#[derive(Serialize)]
struct SampleOutput<'a> {
    schema_version: u32,
    config: &'a SampleConfigEcho,
    samples: &'a [Vec<f64>],
}

#[derive(Serialize)]
struct SampleConfigEcho {
    command: &'static str,
    master_seed: u64,
    sampler: SamplerKind,
    target: String,
    settings: TrialSettings,
    chain_seed: u64,
    format: SampleFormat,
}

#[derive(Serialize)]
struct BenchReport {
    schema_version: u32,
    config: BenchConfigEcho,
    trials: Vec<TrialReport>,
    summary: Vec<DimensionSummary>,
}

#[derive(Serialize)]
struct BenchConfigEcho {
    command: &'static str,
    master_seed: u64,
    trials_per_dimension: u64,
    dimensions: InclusiveRange,
    components: InclusiveRange,
    settings: TrialSettings,
}

#[derive(Serialize)]
struct IslandsReport {
    schema_version: u32,
    config: IslandsConfigEcho,
    trials: Vec<TrialReport>,
}

#[derive(Serialize)]
struct IslandsConfigEcho {
    command: &'static str,
    master_seed: u64,
    mu: Vec<f64>,
    settings: TrialSettings,
}

enum CliError {
    /// Configuration or usage problem: exit 2.
    Usage(anyhow::Error),
    /// Runtime failure after partial results: exit 1.
    Runtime(anyhow::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Runtime(e) => e,
        }
    }
}

fn usage<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Usage(e.into())
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code.
pub fn run<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version (exit 0) and usage errors (exit 2)
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Sample(args) => run_sample(args),
        Command::Bench(args) => run_bench(args),
        Command::Islands(args) => run_islands(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            e.code()
        }
    }
}

fn run_sample(args: SampleArgs) -> Result<i32, CliError> {
    let settings = args.run.settings(vec![args.sampler]);
    settings.validate().map_err(usage)?;
    let mixture = load_target(&args.target).map_err(usage)?;
    let trial_seed = derive_seed(args.run.seed, 0);
    let run = run_trial(&mixture, &settings, 0, trial_seed);
    let entry = &run.report.samplers[0];
    if let Some(error) = &entry.error {
        return Err(CliError::Runtime(anyhow::anyhow!("sampler failed: {error}")));
    }
    let samples = &run.retained[0].1;
    let config = SampleConfigEcho {
        command: "sample",
        master_seed: args.run.seed,
        sampler: args.sampler,
        target: args.target.clone(),
        settings,
        chain_seed: derive_seed(trial_seed, crate::trial::SUBSTREAM_SAMPLER_BASE),
        format: args.format,
    };
    match args.format {
        SampleFormat::Csv => {
            let path = resolve_output_path(args.out, "samples.csv");
            let config_json = serde_json::to_string(&config).map_err(usage)?;
            write_samples_csv(&path, samples, &config_json).map_err(CliError::Runtime)?;
            eprintln!("wrote {} samples to {}", samples.len(), path.display());
        }
        SampleFormat::Json => {
            let path = resolve_output_path(args.out, "samples.json");
            let output = SampleOutput {
                schema_version: REPORT_SCHEMA_VERSION,
                config: &config,
                samples,
            };
            write_json(&path, &output).map_err(CliError::Runtime)?;
            eprintln!("wrote {} samples to {}", samples.len(), path.display());
        }
    }
    Ok(0)
}

fn write_trial_histograms(
    dir: &PathBuf,
    run: &crate::trial::TrialRun,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, hist) in &run.histograms {
        let path = dir.join(format!("trial{}_{}.csv", run.report.trial_index, name));
        write_histogram_csv(&path, hist)?;
    }
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<i32, CliError> {
    if args.trials == 0 {
        return Err(usage(anyhow::anyhow!("--trials must be at least 1")));
    }
    let settings = args.run.settings(args.samplers.clone());
    settings.validate().map_err(usage)?;
    let mut trials = Vec::new();
    let mut failed = false;
    let mut trial_index = 0u64;
    for dimension in args.dims.lo..=args.dims.hi {
        for _ in 0..args.trials {
            let trial_seed = derive_seed(args.run.seed, trial_index);
            let gen_config = MixtureGenConfig {
                num_components_range: (args.components.lo, args.components.hi),
                dimension_range: (dimension, dimension),
                seed: trial_seed,
                ..MixtureGenConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                trial_seed,
                crate::trial::SUBSTREAM_MIXTURE,
            ));
            let mixture = generate_random_mixture(&gen_config, &mut rng)
                .map_err(|e| CliError::Runtime(e.into()))?;
            let run = run_trial(&mixture, &settings, trial_index, trial_seed);
            if let Some(dir) = &args.histograms {
                write_trial_histograms(dir, &run).map_err(CliError::Runtime)?;
            }
            failed |= run.report.has_errors();
            eprintln!(
                "trial {trial_index}: dimension {dimension}, {} components, baseline m_TV {:.4}",
                run.report.mixture.components.len(),
                run.report.baseline_m_tv
            );
            trials.push(run.report);
            trial_index += 1;
        }
    }
    let report = BenchReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: BenchConfigEcho {
            command: "bench",
            master_seed: args.run.seed,
            trials_per_dimension: args.trials,
            dimensions: args.dims,
            components: args.components,
            settings,
        },
        summary: summarize_by_dimension(&trials),
        trials,
    };
    let path = resolve_output_path(args.out, "bench_report.json");
    write_json(&path, &report).map_err(CliError::Runtime)?;
    eprintln!("wrote bench report to {}", path.display());
    Ok(if failed { 1 } else { 0 })
}

fn run_islands(args: IslandsArgs) -> Result<i32, CliError> {
    let settings = args.run.settings(args.samplers.clone());
    settings.validate().map_err(usage)?;
    for mu in &args.mu {
        if !(*mu > 0.0) {
            return Err(usage(anyhow::anyhow!("--mu must be positive, got {mu}")));
        }
    }
    let mut trials = Vec::new();
    let mut failed = false;
    for (trial_index, &mu) in args.mu.iter().enumerate() {
        let trial_seed = derive_seed(args.run.seed, trial_index as u64);
        let run = two_island_experiment(mu, &settings, trial_index as u64, trial_seed);
        if let Some(dir) = &args.histograms {
            write_trial_histograms(dir, &run).map_err(CliError::Runtime)?;
        }
        failed |= run.report.has_errors();
        for s in &run.report.samplers {
            if let Some(occ) = s.mode_occupancy {
                eprintln!(
                    "mu {mu}: {} occupancy [{:.3}, {:.3}], m_TV {:?}",
                    s.sampler, occ[0], occ[1], s.m_tv
                );
            }
        }
        trials.push(run.report);
    }
    let report = IslandsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: IslandsConfigEcho {
            command: "islands",
            master_seed: args.run.seed,
            mu: args.mu,
            settings,
        },
        trials,
    };
    let path = resolve_output_path(args.out, "islands_report.json");
    write_json(&path, &report).map_err(CliError::Runtime)?;
    eprintln!("wrote islands report to {}", path.display());
    Ok(if failed { 1 } else { 0 })
}
