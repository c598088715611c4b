//! Command-line driver.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::data::{self, ImageShape};
use crate::error::{Error, Result};
use crate::fitness::identify;
use crate::params::{GaParams, NnParams};
use crate::report::{DatasetSummary, RunReport};
use crate::synth::{self, SynthKind};

pub const EXIT_CONCLUSIVE: i32 = 0;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_ARGS: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "probident", version, about = "Decide whether a dataset is classification or regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve network specifications on a CSV dataset and report the verdict.
    Run(RunArgs),
    /// Write a synthetic CSV dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Target column name (or zero-based index).
    #[arg(long)]
    pub target_col: String,
    /// Treat features as images, e.g. `28,28,1`.
    #[arg(long, value_name = "H,W,C")]
    pub image_shape: Option<ImageShape>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Maximum number of parallel fitness evaluations.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, default_value_t = 50)]
    pub population: usize,
    #[arg(long, default_value_t = 10)]
    pub generations: usize,
    #[arg(long, default_value_t = 5)]
    pub tournament: usize,
    #[arg(long, default_value_t = 0.70)]
    pub crossover_rate: f64,
    #[arg(long, default_value_t = 0.30)]
    pub mutation_rate: f64,
    /// Let flat inputs draw convolution and pooling codes.
    #[arg(long)]
    pub spatial_codes_on_flat: bool,

    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2048)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.01)]
    pub init_std: f64,
    #[arg(long, default_value_t = 100)]
    pub hidden_units: usize,
    #[arg(long, default_value_t = 10)]
    pub conv_filters: usize,
    #[arg(long, default_value_t = 0.8)]
    pub keep_prob: f64,
}

impl RunArgs {
    pub fn ga_params(&self) -> GaParams {
        GaParams {
            population_size: self.population,
            generations: self.generations,
            tournament_size: self.tournament,
            crossover_rate: self.crossover_rate,
            mutation_rate: self.mutation_rate,
            spatial_codes_on_flat: self.spatial_codes_on_flat,
        }
    }

    pub fn nn_params(&self) -> NnParams {
        let mut nn = NnParams {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.lr,
            hidden_units: self.hidden_units,
            conv_filters: self.conv_filters,
            keep_prob: self.keep_prob,
            ..NnParams::default()
        };
        nn.init.std = self.init_std;
        nn
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// blobs-K, linreg or digits8x8.
    #[arg(long)]
    pub kind: SynthKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Loads, evolves and decides. Returns the report without writing it.
pub fn run(args: &RunArgs) -> Result<RunReport> {
    let ga = args.ga_params();
    let nn = args.nn_params();
    ga.validate()?;
    nn.validate()?;

    let start = Instant::now();
    let raw = data::load_csv(&args.data, &args.target_col, args.image_shape)?;
    let dataset = data::split(&raw, args.seed)?;
    info!(
        "loaded {} samples, {} features, {} unique targets ({} input)",
        raw.samples(),
        raw.n_features(),
        dataset.unique_targets(),
        dataset.input.kind_name()
    );

    let (ga_run, verdict) = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build()
            .map_err(|e| Error::Param(format!("cannot start {jobs} workers: {e}")))?
            .install(|| identify(&dataset, &ga, &nn, args.seed)),
        None => identify(&dataset, &ga, &nn, args.seed),
    };
    info!("verdict: {}", verdict.label);

    let summary = DatasetSummary::new(
        &args.data.display().to_string(),
        &raw.target_name,
        raw.n_features(),
        args.image_shape,
        &dataset,
    );
    Ok(RunReport::new(
        &verdict,
        &ga_run,
        summary,
        &ga,
        &nn,
        args.seed,
        args.jobs.map(|j| j as usize),
        start.elapsed().as_secs_f64(),
    ))
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::Param(_) => EXIT_ARGS,
        _ => EXIT_DATA,
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let report = run(&args)?;
            let json = report.to_json()? + "\n";
            match &args.out {
                Some(path) => std::fs::write(path, json).map_err(|e| Error::io(path, e))?,
                None => print!("{json}"),
            }
            Ok(if report.is_conclusive() {
                EXIT_CONCLUSIVE
            } else {
                EXIT_INCONCLUSIVE
            })
        }
        Command::Synth(args) => {
            synth::gen_synth(args.kind, args.n, args.seed, &args.out)?;
            info!("wrote {} {} samples to {}", args.n, args.kind, args.out.display());
            Ok(EXIT_CONCLUSIVE)
        }
    }
}

/// Parses `args` and runs the chosen command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ARGS } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}
