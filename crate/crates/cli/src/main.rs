//! `ucsc`: generate datasets, run clustering experiments and reproduce the
//! published comparison tables.

mod commands;
mod reference;
mod settings;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use ucsc_core::evaluation::DEFAULT_J_TOLERANCE;

use settings::{ExperimentConfig, Settings};

#[derive(Parser)]
#[command(
    name = "ucsc",
    version,
    about = "Clonal-selection clustering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-mixture dataset.
    Generate {
        /// Built-in dataset: dataset1, dataset2 or dataset3.
        #[arg(required_unless_present = "mixture", conflicts_with = "mixture")]
        dataset: Option<String>,
        /// Mixture file with one `count ; means ; variances` line per component.
        #[arg(long)]
        mixture: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one or both algorithms repeatedly on a dataset.
    Run(Box<RunArgs>),
    /// Run both algorithms on all five datasets and compare with the
    /// published tables.
    Reproduce {
        /// Directory holding iris.data and breast-cancer-wisconsin.data.
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_J_TOLERANCE)]
        j_tolerance: f64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
}

/// Flags override values from `--config`, which override defaults.
#[derive(Args)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Data file path, or dataset1 / dataset2 / dataset3 to generate in memory.
    #[arg(long)]
    dataset: Option<String>,
    /// File layout: generic (label in last column), iris or breast-cancer.
    #[arg(long)]
    schema: Option<String>,
    /// Comma-separated zero-based feature columns.
    #[arg(long)]
    features: Option<String>,
    /// Zero-based label column; negative counts from the end.
    #[arg(long, allow_hyphen_values = true)]
    label_column: Option<isize>,
    #[arg(long)]
    missing_marker: Option<String>,
    /// auto, comma or whitespace.
    #[arg(long)]
    delimiter: Option<String>,
    /// reject, drop or impute.
    #[arg(long)]
    missing: Option<String>,
    /// Seed for generated datasets; defaults to --seed.
    #[arg(long)]
    data_seed: Option<u64>,
    /// ucsc, kmeans or both.
    #[arg(long)]
    algo: Option<String>,
    /// Cluster count; defaults to the number of classes in the data.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Master seed; per-run seeds are derived from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    pop_size: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Antibodies replaced by random ones each generation.
    #[arg(long)]
    replace: Option<usize>,
    /// Write refined centres back into antibodies (true) or only score them.
    #[arg(long)]
    lamarckian: Option<bool>,
    /// K-means iteration cap.
    #[arg(long)]
    max_iters: Option<usize>,
    /// K-means initialisation: forgy or uniform.
    #[arg(long)]
    init: Option<String>,
    /// Relative tolerance for counting runs that reach the best J.
    #[arg(long)]
    j_tolerance: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        let flags: [(&str, Option<String>); 21] = [
            ("dataset", self.dataset.clone()),
            ("schema", self.schema.clone()),
            ("features", self.features.clone()),
            ("label-column", self.label_column.map(|v| v.to_string())),
            ("missing-marker", self.missing_marker.clone()),
            ("delimiter", self.delimiter.clone()),
            ("missing", self.missing.clone()),
            ("data-seed", self.data_seed.map(|v| v.to_string())),
            ("algo", self.algo.clone()),
            ("k", self.k.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("generations", self.generations.map(|v| v.to_string())),
            ("pop-size", self.pop_size.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("replace", self.replace.map(|v| v.to_string())),
            ("lamarckian", self.lamarckian.map(|v| v.to_string())),
            ("max-iters", self.max_iters.map(|v| v.to_string())),
            ("init", self.init.clone()),
            ("j-tolerance", self.j_tolerance.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        Ok(s)
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            dataset,
            mixture,
            seed,
            out,
        } => commands::generate(dataset.as_deref(), mixture.as_deref(), seed, &out),
        Command::Run(args) => {
            let config = ExperimentConfig::from_settings(&args.settings()?)?;
            commands::run(&config)
        }
        Command::Reproduce {
            data_dir,
            seed,
            runs,
            j_tolerance,
            out,
        } => commands::reproduce(&commands::ReproduceOptions {
            data_dir,
            master_seed: seed,
            runs,
            j_tolerance,
            out,
        }),
    }
}
