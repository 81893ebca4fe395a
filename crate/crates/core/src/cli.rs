//! Command-line front end: `preprocess`, `train`, `eval`, `sweep`, `synth`.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cells::{load_checkpoint, save_checkpoint, Variant};
use crate::error::{Error, Result};
use crate::graph::{read_edge_list, DEFAULT_CHEB_ORDER};
use crate::pipeline::{
    build_dataset, filter_hosts, ingest, sliding_windows, split, EdgeSource, EventDataset, DEFAULT_K_MERGE,
    DEFAULT_MIN_OCCURRENCES,
};
use crate::synth::{generate, SynthConfig, Topology};
use crate::training::{evaluate, train, write_metrics_csv, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

/// JSON run configuration. Absent keys take the training defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// step, lstm or convlstm
    #[arg(long)]
    pub model: Option<Variant>,
    /// Window length (s − 1 input frames)
    #[arg(long)]
    pub s: Option<usize>,
    /// Raw steps merged per frame; must match the dataset when given
    #[arg(long)]
    pub k_merge: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Chebyshev order K
    #[arg(long)]
    pub k_cheb: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Leave no-event targets out of accuracy
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exclude_zero_event: Option<bool>,
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfig) -> RunConfig {
        RunConfig {
            model: other.model.or(self.model),
            s: other.s.or(self.s),
            k_merge: other.k_merge.or(self.k_merge),
            hidden_dim: other.hidden_dim.or(self.hidden_dim),
            k_cheb: other.k_cheb.or(self.k_cheb),
            lr: other.lr.or(self.lr),
            weight_decay: other.weight_decay.or(self.weight_decay),
            batch_size: other.batch_size.or(self.batch_size),
            epochs: other.epochs.or(self.epochs),
            seed: other.seed.or(self.seed),
            train_fraction: other.train_fraction.or(self.train_fraction),
            exclude_zero_event: other.exclude_zero_event.or(self.exclude_zero_event),
            dataset_dir: other.dataset_dir.or(self.dataset_dir),
            output_dir: other.output_dir.or(self.output_dir),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            variant: self.model.unwrap_or(d.variant),
            s: self.s.unwrap_or(d.s),
            d_h: self.hidden_dim.unwrap_or(d.d_h),
            order: self.k_cheb.unwrap_or(d.order),
            lr: self.lr.unwrap_or(d.lr),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            epochs: self.epochs.unwrap_or(d.epochs),
            seed: self.seed.unwrap_or(d.seed),
            train_fraction: self.train_fraction.unwrap_or(d.train_fraction),
            exclude_zero_event: self.exclude_zero_event.unwrap_or(d.exclude_zero_event),
            ..d
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    fn load_dataset(&self) -> Result<EventDataset> {
        let dir = self
            .dataset_dir
            .as_deref()
            .ok_or_else(|| Error::invalid("no dataset_dir given (use --dataset-dir or the config file)"))?;
        let dataset = EventDataset::read_dir(dir, self.k_cheb.unwrap_or(DEFAULT_CHEB_ORDER))?;
        if let Some(k) = self.k_merge.filter(|&k| k != dataset.k_merge) {
            return Err(Error::invalid(format!(
                "config asks for k_merge = {k} but {} was merged with k_merge = {}",
                dir.display(),
                dataset.k_merge
            )));
        }
        Ok(dataset)
    }
}

#[derive(Debug, Parser)]
#[command(name = "step", version, about = "Graph-convolutional LSTM event prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: RunConfig,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        Ok(base.overridden_by(self.overrides))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn an events CSV into a dataset directory
    Preprocess {
        #[arg(long)]
        events: PathBuf,
        /// Explicit `src,dst` edge list instead of log interactions
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long)]
        k_merge: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_MIN_OCCURRENCES)]
        min_occurrences: usize,
        /// Raw time units per step before merging
        #[arg(long, default_value_t = 1)]
        bin_width: u64,
        /// Read k_merge from a run configuration
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Train one model; writes a checkpoint and per-epoch metrics
    Train(RunArgs),
    /// Score a checkpoint on the test split of a dataset
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Train every (model, s) pair and tabulate test accuracy
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 15, 20])]
        s_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = Variant::ALL.to_vec())]
        models: Vec<Variant>,
    },
    /// Generate a synthetic dataset directory
    Synth {
        #[arg(long, default_value_t = 30)]
        n: usize,
        /// ring, grid or erdos-renyi:<p>
        #[arg(long, default_value = "ring")]
        topology: Topology,
        #[arg(long, default_value_t = 5)]
        d: usize,
        /// Number of frames T
        #[arg(long = "steps", default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0.9)]
        coupling: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                EXIT_INPUT
            } else {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            }
        }
    }
}

fn emit(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Preprocess {
            events,
            edges,
            k_merge,
            min_occurrences,
            bin_width,
            config,
            output_dir,
        } => {
            let from_config = match &config {
                Some(path) => RunConfig::from_file(path)?.k_merge,
                None => None,
            };
            let k = k_merge.or(from_config).unwrap_or(DEFAULT_K_MERGE);
            let log = filter_hosts(&ingest(&events)?, min_occurrences)?;
            let source = match &edges {
                Some(path) => EdgeSource::Explicit(read_edge_list(path)?),
                None => EdgeSource::Interactions,
            };
            let dataset = build_dataset(&log, k, bin_width, &source, DEFAULT_CHEB_ORDER)?;
            dataset.write_dir(&output_dir)?;
            emit(out, &format!("n={} d={} T={}", dataset.n(), dataset.d(), dataset.steps()))
        }
        Command::Train(args) => {
            let run = args.resolve()?;
            let dataset = run.load_dataset()?;
            let config = run.train_config();
            let outcome = train(&dataset, &config)?;
            let dir = run.output_dir();
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            save_checkpoint(&dir.join(CHECKPOINT_FILE), &outcome.params, &dataset.vocabulary)?;
            write_metrics_csv(&dir.join(METRICS_FILE), &outcome.metrics)?;
            emit(out, &format!("test_acc={:.4}", outcome.final_test_acc()))
        }
        Command::Eval { checkpoint, run } => {
            let run = run.resolve()?;
            let ckpt = load_checkpoint(&checkpoint)?;
            let run = RunConfig {
                k_cheb: run.k_cheb.or(Some(ckpt.params.shape().order)),
                ..run
            };
            let dataset = run.load_dataset()?;
            if ckpt.vocabulary != dataset.vocabulary {
                return Err(Error::invalid("checkpoint vocabulary differs from the dataset's"));
            }
            let config = run.train_config();
            let windows = sliding_windows(&dataset, config.s)?;
            let (_, test) = split(&windows, config.train_fraction)?;
            let acc = evaluate(&ckpt.params, &dataset.graph, &test, config.exclude_zero_event)?;
            emit(out, &format!("test_acc={acc:.4}"))
        }
        Command::Sweep { run, s_values, models } => {
            let run = run.resolve()?;
            let dataset = run.load_dataset()?;
            let base = run.train_config();
            let mut cells: Vec<(Variant, usize)> = models
                .iter()
                .flat_map(|&m| s_values.iter().map(move |&s| (m, s)))
                .collect();
            cells.sort();
            cells.dedup();
            let dir = run.output_dir();
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let results: Vec<Result<(Variant, usize, f64)>> = cells
                .par_iter()
                .map(|&(variant, s)| {
                    let config = TrainConfig { variant, s, ..base.clone() };
                    let outcome = train(&dataset, &config)?;
                    write_metrics_csv(&dir.join(format!("metrics_{variant}_s{s}.csv")), &outcome.metrics)?;
                    Ok((variant, s, outcome.final_test_acc()))
                })
                .collect();
            let mut table = String::from("model,s,test_acc\n");
            for r in results {
                let (variant, s, acc) = r?;
                writeln!(table, "{variant},{s},{acc:.6}").unwrap();
                emit(out, &format!("{variant} s={s} test_acc={acc:.4}"))?;
            }
            let path = dir.join(SWEEP_FILE);
            fs::write(&path, table).map_err(|e| Error::io(&path, e))
        }
        Command::Synth {
            n,
            topology,
            d,
            steps,
            coupling,
            noise,
            seed,
            output_dir,
        } => {
            let config = SynthConfig {
                n,
                topology,
                d,
                steps,
                coupling,
                noise,
                seed,
            };
            let dataset = generate(&config)?;
            dataset.write_dir(&output_dir)?;
            emit(
                out,
                &format!(
                    "n={} d={} T={} bayes_rate={:.4}",
                    dataset.n(),
                    dataset.d(),
                    dataset.steps(),
                    dataset.bayes_rate.unwrap_or(f64::NAN)
                ),
            )
        }
    }
}
