use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weaksim::corpus::BenchmarkKind;
use weaksim::eval::EvalOptions;
use weaksim::optim::TrainConfig;
use weaksim::pipeline::{
    cmd_build, cmd_eval, cmd_ingest, cmd_sweep, cmd_synth, cmd_train, expand_inputs, format_table,
    BuildOptions, DatasetChoice, EvalSettings, SweepAxis,
};
use weaksim::synth::SynthConfig;
use weaksim::{Error, Result};

/// Weakly-supervised sentence embeddings from tweet quote/reply relations.
#[derive(Debug, Parser)]
#[command(name = "weaksim", version)]
struct Cli {
    /// Master seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for encoding and evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Single-threaded, no timestamps: identical inputs give identical bytes.
    #[arg(long, global = true)]
    deterministic: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse archive JSON-lines files (optionally .gz/.bz2) into a record store.
    Ingest {
        /// Input files or glob patterns.
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Language tag to keep; `*` keeps all.
        #[arg(long, default_value = "en")]
        lang: String,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Build held-out benchmarks and training pairs from a record store.
    Build {
        #[arg(long)]
        records: PathBuf,
        /// Qt, Rp, CoQt, CoRp or all.
        #[arg(long, default_value = "all")]
        dataset: String,
        /// Pairs sampled per dataset (default: all available).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = weaksim::corpus::DEFAULT_BENCH_QUERIES)]
        bench_queries: usize,
        /// Comma-separated benchmarks to build first.
        #[arg(long, value_delimiter = ',', default_value = "DQ,DR,CQ,CR")]
        benchmarks: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train an encoder on a pair file.
    Train {
        #[arg(long)]
        pairs: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Evaluate a checkpoint on ranking benchmarks (.jsonl) or graded pairs (.tsv).
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Truncate nDCG to the top k candidates.
        #[arg(long)]
        at_k: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train one model per axis value and score each on a fixed benchmark.
    Sweep {
        /// corpus_size or batch_size.
        #[arg(long)]
        axis: String,
        /// Ascending, comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        bench: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        at_k: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic archive with topic structure and quote/reply links.
    Synth {
        #[arg(long, default_value_t = 50)]
        topics: usize,
        #[arg(long, default_value_t = 40)]
        pairs_per_topic: usize,
        #[arg(long, default_value_t = 5000)]
        vocab_size: usize,
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        /// Extra targets per relation kind with 6 responses each (benchmark material).
        #[arg(long, default_value_t = 0)]
        rich_targets: usize,
        #[arg(long, short)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable), e.g. `--set loss=triplet`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, cli: &Cli) -> Result<TrainConfig> {
        let base = match &self.config {
            Some(p) => TrainConfig::from_file(p)?,
            None => TrainConfig::default(),
        };
        let mut pairs = Vec::new();
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("override {o:?} is not KEY=VALUE")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(s) = cli.seed {
            pairs.push(("seed".into(), s.to_string()));
        }
        if let Some(t) = threads(cli) {
            pairs.push(("threads".into(), t.to_string()));
        }
        base.with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

fn threads(cli: &Cli) -> Option<usize> {
    if cli.deterministic {
        Some(1)
    } else {
        cli.threads
    }
}

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(TrainConfig::default().seed);
    match &cli.command {
        Command::Synth {
            topics,
            pairs_per_topic,
            vocab_size,
            noise,
            rich_targets,
            out,
        } => {
            let cfg = SynthConfig {
                topics: *topics,
                pairs_per_topic: *pairs_per_topic,
                vocab_size: *vocab_size,
                noise: *noise,
                seed,
                rich_targets: *rich_targets,
            };
            let s = cmd_synth(&cfg, out)?;
            println!(
                "wrote {} tweets, {} relations to {}",
                s.records,
                s.edges,
                out.display()
            );
        }
        Command::Ingest { inputs, lang, out } => {
            let paths = expand_inputs(inputs)?;
            let s = cmd_ingest(&paths, lang, out)?;
            println!(
                "{} files: {} lines, {} records kept ({} filtered, {} malformed, {} duplicates); {} quote and {} reply relations",
                s.files,
                s.totals.lines,
                s.records,
                s.totals.filtered,
                s.totals.malformed,
                s.totals.duplicates,
                s.quote_edges,
                s.reply_edges
            );
        }
        Command::Build {
            records,
            dataset,
            n,
            bench_queries,
            benchmarks,
            out_dir,
        } => {
            let opts = BuildOptions {
                dataset: dataset.parse::<DatasetChoice>()?,
                n: *n,
                seed,
                bench_queries: *bench_queries,
                benchmarks: benchmarks
                    .iter()
                    .filter(|b| !b.is_empty())
                    .map(|b| b.parse::<BenchmarkKind>())
                    .collect::<Result<_>>()?,
            };
            let s = cmd_build(records, &opts, out_dir)?;
            for (name, q) in &s.benchmark_queries {
                println!("benchmark {name}: {q} queries");
            }
            for (name, n) in &s.sampled_pairs {
                println!(
                    "dataset {name}: {n} pairs (of {} available)",
                    s.available_pairs[name]
                );
            }
            println!("{} training pairs in {}", s.total_pairs, out_dir.display());
        }
        Command::Train {
            pairs,
            config,
            out_dir,
        } => {
            let cfg = config.resolve(cli)?;
            let s = cmd_train(pairs, &cfg, out_dir)?;
            println!(
                "{} pairs, {} steps, loss {:.4} -> {:.4}; checkpoint sha256 {}",
                s.pairs, s.steps, s.first_loss, s.last_loss, s.checkpoint_sha256
            );
        }
        Command::Eval {
            checkpoint,
            inputs,
            at_k,
            out_dir,
        } => {
            let paths = expand_inputs(inputs)?;
            let settings = EvalSettings {
                options: EvalOptions {
                    at_k: *at_k,
                    threads: threads(cli).unwrap_or(1),
                },
                deterministic: cli.deterministic,
            };
            let reports = cmd_eval(checkpoint, &paths, out_dir, settings)?;
            let name = checkpoint
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("model");
            print!("{}", format_table(name, &reports));
        }
        Command::Sweep {
            axis,
            values,
            pairs,
            bench,
            config,
            at_k,
            out_dir,
        } => {
            let axis: SweepAxis = axis.parse()?;
            let cfg = config.resolve(cli)?;
            let opts = EvalOptions {
                at_k: *at_k,
                threads: cfg.threads,
            };
            let s = cmd_sweep(axis, values, &cfg, pairs, bench, out_dir, opts)?;
            print!("{}", s.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("weaksim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
