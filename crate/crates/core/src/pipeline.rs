//! File-to-file pipeline commands: synth, ingest, build, train, eval, sweep.
//!
//! Each command writes a [`RunManifest`] next to its outputs recording the
//! resolved settings and the sha256 of every artifact it produced.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    build_benchmark, build_dataset, exclude_edges, exclude_ids, read_benchmark, read_pairs,
    sample_corpus, write_benchmark, write_pairs, BenchmarkKind, Dataset, PairExample,
    RankingBenchmark,
};
use crate::encoder::EncoderModel;
use crate::error::{Error, Result};
use crate::eval::{
    eval_graded, eval_ranking, EvalOptions, EvalReport, GradedPairDataset, ReportMeta,
};
use crate::ingest::{
    extract_relations, ingest_files, join_reply_targets, read_records, write_edges, write_records,
    ParseStats, RecordIndex,
};
use crate::optim::{init_model, train_model, TrainConfig, TrainLog};
use crate::seeds::derive_seed;
use crate::synth::{generate, SynthConfig};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const PAIRS_FILE: &str = "pairs.tsv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seed: Option<u64>,
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            subcommand: subcommand.into(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
            artifacts: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    /// Records an output and its content hash.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        let key = path.display().to_string();
        self.artifacts.insert(key.clone(), sha256_file(path)?);
        self.outputs.push(key);
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&s)?)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    fs::write(path, s + "\n").map_err(|e| Error::io(path, e))
}

/// Expands glob patterns (literal paths pass through); no match is a usage
/// error.
pub fn expand_inputs(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        if p.contains(['*', '?', '[']) {
            let paths = glob::glob(p).map_err(|e| Error::Usage(format!("bad glob {p:?}: {e}")))?;
            let mut matched: Vec<PathBuf> = paths
                .filter_map(|r| r.ok())
                .filter(|p| p.is_file())
                .collect();
            if matched.is_empty() {
                return Err(Error::Usage(format!("glob {p:?} matched no files")));
            }
            out.append(&mut matched);
        } else {
            out.push(PathBuf::from(p));
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("no input files given".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub records: usize,
    pub edges: usize,
}

/// Writes a synthetic archive (JSON lines) to `out`.
pub fn cmd_synth(config: &SynthConfig, out: &Path) -> Result<SynthSummary> {
    let generated = generate(config)?;
    let f = fs::File::create(out).map_err(|e| Error::io(out, e))?;
    let mut w = std::io::BufWriter::new(f);
    for line in &generated.lines {
        writeln!(w, "{line}").map_err(|e| Error::io(out, e))?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    let mut manifest = RunManifest::new("synth", serde_json::to_value(config)?, Some(config.seed));
    manifest.output(out)?;
    manifest.save(&sibling(out, ".manifest.json"))?;
    Ok(SynthSummary {
        records: generated.lines.len(),
        edges: generated.edges.len(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestStats {
    pub files: usize,
    pub records: usize,
    pub quote_edges: usize,
    pub reply_edges: usize,
    pub totals: ParseStats,
    pub per_file: Vec<(String, ParseStats)>,
}

/// Parses `inputs` into a record store at `out`, with `<out>.stats.json`,
/// `<out>.edges.tsv` and `<out>.manifest.json` beside it.
pub fn cmd_ingest(inputs: &[PathBuf], lang: &str, out: &Path) -> Result<IngestStats> {
    if inputs.is_empty() {
        return Err(Error::Usage("ingest needs at least one input file".into()));
    }
    let (records, summary) = ingest_files(inputs, lang)?;
    let edges = extract_relations(&records);
    let stats = IngestStats {
        files: summary.per_file.len(),
        records: records.len(),
        quote_edges: edges
            .iter()
            .filter(|e| e.kind == crate::ingest::RelationKind::Quote)
            .count(),
        reply_edges: edges
            .iter()
            .filter(|e| e.kind == crate::ingest::RelationKind::Reply)
            .count(),
        totals: summary.totals,
        per_file: summary.per_file,
    };
    write_records(out, &records)?;
    let stats_path = sibling(out, ".stats.json");
    write_json(&stats_path, &stats)?;
    let edges_path = sibling(out, ".edges.tsv");
    write_edges(&edges_path, &edges)?;

    let mut manifest = RunManifest::new("ingest", serde_json::json!({ "lang": lang }), None);
    for p in inputs {
        manifest.input(p);
    }
    manifest.output(out)?;
    manifest.output(&stats_path)?;
    manifest.output(&edges_path)?;
    manifest.save(&sibling(out, ".manifest.json"))?;
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetChoice {
    One(Dataset),
    All,
}

impl DatasetChoice {
    pub fn datasets(self) -> Vec<Dataset> {
        match self {
            DatasetChoice::One(d) => vec![d],
            DatasetChoice::All => Dataset::ALL.to_vec(),
        }
    }
}

impl FromStr for DatasetChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(DatasetChoice::All);
        }
        s.parse().map(DatasetChoice::One).map_err(|_| {
            Error::Usage(format!(
                "unknown dataset {s:?}; expected Qt, Rp, CoQt, CoRp or all"
            ))
        })
    }
}

impl std::fmt::Display for DatasetChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetChoice::One(d) => write!(f, "{d}"),
            DatasetChoice::All => f.write_str("all"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub dataset: DatasetChoice,
    /// Pairs sampled per dataset; `None` keeps every available pair.
    pub n: Option<usize>,
    pub seed: u64,
    pub bench_queries: usize,
    pub benchmarks: Vec<BenchmarkKind>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub records: usize,
    pub edges: usize,
    pub dropped_replies: usize,
    pub benchmark_queries: BTreeMap<String, usize>,
    pub banned_ids: usize,
    pub available_pairs: BTreeMap<String, usize>,
    pub sampled_pairs: BTreeMap<String, usize>,
    pub total_pairs: usize,
}

/// Builds held-out benchmarks first, then the training pairs from what
/// remains. Writes `pairs.tsv`, one `<NAME>.jsonl` per benchmark,
/// `build_stats.json` and a manifest into `out_dir`.
pub fn cmd_build(records_path: &Path, opts: &BuildOptions, out_dir: &Path) -> Result<BuildStats> {
    let records = read_records(records_path)?;
    let raw = extract_relations(&records);
    let index = RecordIndex::new(&records);
    let joined = join_reply_targets(raw.clone(), &index);
    let mut stats = BuildStats {
        records: records.len(),
        edges: raw.len(),
        dropped_replies: joined.dropped_replies,
        ..BuildStats::default()
    };
    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new(
        "build",
        serde_json::json!({
            "dataset": opts.dataset.to_string(),
            "n": opts.n,
            "bench_queries": opts.bench_queries,
            "benchmarks": opts.benchmarks.iter().map(|b| b.as_str()).collect::<Vec<_>>(),
        }),
        Some(opts.seed),
    );
    manifest.input(records_path);

    let mut banned: HashSet<String> = HashSet::new();
    let mut bench_paths = Vec::new();
    for &kind in &opts.benchmarks {
        let source = if kind.is_co() { &raw } else { &joined.edges };
        let pool = exclude_edges(source, &banned);
        let bench = build_benchmark(
            &pool,
            kind,
            opts.bench_queries,
            derive_seed(opts.seed, &format!("bench-{kind}")),
        )?;
        banned.extend(bench.involved_ids());
        let path = out_dir.join(format!("{kind}.jsonl"));
        write_benchmark(&path, &bench)?;
        stats
            .benchmark_queries
            .insert(kind.to_string(), bench.queries.len());
        bench_paths.push(path);
    }
    stats.banned_ids = banned.len();

    let mut pairs = Vec::new();
    for d in opts.dataset.datasets() {
        let source = if d.is_co() { &raw } else { &joined.edges };
        let pool = exclude_edges(source, &banned);
        let built = exclude_ids(
            build_dataset(&pool, d, derive_seed(opts.seed, &format!("pairs-{d}"))),
            &banned,
        );
        stats.available_pairs.insert(d.to_string(), built.len());
        let n = opts.n.unwrap_or(built.len());
        let sampled = sample_corpus(&built, n, derive_seed(opts.seed, &format!("sample-{d}")))
            .map_err(|_| {
                Error::Data(format!(
                    "dataset {d}: requested {n} pairs but only {} are available",
                    built.len()
                ))
            })?;
        stats.sampled_pairs.insert(d.to_string(), sampled.len());
        pairs.extend(sampled);
    }
    stats.total_pairs = pairs.len();

    let pairs_path = out_dir.join(PAIRS_FILE);
    write_pairs(&pairs_path, &pairs)?;
    let stats_path = out_dir.join("build_stats.json");
    write_json(&stats_path, &stats)?;
    manifest.output(&pairs_path)?;
    for p in &bench_paths {
        manifest.output(p)?;
    }
    manifest.output(&stats_path)?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub pairs: usize,
    pub steps: usize,
    pub first_loss: f64,
    pub last_loss: f64,
    pub checkpoint_sha256: String,
}

/// Trains on a pair file; writes `model.ckpt`, `train_log.jsonl`,
/// `config.txt` and a manifest into `out_dir`.
pub fn cmd_train(pairs_path: &Path, config: &TrainConfig, out_dir: &Path) -> Result<TrainSummary> {
    config.validate()?;
    let pairs = read_pairs(pairs_path)?;
    let (model, log) = train_model::<f64>(&pairs, config)?;
    ensure_dir(out_dir)?;
    let ckpt = out_dir.join(CHECKPOINT_FILE);
    model.save(&ckpt)?;
    let log_path = out_dir.join(TRAIN_LOG_FILE);
    log.write_jsonl(&log_path)?;
    let cfg_path = out_dir.join("config.txt");
    fs::write(&cfg_path, config.to_flat()).map_err(|e| Error::io(&cfg_path, e))?;

    let mut manifest = RunManifest::new("train", serde_json::to_value(config)?, Some(config.seed));
    manifest.input(pairs_path);
    manifest.output(&ckpt)?;
    manifest.output(&log_path)?;
    manifest.output(&cfg_path)?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(TrainSummary {
        pairs: pairs.len(),
        steps: log.steps.len(),
        first_loss: log.steps.first().map_or(f64::NAN, |s| s.loss),
        last_loss: log.steps.last().map_or(f64::NAN, |s| s.loss),
        checkpoint_sha256: sha256_file(&ckpt)?,
    })
}

/// An evaluation input, chosen by file extension.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalInput {
    Ranking(RankingBenchmark),
    Graded(GradedPairDataset),
}

impl EvalInput {
    pub fn load(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => Ok(EvalInput::Ranking(read_benchmark(path)?)),
            Some("tsv") => Ok(EvalInput::Graded(GradedPairDataset::load(path)?)),
            _ => Err(Error::Usage(format!(
                "{}: expected a .jsonl ranking benchmark or a .tsv graded-pair file",
                path.display()
            ))),
        }
    }

    pub fn evaluate(&self, model: &EncoderModel<f64>, opts: EvalOptions) -> Result<EvalReport> {
        match self {
            EvalInput::Ranking(b) => eval_ranking(model, b, opts),
            EvalInput::Graded(g) => eval_graded(model, g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalSettings {
    pub options: EvalOptions,
    /// Omit wall-clock timestamps so reports are byte-reproducible.
    pub deterministic: bool,
}

/// Evaluates a checkpoint on every input; writes `<name>.report.json` per
/// input and a manifest into `out_dir`.
pub fn cmd_eval(
    checkpoint: &Path,
    inputs: &[PathBuf],
    out_dir: &Path,
    settings: EvalSettings,
) -> Result<Vec<EvalReport>> {
    if inputs.is_empty() {
        return Err(Error::Usage(
            "eval needs at least one benchmark or graded-pair file".into(),
        ));
    }
    let bytes = fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let model = EncoderModel::<f64>::from_checkpoint_bytes(&bytes)?;
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    let meta = ReportMeta {
        checkpoint: Some(hex::encode(Sha256::digest(&bytes))),
        config_hash: Some(hex::encode(Sha256::digest(&bytes[..header_end]))),
        timestamp: if settings.deterministic {
            None
        } else {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        },
    };
    let loaded = inputs
        .iter()
        .map(|p| EvalInput::load(p))
        .collect::<Result<Vec<_>>>()?;
    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new(
        "eval",
        serde_json::json!({ "at_k": settings.options.at_k }),
        None,
    );
    manifest.input(checkpoint);
    let mut reports = Vec::new();
    for (path, input) in inputs.iter().zip(&loaded) {
        manifest.input(path);
        let mut report = input.evaluate(&model, settings.options)?;
        report.meta = meta.clone();
        let out = out_dir.join(format!("{}.report.json", report.benchmark));
        report.save(&out)?;
        manifest.output(&out)?;
        reports.push(report);
    }
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(reports)
}

/// Table with one column per report, values ×100.
pub fn format_table(model_name: &str, reports: &[EvalReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.benchmark.len())
        .max()
        .unwrap_or(0)
        .max(7);
    let name_w = model_name.len().max(5);
    let mut s = format!("{:<name_w$}", "model");
    for r in reports {
        let _ = write!(s, "  {:>width$}", r.benchmark);
    }
    s.push('\n');
    let _ = write!(s, "{model_name:<name_w$}");
    for r in reports {
        let _ = write!(s, "  {:>width$.1}", r.percent());
    }
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    CorpusSize,
    BatchSize,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::CorpusSize => "corpus_size",
            SweepAxis::BatchSize => "batch_size",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus_size" | "corpus-size" => Ok(SweepAxis::CorpusSize),
            "batch_size" | "batch-size" => Ok(SweepAxis::BatchSize),
            _ => Err(Error::Usage(format!(
                "unknown sweep axis {s:?}; expected corpus_size or batch_size"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Axis value; 0 marks the untrained baseline of a corpus-size sweep.
    pub value: usize,
    pub ndcg: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub axis: SweepAxis,
    pub benchmark: String,
    pub rows: Vec<SweepRow>,
    /// Consecutive steps (row i to i+1) with non-decreasing nDCG.
    pub non_decreasing_steps: usize,
}

impl SweepSummary {
    pub fn ndcg_at(&self, value: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.value == value).map(|r| r.ndcg)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},ndcg,steps\n", self.axis.as_str());
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.6},{}", r.value, r.ndcg, r.steps);
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:>12}  {:>8}  {:>6}\n",
            self.axis.as_str(),
            format!("{}x100", self.benchmark),
            "steps"
        );
        for r in &self.rows {
            let label = if r.value == 0 {
                "untrained".to_string()
            } else {
                r.value.to_string()
            };
            let _ = writeln!(s, "{:>12}  {:>8.1}  {:>6}", label, r.ndcg * 100.0, r.steps);
        }
        let _ = writeln!(
            s,
            "non-decreasing steps: {} of {}",
            self.non_decreasing_steps,
            self.rows.len().saturating_sub(1)
        );
        s
    }
}

pub fn validate_sweep_values(values: &[usize]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Usage("sweep needs at least one value".into()));
    }
    if values.contains(&0) {
        return Err(Error::Usage("sweep values must be positive".into()));
    }
    for w in values.windows(2) {
        if w[0] == w[1] {
            return Err(Error::Usage(format!("duplicate sweep value {}", w[0])));
        }
        if w[0] > w[1] {
            return Err(Error::Usage(format!(
                "sweep values must be ascending: {} before {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Sweeps in memory: one fresh model per value, all scored on `bench`.
///
/// Corpus-size subsets are prefixes of one seeded permutation of `pool`
/// (nested), and the first row is the untrained encoder initialized from
/// the smallest subset. Batch-size runs train on the whole pool.
pub fn run_sweep(
    axis: SweepAxis,
    values: &[usize],
    base: &TrainConfig,
    pool: &[PairExample],
    bench: &RankingBenchmark,
    opts: EvalOptions,
) -> Result<(SweepSummary, Vec<(usize, EvalReport)>)> {
    validate_sweep_values(values)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let subset = |n: usize| sample_corpus(pool, n, derive_seed(base.seed, "sweep-corpus"));
    if axis == SweepAxis::CorpusSize {
        let untrained = init_model::<f64>(&subset(values[0])?, base)?;
        let r = eval_ranking(&untrained, bench, opts)?;
        rows.push(SweepRow {
            value: 0,
            ndcg: r.value,
            steps: 0,
        });
        reports.push((0, r));
    }
    for &v in values {
        let (pairs, cfg) = match axis {
            SweepAxis::CorpusSize => (subset(v)?, base.clone()),
            SweepAxis::BatchSize => (
                pool.to_vec(),
                TrainConfig {
                    batch_size: v,
                    ..base.clone()
                },
            ),
        };
        let (model, log): (EncoderModel<f64>, TrainLog) = train_model(&pairs, &cfg)?;
        let r = eval_ranking(&model, bench, opts)?;
        rows.push(SweepRow {
            value: v,
            ndcg: r.value,
            steps: log.steps.len(),
        });
        reports.push((v, r));
    }
    let non_decreasing_steps = rows.windows(2).filter(|w| w[1].ndcg >= w[0].ndcg).count();
    Ok((
        SweepSummary {
            axis,
            benchmark: bench.name.clone(),
            rows,
            non_decreasing_steps,
        },
        reports,
    ))
}

/// File wrapper around [`run_sweep`]: writes `<axis>_<value>.report.json`,
/// `summary.csv`, `summary.txt` and a manifest into `out_dir`.
pub fn cmd_sweep(
    axis: SweepAxis,
    values: &[usize],
    base: &TrainConfig,
    pairs_path: &Path,
    bench_path: &Path,
    out_dir: &Path,
    opts: EvalOptions,
) -> Result<SweepSummary> {
    validate_sweep_values(values)?;
    let pool = read_pairs(pairs_path)?;
    let bench = read_benchmark(bench_path)?;
    let (summary, reports) = run_sweep(axis, values, base, &pool, &bench, opts)?;
    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new(
        "sweep",
        serde_json::json!({
            "axis": axis.as_str(),
            "values": values,
            "train": serde_json::to_value(base)?,
            "at_k": opts.at_k,
        }),
        Some(base.seed),
    );
    manifest.input(pairs_path);
    manifest.input(bench_path);
    for (v, r) in &reports {
        let label = if *v == 0 {
            "untrained".to_string()
        } else {
            v.to_string()
        };
        let p = out_dir.join(format!("{}_{label}.report.json", axis.as_str()));
        r.save(&p)?;
        manifest.output(&p)?;
    }
    let csv = out_dir.join("summary.csv");
    fs::write(&csv, summary.to_csv()).map_err(|e| Error::io(&csv, e))?;
    let txt = out_dir.join("summary.txt");
    fs::write(&txt, summary.to_table()).map_err(|e| Error::io(&txt, e))?;
    manifest.output(&csv)?;
    manifest.output(&txt)?;
    manifest.save(&out_dir.join(MANIFEST_FILE))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values_checked() {
        assert!(validate_sweep_values(&[2, 10, 50]).is_ok());
        assert!(matches!(
            validate_sweep_values(&[2, 2]),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            validate_sweep_values(&[10, 2]),
            Err(Error::Usage(_))
        ));
        assert!(matches!(validate_sweep_values(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn dataset_choice_parses() {
        assert_eq!("all".parse::<DatasetChoice>().unwrap(), DatasetChoice::All);
        assert_eq!(
            "CoRp".parse::<DatasetChoice>().unwrap(),
            DatasetChoice::One(Dataset::CoRp)
        );
        assert!("foo".parse::<DatasetChoice>().is_err());
    }

    #[test]
    fn sibling_appends() {
        assert_eq!(
            sibling(Path::new("a/b.jsonl"), ".stats.json"),
            PathBuf::from("a/b.jsonl.stats.json")
        );
    }

    #[test]
    fn empty_ingest_is_usage() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            cmd_ingest(&[], "en", &dir.path().join("r.jsonl")),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            expand_inputs(&[format!("{}/*.json", dir.path().display())]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn table_layout() {
        let r = EvalReport {
            benchmark: "DQ".into(),
            metric: "nDCG".into(),
            value: 1.0,
            per_query: vec![1.0],
            meta: ReportMeta::default(),
        };
        let t = format_table("m", &[r]);
        assert!(t.contains("100.0"), "{t}");
    }
}
