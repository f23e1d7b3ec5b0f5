//! Training corpora (Qt, Rp, CoQt, CoRp) and held-out ranking benchmarks
//! (DQ, DR, CQ, CR) built from relation edges.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RelationEdge, RelationKind};
use crate::textproc::{clean, long_enough};
use crate::tsv;

pub const POSITIVES_PER_QUERY: usize = 5;
pub const NEGATIVES_PER_QUERY: usize = 25;
pub const DEFAULT_BENCH_QUERIES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    Qt,
    Rp,
    CoQt,
    CoRp,
}

impl Dataset {
    pub const ALL: [Dataset; 4] = [Dataset::Qt, Dataset::Rp, Dataset::CoQt, Dataset::CoRp];

    pub fn relation(self) -> RelationKind {
        match self {
            Dataset::Qt | Dataset::CoQt => RelationKind::Quote,
            Dataset::Rp | Dataset::CoRp => RelationKind::Reply,
        }
    }

    pub fn is_co(self) -> bool {
        matches!(self, Dataset::CoQt | Dataset::CoRp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Qt => "Qt",
            Dataset::Rp => "Rp",
            Dataset::CoQt => "CoQt",
            Dataset::CoRp => "CoRp",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown dataset {s:?}; expected Qt, Rp, CoQt or CoRp"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchmarkKind {
    DQ,
    DR,
    CQ,
    CR,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 4] = [
        BenchmarkKind::DQ,
        BenchmarkKind::DR,
        BenchmarkKind::CQ,
        BenchmarkKind::CR,
    ];

    pub fn relation(self) -> RelationKind {
        match self {
            BenchmarkKind::DQ | BenchmarkKind::CQ => RelationKind::Quote,
            BenchmarkKind::DR | BenchmarkKind::CR => RelationKind::Reply,
        }
    }

    /// Co-benchmarks query with a response and rank its co-responses.
    pub fn is_co(self) -> bool {
        matches!(self, BenchmarkKind::CQ | BenchmarkKind::CR)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::DQ => "DQ",
            BenchmarkKind::DR => "DR",
            BenchmarkKind::CQ => "CQ",
            BenchmarkKind::CR => "CR",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown benchmark {s:?}; expected DQ, DR, CQ or CR"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub anchor_text: String,
    pub positive_text: String,
    pub dataset: Dataset,
    pub anchor_id: String,
    pub positive_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub query: String,
    pub positives: Vec<String>,
    pub negatives: Vec<String>,
    /// Every tweet id that contributed text to this query.
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingBenchmark {
    pub name: String,
    pub queries: Vec<BenchmarkQuery>,
}

impl RankingBenchmark {
    pub fn involved_ids(&self) -> HashSet<String> {
        self.queries
            .iter()
            .flat_map(|q| q.ids.iter().cloned())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, q) in self.queries.iter().enumerate() {
            check_query_shape(q)
                .map_err(|m| Error::Data(format!("{} query {}: {m}", self.name, i + 1)))?;
        }
        Ok(())
    }
}

fn check_query_shape(q: &BenchmarkQuery) -> std::result::Result<(), String> {
    if q.positives.len() != POSITIVES_PER_QUERY {
        return Err(format!(
            "expected {POSITIVES_PER_QUERY} positives, found {}",
            q.positives.len()
        ));
    }
    if q.negatives.len() != NEGATIVES_PER_QUERY {
        return Err(format!(
            "expected {NEGATIVES_PER_QUERY} negatives, found {}",
            q.negatives.len()
        ));
    }
    Ok(())
}

struct Response {
    id: String,
    text: String,
}

#[derive(Default)]
struct TargetGroup {
    target_text: Option<String>,
    responses: Vec<Response>,
}

/// Groups cleaned, length-filtered responses of one relation kind by
/// target, dropping repeated response ids.
fn group_by_target(
    edges: &[RelationEdge],
    kind: RelationKind,
    distinct_texts: bool,
) -> BTreeMap<String, TargetGroup> {
    let mut groups: BTreeMap<String, TargetGroup> = BTreeMap::new();
    for e in edges
        .iter()
        .filter(|e| e.kind == kind && e.target_id != e.response_id)
    {
        let resp = clean(&e.response_text);
        if !long_enough(&resp) {
            continue;
        }
        let g = groups.entry(e.target_id.clone()).or_default();
        if g.target_text.is_none() {
            g.target_text = e
                .target_text
                .as_deref()
                .map(clean)
                .filter(|t| long_enough(t));
        }
        if g.responses
            .iter()
            .any(|r| r.id == e.response_id || (distinct_texts && r.text == resp))
        {
            continue;
        }
        g.responses.push(Response {
            id: e.response_id.clone(),
            text: resp,
        });
    }
    groups
}

/// One (target, response) pair per target: for every target with at least
/// one surviving response, one response is chosen uniformly at random.
pub fn build_pairs(edges: &[RelationEdge], kind: RelationKind, seed: u64) -> Vec<PairExample> {
    let dataset = match kind {
        RelationKind::Quote => Dataset::Qt,
        RelationKind::Reply => Dataset::Rp,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (target_id, g) in group_by_target(edges, kind, false) {
        let Some(target_text) = g.target_text else {
            continue;
        };
        if g.responses.is_empty() {
            continue;
        }
        let r = &g.responses[rng.gen_range(0..g.responses.len())];
        out.push(PairExample {
            anchor_text: target_text,
            positive_text: r.text.clone(),
            dataset,
            anchor_id: target_id,
            positive_id: r.id.clone(),
        });
    }
    out
}

/// One unordered pair of distinct responses per target with at least two
/// surviving responses; anchor/positive order is the draw order.
pub fn build_co_pairs(edges: &[RelationEdge], kind: RelationKind, seed: u64) -> Vec<PairExample> {
    let dataset = match kind {
        RelationKind::Quote => Dataset::CoQt,
        RelationKind::Reply => Dataset::CoRp,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for g in group_by_target(edges, kind, false).into_values() {
        let k = g.responses.len();
        if k < 2 {
            continue;
        }
        let i = rng.gen_range(0..k);
        let mut j = rng.gen_range(0..k - 1);
        if j >= i {
            j += 1;
        }
        let (a, p) = (&g.responses[i], &g.responses[j]);
        out.push(PairExample {
            anchor_text: a.text.clone(),
            positive_text: p.text.clone(),
            dataset,
            anchor_id: a.id.clone(),
            positive_id: p.id.clone(),
        });
    }
    out
}

pub fn build_dataset(edges: &[RelationEdge], dataset: Dataset, seed: u64) -> Vec<PairExample> {
    if dataset.is_co() {
        build_co_pairs(edges, dataset.relation(), seed)
    } else {
        build_pairs(edges, dataset.relation(), seed)
    }
}

/// Uniform sample of `n` pairs without replacement, in shuffled order.
///
/// The sample is a prefix of one seeded permutation, so for a fixed seed
/// smaller samples are subsets of larger ones.
pub fn sample_corpus(pairs: &[PairExample], n: usize, seed: u64) -> Result<Vec<PairExample>> {
    if n > pairs.len() {
        return Err(Error::Data(format!(
            "cannot sample {n} pairs from a pool of {}",
            pairs.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = pairs.to_vec();
    out.shuffle(&mut rng);
    out.truncate(n);
    Ok(out)
}

pub fn exclude_ids(pairs: Vec<PairExample>, banned: &HashSet<String>) -> Vec<PairExample> {
    if banned.is_empty() {
        return pairs;
    }
    pairs
        .into_iter()
        .filter(|p| !banned.contains(&p.anchor_id) && !banned.contains(&p.positive_id))
        .collect()
}

/// Drops edges that touch any banned id on either side.
pub fn exclude_edges(edges: &[RelationEdge], banned: &HashSet<String>) -> Vec<RelationEdge> {
    edges
        .iter()
        .filter(|e| !banned.contains(&e.target_id) && !banned.contains(&e.response_id))
        .cloned()
        .collect()
}

/// Target index, query text, query id, positives as (id, text).
type Draft = (usize, String, String, Vec<(String, String)>);

struct PoolEntry {
    target: usize,
    id: String,
    text: String,
}

/// Builds a ranking benchmark of `num_queries` queries, each with 5
/// positives and 25 negatives.
///
/// Direct benchmarks (DQ/DR) query with a target tweet having at least 5
/// responses and use its responses as positives. Co-benchmarks (CQ/CR)
/// query with one response of a target having at least 6 responses and use
/// 5 of the others as positives. Negatives are responses to the other
/// selected targets; further targets are recruited into the negative pool
/// only when some query would otherwise have fewer than 25 candidates.
pub fn build_benchmark(
    edges: &[RelationEdge],
    name: BenchmarkKind,
    num_queries: usize,
    seed: u64,
) -> Result<RankingBenchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<(String, TargetGroup)> = group_by_target(edges, name.relation(), true)
        .into_iter()
        .map(|(id, mut g)| {
            if let Some(t) = &g.target_text {
                g.responses.retain(|r| &r.text != t);
            }
            (id, g)
        })
        .collect();

    let needed = if name.is_co() {
        POSITIVES_PER_QUERY + 1
    } else {
        POSITIVES_PER_QUERY
    };
    let mut eligible: Vec<usize> = Vec::new();
    let mut reserve: Vec<usize> = Vec::new();
    for (i, (_, g)) in groups.iter().enumerate() {
        let ok = g.responses.len() >= needed && (name.is_co() || g.target_text.is_some());
        if ok {
            eligible.push(i);
        } else if !g.responses.is_empty() {
            reserve.push(i);
        }
    }
    if eligible.len() < num_queries {
        return Err(Error::Data(format!(
            "{name}: {num_queries} queries requested but only {} targets have at least {needed} valid responses",
            eligible.len()
        )));
    }
    eligible.shuffle(&mut rng);
    let selected: Vec<usize> = eligible[..num_queries].to_vec();
    reserve.extend_from_slice(&eligible[num_queries..]);
    reserve.shuffle(&mut rng);
    let mut reserve = reserve.into_iter();

    // Query text, query id, positives (id, text) per selected target.
    let mut drafts: Vec<Draft> = Vec::with_capacity(num_queries);
    for &gi in &selected {
        let (target_id, g) = &groups[gi];
        let resp = &g.responses;
        if name.is_co() {
            let picks = index::sample(&mut rng, resp.len(), needed).into_vec();
            let q = &resp[picks[0]];
            let pos = picks[1..]
                .iter()
                .map(|&k| (resp[k].id.clone(), resp[k].text.clone()))
                .collect();
            drafts.push((gi, q.text.clone(), q.id.clone(), pos));
        } else {
            let picks = index::sample(&mut rng, resp.len(), POSITIVES_PER_QUERY).into_vec();
            let pos = picks
                .iter()
                .map(|&k| (resp[k].id.clone(), resp[k].text.clone()))
                .collect();
            let text = g
                .target_text
                .clone()
                .expect("eligible direct target has text");
            drafts.push((gi, text, target_id.clone(), pos));
        }
    }

    let mut pool: Vec<PoolEntry> = Vec::new();
    let add_group = |pool: &mut Vec<PoolEntry>, gi: usize| {
        for r in &groups[gi].1.responses {
            pool.push(PoolEntry {
                target: gi,
                id: r.id.clone(),
                text: r.text.clone(),
            });
        }
    };
    for &gi in &selected {
        add_group(&mut pool, gi);
    }

    let candidates_for =
        |pool: &[PoolEntry], draft: &(usize, String, String, Vec<(String, String)>)| {
            let mut seen: HashSet<&str> = HashSet::new();
            seen.insert(draft.1.as_str());
            for (_, t) in &draft.3 {
                seen.insert(t.as_str());
            }
            let mut out = Vec::new();
            for (k, e) in pool.iter().enumerate() {
                if e.target != draft.0 && e.id != draft.2 && seen.insert(e.text.as_str()) {
                    out.push(k);
                }
            }
            out
        };

    loop {
        let short = drafts
            .iter()
            .map(|d| candidates_for(&pool, d).len())
            .min()
            .unwrap_or(NEGATIVES_PER_QUERY);
        if short >= NEGATIVES_PER_QUERY {
            break;
        }
        match reserve.next() {
            Some(gi) => add_group(&mut pool, gi),
            None => {
                return Err(Error::Data(format!(
                    "{name}: negative pool exhausted with {} candidate responses; a query has only {short} of the {NEGATIVES_PER_QUERY} negatives it needs",
                    pool.len()
                )))
            }
        }
    }

    let mut queries = Vec::with_capacity(num_queries);
    for d in &drafts {
        let cands = candidates_for(&pool, d);
        let picks = index::sample(&mut rng, cands.len(), NEGATIVES_PER_QUERY);
        let negs: Vec<&PoolEntry> = picks.iter().map(|k| &pool[cands[k]]).collect();
        let mut ids = vec![d.2.clone()];
        ids.extend(d.3.iter().map(|(id, _)| id.clone()));
        ids.extend(negs.iter().map(|e| e.id.clone()));
        queries.push(BenchmarkQuery {
            query: d.1.clone(),
            positives: d.3.iter().map(|(_, t)| t.clone()).collect(),
            negatives: negs.iter().map(|e| e.text.clone()).collect(),
            ids,
        });
    }
    Ok(RankingBenchmark {
        name: name.to_string(),
        queries,
    })
}

pub fn write_pairs(path: &Path, pairs: &[PairExample]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            tsv::escape(&p.anchor_id),
            tsv::escape(&p.positive_id),
            p.dataset,
            tsv::escape(&p.anchor_text),
            tsv::escape(&p.positive_text)
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairExample>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::Data(format!(
                "{}:{}: expected 5 tab-separated fields, found {}",
                path.display(),
                n + 1,
                fields.len()
            )));
        }
        let dataset = fields[2]
            .parse()
            .map_err(|e: Error| Error::Data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(PairExample {
            anchor_id: tsv::unescape(fields[0]),
            positive_id: tsv::unescape(fields[1]),
            dataset,
            anchor_text: tsv::unescape(fields[3]),
            positive_text: tsv::unescape(fields[4]),
        });
    }
    Ok(out)
}

pub fn write_benchmark(path: &Path, bench: &RankingBenchmark) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for q in &bench.queries {
        serde_json::to_writer(&mut w, q)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a benchmark file; the benchmark is named after the file stem.
pub fn read_benchmark(path: &Path) -> Result<RankingBenchmark> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut queries = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let q: BenchmarkQuery = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        check_query_shape(&q)
            .map_err(|m| Error::Data(format!("{}:{}: {m}", path.display(), n + 1)))?;
        queries.push(q);
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("benchmark")
        .to_string();
    Ok(RankingBenchmark { name, queries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(tag: &str) -> String {
        format!("this is a long enough tweet text {tag}")
    }

    fn edge(kind: RelationKind, target: &str, response: &str) -> RelationEdge {
        RelationEdge {
            kind,
            target_id: target.into(),
            response_id: response.into(),
            target_text: Some(text(target)),
            response_text: text(response),
        }
    }

    /// `counts[t]` responses to target `t`.
    fn fixture(kind: RelationKind, counts: &[usize]) -> Vec<RelationEdge> {
        let mut out = Vec::new();
        for (t, &c) in counts.iter().enumerate() {
            for r in 0..c {
                out.push(edge(kind, &format!("t{t}"), &format!("t{t}r{r}")));
            }
        }
        out
    }

    #[test]
    fn one_pair_per_target() {
        let edges = fixture(RelationKind::Quote, &[3]);
        let pairs = build_pairs(&edges, RelationKind::Quote, 1);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].dataset, Dataset::Qt);
        assert_eq!(pairs[0].anchor_id, "t0");
    }

    #[test]
    fn short_target_yields_nothing() {
        let mut e = edge(RelationKind::Reply, "t", "r");
        e.target_text = Some("@someone tiny https://x.y".into());
        assert!(build_pairs(&[e], RelationKind::Reply, 0).is_empty());
    }

    #[test]
    fn hundred_edges_forty_targets() {
        // 20 targets with 1 response, 10 with 2, 5 with 4, 5 with 8: 100 edges, 40 targets.
        let mut counts = vec![1; 20];
        counts.extend(vec![2; 10]);
        counts.extend(vec![4; 5]);
        counts.extend(vec![8; 5]);
        let edges = fixture(RelationKind::Quote, &counts);
        assert_eq!(edges.len(), 100);
        assert_eq!(build_pairs(&edges, RelationKind::Quote, 9).len(), 40);
    }

    #[test]
    fn co_pair_counts() {
        assert!(
            build_co_pairs(&fixture(RelationKind::Reply, &[1]), RelationKind::Reply, 0).is_empty()
        );
        assert_eq!(
            build_co_pairs(&fixture(RelationKind::Quote, &[5]), RelationKind::Quote, 0).len(),
            1
        );
        let pairs = build_co_pairs(
            &fixture(RelationKind::Reply, &[1, 2, 4]),
            RelationKind::Reply,
            3,
        );
        assert_eq!(pairs.len(), 2);
        for p in &pairs {
            assert_ne!(p.anchor_id, p.positive_id);
            assert_eq!(p.dataset, Dataset::CoRp);
        }
    }

    #[test]
    fn sampling() {
        let pairs = build_pairs(
            &fixture(RelationKind::Quote, &[1; 30]),
            RelationKind::Quote,
            0,
        );
        let all = sample_corpus(&pairs, pairs.len(), 5).unwrap();
        let mut a: Vec<_> = all.iter().map(|p| p.anchor_id.clone()).collect();
        let mut b: Vec<_> = pairs.iter().map(|p| p.anchor_id.clone()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(sample_corpus(&pairs, 0, 5).unwrap().is_empty());
        assert_eq!(
            sample_corpus(&pairs, 10, 5).unwrap(),
            sample_corpus(&pairs, 10, 5).unwrap()
        );
        let small = sample_corpus(&pairs, 10, 5).unwrap();
        assert_eq!(&all[..10], &small[..]);
        let err = sample_corpus(&pairs, 31, 5).unwrap_err().to_string();
        assert!(err.contains("31") && err.contains("30"), "{err}");
    }

    #[test]
    fn exclusion() {
        let pairs = build_pairs(
            &fixture(RelationKind::Quote, &[1; 10]),
            RelationKind::Quote,
            0,
        );
        assert_eq!(exclude_ids(pairs.clone(), &HashSet::new()), pairs);
        let all: HashSet<String> = pairs.iter().map(|p| p.anchor_id.clone()).collect();
        assert!(exclude_ids(pairs.clone(), &all).is_empty());
        let banned: HashSet<String> = ["t0", "t4r0", "t9"].iter().map(|s| s.to_string()).collect();
        assert_eq!(exclude_ids(pairs, &banned).len(), 7);
    }

    #[test]
    fn benchmark_with_exact_five_responses() {
        let mut counts = vec![5];
        counts.extend(vec![1; 30]);
        let edges = fixture(RelationKind::Quote, &counts);
        let b = build_benchmark(&edges, BenchmarkKind::DQ, 1, 0).unwrap();
        let q = &b.queries[0];
        assert_eq!(q.query, text("t0"));
        let mut pos = q.positives.clone();
        pos.sort();
        let mut expected: Vec<String> = (0..5).map(|r| text(&format!("t0r{r}"))).collect();
        expected.sort();
        assert_eq!(pos, expected);
        assert_eq!(q.negatives.len(), 25);
    }

    #[test]
    fn negatives_never_come_from_own_target() {
        // Two eligible targets plus 90 single-response targets: 100 responses.
        let mut counts = vec![5, 5];
        counts.extend(vec![1; 90]);
        let edges = fixture(RelationKind::Reply, &counts);
        let b = build_benchmark(&edges, BenchmarkKind::DR, 2, 4).unwrap();
        for q in &b.queries {
            assert_eq!(q.negatives.len(), 25);
            let own_target = q.ids[0].clone();
            for neg_id in &q.ids[6..] {
                assert!(!neg_id.starts_with(&format!("{own_target}r")), "{neg_id}");
            }
            let mut texts: Vec<&String> = std::iter::once(&q.query)
                .chain(&q.positives)
                .chain(&q.negatives)
                .collect();
            texts.sort();
            texts.dedup();
            assert_eq!(texts.len(), 31);
        }
    }

    #[test]
    fn co_benchmark_shape() {
        let counts = vec![6; 12];
        let edges = fixture(RelationKind::Quote, &counts);
        let b = build_benchmark(&edges, BenchmarkKind::CQ, 6, 2).unwrap();
        b.validate().unwrap();
        for q in &b.queries {
            let owner = q.ids[0].split('r').next().unwrap().to_string();
            for p in &q.ids[1..6] {
                assert!(p.starts_with(&format!("{owner}r")));
            }
        }
    }

    #[test]
    fn benchmark_errors_on_insufficient_data() {
        let edges = fixture(RelationKind::Quote, &[5, 1, 1]);
        let err = build_benchmark(&edges, BenchmarkKind::DQ, 2, 0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("2 queries") && err.contains("only 1"), "{err}");
        let err = build_benchmark(&edges, BenchmarkKind::DQ, 1, 0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("exhausted"), "{err}");
    }

    #[test]
    fn benchmark_is_deterministic() {
        let mut counts = vec![7; 10];
        counts.extend(vec![2; 20]);
        let edges = fixture(RelationKind::Quote, &counts);
        let a = build_benchmark(&edges, BenchmarkKind::DQ, 5, 11).unwrap();
        let b = build_benchmark(&edges, BenchmarkKind::DQ, 5, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pair_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.tsv");
        let mut pairs = build_pairs(
            &fixture(RelationKind::Quote, &[2, 1]),
            RelationKind::Quote,
            0,
        );
        pairs[0].anchor_text.push_str("\twith\ttabs\nand newline");
        write_pairs(&path, &pairs).unwrap();
        assert_eq!(read_pairs(&path).unwrap(), pairs);
    }

    #[test]
    fn benchmark_file_rejects_bad_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("DQ.jsonl");
        std::fs::write(
            &path,
            r#"{"query":"q","positives":["a"],"negatives":[],"ids":[]}"#,
        )
        .unwrap();
        let err = read_benchmark(&path).unwrap_err().to_string();
        assert!(err.contains(":1:"), "{err}");
    }
}
