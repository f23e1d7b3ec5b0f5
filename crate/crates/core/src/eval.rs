//! Ranking (nDCG) and graded-similarity (Pearson's r) evaluation.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::RankingBenchmark;
use crate::encoder::EncoderModel;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::parallel::{make_pool, ordered_map};
use crate::scalar::Scalar;
use crate::tsv;

pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::Numeric("cosine similarity of a zero vector".into()));
    }
    let c = dot(u, v) / (nu * nv);
    Ok(c.max(-T::one()).min(T::one()))
}

/// `Σ_k rel_k / log₂(k + 1)` with 1-based ranks.
pub fn dcg<T: Scalar>(relevances: &[T]) -> T {
    relevances
        .iter()
        .enumerate()
        .map(|(i, &r)| r / T::of((i + 2) as f64).log2())
        .sum()
}

/// DCG normalized by the DCG of the same gains sorted descending.
pub fn ndcg<T: Scalar>(relevances: &[T]) -> Result<T> {
    ndcg_at(relevances, None)
}

/// nDCG truncated to the first `k` ranks (`None` = full list).
pub fn ndcg_at<T: Scalar>(relevances: &[T], k: Option<usize>) -> Result<T> {
    if relevances.iter().any(|r| !r.is_finite() || *r < T::zero()) {
        return Err(Error::Numeric(
            "relevances must be finite and non-negative".into(),
        ));
    }
    let mut ideal = relevances.to_vec();
    ideal.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let k = k.unwrap_or(relevances.len()).min(relevances.len());
    let idcg = dcg(&ideal[..k]);
    if idcg == T::zero() {
        return Err(Error::Numeric("nDCG undefined: ideal DCG is zero".into()));
    }
    Ok(dcg(&relevances[..k]) / idcg)
}

/// Candidate indices by descending cosine to the query; ties keep index order.
pub fn rank_by_cosine<T: Scalar>(query: &[T], candidates: &[Vec<T>]) -> Result<Vec<usize>> {
    let scores = candidates
        .iter()
        .map(|c| cosine_similarity(query, c))
        .collect::<Result<Vec<T>>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("finite cosine")
            .then(a.cmp(&b))
    });
    Ok(order)
}

/// Sample Pearson correlation.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Numeric(
            "Pearson's r needs at least two points".into(),
        ));
    }
    let n = T::of(x.len() as f64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::Numeric(
            "Pearson's r undefined for a constant sequence".into(),
        ));
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub checkpoint: Option<String>,
    pub config_hash: Option<String>,
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub benchmark: String,
    pub metric: String,
    pub value: f64,
    pub per_query: Vec<f64>,
    pub meta: ReportMeta,
}

impl EvalReport {
    /// Value ×100, the table convention.
    pub fn percent(&self) -> f64 {
        self.value * 100.0
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub at_k: Option<usize>,
    pub threads: usize,
}

/// Mean nDCG over queries: candidates (positives first, then negatives) are
/// ranked by cosine to the query, positives have gain 1, negatives 0.
pub fn eval_ranking<T: Scalar>(
    model: &EncoderModel<T>,
    bench: &RankingBenchmark,
    opts: EvalOptions,
) -> Result<EvalReport> {
    bench.validate()?;
    if bench.queries.is_empty() {
        return Err(Error::Data(format!(
            "{}: benchmark has no queries",
            bench.name
        )));
    }
    let pool = make_pool(opts.threads);
    let per_query = ordered_map(pool.as_ref(), &bench.queries, |q| -> Result<f64> {
        let qv = model.encode_text(&q.query)?;
        let cands = q
            .positives
            .iter()
            .chain(&q.negatives)
            .map(|t| model.encode_text(t))
            .collect::<Result<Vec<_>>>()?;
        let order = rank_by_cosine(&qv, &cands)?;
        let rel: Vec<f64> = order
            .iter()
            .map(|&i| if i < q.positives.len() { 1.0 } else { 0.0 })
            .collect();
        ndcg_at(&rel, opts.at_k)
    });
    let per_query = per_query
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("{} query {}: {m}", bench.name, i + 1)),
                other => other,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let value = per_query.iter().sum::<f64>() / per_query.len() as f64;
    Ok(EvalReport {
        benchmark: bench.name.clone(),
        metric: match opts.at_k {
            Some(k) => format!("nDCG@{k}"),
            None => "nDCG".into(),
        },
        value,
        per_query,
        meta: ReportMeta::default(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedPair {
    pub text1: String,
    pub text2: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradedPairDataset {
    pub name: String,
    pub pairs: Vec<GradedPair>,
}

impl GradedPairDataset {
    /// Reads `text1\ttext2\tscore` lines; named after the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |m: String| Error::Data(format!("{}:{}: {m}", path.display(), n + 1));
            if fields.len() != 3 {
                return Err(bad(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let score: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| bad(format!("score {:?} is not a number", fields[2])))?;
            if !score.is_finite() {
                return Err(bad("score must be finite".into()));
            }
            pairs.push(GradedPair {
                text1: tsv::unescape(fields[0]),
                text2: tsv::unescape(fields[1]),
                score,
            });
        }
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("graded")
            .to_string();
        let ds = Self { name, pairs };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pairs.len() < 2 {
            return Err(Error::Data(format!(
                "{}: need at least 2 graded pairs",
                self.name
            )));
        }
        let first = self.pairs[0].score;
        if self.pairs.iter().all(|p| p.score == first) {
            return Err(Error::Data(format!(
                "{}: gold scores are constant",
                self.name
            )));
        }
        Ok(())
    }
}

/// Pearson's r between per-pair embedding cosines and gold scores.
pub fn eval_graded<T: Scalar>(
    model: &EncoderModel<T>,
    data: &GradedPairDataset,
) -> Result<EvalReport> {
    data.validate()?;
    let mut predicted = Vec::with_capacity(data.pairs.len());
    for p in &data.pairs {
        let a = model.encode_text(&p.text1)?;
        let b = model.encode_text(&p.text2)?;
        predicted.push(cosine_similarity(&a, &b)?.to_f64_lossy());
    }
    let gold: Vec<f64> = data.pairs.iter().map(|p| p.score).collect();
    let r = pearson(&predicted, &gold)?;
    Ok(EvalReport {
        benchmark: data.name.clone(),
        metric: "Pearson".into(),
        value: r,
        per_query: Vec::new(),
        meta: ReportMeta::default(),
    })
}
