//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use weaksim::corpus::PairExample;
use weaksim::encoder::{EncoderConfig, EncoderModel};
use weaksim::ingest::{RelationEdge, RelationKind};
use weaksim::optim::train::draw_negatives;
use weaksim::optim::{batch_loss_and_grads, EncodedPair, LossKind, Similarity, TrainConfig};
use weaksim::textproc::{Vocabulary, PAD_ID, PAD_TOKEN, UNK_TOKEN};

pub const FD_STEP: f64 = 1e-5;
/// Inputs closer than this to a non-differentiable point are resampled.
pub const KINK_GUARD: f64 = 1e-3;
/// Denominator floor for the relative error. Central differences at
/// `FD_STEP` carry roundoff of order `ulp(loss) / FD_STEP` ≈ 1e-11, so
/// entries far below this floor are compared on an absolute scale.
pub const ABS_FLOOR: f64 = 1e-6;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

/// Multiple-negatives loss from its definition: materialize all n² scores
/// and average the negative log-likelihood of the diagonal.
pub fn mn_loss_oracle(
    anchors: &[Vec<f64>],
    positives: &[Vec<f64>],
    scale: f64,
    sim: Similarity,
) -> f64 {
    let n = anchors.len();
    let score = |i: usize, j: usize| {
        let s = match sim {
            Similarity::Cosine => cos(&anchors[i], &positives[j]),
            Similarity::Dot => anchors[i]
                .iter()
                .zip(&positives[j])
                .map(|(x, y)| x * y)
                .sum(),
        };
        scale * s
    };
    let mut total = 0.0;
    for i in 0..n {
        let z: f64 = (0..n).map(|j| score(i, j).exp()).sum();
        total += -(score(i, i).exp() / z).ln();
    }
    total / n as f64
}

/// Triplet loss from the printed formula.
pub fn triplet_oracle(a: &[f64], p: &[f64], n: &[f64], eps: f64) -> f64 {
    (euclid(a, p) - euclid(a, n) + eps).max(0.0)
}

/// DCG straight from the definition, 1-based ranks.
pub fn dcg_oracle(rel: &[f64]) -> f64 {
    let mut s = 0.0;
    for (k, r) in rel.iter().enumerate() {
        let rank = (k + 1) as f64;
        s += r / (rank + 1.0).log2();
    }
    s
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// nDCG with the ideal DCG found by enumerating every ordering.
pub fn ndcg_oracle(rel: &[f64]) -> Option<f64> {
    let best = permutations(rel.len())
        .into_iter()
        .map(|p| dcg_oracle(&p.iter().map(|&i| rel[i]).collect::<Vec<_>>()))
        .fold(f64::NEG_INFINITY, f64::max);
    (best > 0.0).then(|| dcg_oracle(rel) / best)
}

/// Pearson's r as the mean product of sample z-scores.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let sd =
        |v: &[f64], m: f64| (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let (mx, my) = (mean(x), mean(y));
    let (sx, sy) = (sd(x, mx), sd(y, my));
    x.iter()
        .zip(y)
        .map(|(a, b)| ((a - mx) / sx) * ((b - my) / sy))
        .sum::<f64>()
        / (n - 1.0)
}

/// Expected full-list nDCG of a uniformly random ranking of `pos` relevant
/// among `pos + neg` candidates: every rank holds a positive with
/// probability pos / (pos + neg).
pub fn random_ranking_ndcg_exact(pos: usize, neg: usize) -> f64 {
    let m = pos + neg;
    let ideal: f64 = (1..=pos).map(|k| 1.0 / ((k + 1) as f64).log2()).sum();
    let expected: f64 =
        (1..=m).map(|k| 1.0 / ((k + 1) as f64).log2()).sum::<f64>() * pos as f64 / m as f64;
    expected / ideal
}

/// Monte-Carlo estimate of the random-permutation baseline.
pub fn random_ranking_ndcg_mc(pos: usize, neg: usize, draws: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut rel: Vec<f64> = (0..pos + neg)
        .map(|i| if i < pos { 1.0 } else { 0.0 })
        .collect();
    let mut total = 0.0;
    for _ in 0..draws {
        rel.shuffle(rng);
        total += dcg_oracle(&rel);
    }
    let ideal: f64 = dcg_oracle(&rel.iter().copied().filter(|&r| r > 0.0).collect::<Vec<_>>());
    total / draws as f64 / ideal
}

/// A random encoder/batch/loss configuration for gradient checking, with
/// parameters redrawn at a scale where the block is far from linear.
pub struct GradCase {
    pub model: EncoderModel<f64>,
    pub batch: Vec<EncodedPair>,
    pub negatives: Option<Vec<usize>>,
    pub config: TrainConfig,
}

impl GradCase {
    pub fn loss(&self) -> f64 {
        let refs: Vec<&EncodedPair> = self.batch.iter().collect();
        batch_loss_and_grads(
            &self.model,
            &refs,
            self.negatives.as_deref(),
            &self.config,
            None,
        )
        .unwrap()
        .0
    }

    pub fn describe(&self) -> String {
        let c = self.model.config();
        format!(
            "dim={} block={} normalize={} loss={} sim={} n={}",
            c.dim,
            c.use_block,
            c.normalize_output,
            self.config.loss,
            self.config.similarity,
            self.batch.len()
        )
    }
}

pub fn random_grad_case(rng: &mut ChaCha8Rng) -> GradCase {
    loop {
        if let Some(c) = try_grad_case(rng) {
            return c;
        }
    }
}

fn try_grad_case(rng: &mut ChaCha8Rng) -> Option<GradCase> {
    let dim = rng.gen_range(2..=5);
    let use_block = rng.gen_bool(0.7);
    let normalize_output = rng.gen_bool(0.3);
    let v = rng.gen_range(3..=8);
    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend((0..v).map(|i| format!("w{i}")));
    let vocab = Vocabulary::from_tokens(tokens, 100).unwrap();
    let enc = EncoderConfig {
        dim,
        use_block,
        normalize_output,
        max_len: 8,
    };
    let mut model = EncoderModel::<f64>::init(vocab, enc, rng.gen()).unwrap();
    for (ti, t) in model.tensors_mut().into_iter().enumerate() {
        let cols = t.cols();
        for (k, x) in t.as_mut_slice().iter_mut().enumerate() {
            *x = if ti == 0 && k / cols == PAD_ID {
                0.0
            } else {
                rng.gen_range(-0.6..0.6)
            };
        }
    }
    let n = rng.gen_range(2..=4);
    let seq = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        (0..rng.gen_range(1..=5))
            .map(|_| rng.gen_range(1..v + 2))
            .collect()
    };
    let batch: Vec<EncodedPair> = (0..n)
        .map(|_| EncodedPair {
            anchor: seq(rng),
            positive: seq(rng),
        })
        .collect();
    let (loss, similarity, scale) = match rng.gen_range(0..3) {
        0 => (LossKind::Triplet, Similarity::Cosine, 20.0),
        1 => (
            LossKind::MultipleNegatives,
            Similarity::Cosine,
            rng.gen_range(1.0..20.0),
        ),
        _ => (
            LossKind::MultipleNegatives,
            Similarity::Dot,
            rng.gen_range(0.5..3.0),
        ),
    };
    let config = TrainConfig {
        loss,
        similarity,
        scale,
        margin: rng.gen_range(0.1..1.5),
        batch_size: n,
        dim,
        use_block,
        normalize_output,
        ..TrainConfig::default()
    };
    let negatives = (loss == LossKind::Triplet).then(|| draw_negatives(n, rng));

    // Keep away from the ReLU, hinge, zero-distance and zero-norm kinks.
    let mut outs = Vec::new();
    for p in &batch {
        for ids in [&p.anchor, &p.positive] {
            let (o, t) = model.encode_with_trace(ids).ok()?;
            if t.min_relu_margin().is_some_and(|m| m < KINK_GUARD) {
                return None;
            }
            if t.pooled().iter().map(|x| x * x).sum::<f64>().sqrt() < KINK_GUARD {
                return None;
            }
            if o.iter().map(|x| x * x).sum::<f64>().sqrt() < KINK_GUARD {
                return None;
            }
            outs.push(o);
        }
    }
    if let Some(neg) = &negatives {
        for i in 0..n {
            let (a, p, q) = (&outs[2 * i], &outs[2 * i + 1], &outs[2 * neg[i] + 1]);
            let (dp, dn) = (euclid(a, p), euclid(a, q));
            if dp < KINK_GUARD || dn < KINK_GUARD || (dp - dn + config.margin).abs() < KINK_GUARD {
                return None;
            }
        }
    }
    Some(GradCase {
        model,
        batch,
        negatives,
        config,
    })
}

/// Largest relative error between analytic and central-difference
/// gradients over every trainable parameter of the case.
pub fn max_gradient_error(case: &mut GradCase) -> f64 {
    let refs: Vec<&EncodedPair> = case.batch.iter().collect();
    let (_, grads) = batch_loss_and_grads(
        &case.model,
        &refs,
        case.negatives.as_deref(),
        &case.config,
        None,
    )
    .unwrap();
    let dense = grads.to_dense(&case.model);
    let cols0 = case.model.dim();
    let mut worst = 0.0f64;
    for (ti, g) in dense.iter().enumerate() {
        for k in 0..g.as_slice().len() {
            if ti == 0 && k / cols0 == PAD_ID {
                continue;
            }
            let orig = case.model.tensors()[ti].as_slice()[k];
            case.model.tensors_mut()[ti].as_mut_slice()[k] = orig + FD_STEP;
            let lp = case.loss();
            case.model.tensors_mut()[ti].as_mut_slice()[k] = orig - FD_STEP;
            let lm = case.loss();
            case.model.tensors_mut()[ti].as_mut_slice()[k] = orig;
            let numeric = (lp - lm) / (2.0 * FD_STEP);
            let analytic = g.as_slice()[k];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ABS_FLOOR);
            worst = worst.max(err);
        }
    }
    worst
}

/// Random relation edges: targets with 1–7 responses of both kinds, texts
/// long enough to survive cleaning.
pub fn random_edges(rng: &mut ChaCha8Rng, targets: usize) -> Vec<RelationEdge> {
    let mut edges = Vec::new();
    let mut next = 0usize;
    let text = |rng: &mut ChaCha8Rng, id: usize| {
        format!(
            "tweet {id} about topic {} and more words here",
            rng.gen_range(0..1000)
        )
    };
    for t in 0..targets {
        let kind = if rng.gen_bool(0.5) {
            RelationKind::Quote
        } else {
            RelationKind::Reply
        };
        let target_id = format!("t{t}");
        let target_text = text(rng, t);
        for _ in 0..rng.gen_range(1..=7) {
            next += 1;
            edges.push(RelationEdge {
                kind,
                target_id: target_id.clone(),
                response_id: format!("r{next}"),
                target_text: Some(target_text.clone()),
                response_text: text(rng, next),
            });
        }
    }
    edges.shuffle(rng);
    edges
}

/// One pair per target: the target behind each pair's anchor is unique.
pub fn one_pair_per_target(pairs: &[PairExample], edges: &[RelationEdge]) -> bool {
    let target_of: std::collections::HashMap<&str, &str> = edges
        .iter()
        .map(|e| (e.response_id.as_str(), e.target_id.as_str()))
        .collect();
    let mut seen = HashSet::new();
    pairs.iter().all(|p| {
        let t = if p.dataset.is_co() {
            match (
                target_of.get(p.anchor_id.as_str()),
                target_of.get(p.positive_id.as_str()),
            ) {
                (Some(a), Some(b)) if a == b => *a,
                _ => return false,
            }
        } else {
            p.anchor_id.as_str()
        };
        seen.insert(t.to_string())
    })
}

/// Random raw tweet-like strings: case, unicode, whitespace runs, URLs and
/// mentions in odd places.
pub fn random_raw_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: [&str; 24] = [
        "Hello",
        "WORLD",
        "http://x.co/a",
        "https://t.co/AbC?q=1",
        "@user",
        "@_a1",
        "@",
        "http:",
        "https://",
        " ",
        "  ",
        "\t",
        "\n",
        "é",
        "Ä",
        "İ",
        "ß",
        "ǅ",
        "日本",
        "🙂",
        "#tag",
        "a@b",
        "x.",
        "hTTps://Y",
    ];
    let len = rng.gen_range(0..20);
    (0..len)
        .map(|_| PIECES[rng.gen_range(0..PIECES.len())])
        .collect()
}
