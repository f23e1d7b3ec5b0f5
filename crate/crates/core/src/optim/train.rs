//! Epoch training loop over (anchor, positive) pairs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::corpus::PairExample;
use crate::encoder::{EncoderModel, GradientSet};
use crate::error::{Error, Result};
use crate::optim::adamw::{adamw_step, AdamWHyper, OptimizerState};
use crate::optim::config::TrainConfig;
use crate::optim::loss::{batch_triplet_loss, mn_loss, LossKind};
use crate::optim::schedule::lr_at;
use crate::parallel::{make_pool, ordered_map};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::textproc::{build_vocab, clean};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub steps: Vec<StepRecord>,
}

impl TrainLog {
    /// Mean loss over the first `k` logged batches.
    pub fn head_mean(&self, k: usize) -> f64 {
        let k = k.min(self.steps.len()).max(1);
        self.steps.iter().take(k).map(|s| s.loss).sum::<f64>() / k as f64
    }

    /// Mean loss over the last `k` logged batches.
    pub fn tail_mean(&self, k: usize) -> f64 {
        let k = k.min(self.steps.len()).max(1);
        self.steps.iter().rev().take(k).map(|s| s.loss).sum::<f64>() / k as f64
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        for s in &self.steps {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Token ids for one training pair.
#[derive(Debug, Clone)]
pub struct EncodedPair {
    pub anchor: Vec<usize>,
    pub positive: Vec<usize>,
}

pub fn encode_pairs<T: Scalar>(model: &EncoderModel<T>, pairs: &[PairExample]) -> Vec<EncodedPair> {
    pairs
        .iter()
        .map(|p| EncodedPair {
            anchor: model.ids_for(&p.anchor_text),
            positive: model.ids_for(&p.positive_text),
        })
        .collect()
}

/// Negative index for each pair of a batch of size `n`: uniform over the
/// other positions.
pub fn draw_negatives<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n)
        .map(|i| {
            let j = rng.gen_range(0..n - 1);
            if j >= i {
                j + 1
            } else {
                j
            }
        })
        .collect()
}

/// Loss of one batch and its gradient with respect to every parameter.
///
/// `negatives` is required for the triplet objective. Per-sentence
/// gradients are reduced in fixed order (anchors, then positives), so the
/// result does not depend on whether a pool is used.
pub fn batch_loss_and_grads<T: Scalar>(
    model: &EncoderModel<T>,
    batch: &[&EncodedPair],
    negatives: Option<&[usize]>,
    config: &TrainConfig,
    pool: Option<&ThreadPool>,
) -> Result<(T, GradientSet<T>)> {
    let mut seqs: Vec<&[usize]> = batch.iter().map(|p| p.anchor.as_slice()).collect();
    seqs.extend(batch.iter().map(|p| p.positive.as_slice()));
    let encoded = ordered_map(pool, &seqs, |ids| model.encode_with_trace(ids));
    let mut outs = Vec::with_capacity(encoded.len());
    let mut traces = Vec::with_capacity(encoded.len());
    for e in encoded {
        let (o, t) = e?;
        outs.push(o);
        traces.push(t);
    }
    let n = batch.len();
    let (anchors, positives) = outs.split_at(n);
    let out = match config.loss {
        LossKind::MultipleNegatives => {
            mn_loss(anchors, positives, T::of(config.scale), config.similarity)?
        }
        LossKind::Triplet => {
            let neg =
                negatives.ok_or_else(|| Error::Usage("triplet loss needs negatives".into()))?;
            batch_triplet_loss(anchors, positives, neg, T::of(config.margin))?
        }
    };
    let upstream: Vec<&Vec<T>> = out.grad_anchors.iter().chain(&out.grad_positives).collect();
    let jobs: Vec<usize> = (0..traces.len()).collect();
    let grads = ordered_map(pool, &jobs, |&k| model.backprop(&traces[k], upstream[k]));
    let mut total = GradientSet::empty(model);
    for g in grads {
        total.merge(&g?);
    }
    if !out.loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite batch loss {}",
            out.loss
        )));
    }
    Ok((out.loss, total))
}

/// Trains `model` in place for `config.epochs` passes over `pairs`.
///
/// Pairs are shuffled (seeded) every epoch and cut into batches of
/// `batch_size`; the trailing partial batch is dropped. Each batch takes
/// one AdamW step at the scheduled learning rate (linear warm-up then
/// linear decay over all steps).
pub fn train_epoch<T: Scalar>(
    model: &mut EncoderModel<T>,
    pairs: &[PairExample],
    config: &TrainConfig,
) -> Result<TrainLog> {
    config.validate()?;
    let per_epoch = pairs.len() / config.batch_size;
    if per_epoch == 0 {
        return Err(Error::Data(format!(
            "{} pairs cannot fill a single batch of {}",
            pairs.len(),
            config.batch_size
        )));
    }
    let encoded = encode_pairs(model, pairs);
    let total = per_epoch * config.epochs;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));
    let mut neg_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "negatives"));
    let mut state = OptimizerState::new(model, AdamWHyper::default());
    let pool = make_pool(config.threads);
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..pairs.len()).collect();

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks_exact(config.batch_size) {
            let step = log.steps.len();
            let batch: Vec<&EncodedPair> = chunk.iter().map(|&i| &encoded[i]).collect();
            let negatives = (config.loss == LossKind::Triplet)
                .then(|| draw_negatives(batch.len(), &mut neg_rng));
            let (loss, grads) =
                batch_loss_and_grads(model, &batch, negatives.as_deref(), config, pool.as_ref())?;
            let lr = lr_at(step, total, config.learning_rate, config.warmup_fraction);
            adamw_step(model, &grads, &mut state, lr, config.weight_decay)?;
            log.steps.push(StepRecord {
                step: step + 1,
                lr,
                loss: loss.to_f64_lossy(),
            });
        }
    }
    Ok(log)
}

/// Builds a vocabulary from the training texts, initializes a fresh
/// encoder and trains it.
pub fn train_model<T: Scalar>(
    pairs: &[PairExample],
    config: &TrainConfig,
) -> Result<(EncoderModel<T>, TrainLog)> {
    let mut model = init_model(pairs, config)?;
    let log = train_epoch(&mut model, pairs, config)?;
    Ok((model, log))
}

/// The untrained encoder `train_model` starts from.
pub fn init_model<T: Scalar>(
    pairs: &[PairExample],
    config: &TrainConfig,
) -> Result<EncoderModel<T>> {
    config.validate()?;
    let texts: Vec<String> = pairs
        .iter()
        .flat_map(|p| [clean(&p.anchor_text), clean(&p.positive_text)])
        .collect();
    let vocab = build_vocab(&texts, config.vocab_size)?;
    EncoderModel::init(vocab, config.encoder(), derive_seed(config.seed, "init"))
}
