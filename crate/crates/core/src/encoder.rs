//! Small sentence encoder: token embeddings, an optional single-head
//! self-attention + feed-forward block (both residual, no positional
//! signal), mean pooling, optional L2 normalization. Gradients are
//! computed analytically from a recorded forward trace.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;
use crate::textproc::{clean, encode_ids, Vocabulary, DEFAULT_MAX_LEN, PAD_ID};

pub const DEFAULT_DIM: usize = 64;
pub const INIT_RANGE: f64 = 0.05;
pub const CHECKPOINT_FORMAT: &str = "weaksim-encoder";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub dim: usize,
    pub use_block: bool,
    pub normalize_output: bool,
    pub max_len: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            use_block: true,
            normalize_output: false,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl EncoderConfig {
    /// Feed-forward width.
    pub fn hidden(&self) -> usize {
        2 * self.dim
    }
}

/// Attention projections and feed-forward weights. Also used as the
/// container for their gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub wq: Matrix<T>,
    pub wk: Matrix<T>,
    pub wv: Matrix<T>,
    pub w1: Matrix<T>,
    pub w2: Matrix<T>,
}

impl<T: Scalar> Block<T> {
    pub fn zeros(dim: usize, hidden: usize) -> Self {
        Self {
            wq: Matrix::zeros(dim, dim),
            wk: Matrix::zeros(dim, dim),
            wv: Matrix::zeros(dim, dim),
            w1: Matrix::zeros(dim, hidden),
            w2: Matrix::zeros(hidden, dim),
        }
    }

    fn tensors(&self) -> [&Matrix<T>; 5] {
        [&self.wq, &self.wk, &self.wv, &self.w1, &self.w2]
    }

    fn tensors_mut(&mut self) -> [&mut Matrix<T>; 5] {
        [
            &mut self.wq,
            &mut self.wk,
            &mut self.wv,
            &mut self.w1,
            &mut self.w2,
        ]
    }

    fn add_assign(&mut self, other: &Block<T>) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_assign(b);
        }
    }
}

const BLOCK_NAMES: [&str; 5] = ["wq", "wk", "wv", "w1", "w2"];

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel<T> {
    vocab: Vocabulary,
    config: EncoderConfig,
    embedding: Matrix<T>,
    block: Option<Block<T>>,
    version: u64,
}

#[derive(Debug, Clone)]
struct BlockTrace<T> {
    q: Matrix<T>,
    k: Matrix<T>,
    v: Matrix<T>,
    attn: Matrix<T>,
    h: Matrix<T>,
    u: Matrix<T>,
}

/// Activations of one forward pass, sufficient for exact backprop.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    ids: Vec<usize>,
    version: u64,
    x: Matrix<T>,
    block: Option<BlockTrace<T>>,
    pooled: Vec<T>,
    output: Vec<T>,
    /// Pooled vector was exactly zero under `normalize_output`; the output
    /// is the zero vector and carries no gradient.
    pub degenerate: bool,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn pooled(&self) -> &[T] {
        &self.pooled
    }

    pub fn output(&self) -> &[T] {
        &self.output
    }

    /// Smallest |pre-activation| in the feed-forward layer. Finite-difference
    /// checks use it to stay away from the ReLU kink.
    pub fn min_relu_margin(&self) -> Option<T> {
        self.block.as_ref().map(|b| {
            b.u.as_slice()
                .iter()
                .map(|v| v.abs())
                .fold(T::infinity(), T::min)
        })
    }
}

/// Sparse gradient: embedding rows touched by the input plus dense block
/// gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T> {
    pub embedding: BTreeMap<usize, Vec<T>>,
    pub block: Option<Block<T>>,
}

impl<T: Scalar> GradientSet<T> {
    pub fn empty(model: &EncoderModel<T>) -> Self {
        let c = model.config;
        Self {
            embedding: BTreeMap::new(),
            block: c.use_block.then(|| Block::zeros(c.dim, c.hidden())),
        }
    }

    /// `self += other`
    pub fn merge(&mut self, other: &GradientSet<T>) {
        for (row, g) in &other.embedding {
            let acc = self
                .embedding
                .entry(*row)
                .or_insert_with(|| vec![T::zero(); g.len()]);
            for (a, &b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
        match (&mut self.block, &other.block) {
            (Some(a), Some(b)) => a.add_assign(b),
            (None, Some(b)) => self.block = Some(b.clone()),
            _ => {}
        }
    }

    pub fn scale(&mut self, factor: T) {
        for g in self.embedding.values_mut() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
        if let Some(b) = &mut self.block {
            for m in b.tensors_mut() {
                m.as_mut_slice().iter_mut().for_each(|v| *v *= factor);
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.embedding.values().flatten().all(|v| v.is_finite())
            && self
                .block
                .as_ref()
                .is_none_or(|b| b.tensors().iter().all(|m| m.all_finite()))
    }

    /// Dense gradients in [`EncoderModel::tensors`] order.
    pub fn to_dense(&self, model: &EncoderModel<T>) -> Vec<Matrix<T>> {
        let mut emb = Matrix::zeros(model.embedding.rows(), model.embedding.cols());
        for (&row, g) in &self.embedding {
            emb.row_mut(row).copy_from_slice(g);
        }
        let mut out = vec![emb];
        if let Some(b) = &self.block {
            out.extend(b.tensors().into_iter().cloned());
        } else if let Some(mb) = &model.block {
            out.extend(
                mb.tensors()
                    .iter()
                    .map(|m| Matrix::zeros(m.rows(), m.cols())),
            );
        }
        out
    }
}

fn softmax_rows<T: Scalar>(m: &mut Matrix<T>) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

impl<T: Scalar> EncoderModel<T> {
    /// Parameters i.i.d. uniform in [-0.05, 0.05]; the PAD row is zero and
    /// stays zero.
    pub fn init(vocab: Vocabulary, config: EncoderConfig, seed: u64) -> Result<Self> {
        if config.dim < 2 {
            return Err(Error::Usage(format!(
                "encoder dim must be at least 2, got {}",
                config.dim
            )));
        }
        if config.max_len < 1 {
            return Err(Error::Usage("encoder max_len must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |rows: usize, cols: usize| {
            let data = (0..rows * cols)
                .map(|_| T::of(rng.gen_range(-INIT_RANGE..=INIT_RANGE)))
                .collect();
            Matrix::from_vec(rows, cols, data)
        };
        let mut embedding = fill(vocab.len(), config.dim);
        embedding
            .row_mut(PAD_ID)
            .iter_mut()
            .for_each(|v| *v = T::zero());
        let block = config.use_block.then(|| {
            let (d, h) = (config.dim, config.hidden());
            Block {
                wq: fill(d, d),
                wk: fill(d, d),
                wv: fill(d, d),
                w1: fill(d, h),
                w2: fill(h, d),
            }
        });
        Ok(Self {
            vocab,
            config,
            embedding,
            block,
            version: 0,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn config(&self) -> EncoderConfig {
        self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// Parameter version; bumped on every mutable access to the parameters.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn embedding(&self) -> &Matrix<T> {
        &self.embedding
    }

    pub fn block(&self) -> Option<&Block<T>> {
        self.block.as_ref()
    }

    pub fn tensor_names(&self) -> Vec<&'static str> {
        let mut names = vec!["embedding"];
        if self.block.is_some() {
            names.extend(BLOCK_NAMES);
        }
        names
    }

    /// All parameter tensors: the embedding table first, then the block.
    pub fn tensors(&self) -> Vec<&Matrix<T>> {
        let mut out = vec![&self.embedding];
        if let Some(b) = &self.block {
            out.extend(b.tensors());
        }
        out
    }

    /// Mutable access to the parameters; invalidates outstanding traces.
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        self.version += 1;
        let mut out = vec![&mut self.embedding];
        if let Some(b) = &mut self.block {
            out.extend(b.tensors_mut());
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|m| m.as_slice().len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.all_finite())
    }

    /// Cleans, tokenizes and maps a raw text to ids.
    pub fn ids_for(&self, text: &str) -> Vec<usize> {
        encode_ids(&self.vocab, &clean(text), self.config.max_len)
    }

    pub fn encode_text(&self, text: &str) -> Result<Vec<T>> {
        self.encode(&self.ids_for(text))
    }

    pub fn encode(&self, ids: &[usize]) -> Result<Vec<T>> {
        Ok(self.encode_with_trace(ids)?.0)
    }

    pub fn encode_with_trace(&self, ids: &[usize]) -> Result<(Vec<T>, ForwardTrace<T>)> {
        if ids.is_empty() {
            return Err(Error::Data("cannot encode an empty token sequence".into()));
        }
        if ids.len() > self.config.max_len {
            return Err(Error::Data(format!(
                "token sequence of length {} exceeds max_len {}",
                ids.len(),
                self.config.max_len
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= self.vocab.len()) {
            return Err(Error::Data(format!(
                "token id {bad} outside vocabulary of size {}",
                self.vocab.len()
            )));
        }
        let d = self.config.dim;
        let len = ids.len();
        let mut x = Matrix::zeros(len, d);
        for (i, &id) in ids.iter().enumerate() {
            x.row_mut(i).copy_from_slice(self.embedding.row(id));
        }

        let (y, block_trace) = match &self.block {
            None => (x.clone(), None),
            Some(b) => {
                let q = x.matmul(&b.wq);
                let k = x.matmul(&b.wk);
                let v = x.matmul(&b.wv);
                let mut attn = q.matmul_t(&k);
                let c = T::one() / T::of(d as f64).sqrt();
                attn.as_mut_slice().iter_mut().for_each(|s| *s *= c);
                softmax_rows(&mut attn);
                let mut h = attn.matmul(&v);
                h.add_assign(&x);
                let u = h.matmul(&b.w1);
                let mut r = u.clone();
                r.as_mut_slice()
                    .iter_mut()
                    .for_each(|s| *s = s.max(T::zero()));
                let mut y = r.matmul(&b.w2);
                y.add_assign(&h);
                (
                    y,
                    Some(BlockTrace {
                        q,
                        k,
                        v,
                        attn,
                        h,
                        u,
                    }),
                )
            }
        };

        let inv_len = T::one() / T::of(len as f64);
        let mut pooled = vec![T::zero(); d];
        for i in 0..len {
            for (p, &v) in pooled.iter_mut().zip(y.row(i)) {
                *p += v;
            }
        }
        pooled.iter_mut().for_each(|p| *p *= inv_len);

        let mut degenerate = false;
        let output = if self.config.normalize_output {
            let n = dot(&pooled, &pooled).sqrt();
            if n == T::zero() {
                degenerate = true;
                vec![T::zero(); d]
            } else {
                pooled.iter().map(|&p| p / n).collect()
            }
        } else {
            pooled.clone()
        };

        let trace = ForwardTrace {
            ids: ids.to_vec(),
            version: self.version,
            x,
            block: block_trace,
            pooled,
            output: output.clone(),
            degenerate,
        };
        Ok((output, trace))
    }

    /// Gradients of `⟨grad_out, encode(ids)⟩` with respect to every parameter.
    pub fn backprop(&self, trace: &ForwardTrace<T>, grad_out: &[T]) -> Result<GradientSet<T>> {
        if trace.version != self.version {
            return Err(Error::StaleTrace {
                trace: trace.version,
                model: self.version,
            });
        }
        let d = self.config.dim;
        if grad_out.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: grad_out.len(),
            });
        }
        let len = trace.ids.len();

        let d_pooled: Vec<T> = if !self.config.normalize_output {
            grad_out.to_vec()
        } else if trace.degenerate {
            vec![T::zero(); d]
        } else {
            let n = dot(&trace.pooled, &trace.pooled).sqrt();
            let proj = dot(&trace.output, grad_out);
            grad_out
                .iter()
                .zip(&trace.output)
                .map(|(&g, &o)| (g - o * proj) / n)
                .collect()
        };
        let inv_len = T::one() / T::of(len as f64);
        let row: Vec<T> = d_pooled.iter().map(|&g| g * inv_len).collect();
        let mut d_y = Matrix::zeros(len, d);
        for i in 0..len {
            d_y.row_mut(i).copy_from_slice(&row);
        }

        let (d_x, block_grads) = match (&self.block, &trace.block) {
            (Some(b), Some(t)) => {
                // Feed-forward with residual: y = h + relu(h W1) W2.
                let mut r = t.u.clone();
                r.as_mut_slice()
                    .iter_mut()
                    .for_each(|s| *s = s.max(T::zero()));
                let d_w2 = r.t_matmul(&d_y);
                let mut d_u = d_y.matmul_t(&b.w2);
                for (g, &u) in d_u.as_mut_slice().iter_mut().zip(t.u.as_slice()) {
                    if u <= T::zero() {
                        *g = T::zero();
                    }
                }
                let d_w1 = t.h.t_matmul(&d_u);
                let mut d_h = d_u.matmul_t(&b.w1);
                d_h.add_assign(&d_y);

                // Attention with residual: h = x + softmax(q kᵀ / √d) v.
                let d_a = d_h.matmul_t(&t.v);
                let d_v = t.attn.t_matmul(&d_h);
                let c = T::one() / T::of(d as f64).sqrt();
                let mut d_s = Matrix::zeros(len, len);
                for i in 0..len {
                    let a = t.attn.row(i);
                    let ga = d_a.row(i);
                    let inner = dot(a, ga);
                    for (j, s) in d_s.row_mut(i).iter_mut().enumerate() {
                        *s = a[j] * (ga[j] - inner) * c;
                    }
                }
                let d_q = d_s.matmul(&t.k);
                let d_k = d_s.t_matmul(&t.q);
                let grads = Block {
                    wq: trace.x.t_matmul(&d_q),
                    wk: trace.x.t_matmul(&d_k),
                    wv: trace.x.t_matmul(&d_v),
                    w1: d_w1,
                    w2: d_w2,
                };
                let mut d_x = d_h;
                d_x.add_assign(&d_q.matmul_t(&b.wq));
                d_x.add_assign(&d_k.matmul_t(&b.wk));
                d_x.add_assign(&d_v.matmul_t(&b.wv));
                (d_x, Some(grads))
            }
            (None, None) => (d_y, None),
            _ => {
                return Err(Error::Data(
                    "trace does not match model block layout".into(),
                ))
            }
        };

        let mut embedding: BTreeMap<usize, Vec<T>> = BTreeMap::new();
        for (i, &id) in trace.ids.iter().enumerate() {
            if id == PAD_ID {
                continue;
            }
            let acc = embedding.entry(id).or_insert_with(|| vec![T::zero(); d]);
            for (a, &g) in acc.iter_mut().zip(d_x.row(i)) {
                *a += g;
            }
        }
        Ok(GradientSet {
            embedding,
            block: block_grads,
        })
    }

    /// Converts parameters to another scalar type.
    pub fn cast<U: Scalar>(&self) -> EncoderModel<U> {
        let conv = |m: &Matrix<T>| {
            Matrix::from_vec(
                m.rows(),
                m.cols(),
                m.as_slice()
                    .iter()
                    .map(|v| U::of(v.to_f64_lossy()))
                    .collect(),
            )
        };
        EncoderModel {
            vocab: self.vocab.clone(),
            config: self.config,
            embedding: conv(&self.embedding),
            block: self.block.as_ref().map(|b| Block {
                wq: conv(&b.wq),
                wk: conv(&b.wk),
                wv: conv(&b.wv),
                w1: conv(&b.w1),
                w2: conv(&b.w2),
            }),
            version: 0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorSpec {
    name: String,
    shape: [usize; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    format: String,
    format_version: u32,
    dim: usize,
    hidden: usize,
    use_block: bool,
    normalize_output: bool,
    max_len: usize,
    vocab_sha256: String,
    vocab: serde_json::Value,
    tensors: Vec<TensorSpec>,
}

fn vocab_digest(vocab: &Vocabulary) -> String {
    let mut h = Sha256::new();
    for t in vocab.tokens() {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

impl<T: Scalar> EncoderModel<T> {
    /// Serializes to a one-line JSON header, a newline, and the parameters
    /// as little-endian f64 in header order.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            format_version: CHECKPOINT_VERSION,
            dim: self.config.dim,
            hidden: self.config.hidden(),
            use_block: self.config.use_block,
            normalize_output: self.config.normalize_output,
            max_len: self.config.max_len,
            vocab_sha256: vocab_digest(&self.vocab),
            vocab: self.vocab.to_json(),
            tensors: self
                .tensor_names()
                .into_iter()
                .zip(self.tensors())
                .map(|(n, m)| TensorSpec {
                    name: n.into(),
                    shape: [m.rows(), m.cols()],
                })
                .collect(),
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        for m in self.tensors() {
            for v in m.as_slice() {
                out.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
            }
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing header line".into()))?;
        let raw: serde_json::Value = serde_json::from_slice(&bytes[..nl])
            .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
        if raw["format"] != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("unknown format {}", raw["format"])));
        }
        if raw["format_version"] != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {}, expected {CHECKPOINT_VERSION}",
                raw["format_version"]
            )));
        }
        let header: CheckpointHeader = serde_json::from_value(raw)
            .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
        let vocab = Vocabulary::from_json(header.vocab)
            .map_err(|e| Error::Format(format!("vocabulary: {e}")))?;
        if vocab_digest(&vocab) != header.vocab_sha256 {
            return Err(Error::Format("vocabulary digest mismatch".into()));
        }
        let config = EncoderConfig {
            dim: header.dim,
            use_block: header.use_block,
            normalize_output: header.normalize_output,
            max_len: header.max_len,
        };
        if config.dim < 2 || header.hidden != config.hidden() {
            return Err(Error::Format("inconsistent dimensions".into()));
        }
        let mut model = EncoderModel::<T>::init(vocab, config, 0)?;
        let names = model.tensor_names();
        if header.tensors.len() != names.len()
            || header
                .tensors
                .iter()
                .zip(&names)
                .zip(model.tensors())
                .any(|((spec, name), m)| spec.name != *name || spec.shape != [m.rows(), m.cols()])
        {
            return Err(Error::Format("tensor layout does not match header".into()));
        }
        let payload = &bytes[nl + 1..];
        let expected = model.num_parameters() * 8;
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        let mut chunks = payload.chunks_exact(8);
        for m in model.tensors_mut() {
            for v in m.as_mut_slice() {
                let b: [u8; 8] = chunks.next().expect("length checked").try_into().unwrap();
                *v = T::of(f64::from_le_bytes(b));
            }
        }
        model.version = 0;
        if !model.all_finite() {
            return Err(Error::Format("non-finite parameters".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_bytes(&bytes)
    }
}
