//! Weakly-supervised sentence embeddings from tweet quote/reply relations.
//!
//! The pipeline: parse archived tweet streams ([`ingest`]), build one-pair-
//! per-target training corpora and held-out ranking benchmarks
//! ([`corpus`]), train a small mean-pooling encoder ([`encoder`]) with a
//! triplet or in-batch multiple-negatives objective ([`optim`]), and
//! evaluate with nDCG and Pearson's r ([`eval`]). [`pipeline`] wires the
//! stages into file-to-file commands; [`synth`] generates a desk-scale
//! stand-in for a real archive.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`).

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod linalg;
pub mod optim;
pub mod parallel;
pub mod pipeline;
pub mod scalar;
pub mod seeds;
pub mod synth;
pub mod textproc;
pub mod tsv;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision encoder, used by the command-line pipeline and the
/// gradient checks.
pub type Encoder = encoder::EncoderModel<f64>;
/// Single-precision encoder.
pub type Encoder32 = encoder::EncoderModel<f32>;
pub type Matrix = linalg::Matrix<f64>;
pub type GradientSet = encoder::GradientSet<f64>;
