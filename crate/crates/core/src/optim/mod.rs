//! Training objectives, AdamW, the learning-rate schedule and the epoch loop.

pub mod adamw;
pub mod config;
pub mod loss;
pub mod schedule;
pub mod train;

pub use adamw::{adamw_step, adamw_update, AdamWHyper, Moments, OptimizerState};
pub use config::TrainConfig;
pub use loss::{
    batch_triplet_loss, mn_loss, triplet_loss, BatchLossOutput, LossKind, Similarity, TripletOutput,
};
pub use schedule::{lr_at, warmup_steps};
pub use train::{
    batch_loss_and_grads, init_model, train_epoch, train_model, EncodedPair, StepRecord, TrainLog,
};
