//! Pairwise correlation autoencoder.
//!
//! An autoencoder for binary (or randomized-bit) data whose decoder is the
//! minimax-optimal reconstruction given pairwise correlations between
//! visible bits and hidden encodings. Training alternates two convex
//! problems: encoding every example under fixed weights, then fitting the
//! weights to the encoding–data correlations.
//!
//! Matrices follow one convention throughout: `X` is V×n, `E` is H×n and
//! `W` is V×H, so examples are columns.

pub mod data;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod kernel;
pub mod trainer;
pub mod cli;

pub use data::{binarize, load_dataset, load_model, save_model, Binarization, DataBatch, DataFormat, ModelFile, RawDataset};
pub use decoder::{
    decode, fit_weights, game_value, slack, CorrelationMatrix, DecoderConfig, DecoderFit, DecoderWeights,
};
pub use encoder::{correlations, encode_batch, EncoderConfig, EncodingMode, Encodings};
pub use error::{Error, Result};
pub use kernel::{reconstruction_loss, reconstruction_loss_clamped, KernelId, LossKernel, PartialLossPair};
pub use trainer::{evaluate, train, DenoiseSpec, Evaluation, NoiseKind, TrainConfig, TrainReport, Trainer};
