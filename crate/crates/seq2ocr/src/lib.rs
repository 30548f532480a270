//! Recurrent encoder-decoder OCR over word images.
//!
//! A variable-width binary word image is read column by column by a
//! stacked recurrent encoder into a fixed-dimensional state; a decoder
//! conditioned on that state emits the transcription one character at a
//! time until an end-of-sequence marker. The same encoder state doubles
//! as a word-image embedding for nearest-neighbor retrieval.
//!
//! Everything is hand-rolled in double precision — the cells, the
//! backpropagation through time, the RMSProp optimizer — and every
//! gradient is verifiable against central finite differences via
//! [`train::gradient_check`].
//!
//! Start with the runnable examples (`cargo run --release --example
//! overfit_words`) or the `seq2ocr` binary (`synth`, `train`, `predict`,
//! `embed`, `retrieve`, `gradcheck` subcommands).

pub mod cell;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod image;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod train;
pub mod vocab;

pub use cell::{LstmLayerParams, LstmState, RnnReluLayerParams};
pub use dataset::{FontAtlas, LabeledSample, RenderJitter};
pub use decoder::{decode_greedy, teacher_forced_nll, DecodeResult};
pub use encoder::{encode, EncoderOutput};
pub use error::{Error, Result};
pub use eval::{edit_distance, extract_dwie, label_error_rate, DwieVariant, VecNorm};
pub use image::{resize_to_height, WordImage};
pub use model::{CellKind, HyperParams, Seq2OcrModel};
pub use train::{gradient_check, split_dataset, train, TrainConfig};
pub use vocab::Vocab;
