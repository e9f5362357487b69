//! Sequence-to-sequence reconstruction autoencoder: a stacked
//! bidirectional peephole-LSTM encoder with a shallow linear decoder,
//! trained on normal cycles only. The final encoder state serves as the
//! fixed-length embedding consumed by the downstream classifiers.

mod cell;
mod encoder;
mod train;

pub use cell::{CellParams, cell_forward, final_state};
pub use encoder::{
    decode, encode, mse_loss, BiLayerParams, DecoderParams, EncoderConfig, EncoderState, Mode,
    Seq2SeqParams,
};
pub use train::{
    clip_gradients, global_norm, gradient_check, learning_rate, stack_cycles, train_autoencoder,
    TrainConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum Seq2SeqError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value encountered at training step {step}")]
    NumericalDivergence { step: usize },
    #[error("training cycle {index} is not labeled normal")]
    AnomalousTrainingCycle { index: usize },
}
