//! Subject-specific gait anomaly detection.
//!
//! The crate covers the whole processing chain: conditioning of raw
//! multimodal sensor streams, camera ego-motion angle extraction from point
//! correspondences, gait-cycle segmentation and normalization, an LSTM
//! Seq2Seq autoencoder trained on normal gaits only, and downstream CNN and
//! SVM binary classifiers, plus the evaluation protocol tying it together.

pub mod bundle;
pub mod cnn;
pub mod config;
pub mod dataset;
pub mod ego_motion;
pub mod filter;
pub mod gait_cycles;
pub mod protocol;
pub mod seq2seq;
pub mod signal;
pub mod svm;
pub mod synth;

pub use signal::{Label, MultiModalTrace, TimedSeries, UniformSeries};
