//! BPTT training loop for the reconstruction autoencoder, plus a
//! finite-difference gradient checker used to validate the backward pass.

use ndarray::Array3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gait_cycles::GaitCycle;
use crate::signal::Label;

use super::encoder::{forward_backward, EncoderConfig, Mode, Seq2SeqParams};
use super::Seq2SeqError;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub initial_lr: f64,
    /// Learning rate halves every this many steps.
    pub decay_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            initial_lr: 0.01,
            decay_steps: 1000,
            epochs: 21,
            batch_size: 16,
            clip_norm: 5.0,
            seed: 0,
        }
    }
}

/// Learning rate at a given global step (0-based).
pub fn learning_rate(config: &TrainConfig, step: usize) -> f64 {
    config.initial_lr * 0.5_f64.powi((step / config.decay_steps) as i32)
}

/// Global L2 norm over every gradient array.
pub fn global_norm(grads: &Seq2SeqParams) -> f64 {
    grads
        .slices()
        .iter()
        .flat_map(|s| s.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Scale gradients in place so the global norm does not exceed `clip`.
pub fn clip_gradients(grads: &mut Seq2SeqParams, clip: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > clip {
        let scale = clip / norm;
        for slice in grads.slices_mut() {
            for v in slice {
                *v *= scale;
            }
        }
    }
    norm
}

fn sgd_update(params: &mut Seq2SeqParams, grads: &Seq2SeqParams, lr: f64) {
    let g = grads.slices();
    for (p_slice, g_slice) in params.slices_mut().into_iter().zip(g) {
        for (p, gv) in p_slice.iter_mut().zip(g_slice) {
            *p -= lr * gv;
        }
    }
}

/// Stack cycles (each 9x200) into a (200, B, 9) batch tensor.
pub fn stack_cycles(cycles: &[&GaitCycle]) -> Array3<f64> {
    let t_len = cycles[0].data.ncols();
    let channels = cycles[0].data.nrows();
    let mut x = Array3::zeros((t_len, cycles.len(), channels));
    for (b, cycle) in cycles.iter().enumerate() {
        for ch in 0..channels {
            for t in 0..t_len {
                x[(t, b, ch)] = cycle.data[(ch, t)];
            }
        }
    }
    x
}

/// Train the autoencoder on normal-only cycles by full-sequence BPTT with
/// gradient clipping and a halving learning-rate schedule. Returns the
/// trained parameters and the per-step loss history.
pub fn train_autoencoder(
    cycles: &[GaitCycle],
    enc_config: &EncoderConfig,
    train_config: &TrainConfig,
) -> Result<(Seq2SeqParams, Vec<f64>), Seq2SeqError> {
    enc_config.validate()?;
    if cycles.is_empty() {
        return Err(Seq2SeqError::InvalidConfig("no training cycles".into()));
    }
    if let Some(pos) = cycles.iter().position(|c| c.label != Label::Normal) {
        return Err(Seq2SeqError::AnomalousTrainingCycle { index: pos });
    }

    let input_size = cycles[0].data.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut params = Seq2SeqParams::init_uniform(enc_config, input_size, &mut rng);

    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..cycles.len()).collect();
    let mut step = 0usize;

    for _epoch in 0..train_config.epochs {
        order.shuffle(&mut rng);
        for batch_idx in order.chunks(train_config.batch_size) {
            let batch: Vec<&GaitCycle> = batch_idx.iter().map(|&i| &cycles[i]).collect();
            let x = stack_cycles(&batch);
            let (loss, mut grads) =
                forward_backward(&x, &params, enc_config, Mode::Train, Some(&mut rng))
                    .map_err(|e| match e {
                        Seq2SeqError::NumericalDivergence { .. } => {
                            Seq2SeqError::NumericalDivergence { step }
                        }
                        other => other,
                    })?;
            if !loss.is_finite() {
                return Err(Seq2SeqError::NumericalDivergence { step });
            }
            clip_gradients(&mut grads, train_config.clip_norm);
            sgd_update(&mut params, &grads, learning_rate(train_config, step));
            if !params.all_finite() {
                return Err(Seq2SeqError::NumericalDivergence { step });
            }
            history.push(loss);
            step += 1;
        }
    }

    Ok((params, history))
}

/// Maximum relative disagreement between analytic BPTT gradients and
/// central finite differences of the loss, over every parameter. Intended
/// for tiny configurations only.
pub fn gradient_check(
    params: &Seq2SeqParams,
    enc_config: &EncoderConfig,
    x: &Array3<f64>,
    epsilon: f64,
) -> Result<f64, Seq2SeqError> {
    let (_, analytic) = forward_backward(x, params, enc_config, Mode::Infer, None)?;
    let analytic_flat = analytic.to_flat();
    // Near-zero gradients are dominated by cancellation noise in the
    // central differences, so the relative error carries a floor tied to
    // the overall gradient scale.
    let grad_scale = analytic_flat
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-8);
    let floor = 1e-4 * grad_scale;

    let mut work = params.clone();
    let mut flat = params.to_flat();
    let mut max_rel = 0.0f64;
    for k in 0..flat.len() {
        let orig = flat[k];
        flat[k] = orig + epsilon;
        work.assign_flat(&flat);
        let (loss_plus, _) = forward_backward(x, &work, enc_config, Mode::Infer, None)?;
        flat[k] = orig - epsilon;
        work.assign_flat(&flat);
        let (loss_minus, _) = forward_backward(x, &work, enc_config, Mode::Infer, None)?;
        flat[k] = orig;

        let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        let rel = (analytic_flat[k] - numeric).abs()
            / (analytic_flat[k].abs() + numeric.abs() + floor);
        if rel > max_rel {
            max_rel = rel;
        }
    }
    work.assign_flat(&flat);
    Ok(max_rel)
}
