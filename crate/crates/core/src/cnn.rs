//! Convolutional classifier over reshaped encoder states: one valid
//! convolution with ReLU, 4x4/stride-2 max pooling, and a two-unit
//! logistic layer scored through a softmax.

use ndarray::{Array1, Array2, Array3, Array4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::signal::Label;

pub const POOL_WINDOW: usize = 4;
pub const POOL_STRIDE: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum CnnError {
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("training data contains a single class only")]
    DegenerateDataset,
    #[error("non-finite value encountered at training step {step}")]
    NumericalDivergence { step: usize },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    /// Reshape target (W, Y, Z) with W*Y*Z = encoder state length.
    pub dims: [usize; 3],
    /// Convolution kernel (kh, kw, in_ch, out_ch). When in_ch differs
    /// from Z a learned 1x1 channel lift bridges the two.
    pub kernel: [usize; 4],
    pub initial_lr: f64,
    pub decay_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for CnnConfig {
    /// Desk-scale defaults for a 512-long encoder state.
    fn default() -> Self {
        Self {
            dims: [16, 8, 4],
            kernel: [5, 3, 4, 8],
            initial_lr: 0.01,
            decay_steps: 1000,
            epochs: 11,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl CnnConfig {
    /// Full-scale layout for a 4096-long state.
    pub fn full_scale() -> Self {
        Self {
            dims: [32, 16, 8],
            kernel: [10, 6, 8, 16],
            ..Self::default()
        }
    }

    pub fn state_len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Spatial output of the convolution (valid padding, stride 1).
    pub fn conv_out(&self) -> Result<(usize, usize), CnnError> {
        let (w, y) = (self.dims[0], self.dims[1]);
        let (kh, kw) = (self.kernel[0], self.kernel[1]);
        if kh > w || kw > y {
            return Err(CnnError::ShapeError(format!(
                "kernel {kh}x{kw} larger than input {w}x{y}"
            )));
        }
        Ok((w - kh + 1, y - kw + 1))
    }

    /// Spatial output of the max pool.
    pub fn pool_out(&self) -> Result<(usize, usize), CnnError> {
        let (cw, cy) = self.conv_out()?;
        if cw < POOL_WINDOW || cy < POOL_WINDOW {
            return Err(CnnError::ShapeError(format!(
                "conv output {cw}x{cy} smaller than pool window {POOL_WINDOW}"
            )));
        }
        Ok((
            (cw - POOL_WINDOW) / POOL_STRIDE + 1,
            (cy - POOL_WINDOW) / POOL_STRIDE + 1,
        ))
    }

    /// Flattened feature count entering the dense layer.
    pub fn dense_inputs(&self) -> Result<usize, CnnError> {
        let (pw, py) = self.pool_out()?;
        Ok(pw * py * self.kernel[3])
    }

    pub fn needs_lift(&self) -> bool {
        self.kernel[2] != self.dims[2]
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CnnParams {
    /// 1x1 channel lift (Z, in_ch), present only when in_ch != Z.
    pub lift_w: Option<Array2<f64>>,
    pub lift_b: Option<Array1<f64>>,
    /// (kh, kw, in_ch, out_ch)
    pub kernel: Array4<f64>,
    pub conv_bias: Array1<f64>,
    /// (M, 2)
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
}

impl CnnParams {
    pub fn zeros(config: &CnnConfig) -> Result<Self, CnnError> {
        let m = config.dense_inputs()?;
        let [kh, kw, in_ch, out_ch] = config.kernel;
        let (lift_w, lift_b) = if config.needs_lift() {
            (
                Some(Array2::zeros((config.dims[2], in_ch))),
                Some(Array1::zeros(in_ch)),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            lift_w,
            lift_b,
            kernel: Array4::zeros((kh, kw, in_ch, out_ch)),
            conv_bias: Array1::zeros(out_ch),
            dense_w: Array2::zeros((m, 2)),
            dense_b: Array1::zeros(2),
        })
    }

    /// Glorot-uniform weights per tensor, zero biases.
    pub fn init_uniform(config: &CnnConfig, rng: &mut ChaCha8Rng) -> Result<Self, CnnError> {
        let mut p = Self::zeros(config)?;
        let [kh, kw, in_ch, out_ch] = config.kernel;
        let m = config.dense_inputs()?;
        let mut fill = |w: &mut [f64], fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in w {
                *v = rng.gen_range(-limit..limit);
            }
        };
        if let Some(lift) = p.lift_w.as_mut() {
            let z = config.dims[2];
            fill(lift.as_slice_mut().unwrap(), z, in_ch);
        }
        fill(
            p.kernel.as_slice_mut().unwrap(),
            kh * kw * in_ch,
            kh * kw * out_ch,
        );
        fill(p.dense_w.as_slice_mut().unwrap(), m, 2);
        Ok(p)
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        if let Some(w) = &self.lift_w {
            out.push(w.as_slice().unwrap());
        }
        if let Some(b) = &self.lift_b {
            out.push(b.as_slice().unwrap());
        }
        out.push(self.kernel.as_slice().unwrap());
        out.push(self.conv_bias.as_slice().unwrap());
        out.push(self.dense_w.as_slice().unwrap());
        out.push(self.dense_b.as_slice().unwrap());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        if let Some(w) = &mut self.lift_w {
            out.push(w.as_slice_mut().unwrap());
        }
        if let Some(b) = &mut self.lift_b {
            out.push(b.as_slice_mut().unwrap());
        }
        out.push(self.kernel.as_slice_mut().unwrap());
        out.push(self.conv_bias.as_slice_mut().unwrap());
        out.push(self.dense_w.as_slice_mut().unwrap());
        out.push(self.dense_b.as_slice_mut().unwrap());
        out
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().into_iter().flatten().copied().collect()
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        for slice in self.slices_mut() {
            slice.copy_from_slice(&flat[off..off + slice.len()]);
            off += slice.len();
        }
        assert_eq!(off, flat.len(), "flat parameter length mismatch");
    }
}

/// Classification outcome: raw logistic scores and softmax probabilities
/// (index 0 normal, index 1 anomalous).
#[derive(Debug, Clone, Copy)]
pub struct ClassScores {
    pub s: [f64; 2],
    pub p: [f64; 2],
}

impl ClassScores {
    /// Ties go to anomalous.
    pub fn predicted(&self) -> Label {
        if self.p[1] >= self.p[0] {
            Label::Anomalous
        } else {
            Label::Normal
        }
    }
}

/// Row-major reinterpretation of the flat state as a (W, Y, Z) volume.
pub fn reshape_state(flat: &[f64], dims: [usize; 3]) -> Result<Array3<f64>, CnnError> {
    let expected: usize = dims.iter().product();
    if flat.len() != expected {
        return Err(CnnError::ShapeError(format!(
            "state length {} cannot reshape to {dims:?}",
            flat.len()
        )));
    }
    Ok(Array3::from_shape_vec((dims[0], dims[1], dims[2]), flat.to_vec()).unwrap())
}

/// Inverse of `reshape_state`.
pub fn flatten_volume(volume: &Array3<f64>) -> Vec<f64> {
    volume.iter().copied().collect()
}

fn lift_forward(volume: &Array3<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array3<f64> {
    let (h, y, _) = volume.dim();
    let out_ch = w.ncols();
    let mut out = Array3::zeros((h, y, out_ch));
    for i in 0..h {
        for j in 0..y {
            for o in 0..out_ch {
                let mut acc = b[o];
                for c in 0..w.nrows() {
                    acc += volume[(i, j, c)] * w[(c, o)];
                }
                out[(i, j, o)] = acc;
            }
        }
    }
    out
}

/// Valid 2-D convolution over (W, Y) with Z as channels, bias, then ReLU.
/// Returns the ReLU output and the pre-activation (kept for backprop).
pub fn conv_forward(
    volume: &Array3<f64>,
    kernel: &Array4<f64>,
    bias: &Array1<f64>,
) -> Result<(Array3<f64>, Array3<f64>), CnnError> {
    let (w, y, cin) = volume.dim();
    let (kh, kw, kin, out_ch) = kernel.dim();
    if kin != cin {
        return Err(CnnError::ShapeError(format!(
            "kernel expects {kin} input channels, volume has {cin}"
        )));
    }
    if kh > w || kw > y {
        return Err(CnnError::ShapeError(format!(
            "kernel {kh}x{kw} larger than input {w}x{y}"
        )));
    }
    let (ow, oy) = (w - kh + 1, y - kw + 1);
    let mut pre = Array3::zeros((ow, oy, out_ch));
    for i in 0..ow {
        for j in 0..oy {
            for o in 0..out_ch {
                let mut acc = bias[o];
                for a in 0..kh {
                    for b in 0..kw {
                        for c in 0..cin {
                            acc += volume[(i + a, j + b, c)] * kernel[(a, b, c, o)];
                        }
                    }
                }
                pre[(i, j, o)] = acc;
            }
        }
    }
    let act = pre.mapv(|v| v.max(0.0));
    Ok((act, pre))
}

/// 4x4 max pool with stride 2, valid boundaries, per channel. Also
/// returns the argmax coordinates for backprop.
pub fn maxpool(volume: &Array3<f64>) -> Result<(Array3<f64>, Array3<(usize, usize)>), CnnError> {
    let (w, y, ch) = volume.dim();
    if w < POOL_WINDOW || y < POOL_WINDOW {
        return Err(CnnError::ShapeError(format!(
            "extent {w}x{y} smaller than pool window {POOL_WINDOW}"
        )));
    }
    let ow = (w - POOL_WINDOW) / POOL_STRIDE + 1;
    let oy = (y - POOL_WINDOW) / POOL_STRIDE + 1;
    let mut out = Array3::zeros((ow, oy, ch));
    let mut arg = Array3::from_elem((ow, oy, ch), (0usize, 0usize));
    for i in 0..ow {
        for j in 0..oy {
            for c in 0..ch {
                let mut best = f64::NEG_INFINITY;
                let mut best_pos = (0, 0);
                for a in 0..POOL_WINDOW {
                    for b in 0..POOL_WINDOW {
                        let (ri, rj) = (i * POOL_STRIDE + a, j * POOL_STRIDE + b);
                        let v = volume[(ri, rj, c)];
                        if v > best {
                            best = v;
                            best_pos = (ri, rj);
                        }
                    }
                }
                out[(i, j, c)] = best;
                arg[(i, j, c)] = best_pos;
            }
        }
    }
    Ok((out, arg))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable two-way softmax.
pub fn softmax2(s: [f64; 2]) -> [f64; 2] {
    let m = s[0].max(s[1]);
    let e0 = (s[0] - m).exp();
    let e1 = (s[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

struct ForwardCache {
    v0: Array3<f64>,
    v1: Array3<f64>,
    pre: Array3<f64>,
    arg: Array3<(usize, usize)>,
    features: Array1<f64>,
    z: [f64; 2],
    scores: ClassScores,
}

fn forward(flat: &[f64], params: &CnnParams, config: &CnnConfig) -> Result<ForwardCache, CnnError> {
    let v0 = reshape_state(flat, config.dims)?;
    let v1 = match (&params.lift_w, &params.lift_b) {
        (Some(w), Some(b)) => lift_forward(&v0, w, b),
        _ => v0.clone(),
    };
    let (act, pre) = conv_forward(&v1, &params.kernel, &params.conv_bias)?;
    let (pooled, arg) = maxpool(&act)?;
    let features = Array1::from_vec(flatten_volume(&pooled));
    if features.len() != params.dense_w.nrows() {
        return Err(CnnError::ShapeError(format!(
            "dense layer expects {} features, got {}",
            params.dense_w.nrows(),
            features.len()
        )));
    }
    let zv = features.dot(&params.dense_w) + &params.dense_b;
    let z = [zv[0], zv[1]];
    let s = [sigmoid(z[0]), sigmoid(z[1])];
    let p = softmax2(s);
    Ok(ForwardCache {
        v0,
        v1,
        pre,
        arg,
        features,
        z,
        scores: ClassScores { s, p },
    })
}

/// Full inference: reshape, convolve, pool, score, softmax.
pub fn classify(
    state: &[f64],
    params: &CnnParams,
    config: &CnnConfig,
) -> Result<ClassScores, CnnError> {
    Ok(forward(state, params, config)?.scores)
}

/// Cross-entropy loss and parameter gradients for one sample.
fn backward(
    cache: &ForwardCache,
    label: Label,
    params: &CnnParams,
    grads: &mut CnnParams,
) -> f64 {
    let target = label.as_index();
    let p = cache.scores.p;
    let loss = -p[target].max(1e-300).ln();

    // softmax + cross-entropy gradient at the score layer, then through
    // the logistic that precedes it
    let mut dz = [0.0f64; 2];
    for k in 0..2 {
        let ds = p[k] - if k == target { 1.0 } else { 0.0 };
        let s = cache.scores.s[k];
        dz[k] = ds * s * (1.0 - s); // d sigma / d z
        let _ = cache.z[k];
    }

    let m = cache.features.len();
    for k in 0..2 {
        for i in 0..m {
            grads.dense_w[(i, k)] += cache.features[i] * dz[k];
        }
        grads.dense_b[k] += dz[k];
    }

    // back through flatten + pool + ReLU
    let (pw, py, ch) = cache.arg.dim();
    let mut d_act = Array3::<f64>::zeros(cache.pre.dim());
    for i in 0..pw {
        for j in 0..py {
            for c in 0..ch {
                let flat_idx = (i * py + j) * ch + c;
                let dm = params.dense_w[(flat_idx, 0)] * dz[0]
                    + params.dense_w[(flat_idx, 1)] * dz[1];
                let (ri, rj) = cache.arg[(i, j, c)];
                d_act[(ri, rj, c)] += dm;
            }
        }
    }

    let (ow, oy, out_ch) = cache.pre.dim();
    let (kh, kw, cin, _) = params.kernel.dim();
    let mut d_v1 = Array3::<f64>::zeros(cache.v1.dim());
    for i in 0..ow {
        for j in 0..oy {
            for o in 0..out_ch {
                if cache.pre[(i, j, o)] <= 0.0 {
                    continue;
                }
                let g = d_act[(i, j, o)];
                if g == 0.0 {
                    continue;
                }
                grads.conv_bias[o] += g;
                for a in 0..kh {
                    for b in 0..kw {
                        for c in 0..cin {
                            grads.kernel[(a, b, c, o)] += cache.v1[(i + a, j + b, c)] * g;
                            d_v1[(i + a, j + b, c)] += params.kernel[(a, b, c, o)] * g;
                        }
                    }
                }
            }
        }
    }

    if let (Some(w), Some(gw)) = (&params.lift_w, &mut grads.lift_w) {
        let gb = grads.lift_b.as_mut().unwrap();
        let (h, y, _) = cache.v0.dim();
        for i in 0..h {
            for j in 0..y {
                for o in 0..w.ncols() {
                    let g = d_v1[(i, j, o)];
                    if g == 0.0 {
                        continue;
                    }
                    gb[o] += g;
                    for c in 0..w.nrows() {
                        gw[(c, o)] += cache.v0[(i, j, c)] * g;
                    }
                }
            }
        }
    }

    loss
}

/// Mean cross-entropy loss and gradients over a batch of states.
fn batch_loss_grads(
    states: &[&[f64]],
    labels: &[Label],
    params: &CnnParams,
    config: &CnnConfig,
) -> Result<(f64, CnnParams), CnnError> {
    let mut grads = CnnParams::zeros(config)?;
    let mut total = 0.0;
    for (flat, &label) in states.iter().zip(labels) {
        let cache = forward(flat, params, config)?;
        total += backward(&cache, label, params, &mut grads);
    }
    // Loss and gradients are summed over the mini-batch (not averaged);
    // the logistic layer ahead of the softmax attenuates gradients by
    // s(1-s), and the summed objective keeps the effective step size
    // useful under the fixed training schedule.
    Ok((total, grads))
}

/// Train by SGD on softmax cross-entropy: lr halved every
/// `decay_steps`, fixed epoch and batch counts, seeded shuffling.
pub fn train_classifier(
    states: &Array2<f64>,
    labels: &[Label],
    config: &CnnConfig,
) -> Result<CnnParams, CnnError> {
    assert_eq!(states.nrows(), labels.len());
    let has_normal = labels.iter().any(|l| *l == Label::Normal);
    let has_anomalous = labels.iter().any(|l| *l == Label::Anomalous);
    if !has_normal || !has_anomalous {
        return Err(CnnError::DegenerateDataset);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = CnnParams::init_uniform(config, &mut rng)?;
    let mut order: Vec<usize> = (0..states.nrows()).collect();
    let mut step = 0usize;

    for _epoch in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&[f64]> = chunk
                .iter()
                .map(|&i| states.row(i).to_slice().unwrap())
                .collect();
            let batch_labels: Vec<Label> = chunk.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = batch_loss_grads(&batch, &batch_labels, &params, config)?;
            if !loss.is_finite() {
                return Err(CnnError::NumericalDivergence { step });
            }
            let lr = config.initial_lr * 0.5_f64.powi((step / config.decay_steps) as i32);
            let g = grads.slices();
            for (ps, gs) in params.slices_mut().into_iter().zip(g) {
                for (p, gv) in ps.iter_mut().zip(gs) {
                    *p -= lr * gv;
                }
            }
            step += 1;
        }
    }
    Ok(params)
}

/// Max relative disagreement between analytic gradients and central
/// finite differences of the batch loss, over every parameter.
pub fn gradient_check(
    params: &CnnParams,
    config: &CnnConfig,
    states: &[&[f64]],
    labels: &[Label],
    epsilon: f64,
) -> Result<f64, CnnError> {
    let (_, analytic) = batch_loss_grads(states, labels, params, config)?;
    let analytic_flat = analytic.to_flat();
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
        let (lp, _) = batch_loss_grads(states, labels, &work, config)?;
        flat[k] = orig - epsilon;
        work.assign_flat(&flat);
        let (lm, _) = batch_loss_grads(states, labels, &work, config)?;
        flat[k] = orig;
        let numeric = (lp - lm) / (2.0 * epsilon);
        let rel =
            (analytic_flat[k] - numeric).abs() / (analytic_flat[k].abs() + numeric.abs() + floor);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}
